"""Hermite/Wick evaluation, the Isserlis moment oracle, sampling and tails.

A chaos polynomial ``Z = sum a(n_1..n_k) :xi_{n_1} ... xi_{n_k}:`` is
evaluated by grouping repeated indices: an index occurring ``l`` times
contributes ``H_l(xi_n)``.  The oracle expands ``Z`` into ordinary
monomials, multiplies the expansions out and integrates each monomial
against the standard Gaussian measure.  It shares no code with the diagram
route, which is the point.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy import special

from .tensor import CoefficientTensor

__all__ = [
    "hermite",
    "hermite_coefficients",
    "ChaosPolynomial",
    "MonomialExpansion",
    "evaluate_Z",
    "isserlis_moment",
    "isserlis_product_moment",
    "OracleCapError",
    "sample_Z",
    "sample_blocks",
    "empirical_tail",
    "TailRow",
    "sharpness_probe",
    "SharpnessRow",
    "hermite_tail",
    "real_roots",
]

MAX_HERMITE = 60
ISSERLIS_MAX_DIM = 4
ISSERLIS_MAX_ORDER = 3
ISSERLIS_MAX_DEGREE = 16
DEFAULT_BLOCK = 1 << 16


class OracleCapError(ValueError):
    pass


def hermite(l: int, x):
    """Probabilists' Hermite polynomial ``H_l`` with leading coefficient 1."""
    if not 0 <= l <= MAX_HERMITE:
        raise ValueError(f"degree {l} outside 0..{MAX_HERMITE}")
    x = np.asarray(x, dtype=float)
    h0, h1 = np.ones_like(x), x
    if l == 0:
        return h0 if h0.ndim else float(h0)
    for j in range(1, l):
        h0, h1 = h1, x * h1 - j * h0
    return h1 if h1.ndim else float(h1)


def hermite_coefficients(l: int) -> np.ndarray:
    """Monomial coefficients of ``H_l``, lowest degree first."""
    c0, c1 = np.array([1.0]), np.array([0.0, 1.0])
    if l == 0:
        return c0
    for j in range(1, l):
        nxt = np.zeros(j + 2)
        nxt[1:] = c1
        nxt[: j] -= j * c0
        c0, c1 = c1, nxt
    return c1


def _hermite_table(x: np.ndarray, top: int) -> np.ndarray:
    """``out[..., l] = H_l(x)`` for ``l = 0..top``."""
    out = np.empty(x.shape + (top + 1,))
    out[..., 0] = 1.0
    if top >= 1:
        out[..., 1] = x
    for j in range(1, top):
        out[..., j + 1] = x * out[..., j] - j * out[..., j - 1]
    return out


@dataclass(frozen=True)
class ChaosPolynomial:
    coeffs: CoefficientTensor

    @property
    def order(self) -> int:
        return self.coeffs.order

    @property
    def dim(self) -> int:
        return self.coeffs.dim

    def terms(self) -> list[tuple[float, tuple[tuple[int, int], ...]]]:
        """Support as ``(value, ((index, multiplicity), ...))`` with 0-based indices."""
        out = []
        for idx, val in self.coeffs.entries.items():
            mult = sorted(Counter(i - 1 for i in idx).items())
            out.append((val, tuple(mult)))
        return out

    def evaluate(self, xs) -> float:
        return evaluate_Z(self, xs)

    def expansion(self) -> "MonomialExpansion":
        return MonomialExpansion.from_chaos(self)


def _as_poly(p) -> ChaosPolynomial:
    return p if isinstance(p, ChaosPolynomial) else ChaosPolynomial(p)


def evaluate_Z(p, xs) -> float | np.ndarray:
    """Evaluate at one point ``xs`` of shape (n,) or at a batch of shape (N, n)."""
    p = _as_poly(p)
    xs = np.asarray(xs, dtype=float)
    if xs.shape[-1] != p.dim:
        raise ValueError(f"point has {xs.shape[-1]} coordinates, polynomial has dim {p.dim}")
    H = _hermite_table(xs, p.order)
    single = xs.ndim == 1
    H = H[None] if single else H
    parts = []
    for val, mult in p.terms():
        term = np.full(H.shape[0], val)
        for i, l in mult:
            term = term * H[:, i, l]
        parts.append(term)
    total = np.sum(parts, axis=0) if parts else np.zeros(H.shape[0])
    return float(total[0]) if single else total


# -- monomial oracle -------------------------------------------------------------

class MonomialExpansion:
    """Polynomial in ``n`` variables stored as a dense coefficient array.

    ``coef[e_1, ..., e_n]`` is the coefficient of ``x_1^{e_1} ... x_n^{e_n}``.
    """

    def __init__(self, coef: np.ndarray):
        self.coef = np.asarray(coef, dtype=float)

    @property
    def nvars(self) -> int:
        return self.coef.ndim

    @property
    def degree_bound(self) -> int:
        return self.coef.shape[0] - 1

    @classmethod
    def from_chaos(cls, p) -> "MonomialExpansion":
        p = _as_poly(p)
        n, k = p.dim, p.order
        coef = np.zeros((k + 1,) * n)
        herm = [hermite_coefficients(l) for l in range(k + 1)]
        for val, mult in p.terms():
            factors = [np.array([1.0])] * n
            for i, l in mult:
                factors[i] = herm[l]
            term = val
            for f in factors:
                term = np.multiply.outer(term, f)
            coef[tuple(slice(0, len(f)) for f in factors)] += term
        return cls(coef)

    def support(self) -> list[tuple[tuple[int, ...], float]]:
        nz = np.argwhere(self.coef != 0)
        return [(tuple(int(e) for e in row), float(self.coef[tuple(row)])) for row in nz]

    def __mul__(self, other: "MonomialExpansion") -> "MonomialExpansion":
        if self.nvars != other.nvars:
            raise ValueError("variable count mismatch")
        small, big = (self, other) if np.count_nonzero(self.coef) <= np.count_nonzero(other.coef) else (other, self)
        d = self.degree_bound + other.degree_bound
        out = np.zeros((d + 1,) * self.nvars)
        span = big.coef.shape[0]
        for e, c in small.support():
            out[tuple(slice(ei, ei + span) for ei in e)] += c * big.coef
        return MonomialExpansion(out)

    def evaluate(self, xs) -> float:
        xs = np.asarray(xs, dtype=float)
        return math.fsum(c * float(np.prod(xs ** np.array(e))) for e, c in self.support())

    def gaussian_expectation(self) -> float:
        """``E`` under independent standard normals: ``E x^{2p} = (2p-1)!!``, odd moments 0."""
        d = self.degree_bound
        mom = np.zeros(d + 1)
        for e in range(0, d + 1, 2):
            mom[e] = float(special.factorial2(e - 1, exact=True)) if e else 1.0
        val = self.coef
        for _ in range(self.nvars):
            val = np.tensordot(val, mom, axes=([0], [0]))
        return float(val)


def _check_oracle_caps(polys: Sequence[ChaosPolynomial]):
    n = polys[0].dim
    if n > ISSERLIS_MAX_DIM:
        raise OracleCapError(f"dim {n} exceeds oracle cap {ISSERLIS_MAX_DIM}")
    if max(p.order for p in polys) > ISSERLIS_MAX_ORDER:
        raise OracleCapError(f"order exceeds oracle cap {ISSERLIS_MAX_ORDER}")
    deg = sum(p.order for p in polys)
    if deg > ISSERLIS_MAX_DEGREE:
        raise OracleCapError(f"total degree {deg} exceeds oracle cap {ISSERLIS_MAX_DEGREE}")


def isserlis_product_moment(kernels: Sequence) -> float:
    """``E prod_j Z_j`` by multiplying monomial expansions."""
    polys = [_as_poly(f) for f in kernels]
    if len({p.dim for p in polys}) != 1:
        raise ValueError("kernels disagree on dim")
    _check_oracle_caps(polys)
    if sum(p.order for p in polys) % 2:
        return 0.0
    prod = polys[0].expansion()
    for p in polys[1:]:
        prod = prod * p.expansion()
    return prod.gaussian_expectation()


def isserlis_moment(p, degree: int) -> float:
    """``E Z^degree`` for one chaos polynomial."""
    p = _as_poly(p)
    if degree < 1:
        raise ValueError("degree must be >= 1")
    _check_oracle_caps([p] * degree)
    if (degree * p.order) % 2:
        return 0.0
    base = p.expansion()
    acc = base
    for _ in range(degree - 1):
        acc = acc * base
    return acc.gaussian_expectation()


# -- sampling --------------------------------------------------------------------

def _block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def sample_blocks(p, count: int, seed: int, block_size: int = DEFAULT_BLOCK) -> Iterator[np.ndarray]:
    """Samples of ``Z`` in counter blocks; block ``b`` always draws from the same stream."""
    p = _as_poly(p)
    if count < 1:
        raise ValueError("count must be >= 1")
    nblocks = -(-count // block_size)
    for b in range(nblocks):
        size = min(block_size, count - b * block_size)
        xs = _block_rng(seed, b).standard_normal((size, p.dim))
        yield evaluate_Z(p, xs)


def _one_block(args):
    p, seed, b, size = args
    xs = _block_rng(seed, b).standard_normal((size, p.dim))
    return evaluate_Z(p, xs)


def sample_Z(p, count: int, seed: int, workers: int = 1, block_size: int = DEFAULT_BLOCK) -> np.ndarray:
    """``count`` draws of ``Z``; identical for every worker count."""
    p = _as_poly(p)
    if count < 1:
        raise ValueError("count must be >= 1")
    nblocks = -(-count // block_size)
    jobs = [(p, seed, b, min(block_size, count - b * block_size)) for b in range(nblocks)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(_one_block, jobs))
    else:
        parts = [_one_block(j) for j in jobs]
    return np.concatenate(parts)


@dataclass(frozen=True)
class TailRow:
    x: float
    p_hat: float
    ci_half: float


def empirical_tail(samples, grid, z: float = 1.959963984540054) -> list[TailRow]:
    """Empirical ``P(|Z| > x)`` with Wilson-score 95% half-widths."""
    s = np.sort(np.abs(np.asarray(samples, dtype=float)))
    n = s.size
    if n == 0:
        raise ValueError("no samples")
    rows = []
    for x in grid:
        k = n - np.searchsorted(s, x, side="right")
        p = k / n
        half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
        rows.append(TailRow(float(x), float(p), float(half)))
    return rows


# -- exact tails of H_k(xi) ----------------------------------------------------------

def _sturm_sequence(poly: np.polynomial.Polynomial) -> list[np.polynomial.Polynomial]:
    seq = [poly, poly.deriv()]
    while seq[-1].degree() > 0:
        _, r = divmod(seq[-2], seq[-1])
        r = r.trim(tol=1e-14 * max(1.0, float(np.max(np.abs(r.coef)))))
        if r.degree() == 0 and abs(r.coef[0]) < 1e-300:
            break
        seq.append(-r)
    return seq


def _sign_changes(seq, x: float) -> int:
    vals = [float(p(x)) for p in seq]
    vals = [v for v in vals if v != 0.0]
    return sum(1 for a, b in zip(vals, vals[1:]) if (a < 0) != (b < 0))


def real_roots(coef: Sequence[float], tol: float = 1e-12) -> list[float]:
    """Distinct real roots of a polynomial (coefficients lowest degree first).

    Sturm sequences bracket each root, then bisection on the root count
    shrinks every bracket below ``tol``.
    """
    poly = np.polynomial.Polynomial(coef).trim()
    if poly.degree() < 1:
        return []
    lead = poly.coef[-1]
    bound = 1.0 + float(np.max(np.abs(poly.coef[:-1] / lead)))
    seq = _sturm_sequence(poly)

    def count(a, b):
        return _sign_changes(seq, a) - _sign_changes(seq, b)

    roots = []
    stack = [(-bound, bound)]
    while stack:
        a, b = stack.pop()
        c = count(a, b)
        if c == 0:
            continue
        if c == 1 or b - a < tol:
            while b - a > tol * max(1.0, abs(a)):
                mid = 0.5 * (a + b)
                if count(a, mid) >= 1:
                    b = mid
                else:
                    a = mid
            roots.append(0.5 * (a + b))
            continue
        mid = 0.5 * (a + b)
        stack.extend([(mid, b), (a, mid)])
    return sorted(roots)


def _log_interval_mass(a: float, b: float) -> float:
    """``log P(a < xi < b)`` for a standard normal, accurate deep in the tails."""
    if a >= b:
        return -math.inf
    if a > 0:
        a, b = -b, -a
    # now a <= 0; the mass is Phi(b) - Phi(a) with Phi(a) the smaller term
    lb = special.log_ndtr(b)
    la = special.log_ndtr(a)
    if la == -math.inf:
        return float(lb)
    return float(lb + np.log1p(-np.exp(la - lb)))


def hermite_tail(k: int, x: float) -> float:
    """Natural log of ``P(|H_k(xi)| > x)`` for a standard normal ``xi``."""
    if not 1 <= k <= 5:
        raise ValueError("k must be in 1..5")
    if x < 0:
        return 0.0
    h = hermite_coefficients(k)
    cuts = set()
    for sign in (1.0, -1.0):
        c = h.copy()
        c[0] -= sign * x
        cuts.update(real_roots(c))
    pts = [-math.inf] + sorted(cuts) + [math.inf]
    hpoly = np.polynomial.Polynomial(h)
    logs = []
    for a, b in zip(pts, pts[1:]):
        if math.isinf(a) and math.isinf(b):
            probe = 0.0
        elif math.isinf(a):
            probe = b - 1.0
        elif math.isinf(b):
            probe = a + 1.0
        else:
            probe = 0.5 * (a + b)
        if abs(hpoly(probe)) > x:
            logs.append(_log_interval_mass(a, b))
    if not logs:
        return -math.inf
    return float(special.logsumexp(logs))


@dataclass(frozen=True)
class SharpnessRow:
    x: float
    log_tail: float
    tail: float
    ratio: float


def sharpness_probe(k: int, xs: Sequence[float]) -> list[SharpnessRow]:
    """Exact ``P(|H_k(xi)| > x)`` and the ratio ``-log P / (x^{2/k} / 2)``."""
    rows = []
    for x in xs:
        lt = hermite_tail(k, float(x))
        rows.append(SharpnessRow(float(x), lt, math.exp(lt), -lt / (0.5 * float(x) ** (2.0 / k))))
    return rows

