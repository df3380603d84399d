"""Order-three chaos: conditioning on the first coordinate family.

For a trilinear form ``sum a(i,j,k) xi_i eta_j zeta_k`` fix ``xi = x``.  The
conditioned matrix ``A(j,k|x) = sum_i a(i,j,k) x_i`` determines two suprema:

* ``sup_X`` over unit ``u(j,k)`` of ``sum A(j,k|x) u(j,k)``, the Frobenius
  norm of ``A(.|x)``;
* ``sup_Y`` over unit ``v, w`` of ``sum A(j,k|x) v(j) w(k)``, its largest
  singular value.

The lab estimates ``E sup_Y`` by Monte Carlo and reports it against the
two scalings ``M^{-1/2}`` and ``M^{-1/4}``.  Only the second is a proven
bound; the first is an open question and is reported, never asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .partitions import SetPartition, partition_norm, top_singular_triplet
from .tensor import CoefficientTensor, frobenius_norm, scale

__all__ = [
    "TrilinearInstance",
    "HypothesisLine",
    "HypothesisReport",
    "check_hypotheses",
    "conditioned_matrix",
    "sup_X",
    "sup_Y",
    "batched_sup_Y",
    "expected_sup_X_squared",
    "expected_Y_squared",
    "SupYEstimate",
    "estimate_sup_Y_expectation",
    "rank_one_instance",
    "random_sparse_instance",
    "orthogonal_slices_instance",
    "GENERATORS",
    "m_sweep",
]

BIPARTITIONS = (
    SetPartition.parse("{1,2}{3}"),
    SetPartition.parse("{1,3}{2}"),
    SetPartition.parse("{1}{2,3}"),
)
TRIPARTITION = SetPartition.parse("{1}{2}{3}")


def _check_order(a: CoefficientTensor):
    if a.order != 3:
        raise ValueError(f"expected an order-3 tensor, got order {a.order}")


@dataclass
class TrilinearInstance:
    a: CoefficientTensor
    M: int
    R: float | None = None

    def __post_init__(self):
        _check_order(self.a)
        if self.M < 1:
            raise ValueError("M must be >= 1")

    @property
    def hypothesis_scale(self) -> float:
        return self.R if self.R is not None else self.M ** -0.5


@dataclass(frozen=True)
class HypothesisLine:
    name: str
    value: float
    bound: float
    ok: bool
    exact: bool


@dataclass
class HypothesisReport:
    lines: list[HypothesisLine] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(line.ok for line in self.lines)

    @property
    def status(self) -> str:
        return "ok" if self.ok else "hypothesis_violated"

    def to_json(self) -> dict:
        return {"status": self.status, "lines": [vars(line) for line in self.lines]}


def check_hypotheses(
    a: CoefficientTensor, M: int, R: float | None = None, rtol: float = 1e-12, seed: int = 0
) -> HypothesisReport:
    """Frobenius norm ``<= 1``, bipartite norms ``<= R`` and the three-block norm ``<= R^2``.

    ``R`` defaults to ``M^{-1/2}``.  The three-block value is a lower bound,
    so a reported violation is certain while a pass is heuristic.
    """
    _check_order(a)
    R = M ** -0.5 if R is None else R
    rep = HypothesisReport()
    v1 = frobenius_norm(a)
    rep.lines.append(HypothesisLine("frobenius", v1, 1.0, v1 <= 1.0 + rtol, True))
    for p in BIPARTITIONS:
        val = partition_norm(a, p, seed=seed).value
        rep.lines.append(HypothesisLine(f"bipartite {p}", val, R, val <= R * (1 + rtol), True))
    val = partition_norm(a, TRIPARTITION, seed=seed).value
    rep.lines.append(HypothesisLine(f"trilinear {TRIPARTITION}", val, R * R, val <= R * R * (1 + rtol), False))
    return rep


def conditioned_matrix(a: CoefficientTensor, x) -> np.ndarray:
    """``A(j,k|x) = sum_i a(i,j,k) x_i``; a batch of points gives a batch of matrices."""
    _check_order(a)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != a.dim:
        raise ValueError(f"x has {x.shape[-1]} coordinates, tensor has dim {a.dim}")
    return np.tensordot(x, a.dense, axes=([x.ndim - 1], [0]))


def sup_X(a: CoefficientTensor, x) -> float:
    return float(np.linalg.norm(conditioned_matrix(a, x)))


def sup_Y(a: CoefficientTensor, x, restarts: int = 2, tol: float = 1e-12, seed: int = 0) -> float:
    """Largest singular value of the conditioned matrix, best of ``restarts`` power runs."""
    A = conditioned_matrix(a, x)
    best = 0.0
    for r in range(restarts):
        sigma, *_ = top_singular_triplet(A, tol=tol, rng=np.random.default_rng([seed, r]))
        best = max(best, sigma)
    return best


def batched_sup_Y(mats: np.ndarray, tol: float = 1e-12, max_iter: int = 60, seed: int = 0) -> np.ndarray:
    """Largest singular values of a stack of matrices by batched Gram squaring."""
    mats = np.asarray(mats, dtype=float)
    N, _, d2 = mats.shape
    gram = np.einsum("nij,nik->njk", mats, mats)
    tr = np.trace(gram, axis1=1, axis2=2)
    zero = tr == 0
    h = gram / np.where(zero, 1.0, tr)[:, None, None]
    v = np.random.default_rng(seed).standard_normal((N, d2))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    sigma = np.zeros(N)
    prev = np.full(N, -np.inf)
    for _ in range(max_iter):
        w = np.einsum("njk,nk->nj", h, v)
        nw = np.linalg.norm(w, axis=1, keepdims=True)
        v = np.where(nw > 0, w / np.where(nw > 0, nw, 1.0), v)
        sigma = np.linalg.norm(np.einsum("nij,nj->ni", mats, v), axis=1)
        if np.all(np.abs(sigma - prev) <= tol * np.maximum(1.0, sigma)):
            break
        prev = sigma
        h = np.einsum("nij,njk->nik", h, h)
        h /= np.maximum(np.abs(h).max(axis=(1, 2)), 1e-300)[:, None, None]
    sigma[zero] = 0.0
    return sigma


def expected_sup_X_squared(a: CoefficientTensor) -> float:
    """``E sup_X^2 = sum_i ||a(i,.,.)||_F^2`` by orthogonality of the coordinates."""
    _check_order(a)
    d = a.dense
    return math.fsum(float(np.sum(d[i] ** 2)) for i in range(a.dim))


def expected_Y_squared(a: CoefficientTensor, v, w) -> float:
    """``E Y(v,w)^2 = sum_i (sum_{j,k} a(i,j,k) v_j w_k)^2``."""
    _check_order(a)
    c = np.einsum("ijk,j,k->i", a.dense, np.asarray(v, float), np.asarray(w, float))
    return float(np.dot(c, c))


@dataclass
class SupYEstimate:
    M: int
    samples: int
    mean: float
    ci: float
    ratio_Mhalf: float
    ratio_Mquarter: float
    max_gap: float
    status: str = "ok"

    def csv_row(self) -> list:
        return [self.M, self.mean, self.ci, self.ratio_Mhalf, self.ratio_Mquarter]


CSV_HEADER = ["M", "E_sup_Y", "ci", "ratio_Mhalf", "ratio_Mquarter"]


def estimate_sup_Y_expectation(
    a: CoefficientTensor,
    M: int,
    samples: int,
    seed: int,
    R: float | None = None,
    block_size: int = 512,
    check: bool = True,
) -> SupYEstimate:
    """Monte Carlo mean of ``sup_Y`` with a normal-approximation 95% half-width.

    ``max_gap`` is ``max(sup_Y - sup_X)`` over the draws, which must not be
    positive.
    """
    _check_order(a)
    status = "ok"
    if check and not check_hypotheses(a, M, R).ok:
        status = "hypothesis_violated"
    vals = []
    gaps = []
    for b in range(-(-samples // block_size)):
        size = min(block_size, samples - b * block_size)
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, b])))
        xs = rng.standard_normal((size, a.dim))
        mats = conditioned_matrix(a, xs)
        y = batched_sup_Y(mats, seed=seed + b)
        x = np.linalg.norm(mats, axis=(1, 2))
        vals.append(y)
        gaps.append(y - x)
    y = np.concatenate(vals)
    mean = float(np.mean(y))
    ci = 1.959963984540054 * float(np.std(y, ddof=1)) / math.sqrt(samples) if samples > 1 else math.inf
    return SupYEstimate(
        M, samples, mean, ci, mean / M ** -0.5, mean / M ** -0.25,
        float(np.max(np.concatenate(gaps))), status,
    )


# -- instance generators -----------------------------------------------------------

def rank_one_instance(M: int, n: int = 1) -> CoefficientTensor:
    """``e_1 (x) e_1 (x) e_1`` scaled by ``1/M``: every partition norm equals ``1/M``."""
    return CoefficientTensor(3, n, {(1, 1, 1): 1.0 / M})


def _fit_to_hypotheses(a: CoefficientTensor, M: int, seed: int = 0) -> CoefficientTensor:
    R = M ** -0.5
    ratios = [1.0 / frobenius_norm(a)]
    for p in BIPARTITIONS:
        ratios.append(R / partition_norm(a, p, seed=seed).value)
    ratios.append(R * R / partition_norm(a, TRIPARTITION, seed=seed).value)
    return scale(a, min(ratios))


def random_sparse_instance(M: int, n: int = 4, seed: int = 0, density: float = 0.5) -> CoefficientTensor:
    """Gaussian entries on a random support, scaled down until the hypotheses hold."""
    rng = np.random.default_rng([seed, M, n])
    arr = rng.standard_normal((n, n, n)) * (rng.random((n, n, n)) < density)
    arr[0, 0, 0] = arr[0, 0, 0] or 1.0
    return _fit_to_hypotheses(CoefficientTensor.from_dense(arr), M, seed)


def orthogonal_slices_instance(M: int, seed: int = 0) -> CoefficientTensor:
    """Slices ``a(i,.,.) = Q_i / M`` with ``Q_i`` random orthogonal ``M x M`` matrices.

    Then the Frobenius norm is 1 and the bipartite norm grouping ``{2,3}``
    against ``{1}`` is close to ``M^{-1/2}``, so the instance sits near the
    edge of the hypotheses; it is scaled down to satisfy them exactly.
    """
    from scipy.stats import ortho_group

    rng = np.random.default_rng([seed, M])
    arr = np.stack([ortho_group.rvs(M, random_state=rng) for _ in range(M)]) / M
    return _fit_to_hypotheses(CoefficientTensor.from_dense(arr), M, seed)


GENERATORS = {
    "rank-one": lambda M, seed: rank_one_instance(M),
    "random-sparse": lambda M, seed: random_sparse_instance(M, seed=seed),
    "orthogonal-slices": lambda M, seed: orthogonal_slices_instance(M, seed=seed),
}


def m_sweep(
    generator: str, Ms: Sequence[int] = (4, 16, 64), samples: int = 2000, seed: int = 0
) -> list[SupYEstimate]:
    gen = GENERATORS[generator]
    return [estimate_sup_Y_expectation(gen(M, seed), M, samples, seed) for M in Ms]
