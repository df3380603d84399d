"""Exact chaos moments from diagram sums, cumulants, and moment/tail bounds.

``product_moment`` returns ``E prod_j Z_j`` for chaos polynomials
``Z_j = k_j! I_{k_j}(f_j)`` as the sum of ``F_gamma`` over all closed
diagrams.  Two summation routes are available:

* ``"enumerate"`` walks every closed diagram and evaluates it with the row
  recursion of :func:`wienerchaos.diagrams.evaluate`;
* ``"grouped"`` runs the same row recursion once for all diagrams at the
  same time.  Kernels are symmetrized first (this does not change any
  diagram sum) and partial diagrams are merged whenever they leave the same
  number of open vertices, weighted by the number of ways to reach them.
  When only connected diagrams are wanted the open vertices are also grouped
  by the connected component they belong to, and a component that closes
  before the last row is discarded.

Both give the same number; the grouped route is the only practical one once
there are more than a few thousand diagrams.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diagrams import (
    MAX_VERTICES,
    DiagramCapError,
    enumerate_closed_diagrams,
    evaluate,
    is_connected,
)
from .partitions import NormProfile, norm_profile
from .tensor import CoefficientTensor, frobenius_norm, symmetrize

__all__ = [
    "BoundParams",
    "CumulantTable",
    "MomentReport",
    "SimplifiedCheck",
    "product_moment",
    "diagram_sum",
    "connected_diagram_count",
    "cumulants",
    "reconstruct_moment",
    "moment_bound_main",
    "tail_bound_main",
    "tail_exponent_main",
    "markov_moment_order",
    "markov_tail_bound",
    "moment_bound_theorem_a",
    "tail_bound_theorem_a",
    "hanson_wright_bound",
    "simplified_theorem_check",
    "reduction_radius",
    "partition_profile_count",
]

AUTO_ENUMERATE_LIMIT = 256


# -- grouped row recursion ---------------------------------------------------

def _symmetrize_axes(arr: np.ndarray, start: int, size: int) -> np.ndarray:
    """Average over permutations of axes ``start .. start+size-1``.

    Uses ``Sym_t = (1/t) sum_i (i t) Sym_{t-1}`` so only O(size^2) swaps are
    needed.
    """
    for t in range(2, size + 1):
        last = start + t - 1
        acc = arr.copy()
        for i in range(t - 1):
            acc += np.swapaxes(arr, start + i, last)
        arr = acc / t
    return arr


def _transitions(sizes: tuple[int, ...], k: int):
    """All ways a row of length ``k`` can attach to open groups of ``sizes``."""
    for ps in itertools.product(*[range(min(t, k) + 1) for t in sizes]):
        P = sum(ps)
        if P > k:
            continue
        ways = math.factorial(k) // math.factorial(k - P)
        for t, p in zip(sizes, ps):
            ways //= math.factorial(p)
            ways *= math.comb(t, p) * math.factorial(p)
        yield ps, P, ways


def _grouped_recursion(row_lengths, kernels, connected: bool):
    """Sum over closed (optionally connected) diagrams, or count them.

    With ``kernels=None`` the state values are integer counts.
    """
    rl = list(row_lengths)
    m = len(rl)
    if sum(rl) % 2:
        return 0 if kernels is None else 0.0
    if connected and m == 1:
        return 0 if kernels is None else 0.0
    counting = kernels is None
    states: dict[tuple[int, ...], object] = {(): 1 if counting else np.array(1.0)}
    remaining = sum(rl)
    for r, k in enumerate(rl):
        remaining -= k
        last = r == m - 1
        f = None if counting else kernels[r]
        nxt: dict[tuple[int, ...], object] = {}
        for sizes, T in states.items():
            offsets = np.cumsum((0,) + sizes)
            for ps, P, ways in _transitions(sizes, k):
                rest = [t - p for t, p in zip(sizes, ps)]
                fk = k - P
                if connected:
                    touched = [i for i, p in enumerate(ps) if p > 0]
                    untouched = [i for i, p in enumerate(ps) if p == 0]
                    merged = fk + sum(rest[i] for i in touched)
                    if merged == 0 and (untouched or not last):
                        continue
                    groups = [(merged, "M")] + [(rest[i], i) for i in untouched]
                else:
                    merged = fk + sum(rest)
                    groups = [(merged, "M")] if merged else []
                total_open = sum(g[0] for g in groups)
                if total_open > remaining:
                    continue
                groups = [g for g in groups if g[0] > 0]
                groups.sort(key=lambda g: -g[0])
                key = tuple(g[0] for g in groups)
                if counting:
                    val = T * ways
                else:
                    t_axes = [int(offsets[i]) + j for i, p in enumerate(ps) for j in range(p)]
                    f_axes = list(range(P))
                    res = np.tensordot(T, f, axes=(t_axes, f_axes)) if P else np.multiply.outer(T, f)
                    # axes of res: remaining axes of each group in order, then f's free axes
                    pos = 0
                    rest_axes = []
                    for i in range(len(sizes)):
                        rest_axes.append(list(range(pos, pos + rest[i])))
                        pos += rest[i]
                    f_free = list(range(pos, pos + fk))
                    if connected:
                        merged_axes = f_free + [a for i in touched for a in rest_axes[i]]
                    else:
                        merged_axes = f_free + [a for ax in rest_axes for a in ax]
                    order = []
                    start = None
                    for size, tag in groups:
                        if tag == "M":
                            start = len(order)
                            order.extend(merged_axes)
                        else:
                            order.extend(rest_axes[tag])
                    res = np.transpose(res, order) if order else res
                    if start is not None and merged > 1:
                        res = _symmetrize_axes(res, start, merged)
                    val = res * ways
                if key in nxt:
                    nxt[key] = nxt[key] + val
                else:
                    nxt[key] = val
        states = nxt
        if not states:
            return 0 if counting else 0.0
    out = states.get((), 0)
    return out if counting else float(out)


def connected_diagram_count(row_lengths: Sequence[int]) -> int:
    return _grouped_recursion(row_lengths, None, connected=True)


def _dense_symmetric(kernels: Sequence[CoefficientTensor]) -> list[np.ndarray]:
    return [np.array(symmetrize(f).dense) for f in kernels]


def _check_kernels(kernels: Sequence[CoefficientTensor]):
    if not kernels:
        raise ValueError("need at least one kernel")
    dims = {f.dim for f in kernels}
    if len(dims) != 1:
        raise ValueError(f"kernels disagree on dim: {sorted(dims)}")
    total = sum(f.order for f in kernels)
    if total > MAX_VERTICES:
        raise DiagramCapError(f"{total} vertices exceed the cap {MAX_VERTICES}")
    if any(f.order < 1 for f in kernels):
        raise ValueError("kernels must have order >= 1")


def diagram_sum(
    kernels: Sequence[CoefficientTensor],
    connected: bool = False,
    method: str = "auto",
) -> tuple[float, int, str]:
    """Sum of ``F_gamma`` over closed (or closed connected) diagrams.

    Returns ``(value, number_of_diagrams, method_used)``.
    """
    _check_kernels(kernels)
    rl = [f.order for f in kernels]
    count = _grouped_recursion(rl, None, connected)
    if method == "auto":
        # enumeration walks every closed diagram, connected or not
        walked = count if not connected else _grouped_recursion(rl, None, False)
        method = "enumerate" if walked <= AUTO_ENUMERATE_LIMIT else "grouped"
    if method == "enumerate":
        vals = []
        for d in enumerate_closed_diagrams(rl):
            if connected and not is_connected(d):
                continue
            vals.append(evaluate(d, kernels).scalar)
        return math.fsum(vals), count, method
    if method == "grouped":
        return _grouped_recursion(rl, _dense_symmetric(kernels), connected), count, method
    raise ValueError(f"unknown method {method!r}")


@dataclass
class MomentReport:
    moment_value: float
    diagram_count: int
    method: str
    cumulant_table: "CumulantTable | None" = None
    bound_values: dict = field(default_factory=dict)
    oracle_value: float | None = None
    relative_gap: float | None = None

    def with_oracle(self, oracle: float) -> "MomentReport":
        self.oracle_value = float(oracle)
        self.relative_gap = abs(self.moment_value - oracle) / max(1.0, abs(oracle))
        return self

    def to_json(self) -> dict:
        out = {
            "moment_value": self.moment_value,
            "diagram_count": self.diagram_count,
            "method": self.method,
            "bound_values": self.bound_values,
            "oracle_value": self.oracle_value,
            "relative_gap": self.relative_gap,
        }
        if self.cumulant_table is not None:
            out["cumulants_by_size"] = self.cumulant_table.by_signature()
        return out


def product_moment(kernels: Sequence[CoefficientTensor], method: str = "auto") -> MomentReport:
    """``E prod_j k_j! I_{k_j}(f_j)`` as the sum over all closed diagrams."""
    value, count, used = diagram_sum(kernels, connected=False, method=method)
    return MomentReport(value, count, used)


# -- cumulants -----------------------------------------------------------------

class CumulantTable(Mapping):
    """Connected-diagram sums ``K_c(A)`` for every row subset ``|A| >= 2``.

    Values depend only on the multiset of kernels in ``A``; they are computed
    once per multiset.  Keys are frozensets of 1-based row indices.
    """

    def __init__(self, kernels: Sequence[CoefficientTensor], method: str = "auto"):
        _check_kernels(kernels)
        self.kernels = list(kernels)
        self.method = method
        self.m = len(kernels)
        kinds: dict[CoefficientTensor, int] = {}
        self.kind = [kinds.setdefault(symmetrize(f), len(kinds)) for f in kernels]
        self.nkinds = len(kinds)
        self._reps = {}
        for j, t in enumerate(self.kind):
            self._reps.setdefault(t, self.kernels[j])
        self._cache: dict[tuple[int, ...], float] = {}

    def signature(self, rows) -> tuple[int, ...]:
        counts = [0] * self.nkinds
        for j in rows:
            counts[self.kind[j - 1]] += 1
        return tuple(counts)

    def value_for_signature(self, sig: tuple[int, ...]) -> float:
        if sig not in self._cache:
            ks = [self._reps[t] for t, c in enumerate(sig) for _ in range(c)]
            if len(ks) < 2:
                self._cache[sig] = 0.0
            else:
                self._cache[sig] = diagram_sum(ks, connected=True, method=self.method)[0]
        return self._cache[sig]

    def __getitem__(self, rows) -> float:
        rows = frozenset(rows)
        if len(rows) < 2 or not rows <= set(range(1, self.m + 1)):
            raise KeyError(rows)
        return self.value_for_signature(self.signature(rows))

    def __iter__(self):
        for size in range(2, self.m + 1):
            for c in itertools.combinations(range(1, self.m + 1), size):
                yield frozenset(c)

    def __len__(self) -> int:
        return 2 ** self.m - self.m - 1

    def by_signature(self) -> dict[str, float]:
        out = {}
        for size in range(2, self.m + 1):
            for c in itertools.combinations(range(1, self.m + 1), size):
                sig = self.signature(c)
                out.setdefault(",".join(map(str, sig)), self.value_for_signature(sig))
        return out


def cumulants(kernels: Sequence[CoefficientTensor], method: str = "auto") -> CumulantTable:
    return CumulantTable(kernels, method=method)


def reconstruct_moment(table: CumulantTable) -> float:
    """Sum over set partitions with blocks of size >= 2 of products of ``K_c``.

    The recursion peels off the block containing the first remaining row.
    Rows holding the same kernel are interchangeable, so the remaining set
    is tracked only through its kernel multiset.
    """
    memo: dict[tuple[int, ...], float] = {}

    def rec(sig: tuple[int, ...]) -> float:
        if not any(sig):
            return 1.0
        if sig in memo:
            return memo[sig]
        first = next(t for t, c in enumerate(sig) if c)
        terms = []
        ranges = [range(c + 1) for c in sig]
        for take in itertools.product(*ranges):
            if take[first] < 1 or sum(take) < 2:
                continue
            mult = math.comb(sig[first] - 1, take[first] - 1)
            for t, (c, x) in enumerate(zip(sig, take)):
                if t != first:
                    mult *= math.comb(c, x)
            rest = tuple(c - x for c, x in zip(sig, take))
            terms.append(mult * table.value_for_signature(take) * rec(rest))
        memo[sig] = math.fsum(terms)
        return memo[sig]

    return rec(table.signature(range(1, table.m + 1)))


# -- bounds --------------------------------------------------------------------

@dataclass
class BoundParams:
    """Order, moment half-degree and the (unspecified) universal constants."""

    k: int
    M: int = 1
    R: float = 1.0
    C: float = 1.0
    C1: float = 1.0
    C2: float = 1.0
    C_tilde: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if not 0.0 <= self.R <= 1.0:
            raise ValueError("R must lie in [0, 1]")
        for name in ("C", "C1", "C2", "C_tilde"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def moment_bound_main(profile: NormProfile, params: BoundParams, M: int | None = None) -> float:
    """``C^M V_1^{2M} max(M, M^k max_s (V_s/V_1)^{2/(s-1)})^M``."""
    M = params.M if M is None else M
    v = profile.v_s
    k = len(v)
    v1 = float(v[0])
    if v1 == 0.0:
        return 0.0
    ratio = max([(float(v[s - 1]) / v1) ** (2.0 / (s - 1)) for s in range(2, k + 1)], default=0.0)
    inner = max(float(M), float(M) ** k * ratio)
    return _safe_exp(M * (math.log(params.C) + 2 * math.log(v1) + math.log(inner)))


def tail_exponent_main(profile: NormProfile, x: float) -> float:
    """``min(x^2/V_1^2, min_s (x / (V_1^{(s-2)/(s-1)} V_s^{1/(s-1)}))^{2/k})``.

    A term whose denominator vanishes is taken as ``+inf``.
    """
    v = profile.v_s
    k = len(v)
    v1 = float(v[0])
    if v1 == 0.0:
        return math.inf
    terms = [x * x / (v1 * v1)]
    for s in range(2, k + 1):
        vs = float(v[s - 1])
        if vs == 0.0:
            terms.append(math.inf)
            continue
        w = v1 ** ((s - 2) / (s - 1)) * vs ** (1.0 / (s - 1))
        terms.append((x / w) ** (2.0 / k))
    return min(terms)


def tail_bound_main(profile: NormProfile, params: BoundParams, x: float) -> float:
    if x <= 0:
        raise ValueError("x must be positive")
    e = tail_exponent_main(profile, x)
    return params.C1 * math.exp(-params.C2 * e) if math.isfinite(e) else 0.0


def markov_moment_order(profile: NormProfile, x: float, C_tilde: float = 1.0) -> int:
    """Closest integer (at least 1) to ``C_tilde`` times the tail exponent."""
    e = tail_exponent_main(profile, x)
    if not math.isfinite(e):
        return 1
    return max(1, int(math.floor(C_tilde * e + 0.5)))


def markov_tail_bound(profile: NormProfile, params: BoundParams, x: float) -> tuple[float, int]:
    """Markov bound ``E Z^{2M} / x^{2M}`` with the moment bound and ``M`` chosen as above."""
    M = markov_moment_order(profile, x, params.C_tilde)
    mb = moment_bound_main(profile, params, M=M)
    if mb == 0.0:
        return 0.0, M
    return _safe_exp(math.log(mb) - 2 * M * math.log(x)), M


def moment_bound_theorem_a(v1: float, params: BoundParams) -> float:
    """``C (2kM/e)^{kM} V_1^{2M}``."""
    k, M = params.k, params.M
    if v1 == 0:
        return 0.0
    return _safe_exp(math.log(params.C) + k * M * math.log(2 * k * M / math.e) + 2 * M * math.log(v1))


def tail_bound_theorem_a(v1: float, params: BoundParams, x: float) -> float:
    """``C exp(-(x/V_1)^{2/k} / 2)``."""
    if v1 <= 0:
        raise ValueError("V_1 must be positive")
    return params.C * math.exp(-0.5 * (x / v1) ** (2.0 / params.k))


def hanson_wright_bound(lam: float, opnorm: float, params: BoundParams, x: float) -> float:
    """``C1 exp(-min(C2 x / ||A||, C2 x^2 / Lambda^2))``."""
    if x <= 0:
        raise ValueError("x must be positive")
    t1 = params.C2 * x / opnorm if opnorm > 0 else math.inf
    t2 = params.C2 * x * x / (lam * lam) if lam > 0 else math.inf
    e = min(t1, t2)
    return params.C1 * math.exp(-e) if math.isfinite(e) else 0.0


# -- simplified theorem ----------------------------------------------------------

@dataclass
class SimplifiedCheck:
    status: str
    k: int
    M: int
    R: float
    moment: float | None = None
    C_star: float | None = None
    violations: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "status": self.status, "k": self.k, "M": self.M, "R": self.R,
            "moment": self.moment, "C_star": self.C_star, "violations": self.violations,
        }


def reduction_radius(profile: NormProfile, M: int) -> float:
    """Smallest ``R`` for which ``f / V_1`` meets the hypotheses at this ``M``."""
    v = profile.v_s
    k = len(v)
    v1 = float(v[0])
    r = M ** (-(k - 1) / 2)
    for s in range(2, k + 1):
        r = max(r, (float(v[s - 1]) / v1) ** (1.0 / (s - 1)))
    return min(r, 1.0)


def simplified_theorem_check(
    a: CoefficientTensor,
    M: int,
    R: float,
    profile: NormProfile | None = None,
    method: str = "auto",
    rtol: float = 1e-12,
) -> SimplifiedCheck:
    """Exact ``E Z^{2M}`` and the smallest constant ``C*`` with ``E Z^{2M} = C*^M M^{kM} R^{2M}``."""
    k = a.order
    if 2 * M * k > MAX_VERTICES:
        raise DiagramCapError(f"2Mk = {2 * M * k} exceeds the cap {MAX_VERTICES}")
    profile = profile if profile is not None else norm_profile(a)
    out = SimplifiedCheck("ok", k, M, R)
    for s in range(1, k + 1):
        bound = R ** (s - 1)
        if profile.v(s) > bound * (1 + rtol):
            out.violations.append(f"V_{s} = {profile.v(s):.6g} > R^{s - 1} = {bound:.6g}")
    if R < M ** (-(k - 1) / 2) * (1 - rtol):
        out.violations.append(f"R = {R:.6g} < M^(-(k-1)/2) = {M ** (-(k - 1) / 2):.6g}")
    if out.violations:
        out.status = "hypothesis_violated"
        return out
    rep = product_moment([a] * (2 * M), method=method)
    out.moment = rep.moment_value
    denom = M * k * math.log(M) + 2 * M * math.log(R) if R > 0 else -math.inf
    if out.moment <= 0:
        out.C_star = 0.0
    else:
        out.C_star = math.exp((math.log(out.moment) - denom) / M)
    return out


# -- partition profiles --------------------------------------------------------

def _partitions_with_sizes(n: int, sizes: Sequence[int]):
    """Set partitions of ``{1..n}`` whose block sizes form the multiset ``sizes``."""
    from collections import Counter

    need = Counter(sizes)

    def rec(remaining: list[int]):
        if not remaining:
            yield []
            return
        first, rest = remaining[0], remaining[1:]
        for size in sorted(need):
            if need[size] == 0 or size - 1 > len(rest):
                continue
            need[size] -= 1
            for comp in itertools.combinations(rest, size - 1):
                left = [x for x in rest if x not in comp]
                for tail in rec(left):
                    yield [(first,) + comp] + tail
            need[size] += 1

    yield from rec(list(range(1, n + 1)))


def partition_profile_count(M: int, profile: Sequence[int]) -> tuple[int, float]:
    """Exact number of partitions of ``{1..2M}`` with the given block sizes, and the product bound.

    The bound is ``prod_r (2M)^{t_r - 1} / (t_r - 1)!``.
    """
    profile = [int(t) for t in profile]
    if sum(profile) != 2 * M:
        raise ValueError(f"profile {profile} does not sum to 2M = {2 * M}")
    if any(t < 2 for t in profile):
        raise ValueError("block sizes must be >= 2")
    if 2 * M > 12:
        raise ValueError("2M must be <= 12")
    exact = sum(1 for _ in _partitions_with_sizes(2 * M, profile))
    bound = math.prod((2 * M) ** (t - 1) / math.factorial(t - 1) for t in profile)
    return exact, bound
