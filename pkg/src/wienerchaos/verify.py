"""Seeded property sweeps that certify the library against independent routes.

Each suite returns a :class:`SuiteResult` holding one record per case.  A
record always has an ``ok`` field; the suite passes when every record does.
Random instances are drawn from generators seeded by the case coordinates,
so any case can be regenerated on its own.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .diagrams import (
    connected_components,
    contract_dense,
    count_closed_diagrams,
    enumerate_closed_diagrams,
    evaluate,
    is_connected,
    multigraph_class_size,
    multigraph_diagram,
    row_multigraphs,
)
from .gauss import isserlis_moment, sharpness_probe
from .moments import (
    connected_diagram_count,
    cumulants,
    partition_profile_count,
    product_moment,
    reconstruct_moment,
    reduction_radius,
    simplified_theorem_check,
)
from .partitions import norm_profile
from .tensor import CoefficientTensor, group_contract, random_sparse_tensor, scale, symmetrize

__all__ = [
    "SuiteResult",
    "SUITES",
    "run_suite",
    "cross_oracle_suite",
    "cumulant_identity_suite",
    "counts_suite",
    "basic_estimate_suite",
    "detailed_basic_estimate_suite",
    "main_inequality_suite",
    "simplified_theorem_suite",
    "sharpness_suite",
]

RTOL_BOUND = 1e-9


@dataclass
class SuiteResult:
    name: str
    cases: list[dict] = field(default_factory=list)
    caps: dict = field(default_factory=dict)

    @property
    def failures(self) -> list[dict]:
        return [c for c in self.cases if not c["ok"]]

    @property
    def passed(self) -> bool:
        return bool(self.cases) and not self.failures

    def summary(self) -> dict:
        return {"suite": self.name, "cases": len(self.cases), "failures": len(self.failures),
                "passed": self.passed, "caps": self.caps}

    def ledger(self) -> list[str]:
        lines = []
        for c in self.cases:
            lines.append(" ".join(f"{k}={_fmt(v)}" for k, v in c.items()))
        return lines


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def _moment_cases(max_k: int, max_n: int, max_2Mk: int):
    for k in range(1, max_k + 1):
        for n in range(1, max_n + 1):
            for M in range(1, max_2Mk // (2 * k) + 1):
                yield k, n, M


def sweep_tensor(k: int, n: int, M: int, i: int, seed: int) -> CoefficientTensor:
    rng = np.random.default_rng([seed, k, n, M, i])
    return random_sparse_tensor(k, n, rng, density=0.6, normalize=True)


def cross_oracle_suite(max_k=3, max_n=3, max_2Mk=16, instances=50, seed=0, tol=1e-9) -> SuiteResult:
    """Diagram moment ``E Z^{2M}`` against the Isserlis expansion."""
    res = SuiteResult("cross-oracle", caps={"max_k": max_k, "max_n": max_n, "max_2Mk": max_2Mk,
                                              "instances": instances, "seed": seed, "rtol": tol})
    for k, n, M in _moment_cases(max_k, max_n, max_2Mk):
        for i in range(instances):
            a = sweep_tensor(k, n, M, i, seed)
            rep = product_moment([a] * (2 * M)).with_oracle(isserlis_moment(a, 2 * M))
            res.cases.append({"k": k, "n": n, "M": M, "i": i, "diagram": rep.moment_value,
                              "oracle": rep.oracle_value, "gap": rep.relative_gap,
                              "ok": rep.relative_gap <= tol})
    return res


def cumulant_identity_suite(max_k=3, max_n=3, max_2Mk=16, instances=50, seed=0, tol=1e-10) -> SuiteResult:
    """Moment rebuilt from connected-diagram sums over set partitions."""
    res = SuiteResult("cumulant-identity", caps={"max_k": max_k, "max_n": max_n, "max_2Mk": max_2Mk,
                                                   "instances": instances, "seed": seed, "rtol": tol})
    for k, n, M in _moment_cases(max_k, max_n, max_2Mk):
        for i in range(instances):
            a = sweep_tensor(k, n, M, i, seed)
            kernels = [a] * (2 * M)
            mom = product_moment(kernels).moment_value
            rec = reconstruct_moment(cumulants(kernels))
            gap = abs(rec - mom) / max(1.0, abs(mom))
            res.cases.append({"k": k, "n": n, "M": M, "i": i, "moment": mom, "reconstructed": rec,
                              "gap": gap, "ok": gap <= tol})
    return res


def _pairing_family_count(rows: Sequence[int]) -> int:
    """Closed diagrams whose row graph pairs the rows off, all edges of a row going to its partner."""
    total = 0
    for d in enumerate_closed_diagrams(rows):
        g = d.row_graph()
        if all(len(nb) == 1 for nb in g.values()):
            total += 1
    return total


def counts_suite() -> SuiteResult:
    res = SuiteResult("counts", caps={"max_2M_single": 10, "max_k_two_rows": 6, "pairing_max_2M": 6,
                                        "pairing_max_k": 2})
    for M in range(1, 6):
        rows = (1,) * (2 * M)
        got = sum(1 for _ in enumerate_closed_diagrams(rows))
        want = math.prod(range(1, 2 * M, 2))
        res.cases.append({"family": "single-vertex rows", "rows": rows, "count": got, "expected": want,
                          "ok": got == want == count_closed_diagrams(rows)})
    for k in range(1, 7):
        got = sum(1 for _ in enumerate_closed_diagrams((k, k)))
        res.cases.append({"family": "two rows", "rows": (k, k), "count": got, "expected": math.factorial(k),
                          "ok": got == math.factorial(k)})
    for k in (1, 2):
        for M in (1, 2, 3):
            rows = (k,) * (2 * M)
            got = _pairing_family_count(rows)
            want = math.factorial(2 * M) // (2 ** M * math.factorial(M)) * math.factorial(k) ** M
            res.cases.append({"family": "row pairings", "rows": rows, "count": got, "expected": want,
                              "ok": got == want})
    for k in (1, 2, 3):
        for m in range(2, 7):
            if (k * m) % 2 or k * m > 12:
                continue
            rows = (k,) * m
            got = count_closed_diagrams(rows)
            bound = (k * m) ** (k * m / 2)
            res.cases.append({"family": "count bound", "rows": rows, "count": got, "bound": bound,
                              "ok": got <= bound})
    for M, prof, want in [(2, (2, 2), 3), (2, (4,), 1), (3, (2, 4), 15), (3, (2, 2, 2), 15), (3, (3, 3), 10)]:
        got, bound = partition_profile_count(M, prof)
        res.cases.append({"family": "partition profile", "rows": prof, "count": got, "expected": want,
                          "bound": bound, "ok": got == want and got <= bound})
    return res


# -- basic estimate --------------------------------------------------------------

def _scale_to_radius(profile, R: float) -> float:
    """Largest ``c`` with ``V_s(c f) <= R^{s-1}`` for all ``s``."""
    ratios = [R ** (s - 1) / profile.v(s) for s in range(1, profile.order + 1) if profile.v(s) > 0]
    return min(ratios)


ENUMERATION_LIMIT = 20000


def basic_estimate_suite(max_m=6, max_k=3, max_n=3, Rs=(0.25, 0.5, 1.0), instances=20, seed=0) -> SuiteResult:
    """``|F_gamma| <= R^{m-2}`` for connected closed diagrams of scaled kernels.

    Diagrams are enumerated explicitly with independent non-symmetric kernels
    on every row.  When a cell has more than ``ENUMERATION_LIMIT`` connected
    diagrams the kernels are symmetrized instead; ``F_gamma`` is then constant
    on diagrams sharing an edge-multiplicity matrix and one representative per
    matrix suffices.
    """
    res = SuiteResult("basic-estimate", caps={"max_m": max_m, "max_k": max_k, "max_n": max_n, "R": list(Rs),
                                                "instances": instances, "seed": seed,
                                                "enumeration_limit": ENUMERATION_LIMIT})
    for k in range(1, max_k + 1):
        for n in range(1, max_n + 1):
            raw = [[random_sparse_tensor(k, n, np.random.default_rng([seed, k, n, i, j]), density=0.7)
                    for j in range(max_m)] for i in range(instances)]
            for m in range(2, max_m + 1):
                if (k * m) % 2:
                    continue
                rows = (k,) * m
                ncon = connected_diagram_count(rows)
                if ncon == 0:
                    continue
                explicit = ncon <= ENUMERATION_LIMIT
                kern = [[f if explicit else symmetrize(f) for f in inst[:m]] for inst in raw]
                profiles = [[norm_profile(f, seed=seed) for f in inst] for inst in kern]
                stacked = [np.stack([inst[j].dense for inst in kern]) for j in range(m)]
                # F_gamma of scaled kernels = product of scale factors * F_gamma of raw kernels
                factors = {R: np.array([math.prod(_scale_to_radius(p, R) for p in prof) for prof in profiles])
                           for R in Rs}
                worst = {R: 0.0 for R in Rs}
                checked = 0
                if explicit:
                    diagrams = (d for d in enumerate_closed_diagrams(rows) if is_connected(d))
                    weights = None
                else:
                    mgs = [mg for mg in row_multigraphs(rows)]
                    diagrams = []
                    weights = 0
                    for mg in mgs:
                        d = multigraph_diagram(mg, rows)
                        if is_connected(d):
                            diagrams.append(d)
                            weights += multigraph_class_size(mg, rows)
                for d in diagrams:
                    vals = np.abs(contract_dense(d, stacked, batch=True))
                    checked += 1
                    for R in Rs:
                        worst[R] = max(worst[R], float(np.max(vals * factors[R])) / R ** (m - 2))
                covered = checked if explicit else weights
                for R in Rs:
                    res.cases.append({"k": k, "n": n, "m": m, "R": R, "diagrams": covered,
                                      "evaluated": checked, "route": "explicit" if explicit else "classes",
                                      "max_ratio": worst[R], "ok": worst[R] <= 1 + RTOL_BOUND and covered == ncon})
    return res


def detailed_basic_estimate_suite(max_m=4, max_k=3, max_n=2, Rs=(0.25, 0.5, 1.0), instances=3, seed=0,
                                  restarts=8) -> SuiteResult:
    """Components of every prefix ``gamma^r`` of a connected closed diagram.

    Each component must keep an open vertex, and with kernels scaled to radius
    ``R`` its partial kernel must satisfy ``V_s <= R^{|A|+s-2}``.
    """
    res = SuiteResult("detailed-basic-estimate", caps={"max_m": max_m, "max_k": max_k, "max_n": max_n,
                                                         "R": list(Rs), "instances": instances, "seed": seed,
                                                         "restarts": restarts})
    for k in range(2, max_k + 1):
        for n in range(1, max_n + 1):
            for m in range(3, max_m + 1):
                if (k * m) % 2:
                    continue
                rows = (k,) * m
                for i in range(instances):
                    rng = np.random.default_rng([seed, k, n, m, i])
                    kernels = [random_sparse_tensor(k, n, rng, density=0.7) for _ in range(m)]
                    profiles = [norm_profile(f, restarts=restarts, seed=seed) for f in kernels]
                    cache: dict = {}
                    worst = {R: 0.0 for R in Rs}
                    open_ok = True
                    for d in enumerate_closed_diagrams(rows):
                        if not is_connected(d):
                            continue
                        for r in range(1, m):
                            for comp in connected_components(d.prefix(r)):
                                if not comp.open_vertices:
                                    open_ok = False
                                    continue
                                key = (comp.rows, comp.edges)
                                if key not in cache:
                                    sub = [kernels[j - 1] for j in comp.rows]
                                    pk = evaluate(comp, sub)
                                    cache[key] = (comp.rows, norm_profile(pk.tensor, restarts=restarts, seed=seed))
                    for rows_A, prof in cache.values():
                        for R in Rs:
                            c = math.prod(_scale_to_radius(profiles[j - 1], R) for j in rows_A)
                            for s in range(1, prof.order + 1):
                                bound = R ** (len(rows_A) + s - 2)
                                worst[R] = max(worst[R], c * prof.v(s) / bound)
                    for R in Rs:
                        res.cases.append({"k": k, "n": n, "m": m, "i": i, "R": R, "components": len(cache),
                                          "open_vertex_ok": open_ok, "max_ratio": worst[R],
                                          "ok": open_ok and worst[R] <= 1 + RTOL_BOUND})
    return res


def main_inequality_suite(instances=100, seed=0, max_dim=3) -> SuiteResult:
    """``V_s(F) <= D1 D2 R^{s-2}`` for the contraction of ``f`` and ``g`` over ``q`` shared axes."""
    res = SuiteResult("main-inequality", caps={"instances": instances, "seed": seed, "max_mnq": 2,
                                                 "max_dim": max_dim})
    for i in range(instances):
        rng = np.random.default_rng([seed, i])
        while True:
            m, n = (int(v) for v in rng.integers(0, 3, size=2))
            if m + n >= 1:
                break
        q = int(rng.integers(1, 3))
        dim = int(rng.integers(1, max_dim + 1))
        R = float(rng.uniform(0.1, 1.0))
        D1, D2 = (float(v) for v in rng.uniform(0.5, 2.0, size=2))
        f = random_sparse_tensor(m + q, dim, rng, density=0.7)
        g = random_sparse_tensor(n + q, dim, rng, density=0.7)

        def fit(t, D):
            prof = norm_profile(t, seed=seed)
            c = min(D * R ** (s - 2) / prof.v(s) for s in range(1, t.order + 1) if prof.v(s) > 0)
            return scale(t, c)

        f, g = fit(f, D1), fit(g, D2)
        pairs = [(m + j, n + j) for j in range(1, q + 1)]
        F = group_contract(f, g, pairs)
        prof = norm_profile(F, seed=seed)
        worst = max(prof.v(s) / (D1 * D2 * R ** (s - 2)) for s in range(1, m + n + 1))
        res.cases.append({"i": i, "m": m, "n": n, "q": q, "dim": dim, "R": R, "D1": D1, "D2": D2,
                          "max_ratio": worst, "ok": worst <= 1 + RTOL_BOUND})
    return res


def simplified_theorem_suite(max_k=3, max_n=3, max_2Mk=16, instances=10, seed=0, c_max=16.0) -> SuiteResult:
    """Smallest constant ``C*`` in ``E Z^{2M} <= C*^M M^{kM} R^{2M}`` over normalized kernels.

    Each kernel is divided by its Frobenius norm and ``R`` is the smallest
    radius meeting the hypotheses.
    """
    res = SuiteResult("simplified-theorem", caps={"max_k": max_k, "max_n": max_n, "max_2Mk": max_2Mk,
                                                    "instances": instances, "seed": seed, "C_max": c_max})
    for k, n, M in _moment_cases(max_k, max_n, max_2Mk):
        for i in range(instances + 1):
            if i < instances:
                a = sweep_tensor(k, n, M, i, seed + 1)
                label = f"random-{i}"
            else:
                # identity-type kernel spread over all coordinates
                a = CoefficientTensor(k, n, {(j,) * k: n ** -0.5 for j in range(1, n + 1)}, symmetric=True)
                label = "diagonal"
            prof = norm_profile(a, seed=seed)
            R = reduction_radius(prof, M)
            chk = simplified_theorem_check(a, M, R, profile=prof)
            ok = chk.status == "ok" and chk.C_star <= c_max
            res.cases.append({"k": k, "n": n, "M": M, "kernel": label, "R": R, "status": chk.status,
                              "moment": chk.moment, "C_star": chk.C_star, "ok": ok})
    return res


def sharpness_suite(ks=(2, 3), x=1e3, lo=0.85, hi=1.15) -> SuiteResult:
    res = SuiteResult("sharpness", caps={"k": list(ks), "x": x, "window": [lo, hi]})
    for k in ks:
        row = sharpness_probe(k, [x])[0]
        res.cases.append({"k": k, "x": x, "log_tail": row.log_tail, "ratio": row.ratio,
                          "ok": lo <= row.ratio <= hi})
    return res


SUITES: dict[str, Callable[..., SuiteResult]] = {
    "cross-oracle": cross_oracle_suite,
    "basic-estimate": basic_estimate_suite,
    "main-inequality": main_inequality_suite,
    "cumulant-identity": cumulant_identity_suite,
    "counts": counts_suite,
    "sharpness": sharpness_suite,
    "detailed-basic-estimate": detailed_basic_estimate_suite,
    "simplified-theorem": simplified_theorem_suite,
}


def run_suite(name: str, **kwargs) -> SuiteResult:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    return SUITES[name](**kwargs)
