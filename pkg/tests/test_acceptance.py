"""One test per acceptance criterion.  Each prints a pass/fail line."""

import math
import time

import numpy as np
import pytest

from oracles import grid_trilinear_norm
from wienerchaos.cli import run
from wienerchaos.gauss import empirical_tail, isserlis_moment, sample_Z
from wienerchaos.latala import (
    GENERATORS,
    conditioned_matrix,
    expected_sup_X_squared,
    m_sweep,
)
from wienerchaos.moments import BoundParams, hanson_wright_bound, product_moment
from wienerchaos.partitions import SetPartition, norm_profile, partition_norm
from wienerchaos.tensor import (
    CoefficientTensor,
    frobenius_norm,
    random_sparse_tensor,
    save_tensor,
    scale,
    symmetrize,
)
from wienerchaos.verify import run_suite


def _worst(res, key):
    vals = [c[key] for c in res.cases if c.get(key) is not None]
    return max(vals) if vals else float("nan")


def test_criterion_01_cross_oracle(verdict):
    t0 = time.perf_counter()
    res = run_suite("cross-oracle", max_k=3, max_n=3, max_2Mk=16, instances=50, tol=1e-9)
    elapsed = time.perf_counter() - t0
    ok = res.passed and elapsed < 60
    assert verdict(1, "diagram moment equals Isserlis oracle", ok,
                   f"{len(res.cases)} cases, worst gap {_worst(res, 'gap'):.2e}, {elapsed:.1f}s")


def test_criterion_02_second_moment_anchor(verdict):
    gaps = []
    for k in (1, 2, 3):
        for i in range(10):
            f = symmetrize(random_sparse_tensor(k, 3, np.random.default_rng([2, k, i]), density=0.7))
            f = scale(f, 1 / frobenius_norm(f))
            val = product_moment([f, f]).moment_value
            gaps.append(abs(val - math.factorial(k)) / math.factorial(k))
            gaps.append(abs(isserlis_moment(f, 2) - math.factorial(k)) / math.factorial(k))
    worst = max(gaps)
    assert verdict(2, "E Z^2 = k! for unit symmetric kernels", worst <= 1e-12, f"worst gap {worst:.1e}")


def test_criterion_03_counts(verdict):
    res = run_suite("counts")
    assert verdict(3, "diagram counting anchors", res.passed,
                   f"{len(res.cases)} cases, {len(res.failures)} failures")


def test_criterion_04_basic_estimate(verdict):
    res = run_suite("basic-estimate", max_m=6, max_k=3, max_n=3, Rs=(0.25, 0.5, 1.0), instances=20)
    assert verdict(4, "connected diagram values within R^(m-2)", res.passed,
                   f"{len(res.cases)} cells, {len(res.failures)} violations")


def test_criterion_05_main_inequality(verdict):
    res = run_suite("main-inequality", instances=100)
    assert verdict(5, "open-diagram norm inequality", res.passed,
                   f"{len(res.cases)} instances, {len(res.failures)} violations")


def test_criterion_06_cumulant_identity(verdict):
    res = run_suite("cumulant-identity", max_k=3, max_n=3, max_2Mk=16, instances=50, tol=1e-10)
    assert verdict(6, "moment rebuilt from connected sums", res.passed,
                   f"{len(res.cases)} cases, worst gap {_worst(res, 'gap'):.2e}")


def test_criterion_07_norm_exactness(verdict):
    rng = np.random.default_rng(7)
    spectral_gaps = []
    for _ in range(50):
        d1, d2 = rng.integers(1, 7, size=2)
        n = int(max(d1, d2))
        arr = np.zeros((n, n))
        arr[:d1, :d2] = rng.standard_normal((d1, d2))
        a = CoefficientTensor.from_dense(arr)
        got = norm_profile(a).v(2)
        want = np.linalg.norm(arr, 2)
        spectral_gaps.append(abs(got - want) / max(1.0, want))
    trilinear_gaps = []
    three = SetPartition.parse("{1}{2}{3}")
    for i in range(20):
        a = random_sparse_tensor(3, 2, np.random.default_rng([7, i]), density=1.0, normalize=True)
        got = partition_norm(a, three).value
        want = grid_trilinear_norm(a.dense)
        trilinear_gaps.append(abs(got - want) / max(1.0, want))
    ok = max(spectral_gaps) <= 1e-8 and max(trilinear_gaps) <= 1e-6
    assert verdict(7, "partition norms match SVD and grid oracle", ok,
                   f"spectral {max(spectral_gaps):.1e}, trilinear {max(trilinear_gaps):.1e}")


def test_criterion_08_simplified_constant(verdict):
    res = run_suite("simplified-theorem", max_k=3, max_n=3, max_2Mk=16, c_max=16.0)
    assert verdict(8, "smallest constant C* stays <= 16", res.passed,
                   f"{len(res.cases)} cases, max C* {_worst(res, 'C_star'):.3f}")


def test_criterion_09_sharpness(verdict):
    t0 = time.perf_counter()
    res = run_suite("sharpness", ks=(2, 3), x=1e3, lo=0.85, hi=1.15)
    elapsed = time.perf_counter() - t0
    ratios = ", ".join(f"k={c['k']}: {c['ratio']:.4f}" for c in res.cases)
    assert verdict(9, "tail exponent ratio in [0.85, 1.15]", res.passed and elapsed < 1.0,
                   f"{ratios}, {elapsed:.3f}s")


CRITERION_10_KERNELS = {
    "hermite2": CoefficientTensor(2, 1, {(1, 1): 1.0}),
    "identity3": CoefficientTensor(2, 3, {(j, j): 3 ** -0.5 for j in (1, 2, 3)}),
    "random4": symmetrize(random_sparse_tensor(2, 4, np.random.default_rng([10, 2, 4]), density=0.7,
                                               normalize=True)),
}


def test_criterion_10_empirical_tails(verdict):
    t0 = time.perf_counter()
    params = BoundParams(k=2, C1=2.0, C2=1 / 8)
    grid = [0.25 * i for i in range(81)]
    violations, worst = 0, 0.0
    for name, a in CRITERION_10_KERNELS.items():
        mat = symmetrize(a).dense
        lam, opnorm = np.linalg.norm(mat), np.linalg.norm(mat, 2)
        rows = empirical_tail(sample_Z(a, 10 ** 6, seed=2024), grid)
        for r in rows:
            bound = hanson_wright_bound(lam, opnorm, params, r.x) if r.x > 0 else params.C1
            violations += r.p_hat > bound
            if bound > 0:
                worst = max(worst, r.p_hat / bound)
    elapsed = time.perf_counter() - t0
    ok = violations == 0 and elapsed < 120
    assert verdict(10, "empirical tails below Hanson-Wright (2, 1/8)", ok,
                   f"{violations} violations, max ratio {worst:.3f}, {elapsed:.1f}s")


def test_criterion_11_latala_lab(verdict):
    gaps = []
    for i in range(10):
        a = random_sparse_tensor(3, 3, np.random.default_rng([11, i]))
        gaps.append(abs(expected_sup_X_squared(a) - frobenius_norm(a) ** 2) / max(1.0, frobenius_norm(a) ** 2))
    closed_ok = max(gaps) <= 1e-10

    order_violations = 0
    for name, gen in GENERATORS.items():
        a = gen(4, 0)
        xs = np.random.default_rng([11, len(name)]).standard_normal((10 ** 4, a.dim))
        mats = conditioned_matrix(a, xs)
        sy = np.linalg.norm(mats, 2, axis=(1, 2))
        sx = np.linalg.norm(mats, axis=(1, 2))
        order_violations += int(np.sum(sy > sx * (1 + 1e-12)))

    ratios = {}
    for name in GENERATORS:
        ratios[name] = max(e.ratio_Mquarter for e in m_sweep(name, (4, 16, 64), samples=2000, seed=0))
    sweep_ok = all(r <= 10 for r in ratios.values())
    ok = closed_ok and order_violations == 0 and sweep_ok
    table = ", ".join(f"{k} {v:.3f}" for k, v in ratios.items())
    assert verdict(11, "sup_X identity, sup_Y <= sup_X, M^-1/4 ratios <= 10", ok,
                   f"identity gap {max(gaps):.1e}, {order_violations} order violations, max ratios: {table}")


def test_criterion_12_determinism(verdict, tmp_path):
    kernel = tmp_path / "kernel.json"
    save_tensor(CRITERION_10_KERNELS["random4"], kernel)
    bodies = {}
    for cmd, extra in [
        ("simulate", ["--kernel", str(kernel), "--samples", "200000", "--tail-grid", "0:0.5:10"]),
        ("latala", ["--generator", "random-sparse", "--M", "4,16", "--samples", "2000"]),
    ]:
        outs = []
        for rep in range(2):
            out = tmp_path / f"{cmd}{rep}.csv"
            code = run([cmd, *extra, "--seed", "77", "--out", str(out), "--report", str(tmp_path / "r.json")])
            assert code == 0
            outs.append(out.read_bytes())
        bodies[cmd] = outs[0] == outs[1]
    assert verdict(12, "same seed gives byte-identical CSV", all(bodies.values()),
                   ", ".join(f"{k} {'identical' if v else 'DIFFERENT'}" for k, v in bodies.items()))
