import math

import numpy as np
import pytest

from wienerchaos.latala import (
    GENERATORS,
    batched_sup_Y,
    check_hypotheses,
    conditioned_matrix,
    estimate_sup_Y_expectation,
    expected_sup_X_squared,
    expected_Y_squared,
    orthogonal_slices_instance,
    rank_one_instance,
    sup_X,
    sup_Y,
    TrilinearInstance,
)
from wienerchaos.tensor import CoefficientTensor, frobenius_norm, random_sparse_tensor


def test_rank_one_passes():
    rep = check_hypotheses(rank_one_instance(16), 16)
    assert rep.ok


def test_zero_passes():
    assert check_hypotheses(CoefficientTensor(3, 2, {}), 9).ok


def test_identity_slice_fails_bipartite():
    n = 4
    a = CoefficientTensor(3, n, {(1, j, j): n ** -0.5 for j in range(1, n + 1)})
    rep = check_hypotheses(a, 16)
    assert rep.lines[0].ok
    assert not rep.ok
    assert any(not line.ok and line.name.startswith("bipartite") for line in rep.lines)


def test_wrong_order():
    with pytest.raises(ValueError):
        check_hypotheses(CoefficientTensor(2, 2, {}), 4)
    with pytest.raises(ValueError):
        TrilinearInstance(CoefficientTensor(2, 2, {}), 4)


def test_conditioned_matrix():
    rng = np.random.default_rng(0)
    a = random_sparse_tensor(3, 3, rng)
    assert not np.any(conditioned_matrix(a, np.zeros(3)))
    assert np.allclose(conditioned_matrix(a, [1, 0, 0]), a.dense[0])
    x, y = rng.standard_normal(3), rng.standard_normal(3)
    assert np.allclose(conditioned_matrix(a, x + 2 * y), conditioned_matrix(a, x) + 2 * conditioned_matrix(a, y))
    loop = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                loop[j, k] += a[(i + 1, j + 1, k + 1)] * x[i]
    assert np.allclose(conditioned_matrix(a, x), loop)
    with pytest.raises(ValueError):
        conditioned_matrix(a, np.zeros(2))


def test_suprema():
    rng = np.random.default_rng(1)
    a = random_sparse_tensor(3, 4, rng)
    assert sup_X(a, np.zeros(4)) == 0.0
    assert sup_Y(a, np.zeros(4)) == 0.0
    assert sup_X(a, [1, 0, 0, 0]) == pytest.approx(np.linalg.norm(a.dense[0]))
    for x in rng.standard_normal((10, 4)):
        A = conditioned_matrix(a, x)
        assert sup_Y(a, x) == pytest.approx(np.linalg.norm(A, 2), abs=1e-8)
        assert sup_Y(a, x) <= sup_X(a, x) + 1e-12


def test_rank_one_matrix():
    u, v = np.array([3.0, 4.0]), np.array([1.0, 2.0, 2.0])
    a = CoefficientTensor.from_dense(np.einsum("i,j,k->ijk", [1.0, 0.0, 0.0], np.r_[u, 0.0], v))
    assert sup_Y(a, [1.0, 0, 0]) == pytest.approx(5 * 3)


def test_batched_matches_svd():
    mats = np.random.default_rng(2).standard_normal((30, 5, 4))
    assert np.allclose(batched_sup_Y(mats), np.linalg.norm(mats, 2, axis=(1, 2)), atol=1e-8)


def test_closed_form_second_moments():
    rng = np.random.default_rng(3)
    a = random_sparse_tensor(3, 3, rng)
    assert expected_sup_X_squared(a) == pytest.approx(frobenius_norm(a) ** 2, rel=1e-12)
    v, w = rng.standard_normal(3), rng.standard_normal(3)
    v, w = v / np.linalg.norm(v), w / np.linalg.norm(w)
    xs = rng.standard_normal((200_000, 3))
    mc = np.mean(np.einsum("njk,j,k->n", conditioned_matrix(a, xs), v, w) ** 2)
    assert mc == pytest.approx(expected_Y_squared(a, v, w), rel=0.03)


def test_y_second_moment_under_hypotheses():
    M = 16
    a = orthogonal_slices_instance(M)
    rng = np.random.default_rng(4)
    for _ in range(5):
        v, w = rng.standard_normal(M), rng.standard_normal(M)
        v, w = v / np.linalg.norm(v), w / np.linalg.norm(w)
        assert expected_Y_squared(a, v, w) <= M ** -2 * (1 + 1e-9)


def test_rank_one_expectation_closed_form():
    M = 4
    a = rank_one_instance(M)
    est = estimate_sup_Y_expectation(a, M, 40_000, seed=5)
    assert est.mean == pytest.approx(math.sqrt(2 / math.pi) / M, abs=3 * est.ci)


def test_zero_tensor_expectation():
    est = estimate_sup_Y_expectation(CoefficientTensor(3, 2, {}), 4, 100, seed=0)
    assert est.mean == 0.0


def test_violation_flag():
    a = CoefficientTensor(3, 2, {(1, 1, 1): 1.0})
    assert estimate_sup_Y_expectation(a, 16, 100, seed=0).status == "hypothesis_violated"


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_generators_meet_hypotheses(name):
    for M in (4, 16):
        assert check_hypotheses(GENERATORS[name](M, 0), M).ok


def test_estimate_is_deterministic():
    a = GENERATORS["random-sparse"](4, 0)
    e1 = estimate_sup_Y_expectation(a, 4, 3000, seed=11)
    e2 = estimate_sup_Y_expectation(a, 4, 3000, seed=11)
    assert e1 == e2
