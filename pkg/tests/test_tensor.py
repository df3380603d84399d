import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wienerchaos.tensor import (
    CoefficientTensor,
    TensorFormatError,
    frobenius_norm,
    group_contract,
    load_tensor,
    outer,
    permute_axes,
    random_sparse_tensor,
    scale,
    symmetrize,
    tensor_from_json,
    tensor_to_json,
)


def loop_contract(a, b, pairs):
    """Brute-force contraction over every index assignment."""
    n = a.dim
    pa = [p for p, _ in pairs]
    pb = [q for _, q in pairs]
    free_a = [ax for ax in range(1, a.order + 1) if ax not in pa]
    free_b = [ax for ax in range(1, b.order + 1) if ax not in pb]
    out = np.zeros((n,) * (len(free_a) + len(free_b)))
    for fa in itertools.product(range(1, n + 1), repeat=len(free_a)):
        for fb in itertools.product(range(1, n + 1), repeat=len(free_b)):
            total = 0.0
            for shared in itertools.product(range(1, n + 1), repeat=len(pairs)):
                ia = [0] * a.order
                ib = [0] * b.order
                for ax, v in zip(free_a, fa):
                    ia[ax - 1] = v
                for ax, v in zip(free_b, fb):
                    ib[ax - 1] = v
                for (p, q), v in zip(pairs, shared):
                    ia[p - 1] = v
                    ib[q - 1] = v
                total += a[ia] * b[ib]
            out[tuple(v - 1 for v in fa + fb)] = total
    return out


def test_entries_are_canonical():
    a = CoefficientTensor(2, 2, {(2, 1): 1.0, (1, 1): 0.0})
    assert dict(a.entries) == {(2, 1): 1.0}
    with pytest.raises(ValueError):
        CoefficientTensor(2, 2, {(1, 3): 1.0})
    with pytest.raises(ValueError):
        CoefficientTensor(2, 2, {(1,): 1.0})


def test_symmetric_flag_is_checked():
    with pytest.raises(ValueError):
        CoefficientTensor(2, 2, {(1, 2): 1.0}, symmetric=True)
    CoefficientTensor(2, 2, {(1, 2): 1.0, (2, 1): 1.0}, symmetric=True)


def test_symmetrize_matrix():
    a = CoefficientTensor(2, 2, {(1, 2): 1.0})
    s = symmetrize(a)
    assert s.symmetric
    assert np.allclose(s.dense, [[0, 0.5], [0.5, 0]])


def test_symmetrize_orbit():
    s = symmetrize(CoefficientTensor(3, 3, {(1, 2, 3): 6.0}))
    assert len(s.entries) == 6
    assert all(v == 1.0 for v in s.entries.values())


def test_symmetrize_keeps_symmetric_input():
    rng = np.random.default_rng(0)
    s = symmetrize(random_sparse_tensor(3, 3, rng))
    assert symmetrize(s) == s
    plain = CoefficientTensor(3, 3, dict(s.entries))
    assert dict(symmetrize(plain).entries) == pytest.approx(dict(s.entries), rel=1e-15)


@pytest.mark.parametrize("entries, expected", [
    ({(1, 2): 1.0}, 1.0),
    ({(1, 1): 2 ** -0.5, (2, 2): 2 ** -0.5}, 1.0),
    ({}, 0.0),
])
def test_frobenius(entries, expected):
    assert frobenius_norm(CoefficientTensor(2, 2, entries)) == pytest.approx(expected, abs=1e-15)


def test_scale():
    rng = np.random.default_rng(1)
    a = random_sparse_tensor(2, 3, rng)
    assert scale(a, 1.0) == a
    assert scale(a, 0.0).nnz == 0
    b = scale(a, 2.0 / frobenius_norm(a))
    assert frobenius_norm(scale(b, 0.5)) == pytest.approx(1.0)


def test_matrix_product():
    rng = np.random.default_rng(2)
    a, b = random_sparse_tensor(2, 3, rng), random_sparse_tensor(2, 3, rng)
    c = group_contract(a, b, [(2, 1)])
    assert np.allclose(c.dense, a.dense @ b.dense)


def test_full_self_contraction_is_norm_squared():
    rng = np.random.default_rng(3)
    a = random_sparse_tensor(3, 3, rng, normalize=True)
    c = group_contract(a, a, [(1, 1), (2, 2), (3, 3)])
    assert c.order == 0
    assert c[()] == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("seed", range(5))
def test_contract_matches_loops(seed):
    rng = np.random.default_rng(seed)
    a = random_sparse_tensor(3, 2, rng)
    b = random_sparse_tensor(2, 2, rng)
    pairs = [(int(rng.integers(1, 4)), int(rng.integers(1, 3)))]
    assert np.allclose(group_contract(a, b, pairs).dense, loop_contract(a, b, pairs), atol=1e-14)


def test_two_pair_contract_matches_loops():
    rng = np.random.default_rng(9)
    a = random_sparse_tensor(3, 3, rng)
    b = random_sparse_tensor(3, 3, rng)
    pairs = [(3, 1), (1, 2)]
    assert np.allclose(group_contract(a, b, pairs).dense, loop_contract(a, b, pairs), atol=1e-14)


def test_contract_errors():
    a = CoefficientTensor(2, 2, {(1, 1): 1.0})
    with pytest.raises(ValueError):
        group_contract(a, a, [(3, 1)])
    with pytest.raises(ValueError):
        group_contract(a, a, [(1, 1), (1, 2)])
    with pytest.raises(ValueError):
        group_contract(a, CoefficientTensor(2, 3, {(1, 1): 1.0}), [(1, 1)])


def test_empty_pairs_is_outer_product():
    rng = np.random.default_rng(4)
    a, b = random_sparse_tensor(2, 2, rng), random_sparse_tensor(1, 2, rng)
    c = group_contract(a, b, [])
    assert c == outer(a, b)
    assert frobenius_norm(c) == pytest.approx(frobenius_norm(a) * frobenius_norm(b))


def test_operations_are_deterministic():
    a = random_sparse_tensor(3, 3, np.random.default_rng(5))
    b = random_sparse_tensor(3, 3, np.random.default_rng(5))
    assert group_contract(a, a, [(1, 2)]).entries == group_contract(b, b, [(1, 2)]).entries


def test_permute_axes():
    a = CoefficientTensor(3, 2, {(1, 2, 2): 1.0})
    assert dict(permute_axes(a, [2, 3, 1]).entries) == {(2, 2, 1): 1.0}


def test_json_round_trip(tmp_path):
    a = random_sparse_tensor(3, 3, np.random.default_rng(6))
    assert tensor_from_json(json.loads(json.dumps(tensor_to_json(a)))) == a
    p = tmp_path / "a.json"
    p.write_text(json.dumps(tensor_to_json(a)))
    assert load_tensor(p) == a


@pytest.mark.parametrize("obj, where", [
    ({"order": 2, "dim": 2, "entries": [{"idx": [1, 1], "val": 1}, {"idx": [1, 1], "val": 2}]}, "$.entries[1].idx"),
    ({"order": 2, "dim": 2, "entries": [{"idx": [1, 3], "val": 1}]}, "$.entries[0].idx"),
    ({"order": 2, "dim": 2, "entries": [{"idx": [1], "val": 1}]}, "$.entries[0].idx"),
    ({"order": 2, "dim": 2, "entries": [{"idx": [1, 1], "val": "x"}]}, "$.entries[0].val"),
    ({"order": 2, "entries": []}, "missing field 'dim'"),
])
def test_json_errors_report_position(obj, where):
    with pytest.raises(TensorFormatError) as e:
        tensor_from_json(obj)
    assert where in str(e.value)


def test_malformed_file_reports_line(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"order": 2,\n "dim": }')
    with pytest.raises(TensorFormatError) as e:
        load_tensor(p)
    assert ":2:" in str(e.value)


dense_arrays = st.integers(1, 3).flatmap(
    lambda n: st.lists(st.floats(-3, 3, allow_nan=False), min_size=n ** 3, max_size=n ** 3).map(
        lambda xs: np.array(xs).reshape(n, n, n)))


@settings(max_examples=40, deadline=None)
@given(dense_arrays)
def test_symmetrize_idempotent_and_shrinks_norm(arr):
    a = CoefficientTensor.from_dense(arr)
    s = symmetrize(a)
    assert frobenius_norm(s) <= frobenius_norm(a) + 1e-12
    assert np.allclose(symmetrize(CoefficientTensor.from_dense(s.dense)).dense, s.dense, atol=1e-12)
