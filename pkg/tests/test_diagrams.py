import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import bfs_connected, naive_matching_count, nested_loop_value
from wienerchaos.diagrams import (
    Diagram,
    DiagramCapError,
    connected_components,
    contract_dense,
    count_closed_diagrams,
    enumerate_closed_diagrams,
    evaluate,
    is_connected,
    multigraph_class_size,
    multigraph_diagram,
    product_of_components,
    row_multigraphs,
)
from wienerchaos.tensor import CoefficientTensor, frobenius_norm, random_sparse_tensor, scale, symmetrize


def random_diagram(row_lengths, rng):
    ds = list(enumerate_closed_diagrams(row_lengths))
    return ds[int(rng.integers(len(ds)))]


@pytest.mark.parametrize("rows, count", [
    ((1, 1), 1), ((2, 2), 2), ((3, 3), 6), ((1, 1, 1, 1), 3), ((1,) * 6, 15),
])
def test_small_counts(rows, count):
    assert sum(1 for _ in enumerate_closed_diagrams(rows)) == count
    assert count_closed_diagrams(rows) == count


@pytest.mark.parametrize("rows", [(2, 2, 2), (1, 2, 3), (3, 3, 2), (2, 2, 2, 2), (1, 1, 2, 3, 1)])
def test_counts_match_naive_matcher(rows):
    got = sum(1 for _ in enumerate_closed_diagrams(rows))
    assert got == naive_matching_count(rows) == count_closed_diagrams(rows)


def test_enumeration_has_no_duplicates():
    ds = list(enumerate_closed_diagrams((2, 2, 2, 2)))
    assert len({d.edges for d in ds}) == len(ds)
    assert all(d.closed for d in ds)


def test_odd_total():
    e = enumerate_closed_diagrams((1, 2))
    assert list(e) == []
    assert "odd" in e.status


def test_cap():
    with pytest.raises(DiagramCapError):
        enumerate_closed_diagrams((5, 5, 5, 5, 5))


def test_diagram_invariants():
    with pytest.raises(ValueError):
        Diagram.from_edges((2, 2), [((1, 1), (1, 2))])
    with pytest.raises(ValueError):
        Diagram.from_edges((2, 2), [((1, 1), (2, 1)), ((1, 1), (2, 2))])
    d = Diagram.from_edges((2, 2), [((1, 1), (2, 2))])
    labs = d.labels
    assert labs[(1, 1)] == labs[(2, 2)] == 1
    assert len(set(labs.values())) == 3
    assert d.open_vertices == [(1, 2), (2, 1)]


def test_connectivity_examples():
    full = Diagram.from_edges((2, 2), [((1, 1), (2, 1)), ((1, 2), (2, 2))])
    assert is_connected(full)
    paired = Diagram.from_edges((2, 2, 2, 2), [((1, 1), (2, 1)), ((1, 2), (2, 2)),
                                               ((3, 1), (4, 1)), ((3, 2), (4, 2))])
    assert not is_connected(paired)
    comps = connected_components(paired)
    assert [c.rows for c in comps] == [(1, 2), (3, 4)]
    assert connected_components(full) == [full]


def test_single_row_is_connected():
    assert is_connected(Diagram.from_edges((2,), []))


@pytest.mark.parametrize("seed", range(10))
def test_connectivity_matches_bfs(seed):
    rng = np.random.default_rng(seed)
    d = random_diagram((2, 1, 2, 1, 2), rng)
    assert is_connected(d) == bfs_connected(d)


@pytest.mark.parametrize("seed", range(5))
def test_components_reassemble(seed):
    d = random_diagram((1, 1, 2, 2, 1, 1), np.random.default_rng(seed))
    comps = connected_components(d)
    assert sorted(r for c in comps for r in c.rows) == list(d.rows)
    assert sorted(e for c in comps for e in c.edges) == list(d.edges)
    assert {v: lab for c in comps for v, lab in c.label_items} == d.labels
    assert all(is_connected(c) for c in comps)


def test_two_row_sum_is_k_factorial():
    for k in (1, 2, 3):
        f = symmetrize(random_sparse_tensor(k, 3, np.random.default_rng(k)))
        f = scale(f, 1 / frobenius_norm(f))
        total = sum(evaluate(d, [f, f]).scalar for d in enumerate_closed_diagrams((k, k)))
        assert total == pytest.approx(math.factorial(k), rel=1e-12)


def test_full_self_contraction():
    f = CoefficientTensor(2, 2, {(1, 2): 1.0})
    d = Diagram.from_edges((2, 2), [((1, 1), (2, 1)), ((1, 2), (2, 2))])
    assert evaluate(d, [f, f]).scalar == 1.0


def test_first_row_prefix_is_kernel():
    rng = np.random.default_rng(3)
    ks = [random_sparse_tensor(2, 2, rng) for _ in range(3)]
    d = random_diagram((2, 2, 2), rng)
    pk = evaluate(d.prefix(1), ks[:1])
    assert pk.tensor == ks[0]
    assert pk.open_labels == tuple(d.row_labels(1))


@pytest.mark.parametrize("seed", range(8))
def test_value_matches_nested_loops(seed):
    rng = np.random.default_rng(seed)
    rows = (2, 3, 1)
    ks = [random_sparse_tensor(k, 2, rng) for k in rows]
    d = random_diagram(rows, rng)
    want = nested_loop_value(d, ks)
    assert evaluate(d, ks).scalar == pytest.approx(want, rel=1e-12, abs=1e-14)
    assert float(contract_dense(d, [f.dense for f in ks])) == pytest.approx(want, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("seed", range(6))
def test_factorization(seed):
    rng = np.random.default_rng(seed)
    rows = (1, 2, 1, 2, 2)
    ks = [random_sparse_tensor(k, 2, rng) for k in rows]
    for d in list(enumerate_closed_diagrams(rows))[::7]:
        whole = evaluate(d, ks).scalar
        parts = product_of_components(d, ks).scalar
        assert whole == pytest.approx(parts, rel=1e-12, abs=1e-12)


def test_open_factorization():
    rng = np.random.default_rng(11)
    rows = (2, 2, 2, 2)
    ks = [random_sparse_tensor(k, 2, rng) for k in rows]
    d = Diagram.from_edges(rows, [((1, 1), (2, 1)), ((3, 1), (4, 2))])
    pk = evaluate(d, ks)
    parts = product_of_components(d, ks)
    assert sorted(pk.open_labels) == sorted(parts.open_labels)
    order = [parts.open_labels.index(lab) for lab in pk.open_labels]
    assert np.allclose(pk.tensor.dense, np.transpose(parts.tensor.dense, order), atol=1e-14)


def test_batched_contraction():
    rng = np.random.default_rng(12)
    rows = (2, 2, 2)
    stacks = [rng.standard_normal((4, 3, 3)) for _ in rows]
    d = random_diagram(rows, rng)
    batch = contract_dense(d, stacks, batch=True)
    for i in range(4):
        single = evaluate(d, [CoefficientTensor.from_dense(s[i]) for s in stacks]).scalar
        assert batch[i] == pytest.approx(single, rel=1e-12)


@pytest.mark.parametrize("rows", [(2, 2, 2), (3, 3, 3, 3), (1, 2, 3, 2), (2, 2, 2, 2, 2, 2)])
def test_multigraph_classes_cover_all_diagrams(rows):
    total = sum(multigraph_class_size(mg, rows) for mg in row_multigraphs(rows))
    assert total == count_closed_diagrams(rows)


def test_symmetric_kernels_constant_on_classes():
    rng = np.random.default_rng(13)
    rows = (2, 2, 2, 2)
    ks = [symmetrize(random_sparse_tensor(2, 2, rng)) for _ in rows]
    by_class = {}
    for d in enumerate_closed_diagrams(rows):
        mult = np.zeros((4, 4), dtype=int)
        for v, w in d.edges:
            mult[v[0] - 1, w[0] - 1] += 1
            mult[w[0] - 1, v[0] - 1] += 1
        by_class.setdefault(mult.tobytes(), []).append(evaluate(d, ks).scalar)
    for mg in row_multigraphs(rows):
        vals = by_class[mg.tobytes()]
        rep = evaluate(multigraph_diagram(mg, rows), ks).scalar
        assert len(vals) == multigraph_class_size(mg, rows)
        assert np.allclose(vals, rep, rtol=1e-12, atol=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(1, 3), min_size=2, max_size=5))
def test_count_bound(rows):
    total = sum(rows)
    if total % 2:
        return
    assert count_closed_diagrams(rows) <= total ** (total / 2)
