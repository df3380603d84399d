"""Independent reference computations shared by the test modules."""

import itertools

import numpy as np
from scipy.optimize import minimize


def grid_trilinear_norm(arr, points=1500):
    """sup over unit u, v, w in R^2 of sum a_ijk u_i v_j w_k.

    The w-maximization is done in closed form, u and v run over a grid of
    angles in [0, pi) and the best grid point is polished by Nelder-Mead.
    """
    th = np.linspace(0.0, np.pi, points, endpoint=False)
    U = np.stack([np.cos(th), np.sin(th)], axis=1)
    c = np.einsum("ijk,ai,bj->abk", arr, U, U)
    vals = np.linalg.norm(c, axis=2)
    a0, b0 = np.unravel_index(np.argmax(vals), vals.shape)

    def neg(t):
        u = np.array([np.cos(t[0]), np.sin(t[0])])
        v = np.array([np.cos(t[1]), np.sin(t[1])])
        return -np.linalg.norm(np.einsum("ijk,i,j->k", arr, u, v))

    res = minimize(neg, [th[a0], th[b0]], method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    return max(-res.fun, float(vals[a0, b0]))


def naive_matching_count(row_lengths):
    """Perfect matchings with no edge inside a row, by recursion over raw vertex lists."""
    verts = [j for j, k in enumerate(row_lengths) for _ in range(k)]

    def rec(rest):
        if not rest:
            return 1
        first, others = rest[0], rest[1:]
        return sum(rec(others[:i] + others[i + 1:]) for i, v in enumerate(others) if v != first)

    return rec(verts)


def bfs_connected(d):
    """Connectivity of the row graph by breadth-first search over the edge list."""
    rows = list(d.rows)
    seen = {rows[0]}
    frontier = [rows[0]]
    while frontier:
        r = frontier.pop()
        for v, w in d.edges:
            for a, b in ((v[0], w[0]), (w[0], v[0])):
                if a == r and b not in seen:
                    seen.add(b)
                    frontier.append(b)
    return len(seen) == len(rows)


def nested_loop_value(d, kernels):
    """Closed-diagram value by summing over every assignment of an index to each edge label."""
    n = kernels[0].dim
    labels = sorted(set(d.labels.values()))
    total = 0.0
    for assign in itertools.product(range(1, n + 1), repeat=len(labels)):
        val = dict(zip(labels, assign))
        prod = 1.0
        for j, f in zip(d.rows, kernels):
            prod *= f[[val[lab] for lab in d.row_labels(j)]]
            if prod == 0.0:
                break
        total += prod
    return total
