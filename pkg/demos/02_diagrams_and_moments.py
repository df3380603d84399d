"""
Moments from closed diagrams
============================

The moment of a product of chaos polynomials is a sum over closed
diagrams: one row of vertices per factor, every vertex matched to a vertex
on another row.  Here the sum is checked against a direct Gaussian
expansion.
"""

import numpy as np

from wienerchaos.diagrams import count_closed_diagrams, enumerate_closed_diagrams, evaluate, is_connected
from wienerchaos.gauss import isserlis_moment
from wienerchaos.moments import product_moment
from wienerchaos.tensor import random_sparse_tensor

# three rows of length two: the 8 ways to close them
rows = (2, 2, 2)
print("closed diagrams on rows", rows, "->", count_closed_diagrams(rows))
for d in enumerate_closed_diagrams(rows):
    print("  ", d.canonical_edge_string(), "connected" if is_connected(d) else "split")

a = random_sparse_tensor(2, 3, np.random.default_rng(0), density=0.6, normalize=True)
vals = [evaluate(d, [a] * 4).scalar for d in enumerate_closed_diagrams((2, 2, 2, 2))]
print("E Z^4 by enumeration:", sum(vals))

# larger moments go through the grouped recursion
for M in (1, 2, 3, 4):
    rep = product_moment([a] * (2 * M))
    print(f"E Z^{2 * M:<2d} = {rep.moment_value:12.6f}  ({rep.method}, {rep.diagram_count} diagrams)"
          f"  oracle {isserlis_moment(a, 2 * M):12.6f}")
