"""
Cumulants as connected-diagram sums
===================================

Restricting the diagram sum to connected diagrams on a subset of rows gives
the joint cumulant of those factors.  Summing products of cumulants over set
partitions of the rows rebuilds the moment.
"""

import numpy as np

from wienerchaos.moments import CumulantTable, product_moment, reconstruct_moment
from wienerchaos.tensor import random_sparse_tensor

rng = np.random.default_rng(3)
kernels = [random_sparse_tensor(2, 3, rng, density=0.7, normalize=True) for _ in range(4)]

table = CumulantTable(kernels)
print("subsets with two or more rows:", len(table))
for rows in sorted(table, key=lambda s: (len(s), sorted(s))):
    print(f"  kappa{sorted(rows)} = {table[rows]: .6f}")

print("moment         ", product_moment(kernels).moment_value)
print("from cumulants ", reconstruct_moment(table))
