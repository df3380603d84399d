"""
Partition norms of a coefficient tensor
=======================================

A coefficient tensor can be paired against unit test functions grouped by
a set partition of its axes.  One block gives the Frobenius norm, two blocks
a matrix spectral norm, and all singleton blocks the injective norm.
"""

import numpy as np

from wienerchaos.partitions import SetPartition, norm_profile, partition_norm
from wienerchaos.tensor import random_sparse_tensor

a = random_sparse_tensor(3, 4, np.random.default_rng(1), density=0.5, normalize=True)
print("order", a.order, "dim", a.dim, "nonzeros", len(a.entries))

# every partition of {1,2,3}
for text in ["{1,2,3}", "{1,2}{3}", "{1,3}{2}", "{1}{2,3}", "{1}{2}{3}"]:
    res = partition_norm(a, SetPartition.parse(text))
    print(f"{text:12s} {res.value:.6f}")

# the profile keeps the largest value for each number of blocks
prof = norm_profile(a)
print("v_s =", np.round(prof.v_s, 6))

# for a matrix the two-block value is the largest singular value
m = random_sparse_tensor(2, 5, np.random.default_rng(2), density=1.0)
print("two blocks", norm_profile(m).v(2), "svd", np.linalg.norm(m.dense, 2))
