"""
Moment and tail bounds against simulation
=========================================

The moment bound is driven by the partition-norm profile.  Universal
constants are left at 1, so the curves show shape rather than a certified
inequality.  The Hanson-Wright bound for order two uses explicit constants.
"""

import numpy as np

from wienerchaos.gauss import empirical_tail, sample_Z
from wienerchaos.moments import (
    BoundParams,
    hanson_wright_bound,
    moment_bound_main,
    product_moment,
    tail_bound_main,
)
from wienerchaos.partitions import norm_profile
from wienerchaos.tensor import random_sparse_tensor, symmetrize

a = symmetrize(random_sparse_tensor(2, 4, np.random.default_rng(4), density=0.7, normalize=True))
prof = norm_profile(a)
params = BoundParams(k=2)

print(" M   E Z^2M        bound")
for M in (1, 2, 3, 4):
    print(f"{M:2d} {product_moment([a] * (2 * M)).moment_value:10.4g} {moment_bound_main(prof, params, M):12.4g}")

samples = sample_Z(a, 200_000, seed=5)
lam, opnorm = np.linalg.norm(a.dense), np.linalg.norm(a.dense, 2)
hw = BoundParams(k=2, C1=2.0, C2=1 / 8)
print("\n   x   P(|Z|>x)   main bound   Hanson-Wright")
for row in empirical_tail(samples, [0.5, 1, 2, 4, 8]):
    print(f"{row.x:4.1f} {row.p_hat:10.2e} {tail_bound_main(prof, params, row.x):12.3g} "
          f"{hanson_wright_bound(lam, opnorm, hw, row.x):14.3g}")
