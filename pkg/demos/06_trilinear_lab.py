"""
Conditioned trilinear forms
===========================

Fix the first Gaussian vector of a trilinear form.  What remains is a
random matrix; its Frobenius norm is ``sup_X`` and its top singular value is
``sup_Y``.  The table reports ``E sup_Y`` against ``M^{-1/2}`` and
``M^{-1/4}`` for instances scaled to meet the norm hypotheses.  Only the
second scaling is a known upper bound.
"""

import numpy as np

from wienerchaos.latala import GENERATORS, check_hypotheses, expected_sup_X_squared, m_sweep
from wienerchaos.tensor import frobenius_norm

a = GENERATORS["orthogonal-slices"](16, 0)
print(check_hypotheses(a, 16).to_json()["status"])
print("E sup_X^2", expected_sup_X_squared(a), "Frobenius^2", frobenius_norm(a) ** 2)

for name in GENERATORS:
    print(f"\n{name}")
    print("   M    E sup_Y      ci   /M^-1/2  /M^-1/4")
    for est in m_sweep(name, (4, 16, 64), samples=2000, seed=0):
        print(f"{est.M:4d} {est.mean:10.5f} {est.ci:7.5f} {est.ratio_Mhalf:8.3f} {est.ratio_Mquarter:8.3f}")
