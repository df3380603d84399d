"""
Exact tails of a single Hermite polynomial
==========================================

For ``Z = H_k(xi)`` the event ``|Z| > x`` is a union of intervals bounded by
real roots of ``H_k(t) -/+ x``.  The normal mass of those intervals gives
the tail without sampling, and ``-log P / (x^{2/k}/2)`` tends to 1.
"""

from wienerchaos.gauss import sharpness_probe

for k in (1, 2, 3, 4):
    rows = sharpness_probe(k, [10.0, 1e2, 1e3, 1e4])
    print(f"k={k}: " + "  ".join(f"x={r.x:g} ratio={r.ratio:.4f}" for r in rows))
