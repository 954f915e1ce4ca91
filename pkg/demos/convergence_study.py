"""
Refinement study of the DN difference
=====================================

d(N): gamma = 1 against gamma2 on disjoint windows, should go to zero.
D(N): the same pair with W2 := W1, should settle at a positive value.
"""
import numpy as np

from fraccond import FracParams, IntervalSet, WindowConfig
from fraccond.counterexample import convergence_study

cfg = WindowConfig(IntervalSet([(-1, 1)]), IntervalSet([(1.5, 2)]),
                   IntervalSet([(-2, -1.5)]), (-4, 4))

for s in (0.1, 0.25, 0.4):
    rep = convergence_study(cfg, FracParams(s), [256, 512, 1024, 2048])
    print(f"s = {s}")
    print(f"{'N':>6s} {'d':>11s} {'D':>11s} {'D/d':>10s} {'identity':>10s}")
    for r in rep.rows:
        print(f"{r.n_nodes:6d} {r.d:11.3e} {r.D:11.3e} {r.ratio:10.2e} {r.identity_residual:10.2e}")
    d = rep.column("d")
    print(f"fitted slope {rep.slope:.2f}, observed ratios {np.round(d[:-1] / d[1:], 2)}\n")
