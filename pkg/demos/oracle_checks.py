"""
Cross-checking the operator realizations
========================================

Closed-form constant against its integral, Galerkin energy against the
spectral energy, singular quadrature against the Fourier multiplier, and
the mollifier commuting with (-Delta)^(s/2).
"""
import numpy as np

from fraccond import FracParams, UniformGrid
from fraccond.fracops import frac_laplacian_fourier, frac_laplacian_quadrature
from fraccond.oracles import format_table, run_oracle_suite, smooth_bump

print(format_table(run_oracle_suite()))

# %%
# Pointwise view at s = 0.25: both realizations of (-Delta)^s on a bump
grid = UniformGrid(-4, 4, 1024)
u = smooth_bump(grid)
nodes = np.searchsorted(grid.x, [0.0, 0.5, 0.9, 1.2])
quad = frac_laplacian_quadrature(u, nodes, 0.25)
four = frac_laplacian_fourier(u, 0.25, pad=2, whole_line=True).values[nodes]
for x, a, b in zip(grid.x[nodes], quad, four):
    print(f"x = {x:+.4f}  quadrature {a:+.8f}  fourier {b:+.8f}")
print("C_(1,1/4) =", FracParams(0.25).c_ns, " 1/(2 sqrt(2 pi)) =", 1 / (2 * np.sqrt(2 * np.pi)))
