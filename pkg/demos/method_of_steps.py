"""
Method of steps on a problem with a unique solution
===================================================

Convolution-type kernels (3 + t - s) E and (2 + t - s) E joined at s = t/2,
with the right side chosen so that x(t) = (exp t, cos t).

Here |D(0)| = 1/4 < 1, so the differentiated equation can be marched from
the origin: a contraction on [0, h], then intervals growing by a factor
1 + eps whose delayed arguments t/2 fall into the part already solved.
"""
import numpy as np

from pwvolterra import catalog, convergence_order
from pwvolterra.steps import check_condition_s, select_partition, solve_steps

entry = catalog("P_conv")
p = entry.problem

q0, c, feasible = check_condition_s(p)
print(f"|D(0)| = {q0:.3f}, c = {c:.3f}, feasible: {feasible}")

cfg = select_partition(p)
print(f"h = {cfg.h:.4f}, eps = {cfg.eps}")
for a, b in cfg.intervals:
    print(f"  [{a:.4f}, {b:.4f}]")

# %%
# Halving the mesh width cuts the error by about 4: trapezoid quadrature and
# linear interpolation of the delayed values are both second order.
errs = []
for M in (64, 128, 256, 512, 1024):
    sol = solve_steps(p, cfg, M)
    err = np.max(np.abs(sol.x.values - entry.solution(sol.x.mesh.nodes)))
    errs.append((1 / M, err))
    print(f"M={M:5d}  max error {err:.3e}  iterations per interval {sol.iterations}")
print("fitted order:", round(convergence_order(errs), 3))

# %%
# The join defects are the fixed-point residual at each interval boundary.
print(sol.joins)
