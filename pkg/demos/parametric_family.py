"""
A first-kind system with a one-parameter family of solutions
============================================================

Two diagonal kernels switch at s = t/2:

    int_0^{t/2} diag(1, 3) x(s) ds + int_{t/2}^t diag(-1, 1) x(s) ds = (t, t)

The first component has no unique continuous solution. The expansion near
t = 0 picks up a logarithm and a free constant, and every member of the
family solves the equation.
"""
import numpy as np

from pwvolterra import build_asymptotics, catalog, classify, firstkind_residual, taylor_data
from pwvolterra.picard import picard_config, solve_residual

entry = catalog("P_mat")
p = entry.problem

# %%
# The characteristic matrix B(j) is singular at j = 0 with a one-dimensional
# null space; every other j up to 6 is regular.
td = taylor_data(p, 11)
report = classify(td, 6)
for pt in report.points:
    print(f"j={pt.j}  det B={pt.det:+.3f}  rank={pt.rank}  {pt.classification}")

# %%
# The expansion. ``c1`` multiplies the null vector (1, 0).
res = build_asymptotics(p, td, report, N=4)
print(res.to_text())
print("free parameters:", res.param_names, " residual order:", res.residual_order)

# %%
# Any value of c1 gives a solution. Check the original (undifferentiated)
# equation by quadrature.
ts = np.linspace(1e-3, 1, 40)
for c in (0.0, 3.7, -10.0):
    r = firstkind_residual(p, lambda s: res(s, {"c1": c}), ts)
    print(f"c1={c:+5.1f}  first-kind residual {r:.1e}")

# %%
# Away from the origin the solution comes from successive approximation
# around the expansion, x = xhat + t^N* u.
cfg = picard_config(p)
sol = solve_residual(p, td, res.x, cfg, params={"c1": 1.0}, residual_order=res.residual_order)
print(f"N*={sol.nstar}, {sol.iterations} iterations, ratios ~ {np.median(sol.contraction_ratios):.3f}")
for t in (0.25, 0.5, 1.0):
    print(t, sol(t), entry.solution(t, {"c1": 1.0}))
