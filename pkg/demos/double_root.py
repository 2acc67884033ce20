"""
A double singular point and ln^2 t
==================================

Three pieces, K = (1, -3, 1) on the curves t/4 and t/2, f(t) = t.
The scalar characteristic function

    B(j) = 1 + 4 * 4^-(1+j) - 4 * 2^-(1+j) = (1 - 2^-j)^2

vanishes to second order at j = 0. The expansion then carries ln^2 t and
two free constants, one on ln t and one on 1.
"""
import numpy as np

from pwvolterra import build_asymptotics, classify, firstkind_residual, problem_from_dict, taylor_data

doc = {"name": "double-root", "m": 1, "n": 3, "T": 1.0,
       "kernels": [[["1"]], [["-3"]], [["1"]]],
       "alphas": ["0.25*t", "0.5*t"], "f": ["t"], "f_dt": ["1"]}
p = problem_from_dict(doc)

# Taylor data is extracted numerically from the expressions here.
td = taylor_data(p, 8)
report = classify(td, 3)
print([(pt.j, pt.classification, pt.multiplicity) for pt in report.points])

res = build_asymptotics(p, td, report, N=3)
print(res.to_text())
print("ln^2 coefficient", res.x.terms[(0, 2)][0, 0], "vs 1/(2 ln^2 2) =", 0.5 / np.log(2) ** 2)

ts = np.linspace(1e-3, 1, 25)
for c in [(0, 0), (1, -2), (-0.5, 4)]:
    bind = dict(zip(res.param_names, c))
    print(bind, f"{firstkind_residual(p, lambda s: res(s, bind), ts):.1e}")
