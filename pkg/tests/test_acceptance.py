"""Acceptance criteria, one test each, at the stated tolerances and time budgets.

Each test records a PASS/FAIL line (printed in the terminal summary) before
asserting. A criterion that fails is left failing; the recorded detail says why.
"""
import math
import time

import numpy as np
from hypothesis import HealthCheck, given, settings, strategies as st

from pwvolterra.asymptotic import build_asymptotics, residual_order
from pwvolterra.characteristic import REGULAR, SIMPLE, b_derivative, classify, pairing_matrix
from pwvolterra.errors import DegenerateFit, Diverged
from pwvolterra.logpower import lp_eval
from pwvolterra.picard import picard_config, solve_residual
from pwvolterra.problem import taylor_data
from pwvolterra.steps import check_condition_s, select_partition, solve_steps
from pwvolterra.verify import CATALOG_NAMES, catalog, convergence_order, firstkind_residual

LN2 = math.log(2.0)
EXACT_DATA = ("P_reg", "P_sing", "P_mat", "P_man")


def fitted_slope(ts, diffs):
    """Slope of log|diff| against log t (t decreasing), or the reason there is none."""
    try:
        return convergence_order(list(zip(ts, diffs))), ""
    except DegenerateFit as exc:
        return float("nan"), str(exc)


def picard(name, N=4, nstar=None, params=None, intervals=None):
    p = catalog(name).problem
    td = taylor_data(p, N + 5)
    res = build_asymptotics(p, td, N=N)
    over = {}
    if nstar is not None:
        over["nstar"] = nstar
    if intervals is not None:
        over["intervals"] = intervals
    cfg = picard_config(p, **over)
    bound = {k: 0.0 for k in res.x.params} if params is None else params
    return solve_residual(p, td, res.x, cfg, params=bound, residual_order=res.residual_order), res


def test_criterion_1_parametric_family(criterion):
    t0 = time.perf_counter()
    e = catalog("P_mat")
    res = build_asymptotics(e.problem, taylor_data(e.problem, 9), N=4)
    text_ok = res.to_text() == "x(t) = (-1.442695*ln t + c1)*e1 + 0.5*e2 + O(t^5)"
    coeffs_ok = (np.allclose(res.x.terms[(0, 1)][:, 0], [-1 / LN2, 0], atol=1e-14)
                 and np.allclose(res.x.terms[(0, 0)][:, 0], [0, 0.5], atol=1e-14)
                 and np.allclose(res.x.terms[(0, 0)][:, 1], [1, 0], atol=1e-14))
    ts = np.linspace(1e-3, 1, 40)
    resid = max(firstkind_residual(e.problem, lambda s: res(s, {"c1": c}), ts) for c in (0.0, 3.7))
    elapsed = time.perf_counter() - t0
    ok = text_ok and coeffs_ok and len(res.params) == 1 and resid <= 1e-8 and elapsed < 1
    criterion(1, ok, f"{res.to_text()}; params={res.param_names}; residual={resid:.2e}; "
                     f"{elapsed:.2f}s")
    assert ok


def test_criterion_2_classification(criterion):
    t0 = time.perf_counter()
    mat = classify(catalog("P_mat").problem.taylor, 6)
    sing_td = catalog("P_sing").problem.taylor
    sing = classify(sing_td, 6)
    reg = classify(catalog("P_reg").problem.taylor, 6)
    elapsed = time.perf_counter() - t0
    pt = sing[0]
    pairing = float(pairing_matrix(b_derivative(sing_td, 0, 1), pt.nullspace)[0, 0])
    ok = (mat[0].classification == SIMPLE and mat[0].rank == 1
          and sing[0].classification == SIMPLE and abs(abs(pairing) - LN2) <= 1e-14
          and all(p.classification == REGULAR for p in reg.points) and len(reg.points) == 7
          and elapsed < 0.1)
    criterion(2, ok, f"P_mat j=0 {mat[0].classification} rank {mat[0].rank}; P_sing pairing "
                     f"{abs(pairing):.15f}; P_reg {sorted({p.classification for p in reg.points})}"
                     f" j<=6; {elapsed * 1e3:.1f}ms")
    assert ok


def test_criterion_3_regular_exactness(criterion):
    t0 = time.perf_counter()
    ts = np.linspace(1e-8, 1, 1001)
    sol, _ = picard("P_reg")
    e_pic = float(np.max(np.abs(sol(ts) - 2 / 3)))
    p = catalog("P_reg").problem
    st_sol = solve_steps(p, select_partition(p), 1024)
    e_steps = float(np.max(np.abs(st_sol(ts) - 2 / 3)))
    q = catalog("P_man").problem
    man = solve_steps(q, select_partition(q), 1024)
    nodes = man.x.mesh.nodes
    e_man_steps = float(np.max(np.abs(man.x.values[:, 0] - (1 + nodes))))
    man_pic, _ = picard("P_man", intervals=1024)
    e_man_pic = float(np.max(np.abs(man_pic(nodes[1:])[:, 0] - (1 + nodes[1:]))))
    elapsed = time.perf_counter() - t0
    ok = max(e_pic, e_steps) <= 1e-8 and max(e_man_steps, e_man_pic) <= 2e-6 and elapsed < 5
    criterion(3, ok, f"P_reg picard {e_pic:.1e} steps {e_steps:.1e}; P_man steps "
                     f"{e_man_steps:.1e} picard {e_man_pic:.1e}; {elapsed:.2f}s")
    assert ok


def test_criterion_4_remainder_estimate(criterion):
    t0 = time.perf_counter()
    sol, res = picard("P_man", N=2, nstar=2)
    ts = 2.0 ** -np.arange(4, 15)
    diffs = np.abs(sol(ts) - lp_eval(res.x, ts))[:, 0]
    slope, why = fitted_slope(ts, diffs)
    elapsed = time.perf_counter() - t0
    ok = np.isfinite(slope) and slope >= 1.5 and elapsed < 5
    detail = f"slope={slope:.3g}" if not why else (
        f"no slope: {why} (max |x - xhat| = {diffs.max():.1e}; xhat = {res.to_text()} "
        f"is the exact solution, so the difference vanishes identically)")
    criterion(4, ok, f"{detail}; {elapsed:.2f}s")
    assert ok


def test_criterion_5_regime_consistency(criterion):
    t0 = time.perf_counter()
    got = {n: check_condition_s(catalog(n).problem) for n in ("P_reg", "P_conv", "P_sing", "P_mat")}
    elapsed = time.perf_counter() - t0
    ok = (got["P_reg"][2] and got["P_conv"][2] and not got["P_sing"][2] and not got["P_mat"][2]
          and abs(got["P_sing"][0] - 1.0) <= 1e-12
          and all(g[2] == catalog(n).unique for n, g in got.items()) and elapsed < 0.1)
    criterion(5, ok, "; ".join(f"{n} |D(0)|={g[0]:.12g} {'feasible' if g[2] else 'infeasible'}"
                               for n, g in got.items()) + f"; {elapsed * 1e3:.1f}ms")
    assert ok


def test_criterion_6_steps_order(criterion):
    t0 = time.perf_counter()
    p = catalog("P_man").problem
    cfg = select_partition(p)
    errs = []
    for k in range(7, 11):
        sol = solve_steps(p, cfg, 2 ** k)
        nodes = sol.x.mesh.nodes
        errs.append((2.0 ** -k, float(np.max(np.abs(sol.x.values[:, 0] - (1 + nodes))))))
    try:
        order, why = convergence_order(errs), ""
    except DegenerateFit as exc:
        order, why = float("nan"), str(exc)
    elapsed = time.perf_counter() - t0
    ok = 1.7 <= order <= 2.3 and elapsed < 30
    criterion(6, ok, f"order={order:.3g} errors={[f'{e:.2e}' for _, e in errs]}{why}; the scheme "
                     f"reproduces the linear solution up to the iteration tolerance; {elapsed:.2f}s")
    assert ok


def test_criterion_7_series_vs_steps(criterion):
    t0 = time.perf_counter()
    ts = 2.0 ** -np.arange(4, 11)
    ok, parts = True, []
    for name in ("P_reg", "P_man"):
        p = catalog(name).problem
        series = build_asymptotics(p, taylor_data(p, 11), N=6)
        sol = solve_steps(p, select_partition(p), 1024)
        diffs = np.abs(sol(ts) - lp_eval(series.x, ts))[:, 0]
        slope, why = fitted_slope(ts, diffs)
        ok &= bool(np.isfinite(slope) and slope >= 6.5)
        parts.append(f"{name} slope={slope:.3g} max diff={diffs.max():.1e}{' ' + why if why else ''}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 10
    criterion(7, ok, "; ".join(parts) + f" (series and steps both exact, difference is rounding);"
                     f" {elapsed:.2f}s")
    assert ok


_RATIOS: list = []


@settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(name=st.sampled_from(CATALOG_NAMES), c=st.floats(-5, 5), M=st.sampled_from([256, 512, 1024]))
def test_criterion_8_contraction(criterion, name, c, M):
    try:
        sol, _ = picard(name, params=None if name != "P_sing" and name != "P_mat" else {"c1": c},
                        intervals=M)
    except Diverged as exc:
        criterion(8, False, f"{name} c={c} M={M}: Diverged: {exc}")
        raise
    tail = sol.contraction_ratios[3:]
    worst = max(tail, default=0.0)
    _RATIOS.append(worst)
    if worst > 0.99:
        criterion(8, False, f"{name} c={c} M={M}: ratio {worst:.3f} after iteration 3")
    assert worst <= 0.99


def test_criterion_8_summary(criterion):
    """Runs once over every catalog problem after the property test."""
    worst = 0.0
    for name in CATALOG_NAMES:
        sol, _ = picard(name, intervals=512)
        worst = max([worst] + sol.contraction_ratios[3:])
    ok = worst <= 0.99
    criterion(8, ok, f"max ratio after iteration 3 over all catalog runs: "
                     f"{max([worst] + _RATIOS):.3f}; no Diverged")
    assert ok


def test_criterion_9_residual_order(criterion):
    t0 = time.perf_counter()
    ok, parts = True, []
    for N in (2, 4):
        for name in EXACT_DATA:
            p = catalog(name).problem
            td = taylor_data(p, N + 5)
            res = build_asymptotics(p, td, N=N, residual=False)
            order = residual_order(res, td, p)
            ok &= order >= N + 0.5
            parts.append(f"{name}/N={N}:{order:.3g}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 2
    criterion(9, ok, " ".join(parts) + f"; {elapsed:.2f}s")
    assert ok


# supplementary measurements on the problem with a non-polynomial solution

def test_conv_remainder_estimate():
    sol, res = picard("P_conv", N=2, nstar=2)
    ts = 2.0 ** -np.arange(4, 15)
    diffs = np.abs(sol(ts) - lp_eval(res.x, ts)).max(axis=1)
    slope, why = fitted_slope(ts, diffs)
    assert not why and slope >= 1.5
    assert 2.5 <= slope <= 3.5


def test_conv_steps_order():
    e = catalog("P_conv")
    cfg = select_partition(e.problem)
    errs = []
    for k in range(7, 11):
        sol = solve_steps(e.problem, cfg, 2 ** k)
        nodes = sol.x.mesh.nodes
        errs.append((2.0 ** -k, float(np.max(np.abs(sol.x.values - e.solution(nodes))))))
    assert 1.7 <= convergence_order(errs) <= 2.3


def test_conv_series_order():
    e = catalog("P_conv")
    series = build_asymptotics(e.problem, taylor_data(e.problem, 11), N=6)
    ts = 2.0 ** -np.arange(1, 5)
    diffs = np.abs(lp_eval(series.x, ts) - e.solution(ts)).max(axis=1)
    slope, why = fitted_slope(ts, diffs)
    assert not why and slope >= 6.5
