import math

import numpy as np
import pytest

from pwvolterra.asymptotic import build_asymptotics
from pwvolterra.errors import NoContraction, OutOfRange, PreconditionResidual
from pwvolterra.grid import Mesh
from pwvolterra.logpower import LogPowerPoly
from pwvolterra.picard import (PicardConfig, assemble_solution, picard_config, select_nstar,
                               solve_residual, weighted_norm)
from pwvolterra.problem import problem_from_dict, taylor_data
from pwvolterra.verify import catalog


def run(name, N=4, params=None, **cfg):
    p = catalog(name).problem
    td = taylor_data(p, N + 5)
    res = build_asymptotics(p, td, N=N)
    params = params if params is not None else {k: 0.0 for k in res.x.params}
    c = picard_config(p, **cfg)
    return solve_residual(p, td, res.x, c, params=params, residual_order=res.residual_order), res


def test_select_nstar_examples():
    nstar, eps, q = select_nstar(catalog("P_reg").problem, 1.0)
    assert (nstar, eps, q) == (0, 0.5, pytest.approx(0.25))
    nstar, eps, q = select_nstar(catalog("P_sing").problem, 1.0)
    assert (nstar, eps, q) == (1, 0.5, pytest.approx(0.5))


def test_select_nstar_singular_kn():
    doc = {"m": 1, "n": 2, "T": 1.0, "kernels": [[["1"]], [["t - 0.5"]]],
           "alphas": ["0.5*t"], "f": ["t"]}
    with pytest.raises(NoContraction):
        select_nstar(problem_from_dict(doc), 1.0)


def test_select_nstar_eps_one():
    doc = {"m": 1, "n": 2, "T": 1.0, "kernels": [[["1"]], [["2"]]],
           "alphas": ["0.5*t + t^2"], "f": ["t"]}
    with pytest.raises(NoContraction):
        select_nstar(problem_from_dict(doc), 1.0)


def test_exact_expansions_give_zero_u():
    sol, _ = run("P_reg")
    assert sol.iterations == 1 and np.max(np.abs(sol.u.values)) <= 1e-10
    sol, _ = run("P_sing")
    assert sol.nstar == 1
    assert np.max(np.abs(sol.u.values)) <= 5e-9


def test_truncated_expansion():
    """x-hat = 1 for P_man; the iteration supplies the t term."""
    p = catalog("P_man").problem
    td = taylor_data(p, 6)
    res = build_asymptotics(p, td, N=0)
    assert res.to_text() == "x(t) = 1 + O(t^1)"
    sol = solve_residual(p, td, res.x, picard_config(p, nstar=0), params={})
    ts = np.linspace(0.01, 1, 50)
    assert np.max(np.abs(sol(ts)[:, 0] - (1 + ts))) <= 1e-6


def test_assemble_solution_examples():
    sol, _ = run("P_reg")
    assert assemble_solution(sol, 0.7)[0] == pytest.approx(2 / 3, abs=1e-12)
    sol, _ = run("P_mat")
    assert assemble_solution(sol, 0.25) == pytest.approx([2.0, 0.5], abs=1e-10)
    with pytest.raises(OutOfRange):
        assemble_solution(sol, 1.5)


def test_on_mesh_origin():
    sol, _ = run("P_mat")
    grid = sol.on_mesh()
    assert np.isnan(grid.values[0]).all() and np.isfinite(grid.values[1:]).all()
    sol, _ = run("P_reg")
    assert sol.on_mesh().values[0, 0] == pytest.approx(2 / 3)


def test_contraction_ratios(entry):
    sol, _ = run(entry.name)
    ratios = sol.contraction_ratios
    assert all(r <= 0.99 for r in ratios[3:])
    assert sol.config.q < 1 and sol.config.epsilon < 1


def test_family_difference():
    """Two parameter bindings differ by c * phi, the homogeneous direction."""
    for name, phi in (("P_sing", [1.0]), ("P_mat", [1.0, 0.0])):
        a, _ = run(name, params={"c1": 0.0})
        b, _ = run(name, params={"c1": 2.5})
        ts = np.linspace(0.01, 1, 40)
        assert np.max(np.abs(b(ts) - a(ts) - 2.5 * np.array(phi))) <= 1e-8


def test_conv_against_closed_form():
    sol, _ = run("P_conv", intervals=1024)
    ts = np.linspace(0.05, 1, 20)
    ref = catalog("P_conv").solution(ts)
    assert np.max(np.abs(sol(ts) - ref)) <= 1e-7


def test_precondition_residual():
    p = catalog("P_sing").problem
    td = taylor_data(p, 6)
    res = build_asymptotics(p, td, N=2)
    cfg = picard_config(p, nstar=3)
    with pytest.raises(PreconditionResidual):
        solve_residual(p, td, res.x, cfg, params={"c1": 0.0})
    cfg = picard_config(p)
    with pytest.raises(PreconditionResidual):
        solve_residual(p, td, res.x, cfg, params={"c1": 0.0}, residual_order=0.9)


def test_unbound_param_rejected():
    p = catalog("P_sing").problem
    td = taylor_data(p, 6)
    res = build_asymptotics(p, td, N=2)
    with pytest.raises(Exception):
        solve_residual(p, td, res.x, picard_config(p), params={})


def test_weighted_norm():
    nodes = np.linspace(0, 1, 3)
    v = np.array([[1.0], [-2.0], [4.0]])
    assert weighted_norm(v, nodes, 0.0) == 4.0
    assert weighted_norm(v, nodes, math.log(4)) == pytest.approx(1.0)
