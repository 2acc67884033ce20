import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pwvolterra.errors import OutOfDomain, OutOfRange
from pwvolterra.grid import (GridFunction, Mesh, assemble_operator, graded_rule, interp_eval,
                             piecewise_integral, read_csv, residual_numeric, simpson_rule, to_csv)
from pwvolterra.verify import catalog


def test_interp_examples():
    g = GridFunction(Mesh(np.array([0.0, 1.0])), [0.0, 2.0])
    assert interp_eval(g, 0.5)[0] == 1.0
    mesh = Mesh.uniform(0, 1, 1000)
    # 0.4995 is a midpoint, where the h^2/8 max|g''| bound is attained
    got = interp_eval(GridFunction(mesh, mesh.nodes ** 2), 0.4995)[0]
    assert got == pytest.approx(0.24950025, abs=2.5e-7 + 1e-15)


@given(st.floats(-5, 5), st.floats(0, 1))
def test_interp_constant(c, t):
    g = GridFunction(Mesh.uniform(0, 1, 7), np.full((8, 2), c))
    assert interp_eval(g, t) == pytest.approx([c, c])


def test_interp_out_of_range():
    g = GridFunction(Mesh.uniform(0, 1, 4), np.zeros(5))
    with pytest.raises(OutOfRange):
        g(1.01)
    with pytest.raises(OutOfRange):
        g(np.array([0.5, -0.1]))


def test_cubic_reproduces_cubics():
    mesh = Mesh.uniform(0, 2, 9)
    poly = lambda s: 1 - s + 0.5 * s ** 2 - 0.25 * s ** 3
    g = GridFunction(mesh, poly(mesh.nodes), interp="cubic")
    ts = np.linspace(0, 2, 41)
    # not-a-knot cubic splines reproduce cubic polynomials
    assert np.max(np.abs(g(ts)[:, 0] - poly(ts))) < 1e-13


def test_mesh_invariants():
    with pytest.raises(ValueError):
        Mesh(np.array([0.0, 0.5, 0.5]))
    m = Mesh.uniform(0.25, 1.0, 3)
    assert (m.a, m.b, m.h, len(m)) == (0.25, 1.0, 0.25, 4)


def test_piecewise_integral_examples():
    p = catalog("P_reg").problem
    const = lambda s: np.full((np.size(s), 1), 2 / 3)
    assert piecewise_integral(p, 1.0, const)[0] == pytest.approx(1.0, abs=1e-14)
    assert piecewise_integral(p, 0.3, lambda s: np.zeros((np.size(s), 1)))[0] == 0.0
    e = catalog("P_mat")
    val = piecewise_integral(e.problem, 0.5, lambda s: e.solution(s))
    assert val == pytest.approx([0.5, 0.5], abs=1e-9)
    with pytest.raises(OutOfDomain):
        piecewise_integral(p, 0.0, const)
    with pytest.raises(OutOfDomain):
        piecewise_integral(p, 1.5, const)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0.05, 1.0))
def test_exact_on_cubics(c, t):
    p = catalog("P_reg").problem
    g = lambda s: np.polyval(c, s)[:, None]
    # int_0^{t/2} g + 2 int_{t/2}^t g
    P = np.polyint(c)
    ref = (np.polyval(P, t / 2) - np.polyval(P, 0)) + 2 * (np.polyval(P, t) - np.polyval(P, t / 2))
    got = piecewise_integral(p, t, g, min_intervals=2, density=1)[0]
    assert got == pytest.approx(ref, abs=1e-13 * (1 + abs(ref)))


def test_refinement_factor():
    p = catalog("P_reg").problem
    g = lambda s: np.exp(3 * s)[:, None]
    ref = (math.exp(1.5) - 1) / 3 + 2 * (math.exp(3) - math.exp(1.5)) / 3
    errs = [abs(piecewise_integral(p, 1.0, g, density=d, min_intervals=2)[0] - ref)
            for d in (4, 8, 16, 32)]
    for a, b in zip(errs, errs[1:]):
        assert a / b >= 8


def test_graded_rule_handles_log():
    s, w = graded_rule(0.5)
    # int_0^b ln s ds = b ln b - b
    assert w @ np.log(s) == pytest.approx(0.5 * math.log(0.5) - 0.5, rel=1e-10)
    s, w = simpson_rule(0, 1, 3)
    assert s.size == 5 and w.sum() == pytest.approx(1.0)


def test_residual_numeric_closed_form(entry):
    ts = np.array([0.1, 0.6, 1.0])
    params = {"c1": 1.5}
    r = residual_numeric(entry.problem, lambda s: entry.solution(s, params), ts)
    assert np.max(np.abs(r)) < 1e-8


def test_operator_matches_residual():
    """The assembled operator is the residual without f', up to discretization."""
    p = catalog("P_conv").problem
    mesh = Mesh.uniform(0, 1, 512)
    op = assemble_operator(p, mesh)
    x = np.stack([np.exp(mesh.nodes), np.cos(mesh.nodes)], axis=1)
    lhs = x + op(x)
    fbar = np.einsum("kab,kb->ka", op.kn_inv, p.f_prime(mesh.nodes))
    assert np.max(np.abs(lhs - fbar)) < 1e-5
    rows = op(x, rows=(100, 103))
    assert np.allclose(rows, op(x)[100:103])


def test_csv_round_trip(tmp_path):
    mesh = Mesh.uniform(0, 1, 5)
    g = GridFunction(mesh, np.stack([np.sqrt(2) * mesh.nodes, 1 / 3 + mesh.nodes], axis=1))
    text = to_csv(g, tmp_path / "x.csv")
    assert text.splitlines()[0] == "t,x1,x2"
    assert text.splitlines()[1] == "0,0,0.33333333333333331"
    back = read_csv(tmp_path / "x.csv")
    assert np.array_equal(back.values, g.values) and np.array_equal(back.mesh.nodes, mesh.nodes)
