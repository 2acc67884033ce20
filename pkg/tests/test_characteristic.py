import math

import numpy as np
import pytest

from pwvolterra.characteristic import (MULTIPLE, REGULAR, SIMPLE, b_derivative, b_matrix, classify,
                                       pairing_matrix)
from pwvolterra.errors import UnclassifiablePoint
from pwvolterra.problem import taylor_data
from pwvolterra.verify import catalog

from conftest import constant_taylor

LN2 = math.log(2)


def td(name, N=6):
    return taylor_data(catalog(name).problem, N)


def test_b_matrix_examples():
    assert b_matrix(td("P_reg"), 0) == pytest.approx(np.array([[1.5]]))
    assert b_matrix(td("P_reg"), 1) == pytest.approx(np.array([[1.75]]))
    for j in range(5):
        assert b_matrix(td("P_sing"), j)[0, 0] == pytest.approx(1 - 2.0 ** -j)
    assert b_matrix(td("P_mat"), 0) == pytest.approx(np.diag([0.0, 2.0]))


def test_b_derivative_examples():
    assert b_derivative(td("P_sing"), 0, 1) == pytest.approx(np.array([[LN2]]))
    # the jump K1 - K2 = 2E enters with (1/2) ln(1/2), so the sign is negative
    assert b_derivative(td("P_mat"), 0, 1) == pytest.approx(-LN2 * np.eye(2))
    single = constant_taylor([[[2.0]]], [], {1: [1.0]})
    assert b_derivative(single, 0, 3) == pytest.approx(np.zeros((1, 1)))


def test_b_derivative_matches_finite_differences():
    t = td("P_mat")
    h = 1e-5
    for j in (0.0, 1.3):
        fd = (b_matrix(t, j + h) - b_matrix(t, j - h)) / (2 * h)
        assert b_derivative(t, j, 1) == pytest.approx(fd, abs=1e-8)
        fd2 = (b_matrix(t, j + 1e-3) - 2 * b_matrix(t, j) + b_matrix(t, j - 1e-3)) / 1e-6
        assert b_derivative(t, j, 2) == pytest.approx(fd2, abs=1e-5)


def test_classify_examples():
    rep = classify(td("P_reg"), 3)
    assert [pt.classification for pt in rep.points] == [REGULAR] * 4
    assert rep.param_count == 0

    rep = classify(td("P_sing"), 3)
    assert [pt.classification for pt in rep.points] == [SIMPLE] + [REGULAR] * 3
    assert rep[0].null_dim == 1 and rep[0].rank == 0
    assert rep.param_count == 1
    G = pairing_matrix(b_derivative(td("P_sing"), 0, 1), rep[0].nullspace)
    assert abs(G[0, 0]) == pytest.approx(LN2)

    rep = classify(td("P_mat"), 3)
    assert rep[0].classification == SIMPLE and rep[0].rank == 1
    assert rep.param_count == 1 and rep.nu == 1


def test_double_root(double_root):
    rep = classify(double_root, 4)
    assert rep[0].classification == MULTIPLE and rep[0].multiplicity == 2
    assert all(pt.classification == REGULAR for pt in rep.points[1:])
    assert rep.param_count == 2
    assert b_derivative(double_root, 0, 1) == pytest.approx(np.zeros((1, 1)), abs=1e-15)
    assert b_derivative(double_root, 0, 2)[0, 0] == pytest.approx(2 * LN2 ** 2)
    for j in range(5):
        assert b_matrix(double_root, j)[0, 0] == pytest.approx((1 - 2.0 ** -j) ** 2)


def test_single_kernel():
    reg = constant_taylor([[[2.0]]], [], {1: [1.0]})
    assert all(pt.classification == REGULAR for pt in classify(reg, 3).points)
    sing = constant_taylor([[[0.0]]], [], {1: [1.0]})
    with pytest.raises(UnclassifiablePoint):
        classify(sing, 1)


def test_pairing_singular_is_unclassifiable():
    # B(0) = 0 with a 2-dim nullspace, B'(0) = diag(-ln 2, 0) has a singular pairing
    t = constant_taylor([np.diag([1.0, 0.0]), np.diag([-1.0, 0.0])], [0.5], {1: [1.0, 1.0]})
    with pytest.raises(UnclassifiablePoint):
        classify(t, 0)


@pytest.mark.parametrize("K1,expected", [(-1.0, 1), (3.0, 0)])
def test_scalar_multiplicity_is_root_multiplicity(K1, expected):
    """m = 1: classification degree equals the multiplicity of the root of L(j) at 0."""
    t = constant_taylor([[[K1]], [[1.0]]], [0.5], {1: [1.0]})
    rep = classify(t, 0)
    assert rep[0].multiplicity == expected


def test_report_json():
    doc = classify(td("P_mat"), 2).to_json()
    assert doc["param_count"] == 1
    assert doc["points"][0] == {"j": 0, "det": pytest.approx(0.0), "rank": 1,
                                "class": SIMPLE, "multiplicity": 1}
