import numpy as np
import pytest

from pwvolterra.problem import TaylorData
from pwvolterra.verify import catalog


@pytest.fixture(params=["P_reg", "P_sing", "P_mat", "P_man", "P_conv"])
def entry(request):
    return catalog(request.param)


def constant_taylor(kernels, slopes, f, N=6):
    """Complete Taylor data: constant kernels, linear curves, polynomial f."""
    kernels = [np.atleast_2d(np.asarray(K, float)) for K in kernels]
    m = kernels[0].shape[0]
    kc = []
    for K in kernels:
        arr = np.zeros((N + 1, N + 1, m, m))
        arr[0, 0] = K
        kc.append(arr)
    fc = np.zeros((N + 1, m))
    for nu, v in f.items():
        fc[nu] = v
    a = np.zeros((len(slopes), N + 1))
    a[:, 1] = slopes
    return TaylorData(N, kc, fc, a, complete=True)


@pytest.fixture
def double_root():
    """m=1, K = (1, -3, 1) on curves t/4, t/2, f = t.

    L(j) = (1 - 2^-j)^2 has a double root at j = 0 and
    x = ln^2 t / (2 ln^2 2) + c1 ln t + c0 solves the equation.
    """
    return constant_taylor([[[1.0]], [[-3.0]], [[1.0]]], [0.25, 0.5], {1: [1.0]})


ACCEPTANCE_LINES: list = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line; the terminal summary prints them all."""
    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
