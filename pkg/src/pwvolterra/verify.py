"""Built-in problems with known solutions, residual checks and order fits."""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .characteristic import REGULAR, SIMPLE
from .errors import DegenerateFit, UnknownName
from .grid import piecewise_integral, residual_numeric
from .problem import ProblemSpec, TaylorData, problem_from_dict

CATALOG_NAMES = ("P_reg", "P_sing", "P_mat", "P_man", "P_conv")
LN2 = math.log(2.0)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    problem: ProblemSpec
    closed_form: Optional[Callable]
    expected_classification: tuple
    expected_param_count: int
    unique: bool

    def solution(self, t, params=None):
        """Closed form at ``t``; unspecified parameters are 0."""
        return self.closed_form(np.asarray(t, float), params or {})

    def to_json(self):
        from .problem import problem_to_dict
        return problem_to_dict(self.problem)


def _poly_taylor(m, n, kernels, f, alphas, N=1) -> TaylorData:
    """Complete Taylor data from constant kernels, linear curves and polynomial f.

    ``kernels[i]`` is an ``m x m`` constant, ``f`` maps powers to vectors and
    ``alphas`` lists the curve slopes.
    """
    N = max(N, max(f, default=1))
    kc = []
    for K in kernels:
        arr = np.zeros((N + 1, N + 1, m, m))
        arr[0, 0] = np.asarray(K, float).reshape(m, m)
        kc.append(arr)
    fc = np.zeros((N + 1, m))
    for nu, v in f.items():
        fc[nu] = v
    a = np.zeros((n - 1, N + 1))
    for i, slope in enumerate(alphas):
        a[i, 1] = slope
    return TaylorData(N, kc, fc, a, complete=True)


def _const_matrix(M):
    return [[repr(float(v)) for v in row] for row in M]


def _doc(name, m, kernels, f, f_dt, alpha="0.5*t", alpha_dt="0.5", kernel_dt=None):
    n = len(kernels)
    doc = {"name": name, "m": m, "n": n, "T": 1.0,
           "kernels": kernels, "alphas": [alpha] * (n - 1), "f": f,
           "alpha_dt": [alpha_dt] * (n - 1), "f_dt": f_dt,
           "kernel_dt": kernel_dt or [[["0"] * m for _ in range(m)] for _ in range(n)]}
    return doc


def _conv_taylor(N=24) -> TaylorData:
    m, E = 2, np.eye(2)
    kc = []
    for base in (3.0, 2.0):
        K = np.zeros((N + 1, N + 1, m, m))
        K[0, 0] = base * E
        K[1, 0] = E
        K[0, 1] = -E
        kc.append(K)
    f = np.zeros((N + 1, m))
    for nu in range(1, N + 1):
        fact = math.factorial(nu)
        f[nu, 0] = (3 + 2.0 ** -nu) / fact - (1.0 if nu == 1 else 0.0)
        if nu % 2:
            f[nu, 1] = (2 + 2.0 ** -nu) * (-1) ** ((nu - 1) // 2) / fact
        else:
            f[nu, 1] = -(-1) ** (nu // 2) / fact
    a = np.zeros((1, N + 1))
    a[0, 1] = 0.5
    return TaylorData(N, kc, f, a, complete=False)


def _build(name) -> CatalogEntry:
    regular = (REGULAR,) * 7
    singular0 = (SIMPLE,) + (REGULAR,) * 6
    if name == "P_reg":
        doc = _doc(name, 1, [[["1"]], [["2"]]], ["t"], ["1"])
        td = _poly_taylor(1, 2, [1.0, 2.0], {1: [1.0]}, [0.5])
        closed = lambda t, c: np.full(np.shape(t) + (1,), 2.0 / 3.0)
        return _entry(name, doc, td, closed, regular, 0, True)
    if name == "P_sing":
        doc = _doc(name, 1, [[["-1"]], [["1"]]], ["t"], ["1"])
        td = _poly_taylor(1, 2, [-1.0, 1.0], {1: [1.0]}, [0.5])
        closed = lambda t, c: (np.log(t) / LN2 + c.get("c1", 0.0))[..., None]
        return _entry(name, doc, td, closed, singular0, 1, False)
    if name == "P_mat":
        K1, K2 = np.diag([1.0, 3.0]), np.diag([-1.0, 1.0])
        doc = _doc(name, 2, [_const_matrix(K1), _const_matrix(K2)], ["t", "t"], ["1", "1"])
        td = _poly_taylor(2, 2, [K1, K2], {1: [1.0, 1.0]}, [0.5])

        def closed(t, c):
            return np.stack([-np.log(t) / LN2 + c.get("c1", 0.0),
                             np.full(np.shape(t), 0.5)], axis=-1)
        return _entry(name, doc, td, closed, singular0, 1, False)
    if name == "P_man":
        doc = _doc(name, 1, [[["1"]], [["2"]]], ["1.5*t + 0.875*t^2"], ["1.5 + 1.75*t"])
        td = _poly_taylor(1, 2, [1.0, 2.0], {1: [1.5], 2: [0.875]}, [0.5])
        closed = lambda t, c: (1.0 + np.asarray(t, float))[..., None]
        return _entry(name, doc, td, closed, regular, 0, True)
    if name == "P_conv":
        k1 = [["3 + t - s", "0"], ["0", "3 + t - s"]]
        k2 = [["2 + t - s", "0"], ["0", "2 + t - s"]]
        one = [["1", "0"], ["0", "1"]]
        doc = _doc(name, 2, [k1, k2],
                   ["3*exp(t) + exp(t/2) - t - 4", "2*sin(t) - cos(t) + 1 + sin(t/2)"],
                   ["3*exp(t) + 0.5*exp(t/2) - 1", "2*cos(t) + sin(t) + 0.5*cos(t/2)"],
                   kernel_dt=[one, one])
        closed = lambda t, c: np.stack([np.exp(t), np.cos(t)], axis=-1)
        return _entry(name, doc, _conv_taylor(), closed, regular, 0, True)
    raise UnknownName(f"unknown catalog problem {name!r}; known: {', '.join(CATALOG_NAMES)}")


def _entry(name, doc, td, closed, classes, nparams, unique):
    p = problem_from_dict(doc)
    p = dataclasses.replace(p, taylor=td, source=doc)
    return CatalogEntry(name, p, closed, classes, nparams, unique)


_CACHE: dict = {}


def catalog(name: str) -> CatalogEntry:
    if name not in _CACHE:
        _CACHE[name] = _build(name)
    return _CACHE[name]


# ---------------------------------------------------------------------------
# checks

def firstkind_residual(p: ProblemSpec, x, t_samples, density: int = 256) -> float:
    """``max_t |int K x ds - f(t)| / max(1, |f(t)|)`` over the samples."""
    worst = 0.0
    for t in np.atleast_1d(np.asarray(t_samples, float)):
        f = np.asarray(p.f(np.array([t])), float).reshape(p.m)
        lhs = piecewise_integral(p, float(t), x, "full", density)
        worst = max(worst, float(np.linalg.norm(lhs - f) / max(1.0, np.linalg.norm(f))))
    return worst


class _QuadratureRhs:
    def __init__(self, p, xstar, density):
        self.p, self.xstar, self.density = p, xstar, density

    def __call__(self, t):
        t = np.asarray(t, float)
        flat = t.reshape(-1)
        out = np.zeros((flat.size, self.p.m))
        for k, tk in enumerate(flat):
            if tk > 0:
                out[k] = piecewise_integral(self.p, float(tk), self.xstar, "full", self.density)
        return out.reshape(t.shape + (self.p.m,))


class _LeibnizRhs:
    """``f'(t)`` of a manufactured problem, differentiating under the integral."""

    def __init__(self, p, xstar):
        self.p = dataclasses.replace(p, rhs_dt=lambda t: np.zeros(np.shape(t) + (p.m,)))
        self.xstar = xstar

    def __call__(self, t):
        t = np.asarray(t, float)
        flat = np.maximum(t.reshape(-1), 1e-300)
        out = residual_numeric(self.p, self.xstar, flat)
        return out.reshape(t.shape + (self.p.m,))


def manufacture(skeleton: ProblemSpec, xstar, density: int = 1024, name: str = "") -> ProblemSpec:
    """Problem with the kernels and curves of ``skeleton`` whose solution is ``xstar``.

    ``f`` is computed by quadrature at ``density`` subintervals per unit length.
    """
    return dataclasses.replace(
        skeleton, rhs=_QuadratureRhs(skeleton, xstar, density),
        rhs_dt=_LeibnizRhs(skeleton, xstar), taylor=None,
        name=name or f"{skeleton.name}-manufactured", source=None)


def convergence_order(errors) -> float:
    """Least-squares slope of ``log err`` against ``log h``."""
    pts = [(float(h), float(e)) for h, e in errors]
    if len(pts) < 3:
        raise DegenerateFit("at least 3 points are needed")
    hs = np.array([h for h, _ in pts])
    es = np.array([e for _, e in pts])
    if np.any(np.diff(hs) >= 0):
        raise DegenerateFit("h must be strictly decreasing")
    if np.any(es <= 0) or not np.all(np.isfinite(es)):
        raise DegenerateFit("errors must be positive and finite")
    return float(np.polyfit(np.log(hs), np.log(es), 1)[0])
