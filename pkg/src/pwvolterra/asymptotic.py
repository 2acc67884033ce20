"""Asymptotic solution of the differentiated equation near ``t = 0``.

The unknown is sought as ``xhat(t) = sum_j t^j y_j(ln t)`` with vector
polynomials ``y_j``. Substituting into

    F(x) = K_n(t,t) x(t) + sum_i alpha_i'(t) [K_i - K_{i+1}](t, alpha_i(t)) x(alpha_i(t))
           + sum_i int_{alpha_{i-1}(t)}^{alpha_i(t)} K_i^(1)(t,s) x(s) ds - f'(t)

and collecting ``t^j`` gives, level by level, the difference system

    sum_k B^(k)(j) y_j^(k)(z) / k! = g_j(z)

whose right-hand side only involves the lower levels. At a regular point the
system has a unique polynomial solution; at a singular point of multiplicity
``kappa`` the homogeneous solutions ``z^q phi_i`` (``q < kappa``) bring in new
free parameters ``c1, c2, ...``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import logpower as lp
from .characteristic import REGULAR, CharacteristicReport, b_derivative, b_matrix, classify, data_scale
from .errors import DegreeMismatch, Inconsistent, SingularMatrix, SolvabilityFailure
from .linalg import RANK_TOL, lu_solve, rank_nullspace, solve_singular_consistent
from .logpower import LogPowerPoly
from .problem import ProblemSpec, TaylorData

LEVEL_TOL = 1e-8
FIT_EXPONENTS = range(4, 15)
EXTRA_DEGREE = 4


# ---------------------------------------------------------------------------
# symbolic operator

def _diag_series(td: TaylorData, i: int, order: int) -> np.ndarray:
    """Coefficients of ``K_i(t, t)`` as an ``(order+1, m, m)`` array."""
    K = td.kernel_coeffs[i]
    out = np.zeros((order + 1, td.m, td.m))
    for nu in range(order + 1):
        for mu in range(order + 1 - nu):
            out[nu + mu] += K[nu, mu]
    return out


def _curve_series(td: TaylorData, i: int, order: int) -> np.ndarray:
    a = np.zeros(order + 2)
    k = min(order + 1, td.N) + 1
    a[:k] = td.alpha_coeffs[i - 1, :k]
    return a


def _shift_series(td: TaylorData, i: int, order: int) -> np.ndarray:
    """``alpha_i'(t) [K_i - K_{i+1}](t, alpha_i(t))`` for curve ``i`` (1-based)."""
    a = _curve_series(td, i, order)[:order + 1]
    da = np.zeros(order + 1)
    full = _curve_series(td, i, order)
    da[:] = np.arange(1, order + 2) * full[1:order + 2]
    jump = td.kernel_coeffs[i - 1] - td.kernel_coeffs[i]
    out = np.zeros((order + 1, td.m, td.m))
    apow = np.eye(1, order + 1)[0]
    for mu in range(order + 1):
        for nu in range(order + 1 - mu):
            if np.any(jump[nu, mu]):
                for e in range(order + 1 - nu):
                    if apow[e]:
                        out[nu + e] += apow[e] * jump[nu, mu]
        apow = lp.ps_mul(apow, a, order)
    res = np.zeros_like(out)
    for e in range(order + 1):
        for k in range(order + 1 - e):
            if da[k]:
                res[e + k] += da[k] * out[e]
    return res


def _as_series(arr) -> dict:
    return {e: M for e, M in enumerate(arr) if np.any(M)}


def residual_operator(p: ProblemSpec | None, td: TaylorData, x: LogPowerPoly) -> LogPowerPoly:
    """``F(x)`` truncated at the order of ``x``; needs Taylor degree ``order+1``.

    Only the Taylor data enters; ``p`` is accepted for symmetry with the
    numeric residual and may be ``None``.
    """
    order = x.order
    if td.N < order + 1:
        if not td.complete:
            raise DegreeMismatch(f"Taylor data of degree {td.N} cannot give F to order {order}")
        td = td.resized(order + 1)
    if td.m != x.m:
        raise lp.DimensionMismatch(f"problem dimension {td.m}, expansion dimension {x.m}")
    n = td.n
    out = lp.lp_matmul(_as_series(_diag_series(td, n - 1, order)), x)
    for i in range(1, n):
        xa = lp.lp_compose_alpha(x, _curve_series(td, i, order)[1:])
        out = out + lp.lp_matmul(_as_series(_shift_series(td, i, order)), xa)

    # int_{lo}^{hi} sum nu K[nu,mu] t^(nu-1) s^mu x(s) ds, grouped by mu
    for mu in range(order + 1):
        G = lp.lp_integrate(x.shift(mu))
        if not G:
            continue
        for i in range(n):
            K = td.kernel_coeffs[i]
            series = {nu - 1: nu * K[nu, mu] for nu in range(1, order + 2 - mu)
                      if np.any(K[nu, mu])}
            if not series:
                continue
            H = G if i == n - 1 else lp.lp_compose_alpha(G, _curve_series(td, i + 1, order)[1:])
            if i > 0:
                H = H - lp.lp_compose_alpha(G, _curve_series(td, i, order)[1:])
            out = out + lp.lp_matmul(series, H)

    fp = np.arange(1, order + 2)[:, None] * td.f_coeffs[1:order + 2]
    P = len(x.params)
    terms = {}
    for e in range(order + 1):
        if np.any(fp[e]):
            c = np.zeros((x.m, 1 + P))
            c[:, 0] = -fp[e]
            terms[(e, 0)] = c
    return out + LogPowerPoly(x.m, order, x.params, terms)


# ---------------------------------------------------------------------------
# level systems

@dataclass
class DifferenceSystem:
    """``sum_k C(p+k, k) B^(k) y_{p+k} = g_p`` for each ``z``-power ``p``."""

    j: int
    derivs: list
    rhs: dict

    @property
    def degree(self):
        return max(self.rhs, default=-1)

    @property
    def columns(self):
        return next(iter(self.rhs.values())).shape[1] if self.rhs else 1


def difference_system(td: TaylorData, j: int, rhs: dict, extra: int = 0) -> DifferenceSystem:
    D = max(rhs, default=-1) + extra
    derivs = [b_matrix(td, j)] + [b_derivative(td, j, k) for k in range(1, D + 1)]
    return DifferenceSystem(j, derivs, rhs)


def solve_regular_level(ds: DifferenceSystem) -> dict:
    """Back substitution from the top ``z``-power down."""
    B = ds.derivs[0]
    m = B.shape[0]
    y = {}
    for p in range(ds.degree, -1, -1):
        r = ds.rhs.get(p, np.zeros((m, ds.columns))).copy()
        for k in range(1, ds.degree - p + 1):
            if p + k in y:
                r -= math.comb(p + k, k) * (ds.derivs[k] @ y[p + k])
        y[p] = lu_solve(B, r)
    return y


def stacked_matrix(ds: DifferenceSystem, D: int) -> np.ndarray:
    m = ds.derivs[0].shape[0]
    A = np.zeros(((D + 1) * m, (D + 1) * m))
    for p in range(D + 1):
        for q in range(p, D + 1):
            k = q - p
            A[p * m:(p + 1) * m, q * m:(q + 1) * m] = math.comb(q, k) * ds.derivs[k]
    return A


@dataclass(frozen=True)
class FreeParam:
    """Parameter ``name`` multiplies ``t^j ln^q t phi`` at its introduction."""

    name: str
    j: int
    index: int
    q: int

    def to_json(self):
        return {"name": self.name, "j": self.j, "index": self.index, "q": self.q}


def solve_singular_level(ds: DifferenceSystem, ns, multiplicity: int, scale: float = 1.0,
                         first_param: int = 1, tol: float = RANK_TOL):
    """Particular (minimal-norm) solution plus homogeneous directions.

    Returns ``(y, directions, params)``: ``y`` maps ``p -> (m, cols)``,
    ``directions`` maps each new parameter to its ``{p: vector}``.
    """
    m = ds.derivs[0].shape[0]
    D = ds.degree + multiplicity
    A = stacked_matrix(ds, D)
    r = len(ns.right_basis)
    Ans = rank_nullspace(A, tol, scale=max(scale, np.linalg.norm(A, 2)))
    if A.shape[1] - Ans.rank != r * multiplicity:
        raise SolvabilityFailure(
            f"level {ds.j}: homogeneous space has dimension {A.shape[1] - Ans.rank}, "
            f"expected {r * multiplicity}")
    cols = ds.columns
    b = np.zeros(((D + 1) * m, cols))
    for p, g in ds.rhs.items():
        b[p * m:(p + 1) * m] = g
    sol = np.zeros_like(b)
    for c in range(cols):
        try:
            sol[:, c], _ = solve_singular_consistent(A, b[:, c], Ans, tol=LEVEL_TOL)
        except Inconsistent as exc:
            raise SolvabilityFailure(f"level {ds.j}: {exc}") from None
    # the minimal-norm solve smears rounding error into every tier
    sol[np.abs(sol) <= 1e-13 * max(np.max(np.abs(sol)), np.max(np.abs(b)))] = 0.0
    y = {p: sol[p * m:(p + 1) * m] for p in range(D + 1) if np.any(sol[p * m:(p + 1) * m])}
    directions, params = {}, []
    k = first_param
    for q in range(multiplicity):
        for i, phi in enumerate(ns.right_basis):
            name = f"c{k}"
            k += 1
            params.append(FreeParam(name, ds.j, i, q))
            directions[name] = {q: phi}
    return y, directions, params


# ---------------------------------------------------------------------------
# driver

@dataclass
class AsymptoticResult:
    x: LogPowerPoly
    N: int
    report: CharacteristicReport
    params: list = field(default_factory=list)
    level_defects: list = field(default_factory=list)
    residual_order: float = float("nan")
    residual_samples: list = field(default_factory=list)

    @property
    def param_names(self):
        return [fp.name for fp in self.params]

    def __call__(self, t, params=None):
        return lp.lp_eval(self.x, t, params or {})

    def evaluate(self, t, params=None, default=None):
        """Value at ``t``; unbound parameters take ``default`` if it is given."""
        params = dict(params or {})
        if default is not None:
            for k in self.x.params:
                params.setdefault(k, default)
        return lp.lp_eval(self.x, t, params)

    def to_text(self):
        return lp.to_text(self.x)

    def to_json(self):
        order = self.residual_order
        return {"N": self.N, "expansion": lp.to_json(self.x), "text": self.to_text(),
                "params": [fp.to_json() for fp in self.params],
                "residual_order": "inf" if order == float("inf") else order}


def _level_rhs(R: LogPowerPoly, j: int) -> dict:
    return {p: -c for p, c in R.coefficient(j).items()}


def build_asymptotics(p: ProblemSpec | None, td: TaylorData,
                      report: CharacteristicReport | None = None, N: int = 4, tol: float = RANK_TOL,
                      residual: bool = True) -> AsymptoticResult:
    """Expansion of the solution through ``t^N``.

    ``td`` must have degree at least ``N + 1`` (or be complete). If ``p`` is
    given and ``td`` is not extendable, the residual order is measured by
    quadrature instead of symbolically.
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    if td.N < N + 1:
        if not td.complete:
            raise DegreeMismatch(f"Taylor data of degree {td.N}; degree {N + 1} needed")
        td = td.resized(N + 1)
    if report is None:
        report = classify(td, N, tol)
    scale = data_scale(td)
    x = LogPowerPoly.zero(td.m, N)
    params, defects = [], []
    for j in range(N + 1):
        R = residual_operator(p, td, x)
        g = _level_rhs(R, j)
        pt = report[j]
        if pt.classification == REGULAR:
            ds = difference_system(td, j, g)
            try:
                y = solve_regular_level(ds) if g else {}
            except SingularMatrix as exc:
                raise SolvabilityFailure(f"level {j}: {exc}") from None
            new_dirs = {}
        else:
            if not g:
                g = {0: np.zeros((td.m, 1 + len(x.params)))}
            ds = difference_system(td, j, g, extra=pt.multiplicity)
            y, new_dirs, new = solve_singular_level(ds, pt.nullspace, pt.multiplicity, scale,
                                                    first_param=len(params) + 1, tol=tol)
            params.extend(new)
        names = x.params + tuple(new_dirs)
        terms = {}
        for q, c in y.items():
            full = np.zeros((td.m, 1 + len(names)))
            full[:, :c.shape[1]] = c
            terms[(j, q)] = full
        for name, dirs in new_dirs.items():
            col = 1 + names.index(name)
            for q, v in dirs.items():
                terms.setdefault((j, q), np.zeros((td.m, 1 + len(names))))
                terms[(j, q)][:, col] = v
        x = x.with_params(names) + LogPowerPoly(td.m, N, names, terms)
        # lower coefficients must stay annihilated
        check = residual_operator(p, td, x)
        lower = [np.linalg.norm(c) for (jj, _), c in check.terms.items() if jj <= j]
        defects.append(max(lower, default=0.0))
    res = AsymptoticResult(x, N, report, params, defects)
    if residual:
        residual_order(res, td, p)
    return res


def _affine_norms(R: LogPowerPoly, ts) -> np.ndarray:
    """Frobenius norm of the full affine coefficient matrix of ``R(t)``."""
    out = np.zeros(len(ts))
    for k, t in enumerate(ts):
        acc = np.zeros((R.m, 1 + len(R.params)))
        z = math.log(t)
        for (j, p), c in R.terms.items():
            acc += t ** j * z ** p * c
        out[k] = np.linalg.norm(acc)
    return out


def residual_order(res: AsymptoticResult, td: TaylorData, p: ProblemSpec | None = None):
    """Observed order of ``|F(xhat)(t)|`` as ``t -> 0`` from ``t = 2^-4 .. 2^-14``.

    With Taylor data of degree ``N + 5`` the residual is expanded symbolically
    through ``t^(N+4)``; if that expansion vanishes identically the residual is
    ``O(t^(N+5))`` and the order is reported as infinite.
    """
    N = res.N
    ts = np.array([2.0 ** -k for k in FIT_EXPONENTS])
    ext = N + EXTRA_DEGREE if td.complete else min(td.N - 1, N + EXTRA_DEGREE)
    if ext > N:
        R = residual_operator(p, td, res.x.with_order(ext))
        # rounding residue at the solved levels is not part of the tail
        keep = {}
        for (j, q), c in R.terms.items():
            if j > N or np.linalg.norm(c) > LEVEL_TOL * data_scale(td):
                keep[(j, q)] = c
        R = LogPowerPoly(R.m, ext, R.params, keep)
        if not R:
            res.residual_order = float("inf")
            res.residual_samples = [(float(t), 0.0) for t in ts]
            return res.residual_order
        vals = _affine_norms(R, ts)
    elif p is not None:
        from .grid import residual_numeric
        zero = {k: 0.0 for k in res.x.params}
        vals = np.linalg.norm(residual_numeric(p, lambda s: res.x(s, zero), ts), axis=1)
    else:
        raise DegreeMismatch("residual order needs Taylor data of degree N+2 or a problem")
    res.residual_samples = [(float(t), float(v)) for t, v in zip(ts, vals)]
    ok = vals > 0
    if ok.sum() < 2:
        res.residual_order = float("inf")
    else:
        res.residual_order = float(np.polyfit(np.log(ts[ok]), np.log(vals[ok]), 1)[0])
    return res.residual_order
