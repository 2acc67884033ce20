"""Equation instances: kernel pieces, jump curves, right-hand side.

All evaluators are vectorized: a kernel piece maps broadcastable arrays
``(t, s)`` to an array of shape ``shape + (m, m)``, a curve maps ``t`` to
``shape`` and the right-hand side maps ``t`` to ``shape + (m,)``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateData, DegreeMismatch, DomainError, InputError, OutOfDomain
from .exprparse import Expression

FD_STEP = 1e-4


# ---------------------------------------------------------------------------
# evaluator builders

class MatrixField:
    """``(t, s) -> (..., m, m)`` from a nested list of expressions or numbers."""

    def __init__(self, entries):
        self.entries = [[_entry(e) for e in row] for row in entries]
        self.m = len(self.entries)

    def __call__(self, t, s):
        t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
        out = np.empty(t.shape + (self.m, self.m))
        for a, row in enumerate(self.entries):
            for b, e in enumerate(row):
                out[..., a, b] = e(t, s)
        return out

    def to_json(self):
        return [[_entry_json(e) for e in row] for row in self.entries]


class VectorField:
    """``t -> (..., m)`` from a list of expressions or numbers."""

    def __init__(self, entries):
        self.entries = [_entry(e) for e in entries]
        self.m = len(self.entries)

    def __call__(self, t):
        t = np.asarray(t, float)
        out = np.empty(t.shape + (self.m,))
        for a, e in enumerate(self.entries):
            out[..., a] = e(t, 0.0)
        return out

    def to_json(self):
        return [_entry_json(e) for e in self.entries]


class ScalarField:
    """``t -> (...)`` from one expression or number."""

    def __init__(self, entry):
        self.entry = _entry(entry)

    def __call__(self, t):
        t = np.asarray(t, float)
        return np.broadcast_to(np.asarray(self.entry(t, 0.0), float), t.shape).copy()

    def to_json(self):
        return _entry_json(self.entry)


def _entry(e):
    if isinstance(e, Expression):
        return e
    if isinstance(e, str):
        return Expression(e)
    if isinstance(e, (int, float)):
        return Expression(repr(float(e)))
    raise InputError(f"cannot interpret {e!r} as an expression")


def _entry_json(e):
    return e.text


# ---------------------------------------------------------------------------
# data types

@dataclass
class TaylorData:
    """Taylor polynomials of kernels, right-hand side and curves at 0.

    ``kernel_coeffs[i][nu, mu]`` is the ``m x m`` coefficient of
    ``t**nu * s**mu`` in piece ``i`` (zero where ``nu + mu > N``);
    ``f_coeffs[nu]`` and ``alpha_coeffs[i, nu]`` hold the coefficients of
    ``t**nu``. ``complete`` marks polynomial data whose higher coefficients
    are exactly zero, so it may be extended to any degree.
    """

    N: int
    kernel_coeffs: list
    f_coeffs: np.ndarray
    alpha_coeffs: np.ndarray
    complete: bool = False

    @property
    def m(self):
        return self.f_coeffs.shape[1]

    @property
    def n(self):
        return len(self.kernel_coeffs)

    def k00(self, i):
        return self.kernel_coeffs[i][0, 0]

    @property
    def slopes(self):
        """First-order curve coefficients ``alpha_i'(0)``."""
        return self.alpha_coeffs[:, 1] if self.N >= 1 else np.zeros(self.n - 1)

    def resized(self, N: int) -> "TaylorData":
        """Truncate, or zero-pad complete data, to degree ``N``."""
        if N > self.N and not self.complete:
            raise DegreeMismatch(f"Taylor data has degree {self.N}, {N} requested")
        m, n = self.m, self.n
        kc = []
        for K in self.kernel_coeffs:
            new = np.zeros((N + 1, N + 1, m, m))
            k = min(N, self.N) + 1
            new[:k, :k] = K[:k, :k]
            nu, mu = np.indices((N + 1, N + 1))
            new[nu + mu > N] = 0.0
            kc.append(new)
        f = np.zeros((N + 1, m))
        f[:min(N, self.N) + 1] = self.f_coeffs[:min(N, self.N) + 1]
        a = np.zeros((n - 1, N + 1))
        a[:, :min(N, self.N) + 1] = self.alpha_coeffs[:, :min(N, self.N) + 1]
        return TaylorData(N, kc, f, a, self.complete)

    def to_json(self):
        pieces = []
        for K in self.kernel_coeffs:
            terms = []
            for nu in range(self.N + 1):
                for mu in range(self.N + 1 - nu):
                    if np.any(K[nu, mu] != 0):
                        terms.append({"nu": nu, "mu": mu, "matrix": K[nu, mu].tolist()})
            pieces.append(terms)
        return {"N": self.N, "complete": self.complete, "kernel_coeffs": pieces,
                "f_coeffs": self.f_coeffs[1:].tolist(),
                "alpha_coeffs": self.alpha_coeffs[:, 1:].tolist()}

    @classmethod
    def from_json(cls, doc, m, n):
        try:
            return cls._from_json(doc, m, n)
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise InputError(f"malformed taylor block: {exc}") from exc

    @classmethod
    def _from_json(cls, doc, m, n):
        N = int(doc["N"])
        kc = []
        for terms in doc["kernel_coeffs"]:
            K = np.zeros((N + 1, N + 1, m, m))
            for term in terms:
                K[term["nu"], term["mu"]] = np.asarray(term["matrix"], float).reshape(m, m)
            kc.append(K)
        if len(kc) != n:
            raise InputError("taylor.kernel_coeffs needs one entry per piece")
        f = np.zeros((N + 1, m))
        f[1:] = np.asarray(doc["f_coeffs"], float).reshape(N, m)
        a = np.zeros((n - 1, N + 1))
        if n > 1:
            a[:, 1:] = np.asarray(doc["alpha_coeffs"], float).reshape(n - 1, N)
        return cls(N, kc, f, a, bool(doc.get("complete", False)))


@dataclass
class ProblemSpec:
    """One instance of the first-kind equation with a piecewise kernel.

    ``kernels[i]`` is valid on ``alpha_{i-1}(t) < s <= alpha_i(t)`` with
    ``alpha_0 = 0`` and ``alpha_n(t) = t``. Derivative evaluators are optional;
    missing ones fall back to 4th-order finite differences.
    """

    m: int
    n: int
    T: float
    kernels: Sequence[Callable]
    alphas: Sequence[Callable]
    rhs: Callable
    kernel_dt: Optional[Sequence[Callable]] = None
    alpha_dt: Optional[Sequence[Callable]] = None
    rhs_dt: Optional[Callable] = None
    taylor: Optional[TaylorData] = None
    name: str = ""
    source: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.kernels) != self.n:
            raise InputError(f"expected {self.n} kernel pieces, got {len(self.kernels)}")
        if len(self.alphas) != self.n - 1:
            raise InputError(f"expected {self.n - 1} curves, got {len(self.alphas)}")
        if self.T <= 0:
            raise InputError("horizon T must be positive")

    # -- pieces and curves ------------------------------------------------
    def piece(self, i, t, s):
        return self.kernels[i](t, s)

    def piece_dt(self, i, t, s):
        if self.kernel_dt is not None:
            return self.kernel_dt[i](t, s)
        h = FD_STEP * max(1.0, self.T)
        K = self.kernels[i]
        # forward stencil keeps (t + kh, s) inside the triangle s <= t
        return (-25 * K(t, s) + 48 * K(t + h, s) - 36 * K(t + 2 * h, s)
                + 16 * K(t + 3 * h, s) - 3 * K(t + 4 * h, s)) / (12 * h)

    def alpha(self, i, t):
        """Curve ``i`` for ``i = 0..n`` (``alpha_0 = 0``, ``alpha_n = t``)."""
        t = np.asarray(t, float)
        if i == 0:
            return np.zeros_like(t)
        if i == self.n:
            return t.copy()
        return self.alphas[i - 1](t)

    def alpha_prime(self, i, t):
        t = np.asarray(t, float)
        if i == 0:
            return np.zeros_like(t)
        if i == self.n:
            return np.ones_like(t)
        if self.alpha_dt is not None:
            return self.alpha_dt[i - 1](t)
        return _fd_derivative(self.alphas[i - 1], t, FD_STEP * max(1.0, self.T))

    def f(self, t):
        return self.rhs(t)

    def f_prime(self, t):
        if self.rhs_dt is not None:
            return self.rhs_dt(t)
        return _fd_derivative(self.rhs, t, FD_STEP * max(1.0, self.T))

    def kn_diag(self, t):
        """``K_n(t, t)``."""
        return self.kernels[-1](t, t)


def _fd_derivative(g, t, h):
    t = np.asarray(t, float)
    fwd = (-25 * g(t) + 48 * g(t + h) - 36 * g(t + 2 * h) + 16 * g(t + 3 * h)
           - 3 * g(t + 4 * h)) / (12 * h)
    central_ok = t >= 2 * h
    if not np.any(central_ok):
        return fwd
    tc = np.where(central_ok, t, 2 * h)
    cen = (-g(tc + 2 * h) + 8 * g(tc + h) - 8 * g(tc - h) + g(tc - 2 * h)) / (12 * h)
    mask = central_ok.reshape(central_ok.shape + (1,) * (np.ndim(fwd) - central_ok.ndim))
    return np.where(mask, cen, fwd)


# ---------------------------------------------------------------------------
# piece selection

def piece_index(p: ProblemSpec, t, s):
    """Index (0-based) of the kernel piece that owns ``(t, s)``.

    A point on a curve ``s = alpha_i(t)`` belongs to the lower piece ``i``;
    ``s = 0`` belongs to the first piece.
    """
    t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
    idx = np.zeros(t.shape, dtype=int)
    for i in range(1, p.n):
        idx += s > p.alpha(i, t)
    return idx


def kernel_field(p: ProblemSpec, t, s):
    """Vectorized piecewise kernel ``K(t, s)``."""
    t, s = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float))
    idx = piece_index(p, t, s)
    out = np.zeros(t.shape + (p.m, p.m))
    for i in range(p.n):
        mask = idx == i
        if np.any(mask):
            out[mask] = p.piece(i, t[mask], s[mask])
    return out


def kernel_eval(p: ProblemSpec, t: float, s: float) -> np.ndarray:
    """``K(t, s)`` at one point of the triangle ``0 <= s <= t <= T``."""
    if s < 0 or s > t:
        raise OutOfDomain(f"(t, s) = ({t}, {s}) is outside 0 <= s <= t")
    return kernel_field(p, t, s)


# ---------------------------------------------------------------------------
# validation

@dataclass
class ValidationReport:
    checks: list = field(default_factory=list)

    def add(self, name, ok, value):
        self.checks.append((name, bool(ok), float(value)))

    @property
    def ok(self):
        return all(ok for _, ok, _ in self.checks)

    def failures(self):
        return [name for name, ok, _ in self.checks if not ok]

    def to_json(self):
        return [{"check": n, "pass": ok, "value": v} for n, ok, v in self.checks]


def validate(p: ProblemSpec, samples: int = 64, tol: float = 1e-10) -> ValidationReport:
    """Check the standing hypotheses on ``samples`` points of ``(0, T]``."""
    if samples < 2:
        raise ValueError("samples must be at least 2")
    rep = ValidationReport()
    ts = np.linspace(p.T / samples, p.T, samples)
    f0 = float(np.max(np.abs(p.f(np.array([0.0])))))
    rep.add("f(0)=0", f0 <= tol, f0)

    a0 = [float(abs(p.alpha(i, np.array([0.0]))[0])) for i in range(1, p.n)]
    rep.add("alpha_i(0)=0", all(a <= tol for a in a0), max(a0, default=0.0))

    slopes = [float(p.alpha_prime(i, np.array([0.0]))[0]) for i in range(1, p.n)]
    chain = [0.0] + slopes + [1.0]
    gaps = np.diff(chain)
    rep.add("0<alpha_1'(0)<...<alpha_{n-1}'(0)<1", np.all(gaps > 0), float(np.min(gaps)))

    curves = np.array([p.alpha(i, ts) for i in range(p.n + 1)])
    curves[0] = 0.0
    gaps = np.diff(curves, axis=0)
    rep.add("0<alpha_1(t)<...<alpha_{n-1}(t)<t on (0,T]", np.all(gaps > 0),
            float(np.min(gaps)))

    tt = np.linspace(0.0, p.T, samples + 1)
    Kn = p.kn_diag(tt)
    dets = np.abs(np.linalg.det(Kn))
    scale = max(float(np.max(np.abs(Kn))) ** p.m, np.finfo(float).tiny)
    rep.add("det K_n(t,t)!=0 on [0,T]", np.min(dets) > tol * scale, float(np.min(dets)))
    return rep


# ---------------------------------------------------------------------------
# Taylor data

def taylor_data(p: ProblemSpec, N: int, mode: str = "auto") -> TaylorData:
    """Taylor polynomials of degree ``N`` at the origin.

    ``mode='supplied'`` uses ``p.taylor``; ``'numeric'`` fits the evaluators
    (which must accept small negative arguments); ``'auto'`` prefers supplied
    data when it reaches degree ``N``.
    """
    if mode == "auto":
        have = p.taylor is not None and (p.taylor.complete or p.taylor.N >= N)
        mode = "supplied" if have else "numeric"
    if mode == "supplied":
        if p.taylor is None:
            raise DegreeMismatch("problem carries no Taylor data")
        td = p.taylor.resized(N)
    elif mode == "numeric":
        td = _numeric_taylor(p, N)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    _check_taylor(td)
    return td


def _check_taylor(td: TaylorData, tol=1e-10):
    if np.max(np.abs(td.f_coeffs[0]), initial=0.0) > tol:
        raise DegenerateData("f has a nonzero constant term")
    if td.n > 1:
        if td.N < 1:
            raise DegenerateData("curve slopes need Taylor degree >= 1")
        chain = np.concatenate([[0.0], td.slopes, [1.0]])
        if np.any(np.diff(chain) <= 0):
            raise DegenerateData(f"curve slopes {td.slopes} not increasing inside (0, 1)")


def _cheb_points(k, rho):
    return rho * np.cos(np.pi * (np.arange(k) + 0.5) / k)


FIT_FLOOR = 1e-12


def _drop_noise(coef, vals):
    """Zero scaled coefficients that contribute less than fit noise on ``[-rho, rho]``."""
    floor = FIT_FLOOR * max(float(np.max(np.abs(vals), initial=0.0)), 1e-300)
    return np.where(np.abs(coef) <= floor, 0.0, coef)


def _fit_1d(g, N, rho, extra=6):
    """Monomial coefficients of degree ``<= N`` by least squares around 0."""
    D = N + extra
    u = _cheb_points(3 * (D + 1), 1.0)
    vals = np.asarray(g(rho * u), float)
    V = np.vander(u, D + 1, increasing=True)
    coef = _drop_noise(np.linalg.lstsq(V, vals.reshape(len(u), -1), rcond=None)[0], vals)
    coef = coef[:N + 1] / rho ** np.arange(N + 1)[:, None]
    return coef.reshape((N + 1,) + vals.shape[1:]), D


def _fit_2d(K, N, rho, m, extra=6):
    D = N + extra
    u = _cheb_points(2 * (D + 1), 1.0)
    U, W = np.meshgrid(u, u, indexing="ij")
    U, W = U.ravel(), W.ravel()
    vals = np.asarray(K(rho * U, rho * W), float).reshape(len(U), m * m)
    pairs = [(a, b) for a in range(D + 1) for b in range(D + 1 - a)]
    V = np.column_stack([U ** a * W ** b for a, b in pairs])
    coef = _drop_noise(np.linalg.lstsq(V, vals, rcond=None)[0], vals)
    out = np.zeros((N + 1, N + 1, m, m))
    for row, (a, b) in zip(coef, pairs):
        if a + b <= N:
            out[a, b] = row.reshape(m, m) / rho ** (a + b)
    return out, D


def _richardson(fit, rho, N):
    """Combine fits at ``rho`` and ``rho/2``; degree-``nu`` error ~ rho^(D+1-nu)."""
    c1, D = fit(rho)
    c2, _ = fit(rho / 2)
    out = np.empty_like(c1)
    for idx in np.ndindex(c1.shape[:2] if c1.ndim == 4 else c1.shape[:1]):
        nu = sum(idx)
        if nu > N:
            out[idx] = 0.0
            continue
        w = 2.0 ** (D + 1 - nu)
        out[idx] = (w * c2[idx] - c1[idx]) / (w - 1)
    return out


def _numeric_taylor(p: ProblemSpec, N: int, rho: float | None = None) -> TaylorData:
    if rho is None:
        rho = min(0.25, 0.25 * p.T)
    try:
        kc = [_richardson(lambda r, i=i: _fit_2d(p.kernels[i], N, r, p.m), rho, N)
              for i in range(p.n)]
        f = _richardson(lambda r: _fit_1d(p.f, N, r), rho, N)
        a = np.zeros((p.n - 1, N + 1))
        for i in range(1, p.n):
            a[i - 1] = _richardson(lambda r, i=i: _fit_1d(lambda t: p.alpha(i, t), N, r),
                                   rho, N)
    except DomainError as exc:
        raise DegenerateData(f"numeric Taylor data needs evaluators near 0: {exc}") from exc
    f[0] = np.where(np.abs(f[0]) < 1e-9, 0.0, f[0])
    a[:, 0] = np.where(np.abs(a[:, 0]) < 1e-9, 0.0, a[:, 0])
    return TaylorData(N, kc, f, a, complete=False)


# ---------------------------------------------------------------------------
# problem files

def problem_from_dict(doc: dict, name: str = "") -> ProblemSpec:
    """Build a problem from the problem-file JSON structure."""
    if "catalog" in doc and "kernels" not in doc:
        from .verify import catalog
        return catalog(doc["catalog"]).problem
    try:
        m, n, T = int(doc["m"]), int(doc["n"]), float(doc["T"])
        kernels = [MatrixField(k) for k in doc["kernels"]]
        alphas = [ScalarField(a) for a in doc.get("alphas", [])]
        rhs = VectorField(doc["f"])
        kernel_dt = [MatrixField(k) for k in doc["kernel_dt"]] if "kernel_dt" in doc else None
        alpha_dt = [ScalarField(a) for a in doc["alpha_dt"]] if "alpha_dt" in doc else None
        rhs_dt = VectorField(doc["f_dt"]) if "f_dt" in doc else None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed problem document: {exc!r}") from exc
    for K in kernels + (kernel_dt or []):
        if K.m != m or any(len(row) != m for row in K.entries):
            raise InputError("kernel matrices must be m x m")
    if rhs.m != m:
        raise InputError("f must have m components")
    taylor = TaylorData.from_json(doc["taylor"], m, n) if "taylor" in doc else None
    return ProblemSpec(m, n, T, kernels, alphas, rhs, kernel_dt, alpha_dt, rhs_dt,
                       taylor, name or doc.get("name", ""), source=dict(doc))


def problem_to_dict(p: ProblemSpec) -> dict:
    """Serialize a problem built from expressions back to a document."""
    doc = {"name": p.name, "m": p.m, "n": p.n, "T": p.T,
           "kernels": [k.to_json() for k in p.kernels],
           "alphas": [a.to_json() for a in p.alphas],
           "f": p.rhs.to_json()}
    if p.kernel_dt is not None:
        doc["kernel_dt"] = [k.to_json() for k in p.kernel_dt]
    if p.alpha_dt is not None:
        doc["alpha_dt"] = [a.to_json() for a in p.alpha_dt]
    if p.rhs_dt is not None:
        doc["f_dt"] = p.rhs_dt.to_json()
    if p.taylor is not None:
        doc["taylor"] = p.taylor.to_json()
    return doc


def load_problem(path) -> ProblemSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read problem file {path}: {exc}") from exc
    return problem_from_dict(doc)

