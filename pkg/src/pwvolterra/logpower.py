"""Truncated log-power polynomials with affine vector coefficients.

A :class:`LogPowerPoly` represents

    x(t) = sum_{j, p} t**j * (ln t)**p * (v_jp + sum_k c_k * w_jpk)

where the ``c_k`` are named free parameters. Every coefficient is stored as an
``(m, 1 + P)`` array: column 0 is the base vector, column ``k + 1`` the
direction of parameter ``k``. Terms with ``j`` above the working ``order``
are dropped by every operation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCurve, DimensionMismatch, UnboundParameter

PRUNE = 1e-12


@dataclass(frozen=True)
class AffineVec:
    base: np.ndarray
    directions: dict


class _Accumulator:
    """Sums contributions per key and drops entries lost to cancellation."""

    def __init__(self, shape):
        self.shape = shape
        self.acc = {}
        self.mag = {}

    def add(self, key, value, magnitude):
        if key in self.acc:
            self.acc[key] = self.acc[key] + value
            self.mag[key] = self.mag[key] + magnitude
        else:
            self.acc[key] = np.array(value, dtype=float)
            self.mag[key] = np.array(magnitude, dtype=float)

    def result(self):
        out = {}
        for key, val in self.acc.items():
            val = np.where(np.abs(val) <= PRUNE * self.mag[key], 0.0, val)
            if np.any(val != 0.0):
                out[key] = val
        return out


class LogPowerPoly:
    """Immutable log-power polynomial in ``t`` of vector dimension ``m``."""

    __slots__ = ("m", "order", "params", "terms")

    def __init__(self, m: int, order: int, params=(), terms=None):
        self.m = int(m)
        self.order = int(order)
        self.params = tuple(params)
        clean = {}
        for (j, p), c in (terms or {}).items():
            c = np.asarray(c, dtype=float)
            if c.shape != (self.m, 1 + len(self.params)):
                raise DimensionMismatch(f"coefficient shape {c.shape} for m={self.m}, "
                                        f"{len(self.params)} params")
            if j < 0 or p < 0:
                raise ValueError("powers must be nonnegative")
            if j <= self.order and np.any(c != 0.0):
                clean[(int(j), int(p))] = c
        self.terms = clean

    # -- constructors -----------------------------------------------------
    @classmethod
    def zero(cls, m, order, params=()):
        return cls(m, order, params)

    @classmethod
    def monomial(cls, vec, j=0, p=0, order=None, params=(), directions=None):
        """``t**j (ln t)**p (vec + sum c * directions[c])``."""
        vec = np.atleast_1d(np.asarray(vec, dtype=float))
        params = tuple(params) or tuple(directions or ())
        coef = np.zeros((vec.size, 1 + len(params)))
        coef[:, 0] = vec
        for name, d in (directions or {}).items():
            coef[:, 1 + params.index(name)] = d
        return cls(vec.size, j if order is None else order, params, {(j, p): coef})

    # -- inspection -------------------------------------------------------
    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        return f"LogPowerPoly(m={self.m}, order={self.order}, terms={len(self.terms)})"

    @property
    def max_log_power(self):
        return max((p for _, p in self.terms), default=0)

    def coefficient(self, j: int) -> dict:
        """Map ``p -> (m, 1+P)`` array of the ``t**j`` coefficient."""
        return {p: c for (jj, p), c in self.terms.items() if jj == j}

    def affine(self, j, p) -> AffineVec:
        c = self.terms.get((j, p), np.zeros((self.m, 1 + len(self.params))))
        return AffineVec(c[:, 0].copy(), {k: c[:, 1 + i].copy()
                                          for i, k in enumerate(self.params)})

    def coefficient_norm(self) -> float:
        return max((float(np.max(np.abs(c))) for c in self.terms.values()), default=0.0)

    # -- parameter bookkeeping ----------------------------------------------
    def with_params(self, params) -> "LogPowerPoly":
        params = tuple(params)
        if params == self.params:
            return self
        missing = set(self.params) - set(params)
        if missing:
            raise ValueError(f"parameters {sorted(missing)} would be dropped")
        cols = [0] + [1 + params.index(k) for k in self.params]
        terms = {}
        for key, c in self.terms.items():
            new = np.zeros((self.m, 1 + len(params)))
            new[:, cols] = c
            terms[key] = new
        return LogPowerPoly(self.m, self.order, params, terms)

    def with_order(self, order) -> "LogPowerPoly":
        return LogPowerPoly(self.m, order, self.params, self.terms)

    # -- arithmetic ---------------------------------------------------------
    def __add__(self, other):
        return lp_add(self, other)

    def __sub__(self, other):
        return lp_add(self, lp_scale(other, -1.0))

    def __neg__(self):
        return lp_scale(self, -1.0)

    def __mul__(self, k):
        return lp_scale(self, k)

    __rmul__ = __mul__

    def shift(self, k: int) -> "LogPowerPoly":
        """Multiply by ``t**k``."""
        return LogPowerPoly(self.m, self.order, self.params,
                            {(j + k, p): c for (j, p), c in self.terms.items()})

    def __call__(self, t, params=None):
        return lp_eval(self, t, params or {})


def _merged_params(a, b):
    return a.params + tuple(k for k in b.params if k not in a.params)


def lp_add(a: LogPowerPoly, b: LogPowerPoly) -> LogPowerPoly:
    """Termwise sum; entries that cancel to rounding level are pruned."""
    if a.m != b.m:
        raise DimensionMismatch(f"cannot add dimensions {a.m} and {b.m}")
    params = _merged_params(a, b)
    a, b = a.with_params(params), b.with_params(params)
    acc = _Accumulator((a.m, 1 + len(params)))
    for x in (a, b):
        for key, c in x.terms.items():
            acc.add(key, c, np.abs(c))
    return LogPowerPoly(a.m, min(a.order, b.order), params, acc.result())


def lp_scale(a: LogPowerPoly, k: float) -> LogPowerPoly:
    if k == 0:
        return LogPowerPoly(a.m, a.order, a.params)
    return LogPowerPoly(a.m, a.order, a.params, {key: k * c for key, c in a.terms.items()})


def lp_matmul(M: dict, x: LogPowerPoly) -> LogPowerPoly:
    """Product of a matrix power series ``{j: Mat}`` with ``x``."""
    acc = _Accumulator(None)
    m_out = None
    for jm, A in M.items():
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if A.shape[1] != x.m:
            raise DimensionMismatch(f"matrix {A.shape} against vector dimension {x.m}")
        m_out = A.shape[0]
        absA = np.abs(A)
        for (j, p), c in x.terms.items():
            if j + jm <= x.order:
                acc.add((j + jm, p), A @ c, absA @ np.abs(c))
    if m_out is None:
        m_out = x.m
    return LogPowerPoly(m_out, x.order, x.params, acc.result())


def scalar_series_mul(S: dict, x: LogPowerPoly) -> LogPowerPoly:
    """Product of a scalar log-power series ``{(j, p): float}`` with ``x``."""
    acc = _Accumulator(None)
    for (js, ps), s in S.items():
        if s == 0:
            continue
        for (j, p), c in x.terms.items():
            if j + js <= x.order:
                acc.add((j + js, p + ps), s * c, abs(s) * np.abs(c))
    return LogPowerPoly(x.m, x.order, x.params, acc.result())


# -- power series in t (1-D arrays, index = power) ---------------------------

def ps_mul(a, b, n):
    out = np.convolve(a, b)[:n + 1]
    return np.pad(out, (0, n + 1 - out.size))


def ps_pow(a, k, n):
    out = np.zeros(n + 1)
    out[0] = 1.0
    for _ in range(k):
        out = ps_mul(out, a, n)
    return out


def ps_log1p(w, n):
    """Series of ``ln(1 + w)`` for ``w`` without constant term."""
    out = np.zeros(n + 1)
    term = np.zeros(n + 1)
    term[0] = 1.0
    for k in range(1, n + 1):
        term = ps_mul(term, w, n)
        out += (-1) ** (k + 1) * term / k
    return out


def _curve_pieces(alpha, n):
    """Split ``alpha(t) = a1 t (1 + w(t))`` into ``(a1, w, ln a1 + ln(1+w))``."""
    alpha = np.asarray(alpha, dtype=float)
    a1 = float(alpha[0])
    if a1 <= 0:
        raise DegenerateCurve(f"curve slope {a1} must be positive")
    w = np.zeros(n + 1)
    tail = alpha[1:n + 1] / a1
    w[1:1 + tail.size] = tail
    logc = ps_log1p(w, n)
    logc[0] += math.log(a1)
    return a1, w, logc


def lp_compose_alpha(x: LogPowerPoly, alpha) -> LogPowerPoly:
    """Substitute ``t <- alpha(t)`` with ``alpha = (a1, a2, ...)`` the
    coefficients of ``t, t**2, ...``; ``ln t`` becomes
    ``ln t + ln a1 + ln(1 + (a2/a1) t + ...)`` expanded in powers of ``t``.
    """
    n = x.order
    a1, w, logc = _curve_pieces(alpha, n)
    one_w = w.copy()
    one_w[0] = 1.0
    acc = _Accumulator(None)
    pow_cache = {}
    log_cache = {0: np.eye(1, n + 1)[0]}
    for (j, p), c in x.terms.items():
        if j not in pow_cache:
            pow_cache[j] = a1 ** j * ps_pow(one_w, j, n)
        for k in range(1, p + 1):
            if k not in log_cache:
                log_cache[k] = ps_mul(log_cache[k - 1], logc, n)
        base = pow_cache[j]
        for q in range(p + 1):
            series = math.comb(p, q) * ps_mul(base, log_cache[p - q], n)
            for e, s in enumerate(series):
                if s != 0 and j + e <= n:
                    acc.add((j + e, q), s * c, abs(s) * np.abs(c))
    return LogPowerPoly(x.m, n, x.params, acc.result())


def lp_integrate(x: LogPowerPoly) -> LogPowerPoly:
    """Antiderivative vanishing at ``t = 0``, termwise from

    ``int t^j ln^k t dt = t^(j+1) sum_s (-1)^s k!/(k-s)! / (j+1)^(s+1) ln^(k-s) t``.
    """
    acc = _Accumulator(None)
    for (j, p), c in x.terms.items():
        if j + 1 > x.order:
            continue
        for s in range(p + 1):
            w = (-1) ** s * math.perm(p, s) / (j + 1) ** (s + 1)
            acc.add((j + 1, p - s), w * c, abs(w) * np.abs(c))
    return LogPowerPoly(x.m, x.order, x.params, acc.result())


def binding_vector(x: LogPowerPoly, params: dict) -> np.ndarray:
    missing = [k for k in x.params if k not in params]
    if missing:
        raise UnboundParameter(f"unbound parameters: {', '.join(missing)}")
    return np.array([1.0] + [float(params[k]) for k in x.params])


def lp_eval(x: LogPowerPoly, t, params: dict | None = None) -> np.ndarray:
    """Numeric value at ``t > 0`` (scalar or array) under a parameter binding."""
    b = binding_vector(x, params or {})
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (x.m,))
    if not x.terms:
        return out
    if any(p > 0 for _, p in x.terms) and np.any(t <= 0):
        raise ValueError("log-power terms need t > 0")
    with np.errstate(divide="ignore"):
        z = np.log(t)
    for (j, p), c in x.terms.items():
        scal = t ** j * (z ** p if p else 1.0)
        out += np.multiply.outer(scal, c @ b)
    return out


def lp_derivative(x: LogPowerPoly) -> LogPowerPoly:
    """d/dt, which lowers t-powers: ``d(t^j z^p) = t^(j-1)(j z^p + p z^(p-1))``.

    Only defined when every term has ``j >= 1`` (the result stays polynomial).
    """
    acc = _Accumulator(None)
    for (j, p), c in x.terms.items():
        if j == 0:
            raise ValueError("derivative of a j=0 term leaves the polynomial class")
        acc.add((j - 1, p), j * c, j * np.abs(c))
        if p:
            acc.add((j - 1, p - 1), p * c, p * np.abs(c))
    return LogPowerPoly(x.m, x.order, x.params, acc.result())


# -- output -----------------------------------------------------------------

def _num(v):
    return f"{v:.7g}"


def _monomial(j, p):
    parts = []
    if j == 1:
        parts.append("t")
    elif j > 1:
        parts.append(f"t^{j}")
    if p == 1:
        parts.append("ln t")
    elif p > 1:
        parts.append(f"ln^{p} t")
    return "*".join(parts)


def to_text(x: LogPowerPoly, lhs="x(t)") -> str:
    """Canonical text form, e.g. ``x(t) = (-1.442695*ln t + c1)*e1 + 0.5*e2 + O(t^4)``."""
    keys = sorted(x.terms, key=lambda k: (k[0], -k[1]))
    comps = []
    for a in range(x.m):
        pieces = []
        for j, p in keys:
            c = x.terms[(j, p)][a]
            mono = _monomial(j, p)
            for col, val in enumerate(c):
                if val == 0:
                    continue
                factors = [] if col == 0 else [x.params[col - 1]]
                if mono:
                    factors.append(mono)
                if not factors:
                    factors = [_num(val)]
                elif val == -1.0:
                    factors[0] = "-" + factors[0]
                elif val != 1.0:
                    factors.insert(0, _num(val))
                pieces.append("*".join(factors))
        if not pieces:
            continue
        body = " + ".join(pieces).replace("+ -", "- ")
        if x.m == 1:
            comps.append(body)
        else:
            comps.append((f"({body})" if len(pieces) > 1 else body) + f"*e{a + 1}")
    rhs = " + ".join(comps) if comps else "0"
    return f"{lhs} = {rhs} + O(t^{x.order + 1})"


def to_json(x: LogPowerPoly) -> dict:
    terms = []
    for (j, p) in sorted(x.terms):
        c = x.terms[(j, p)]
        terms.append({"j": j, "p": p, "vector": c[:, 0].tolist(),
                      "param_dirs": {k: c[:, 1 + i].tolist()
                                     for i, k in enumerate(x.params)
                                     if np.any(c[:, 1 + i] != 0)}})
    return {"order": x.order, "m": x.m, "terms": terms, "params": list(x.params)}
