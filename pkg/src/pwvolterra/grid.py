"""Meshes, sampled functions, breakpoint-aware quadrature and the discrete
integral-functional operator shared by the two solvers.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
import scipy.interpolate
import scipy.sparse

from .errors import OutOfDomain, OutOfRange
from .problem import ProblemSpec

GAUSS_NODES = 48
GRADING = 4
MIN_INTERVALS = 64


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2 or np.any(np.diff(nodes) <= 0):
            raise ValueError("mesh nodes must be strictly increasing, at least two")
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def uniform(cls, a: float, b: float, intervals: int) -> "Mesh":
        return cls(np.linspace(a, b, intervals + 1))

    @property
    def a(self):
        return self.nodes[0]

    @property
    def b(self):
        return self.nodes[-1]

    @property
    def h(self):
        return float(np.max(np.diff(self.nodes)))

    def __len__(self):
        return self.nodes.size


class GridFunction:
    """Vector-valued samples on a mesh with linear or cubic interpolation."""

    def __init__(self, mesh: Mesh, values, interp: str = "linear"):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] != len(mesh):
            raise ValueError("one value per node required")
        if interp not in ("linear", "cubic"):
            raise ValueError(f"unknown interpolation {interp!r}")
        self.mesh = mesh
        self.values = values
        self.interp = interp
        self._spline = (scipy.interpolate.CubicSpline(mesh.nodes, values, axis=0)
                        if interp == "cubic" else None)

    @property
    def m(self):
        return self.values.shape[1]

    def __call__(self, t):
        return interp_eval(self, t)


def interp_eval(g: GridFunction, t):
    """Interpolated value(s) at ``t`` inside the mesh span."""
    t = np.asarray(t, dtype=float)
    nodes = g.mesh.nodes
    slack = 1e-12 * max(1.0, abs(nodes[-1]))
    if np.any(t < nodes[0] - slack) or np.any(t > nodes[-1] + slack):
        raise OutOfRange(f"t outside [{nodes[0]}, {nodes[-1]}]")
    t = np.clip(t, nodes[0], nodes[-1])
    if g._spline is not None:
        return g._spline(t)
    l = np.clip(np.searchsorted(nodes, t, side="right") - 1, 0, nodes.size - 2)
    w = (t - nodes[l]) / (nodes[l + 1] - nodes[l])
    w = w[..., None]
    return (1 - w) * g.values[l] + w * g.values[l + 1]


def to_csv(g: GridFunction, path=None) -> str:
    """``t,x1,...,xm`` with 17 significant digits; writes ``path`` if given."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"x{a + 1}" for a in range(g.m)])
    for t, row in zip(g.mesh.nodes, g.values):
        writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text


def read_csv(path) -> GridFunction:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return GridFunction(Mesh(data[:, 0]), data[:, 1:])


# ---------------------------------------------------------------------------
# quadrature

_gl_x, _gl_w = np.polynomial.legendre.leggauss(GAUSS_NODES)
_gl_x = 0.5 * (_gl_x + 1.0)
_gl_w = 0.5 * _gl_w


def graded_rule(b: float):
    """Nodes/weights on ``[0, b]`` from ``s = b u^4``; resolves ``ln s`` at 0."""
    s = b * _gl_x ** GRADING
    w = b * GRADING * _gl_x ** (GRADING - 1) * _gl_w
    return s, w


def simpson_rule(lo: float, hi: float, intervals: int):
    intervals += intervals % 2
    s = np.linspace(lo, hi, intervals + 1)
    w = np.full(intervals + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return s, w * (hi - lo) / (3 * intervals)


def piecewise_integral(p: ProblemSpec, t: float, g, which: str = "full",
                       density: int = 256, min_intervals: int = MIN_INTERVALS) -> np.ndarray:
    """``sum_i int_{alpha_{i-1}(t)}^{alpha_i(t)} K_i(t, s) g(s) ds``.

    ``which='dt_kernel'`` uses ``dK_i/dt``. Segments end exactly at the curves.
    The segment at ``s = 0`` uses a graded Gauss rule (integrable log
    singularities are common there); the others use composite Simpson with
    ``density`` subintervals per unit length, at least ``min_intervals``.
    """
    if not 0 < t <= p.T * (1 + 1e-12):
        raise OutOfDomain(f"t={t} outside (0, T]")
    kern = p.piece if which == "full" else p.piece_dt
    total = np.zeros(p.m)
    for i in range(p.n):
        lo = float(p.alpha(i, t))
        hi = float(p.alpha(i + 1, t))
        if hi <= lo:
            continue
        if lo == 0.0:
            s, w = graded_rule(hi)
        else:
            s, w = simpson_rule(lo, hi, max(min_intervals, int(np.ceil(density * (hi - lo)))))
        K = kern(i, np.full_like(s, t), s)
        vals = np.asarray(g(s), dtype=float).reshape(s.size, p.m)
        total += np.einsum("k,kab,kb->a", w, K, vals)
    return total


def residual_numeric(p: ProblemSpec, x, ts) -> np.ndarray:
    """Differentiated-equation residual ``F(x)(t)`` at each ``t`` in ``ts``.

    ``F(x) = K_n(t,t) x(t) + sum_i alpha_i'(t) [K_i - K_{i+1}](t, alpha_i(t)) x(alpha_i(t))
    + sum_i int K_i^(1)(t,s) x(s) ds - f'(t)``.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    out = np.empty((ts.size, p.m))
    for k, t in enumerate(ts):
        val = p.kn_diag(t) @ np.asarray(x(np.array([t])), float).reshape(p.m)
        for i in range(1, p.n):
            a = float(p.alpha(i, t))
            jump = p.piece(i - 1, t, a) - p.piece(i, t, a)
            xa = np.asarray(x(np.array([a])), float).reshape(p.m)
            val = val + float(p.alpha_prime(i, t)) * (jump @ xa)
        val = val + piecewise_integral(p, t, x, which="dt_kernel")
        out[k] = val - np.asarray(p.f_prime(np.array([t])), float).reshape(p.m)
    return out


# ---------------------------------------------------------------------------
# discrete operator

class DiscreteOperator:
    """Linear map ``x -> K_n^{-1}(t,t) [shift(x) + integral(x)]`` on mesh nodes.

    With ``nstar > 0`` the shift term carries ``(alpha_i(t)/t)^nstar`` and the
    integrand ``(s/t)^nstar``: the operators ``L`` and ``K`` acting on the
    scaled unknown ``u`` of ``x = xhat + t^nstar u``.
    """

    def __init__(self, mesh, m, shift, integral, kn_inv):
        self.mesh = mesh
        self.m = m
        self.shift = shift
        self.integral = integral
        self.kn_inv = kn_inv

    def __call__(self, x, rows=None):
        xf = np.asarray(x, dtype=float).reshape(-1)
        m = self.m
        if rows is None:
            out = self.shift @ xf
            if self.integral is not None:
                out = out + self.integral @ xf
            return out.reshape(-1, m)
        r0, r1 = rows
        out = self.shift[r0 * m:r1 * m] @ xf
        if self.integral is not None:
            out = out + self.integral[r0 * m:r1 * m] @ xf
        return out.reshape(-1, m)


def _has_dt_kernel(p: ProblemSpec, samples=9) -> bool:
    ts = np.linspace(0.0, p.T, samples)
    T, S = np.meshgrid(ts, ts, indexing="ij")
    mask = S <= T
    return any(np.any(p.piece_dt(i, T[mask], S[mask]) != 0) for i in range(p.n))


def _interp_weights(nodes, pts):
    l = np.clip(np.searchsorted(nodes, pts, side="right") - 1, 0, nodes.size - 2)
    w = (pts - nodes[l]) / (nodes[l + 1] - nodes[l])
    return l, np.clip(w, 0.0, 1.0)


def assemble_operator(p: ProblemSpec, mesh: Mesh, nstar: int = 0) -> DiscreteOperator:
    """Trapezoid/linear-interpolation discretization (second order)."""
    nodes = mesh.nodes
    M1 = nodes.size
    m = p.m
    kn_inv = np.linalg.inv(p.kn_diag(nodes))

    rows, cols, vals = [], [], []
    ai, bi = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    for i in range(1, p.n):
        a = p.alpha(i, nodes)
        jump = p.piece(i - 1, nodes, a) - p.piece(i, nodes, a)
        coef = p.alpha_prime(i, nodes)[:, None, None] * jump
        if nstar:
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(nodes > 0, a / np.where(nodes > 0, nodes, 1.0),
                                 p.alpha_prime(i, np.zeros(1))[0])
            coef = coef * (ratio ** nstar)[:, None, None]
        coef = kn_inv @ coef
        l, w = _interp_weights(nodes, a)
        for idx, ww in ((l, 1 - w), (l + 1, w)):
            block = coef * ww[:, None, None]
            rows.append((np.arange(M1)[:, None, None] * m + ai).ravel())
            cols.append((idx[:, None, None] * m + bi).ravel())
            vals.append(block.ravel())
    size = M1 * m
    if rows:
        shift = scipy.sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(size, size))
    else:
        shift = scipy.sparse.csr_matrix((size, size))

    integral = None
    if _has_dt_kernel(p):
        W = np.zeros((M1, m, M1, m))
        for k in range(1, M1):
            t = nodes[k]
            acc = np.zeros((M1, m, m))
            for i in range(p.n):
                lo = float(p.alpha(i, t))
                hi = float(p.alpha(i + 1, t))
                if hi <= lo:
                    continue
                inner = np.nonzero((nodes > lo) & (nodes < hi))[0]
                pts = np.concatenate([[lo], nodes[inner], [hi]])
                dw = np.diff(pts)
                tw = np.zeros(pts.size)
                tw[:-1] += dw / 2
                tw[1:] += dw / 2
                K = p.piece_dt(i, np.full_like(pts, t), pts)
                if nstar:
                    K = K * ((pts / t) ** nstar)[:, None, None]
                contrib = tw[:, None, None] * K
                np.add.at(acc, inner, contrib[1:-1])
                for end, c in ((lo, contrib[0]), (hi, contrib[-1])):
                    l, w = _interp_weights(nodes, np.array([end]))
                    acc[l[0]] += (1 - w[0]) * c
                    acc[l[0] + 1] += w[0] * c
            W[k] = np.einsum("ab,lbc->alc", kn_inv[k], acc)
        integral = W.reshape(size, size)
    return DiscreteOperator(mesh, m, shift, integral, kn_inv)
