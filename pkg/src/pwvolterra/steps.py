"""Method of steps for problems with linear curves ``alpha_i(t) = a_i t``.

The differentiated equation premultiplied by ``K_n^{-1}(t,t)`` reads

    x + A x + K x = fbar,   fbar = K_n^{-1}(t,t) f'(t)

with ``A`` the shift term and ``K`` the integral of ``dK/dt``. Near the
origin ``A`` is governed by

    D(t) = sum_i a_i K_n^{-1}(t,t) (K_i - K_{i+1})(t, a_i t)

and when ``|D(0)| < 1`` the equation is solved on ``[0, h]`` by successive
approximation, then on intervals ``[h, (1+eps)h], ...`` where the shifted
arguments ``a_i t`` fall into the part already solved.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Diverged, Infeasible, NonlinearCurves
from .grid import GridFunction, Mesh, assemble_operator
from .problem import ProblemSpec, kernel_field

TRIANGLE_SAMPLES = 64
D_SAMPLES = 512
GROWTH_LIMIT = 5


def curve_slopes(p: ProblemSpec, tol: float = 1e-10) -> np.ndarray:
    """Slopes ``a_i``; raises :class:`NonlinearCurves` unless ``alpha_i(t)/t`` is constant."""
    ts = np.linspace(p.T / 64, p.T, 64)
    slopes = []
    for i in range(1, p.n):
        ratio = p.alpha(i, ts) / ts
        if np.ptp(ratio) > tol * max(1.0, abs(ratio[0])):
            raise NonlinearCurves(f"curve {i} is not linear in t")
        slopes.append(float(ratio[-1]))
    return np.array(slopes)


def d_matrix(p: ProblemSpec, t, slopes=None) -> np.ndarray:
    """``D(t)`` for an array of ``t``; shape ``t.shape + (m, m)``."""
    slopes = curve_slopes(p) if slopes is None else slopes
    t = np.asarray(t, float)
    kn_inv = np.linalg.inv(p.kn_diag(t))
    D = np.zeros(t.shape + (p.m, p.m))
    for i, a in enumerate(slopes, start=1):
        jump = p.piece(i - 1, t, a * t) - p.piece(i, t, a * t)
        D += a * (kn_inv @ jump)
    return D


def _norm(M):
    return np.linalg.norm(M, 2, axis=(-2, -1))


def check_condition_s(p: ProblemSpec, td=None, samples: int = TRIANGLE_SAMPLES):
    """``(|D(0)|, c, feasible)`` with ``c`` the sampled sup of ``|K_n^{-1}(t,t) K(t,s)|``.

    ``td`` is unused: the test needs values, not expansions.
    """
    slopes = curve_slopes(p)
    q0 = float(_norm(d_matrix(p, np.zeros(1), slopes))[0])
    ts = np.linspace(0.0, p.T, samples)
    T, S = np.meshgrid(ts, ts, indexing="ij")
    mask = S <= T
    tt, ss = T[mask], S[mask]
    K = kernel_field(p, tt, ss)
    kn_inv = np.linalg.inv(p.kn_diag(tt))
    c = float(np.max(_norm(kn_inv @ K)))
    feasible = q0 < 1.0 - 1e-12 and np.isfinite(c)
    return q0, c, bool(feasible)


@dataclass
class StepsConfig:
    q: float
    c: float
    h: float
    eps: float
    intervals: list
    q0: float = 0.0
    h1: float = 0.0
    tol: float = 1e-12
    max_iter: int = 1000

    def to_json(self):
        return {"q": self.q, "c": self.c, "h": self.h, "eps": self.eps,
                "intervals": [list(iv) for iv in self.intervals], "q0": self.q0,
                "h1": self.h1, "tol": self.tol, "max_iter": self.max_iter}


def partition(h: float, eps: float, T: float) -> list:
    """``[0,h], [h,(1+eps)h], [(1+eps)h, (1+eps)^2 h], ...`` clipped to ``T``."""
    if h >= T:
        return [(0.0, T)]
    out = [(0.0, h)]
    a = h
    while a < T:
        b = min(T, (1 + eps) * a)
        if T - b < 1e-12 * T:
            b = T
        out.append((a, b))
        a = b
    return out


def select_partition(p: ProblemSpec, td=None, q_target: float | None = None,
                     eps: float | None = None, tol: float = 1e-12,
                     max_iter: int = 1000) -> StepsConfig:
    """First-interval length and growth factor from ``D(t)`` and ``c``."""
    q0, c, feasible = check_condition_s(p, td)
    if not feasible:
        raise Infeasible(f"step condition infeasible: |D(0)|={float(f'{q0:.12g}')!r}")
    if q_target is None:
        q_target = 0.5 if q0 < 0.5 else (q0 + 1.0) / 2
    slopes = curve_slopes(p)
    ts = np.linspace(0.0, p.T, D_SAMPLES + 1)
    dn = _norm(d_matrix(p, ts, slopes))
    over = np.nonzero(dn > q_target)[0]
    k1 = over[0] - 1 if over.size else ts.size - 1
    if k1 < 1:
        raise Infeasible("|D(t)| exceeds the target immediately")
    h1 = float(ts[k1])
    q = float(np.max(dn[:k1 + 1]))
    h = 0.9 * min(h1, (1 - q) / c if c > 0 else np.inf)
    if eps is None:
        a_last = float(slopes[-1]) if slopes.size else 0.0
        eps = 1.0 if a_last <= 0.5 else 1.0 / a_last - 1.0
    return StepsConfig(q, c, h, eps, partition(h, eps, p.T), q0, h1, tol, max_iter)


@dataclass
class StepsSolution:
    x: GridFunction
    iterations: list
    config: StepsConfig
    joins: list = field(default_factory=list)

    def __call__(self, t):
        return self.x(t)

    def to_json(self):
        doc = self.config.to_json()
        doc["iterations"] = list(self.iterations)
        doc["joins"] = [{"t": t, "jump": j} for t, j in self.joins]
        return doc


def _snap(nodes, t):
    return int(np.argmin(np.abs(nodes - t)))


def solve_steps(p: ProblemSpec, cfg: StepsConfig, mesh: int | Mesh = 1024) -> StepsSolution:
    """Successive approximation interval by interval on a uniform mesh.

    ``mesh`` is the number of mesh intervals on ``[0, T]`` (or a Mesh);
    interval ends snap to the nearest node. Earlier intervals are frozen
    history when a later one is iterated.
    """
    if not isinstance(mesh, Mesh):
        mesh = Mesh.uniform(0.0, p.T, int(mesh))
    nodes = mesh.nodes
    op = assemble_operator(p, mesh, 0)
    kn_inv = op.kn_inv
    fbar = np.einsum("kab,kb->ka", kn_inv, np.asarray(p.f_prime(nodes), float).reshape(-1, p.m))
    x = np.zeros_like(fbar)
    iterations, joins = [], []
    start = 0
    for _, b in cfg.intervals:
        stop = max(_snap(nodes, b), start + 1)
        r0 = 0 if start == 0 else start + 1
        rows = slice(r0, stop + 1)
        x[rows] = fbar[rows]
        prev, growth = None, 0
        for it in range(1, cfg.max_iter + 1):
            new = fbar[rows] - op(x, rows=(r0, stop + 1))
            d = float(np.max(np.abs(new - x[rows])))
            x[rows] = new
            if prev is not None and d > prev:
                growth += 1
                if growth >= GROWTH_LIMIT:
                    raise Diverged(f"interval ending at t={nodes[stop]:.6g} diverges")
            else:
                growth = 0
            prev = d
            if d <= cfg.tol * max(1.0, float(np.max(np.abs(new)))):
                break
        else:
            raise Diverged(f"no convergence in {cfg.max_iter} iterations on the interval "
                           f"ending at t={nodes[stop]:.6g}")
        iterations.append(it)
        start = stop
        if stop >= nodes.size - 1:
            break
    # fixed-point defect at each join, the discrete form of x(b-) = x(b+)
    for k in sorted({_snap(nodes, b) for _, b in cfg.intervals[:-1]}):
        res = x[k] + op(x, rows=(k, k + 1))[0] - fbar[k]
        joins.append((float(nodes[k]), float(np.max(np.abs(res)))))
    return StepsSolution(GridFunction(mesh, x), iterations, cfg, joins)
