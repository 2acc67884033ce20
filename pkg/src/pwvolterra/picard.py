"""Solution near the origin by successive approximation around the expansion.

Writing ``x = xhat + t^N* u`` in the differentiated equation gives

    u + (L + K) u = gamma,   gamma = -K_n^{-1}(t,t) F(xhat)(t) / t^N*

where ``L`` is the functional shift term damped by ``(alpha_i(t)/t)^N*`` and
``K`` the integral term damped by ``(s/t)^N*``. ``N*`` is taken large enough
for ``L`` to contract; ``K`` contracts in the weighted norm
``max e^{-lt}|u(t)|`` for large ``l``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import Diverged, NoContraction, OutOfRange, PreconditionResidual
from .grid import GridFunction, Mesh, assemble_operator, interp_eval, residual_numeric
from .logpower import LogPowerPoly, binding_vector, lp_eval
from .problem import ProblemSpec

DEFAULT_INTERVALS = 2048
GROWTH_LIMIT = 5
MAX_NSTAR = 200


@dataclass
class PicardConfig:
    epsilon: float
    nstar: int
    q: float
    T_prime: float
    weight_l: float = 0.0
    max_iter: int = 500
    tol: float = 1e-12
    intervals: int = DEFAULT_INTERVALS

    def to_json(self):
        return {"epsilon": self.epsilon, "nstar": self.nstar, "q": self.q,
                "T_prime": self.T_prime, "weight_l": self.weight_l,
                "max_iter": self.max_iter, "tol": self.tol, "intervals": self.intervals}


def _shift_bound(p: ProblemSpec, ts):
    """``|K_n^{-1}(t,t)| sum_i |alpha_i'(t)| |K_i - K_{i+1}|(t, alpha_i(t))`` per sample."""
    Kn = p.kn_diag(ts)
    if np.any(np.abs(np.linalg.det(Kn)) <= 1e-14 * np.max(np.abs(Kn), axis=(1, 2)) ** p.m):
        raise NoContraction("K_n(t,t) is singular at a sample point")
    inv_norm = np.linalg.norm(np.linalg.inv(Kn), 2, axis=(1, 2))
    total = np.zeros_like(ts)
    for i in range(1, p.n):
        a = p.alpha(i, ts)
        jump = p.piece(i - 1, ts, a) - p.piece(i, ts, a)
        total += np.abs(p.alpha_prime(i, ts)) * np.linalg.norm(jump, 2, axis=(1, 2))
    return inv_norm * total


def select_nstar(p: ProblemSpec, T_prime: float | None = None, q_target: float = 0.5,
                 samples: int = 256):
    """Smallest ``N*`` whose damped shift bound is at most ``q_target``.

    Returns ``(nstar, epsilon, q)`` with ``epsilon`` the sampled sup of
    ``|alpha_i'|`` and ``alpha_i(t)/t`` on ``(0, T']``.
    """
    T_prime = p.T if T_prime is None else T_prime
    ts = np.linspace(T_prime / samples, T_prime, samples)
    eps = 0.0
    for i in range(1, p.n):
        eps = max(eps, float(np.max(np.abs(p.alpha_prime(i, ts)))),
                  float(np.max(p.alpha(i, ts) / ts)))
    if eps >= 1:
        raise NoContraction(f"epsilon={eps:.6g} is not below 1 on (0, {T_prime}]")
    bound = float(np.max(_shift_bound(p, np.concatenate([[0.0], ts]))))
    for nstar in range(MAX_NSTAR + 1):
        q = eps ** nstar * bound
        if q <= q_target:
            return nstar, eps, q
    raise NoContraction(f"no N* <= {MAX_NSTAR} brings the shift bound below {q_target}")


def picard_config(p: ProblemSpec, T_prime: float | None = None, **overrides) -> PicardConfig:
    T_prime = p.T if T_prime is None else T_prime
    nstar, eps, q = select_nstar(p, T_prime)
    cfg = PicardConfig(eps, nstar, q, T_prime)
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg


@dataclass
class PicardSolution:
    xhat: LogPowerPoly
    u: GridFunction
    nstar: int
    params: dict
    iteration_history: list
    weight_l: float
    config: PicardConfig = None
    gamma: np.ndarray = field(default=None, repr=False)

    @property
    def iterations(self):
        return len(self.iteration_history)

    @property
    def contraction_ratios(self):
        d = self.iteration_history
        return [d[k] / d[k - 1] for k in range(1, len(d)) if d[k - 1] > 0]

    def __call__(self, t):
        return assemble_solution(self, t)

    def on_mesh(self) -> GridFunction:
        """``x`` at the mesh nodes (the origin only when ``xhat`` is finite there)."""
        nodes = self.u.mesh.nodes
        vals = np.empty_like(self.u.values)
        vals[1:] = assemble_solution(self, nodes[1:])
        vals[0] = (assemble_solution(self, nodes[:1])[0]
                   if self.xhat.max_log_power == 0 else np.nan)
        return GridFunction(self.u.mesh, vals)


def weighted_norm(v, nodes, l):
    return float(np.max(np.exp(-l * nodes) * np.max(np.abs(v), axis=1)))


def _gamma(p, xhat, params, nodes, nstar):
    zero_free = dict(params)
    xfun = lambda s: lp_eval(xhat, s, zero_free)
    F = residual_numeric(p, xfun, nodes[1:])
    kn_inv = np.linalg.inv(p.kn_diag(nodes[1:]))
    g = np.empty((nodes.size, p.m))
    g[1:] = -np.einsum("kab,kb->ka", kn_inv, F) / nodes[1:, None] ** nstar
    # finite limit at the origin, extrapolated from the first two nodes
    g[0] = 2 * g[1] - g[2] if nodes.size > 2 else g[1]
    return g


def solve_residual(p: ProblemSpec, td, xhat: LogPowerPoly, cfg: PicardConfig,
                   mesh: Mesh | None = None, params: dict | None = None,
                   residual_order: float | None = None) -> PicardSolution:
    """Iterate ``u_k = gamma - (L + K) u_{k-1}`` from ``u_0 = gamma``.

    ``params`` must bind every free parameter of ``xhat``. If the measured
    ``residual_order`` of ``F(xhat)`` is given it must exceed ``N*``.
    """
    params = dict(params or {})
    binding_vector(xhat, params)
    if xhat.order < cfg.nstar:
        raise PreconditionResidual(f"expansion order {xhat.order} below N*={cfg.nstar}")
    if residual_order is not None and residual_order < cfg.nstar + 0.5:
        raise PreconditionResidual(
            f"residual order {residual_order:.3g} does not exceed N*={cfg.nstar}")
    mesh = mesh or Mesh.uniform(0.0, cfg.T_prime, cfg.intervals)
    nodes = mesh.nodes
    gamma = _gamma(p, xhat, params, nodes, cfg.nstar)
    op = assemble_operator(p, mesh, cfg.nstar)

    l = cfg.weight_l
    l_max = 2.0 ** 10 / cfg.T_prime
    while True:
        u = gamma.copy()
        history, growth = [], 0
        gnorm = weighted_norm(gamma, nodes, l)
        for _ in range(cfg.max_iter):
            new = gamma - op(u)
            d = weighted_norm(new - u, nodes, l)
            if history and d > history[-1]:
                growth += 1
            else:
                growth = 0
            history.append(d)
            u = new
            if d <= cfg.tol * max(weighted_norm(u, nodes, l), gnorm) or growth >= GROWTH_LIMIT:
                break
        if growth < GROWTH_LIMIT and (d <= cfg.tol * max(weighted_norm(u, nodes, l), gnorm)):
            break
        if l >= l_max:
            raise Diverged(f"successive differences grew {GROWTH_LIMIT} times in a row "
                           f"up to weight l={l:.4g}" if growth >= GROWTH_LIMIT
                           else f"no convergence in {cfg.max_iter} iterations")
        l = min(l_max, 2 * l if l > 0 else 1.0 / cfg.T_prime)
    cfg.weight_l = l
    return PicardSolution(xhat, GridFunction(mesh, u), cfg.nstar, params, history, l, cfg, gamma)


def assemble_solution(sol: PicardSolution, t):
    """``xhat(t) + t^N* u(t)`` for ``t`` in ``(0, T']``."""
    t = np.asarray(t, float)
    if np.any(t > sol.u.mesh.b * (1 + 1e-12)) or np.any(t < 0):
        raise OutOfRange(f"t outside (0, {sol.u.mesh.b}]")
    return lp_eval(sol.xhat, t, sol.params) + (t ** sol.nstar)[..., None] * interp_eval(sol.u, t)
