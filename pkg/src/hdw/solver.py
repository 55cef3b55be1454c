"""Desk-scale numerical integration of the first-order field equations.

The base coordinate x1 is designated as time.  For a one-dimensional
base the equations are the classical Hamilton ODEs and are integrated
with RK4.  For a 1+1-dimensional base (x1 = t, x2 = x) the method of
lines is used: u and M = p1 evolve by RK4 with second-order central
space differences, while the stress P = p2 is reconstructed each stage
from the spatial constraint du/dx = dH/dP.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .bundle import HamiltonianSection
from .expr import Expression

__all__ = [
    "OdeState", "GridSection", "SolverConfig", "NewtonError",
    "step_ode_rk4", "integrate_ode", "evolve_field", "reconstruct_P",
    "hdw_residual", "evolve_ym_abelian",
]


class NewtonError(RuntimeError):
    def __init__(self, index: int, residual: float):
        super().__init__(f"stress reconstruction did not converge at grid index "
                         f"{index} (last residual {residual:.3e})")
        self.index = index
        self.residual = residual


@dataclass(frozen=True)
class OdeState:
    """Mechanics state (m = 1): fiber values and momenta at time t."""

    t: float
    u: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class GridSection:
    """Discrete field section (m = 2) on a spatial grid at time t."""

    t: float
    x: np.ndarray
    u: np.ndarray  # shape (n, K)
    M: np.ndarray  # shape (n, K)
    P: np.ndarray  # shape (n, K)


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_final: float
    K: int = 0
    dx: float = 0.0
    x0: float = 0.0
    boundary: str = "periodic"
    scheme: str = "rk4"
    p_reconstruction: str = "closed_form"
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    cfl_limit: float = 0.5

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("time step must be positive")
        if self.boundary not in ("periodic", "dirichlet"):
            raise ValueError(f"unknown boundary '{self.boundary}'")
        if self.scheme != "rk4":
            raise ValueError(f"unknown scheme '{self.scheme}'")
        if self.p_reconstruction not in ("closed_form", "newton"):
            raise ValueError(f"unknown reconstruction '{self.p_reconstruction}'")
        if self.K and self.K < 8:
            raise ValueError("need at least 8 grid points for the stencils")

    def warn_cfl(self):
        if self.dx and self.dt > self.cfl_limit * self.dx:
            warnings.warn(f"time step {self.dt} exceeds {self.cfl_limit} * dx = "
                          f"{self.cfl_limit * self.dx}; expect instability",
                          stacklevel=3)


# ---------------------------------------------------------------------------
# ODE case (m = 1)


class _OdeSystem:
    def __init__(self, h: HamiltonianSection):
        if h.chart.m != 1:
            raise ValueError("ODE stepping requires a one-dimensional base")
        self.chart = h.chart
        n = h.chart.n
        self.dH_dp = [h.H.diff(h.chart.p_name(1, a)) for a in range(1, n + 1)]
        self.dH_du = [h.H.diff(h.chart.u_name(a)) for a in range(1, n + 1)]

    def rhs(self, t: float, u: np.ndarray, p: np.ndarray):
        chart = self.chart
        binding = {"x1": t}
        for a in range(chart.n):
            binding[chart.u_names[a]] = u[a]
            binding[chart.p_names[a]] = p[a]
        du = np.array([e.eval(binding) for e in self.dH_dp])
        dp = np.array([-e.eval(binding) for e in self.dH_du])
        return du, dp


def step_ode_rk4(state: OdeState, h: HamiltonianSection, dt: float,
                 system: _OdeSystem | None = None) -> OdeState:
    """One classical fourth-order step of the Hamilton equations."""
    sys = system or _OdeSystem(h)
    t, u, p = state.t, state.u, state.p
    k1u, k1p = sys.rhs(t, u, p)
    k2u, k2p = sys.rhs(t + dt / 2, u + dt / 2 * k1u, p + dt / 2 * k1p)
    k3u, k3p = sys.rhs(t + dt / 2, u + dt / 2 * k2u, p + dt / 2 * k2p)
    k4u, k4p = sys.rhs(t + dt, u + dt * k3u, p + dt * k3p)
    return OdeState(t=t + dt,
                    u=u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u),
                    p=p + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p))


def integrate_ode(h: HamiltonianSection, initial: OdeState,
                  config: SolverConfig) -> list[OdeState]:
    steps = int(round(config.t_final / config.dt))
    system = _OdeSystem(h)
    traj = [initial]
    state = initial
    for _ in range(steps):
        state = step_ode_rk4(state, h, config.dt, system=system)
        traj.append(state)
    return traj


# ---------------------------------------------------------------------------
# Field case (m = 2)


def _ddx(a: np.ndarray, dx: float, boundary: str) -> np.ndarray:
    """Second-order first derivative along the last axis."""
    if boundary == "periodic":
        return (np.roll(a, -1, axis=-1) - np.roll(a, 1, axis=-1)) / (2.0 * dx)
    out = np.empty_like(a)
    out[..., 1:-1] = (a[..., 2:] - a[..., :-2]) / (2.0 * dx)
    out[..., 0] = (-3.0 * a[..., 0] + 4.0 * a[..., 1] - a[..., 2]) / (2.0 * dx)
    out[..., -1] = (3.0 * a[..., -1] - 4.0 * a[..., -2] + a[..., -3]) / (2.0 * dx)
    return out


class _FieldSystem:
    def __init__(self, model, config: SolverConfig):
        chart = model.chart
        if chart.m != 2:
            raise ValueError("the field solver handles a 1+1-dimensional base")
        self.model = model
        self.chart = chart
        self.config = config
        H = model.hamiltonian.H
        n = chart.n
        self.dH_dM = [H.diff(chart.p_name(1, a)) for a in range(1, n + 1)]
        self.dH_dP = [H.diff(chart.p_name(2, a)) for a in range(1, n + 1)]
        self.d2H_dP2 = [[self.dH_dP[a].diff(chart.p_name(2, b)) for b in range(1, n + 1)]
                        for a in range(n)]
        self.dH_du = [H.diff(chart.u_name(a)) for a in range(1, n + 1)]
        self._prev_P: np.ndarray | None = None

    def binding(self, t: float, x: np.ndarray, u: np.ndarray, M: np.ndarray,
                P: np.ndarray) -> dict[str, np.ndarray]:
        chart = self.chart
        b = {"x1": np.full_like(x, t), "x2": x}
        for a in range(chart.n):
            b[chart.u_names[a]] = u[a]
            b[chart.p_name(1, a + 1)] = M[a]
            b[chart.p_name(2, a + 1)] = P[a]
        return b

    def reconstruct_P(self, t: float, x: np.ndarray, u: np.ndarray,
                      M: np.ndarray) -> np.ndarray:
        du_dx = _ddx(u, self.config.dx, self.config.boundary)
        if self.config.p_reconstruction == "closed_form":
            return np.asarray(self.model.reconstruct_P(du_dx), dtype=float)
        return self._newton_P(t, x, u, M, du_dx)

    def _newton_P(self, t, x, u, M, du_dx) -> np.ndarray:
        n = self.chart.n
        if n != 1:
            raise ValueError("Newton reconstruction implemented for scalar fibers")
        cfg = self.config
        if self._prev_P is not None:
            P = self._prev_P.copy()
        else:
            P = np.asarray(self.model.reconstruct_P(du_dx), dtype=float)
        residual = None
        for _ in range(cfg.newton_max_iter):
            b = self.binding(t, x, u, M, P)
            residual = np.atleast_1d(self.dH_dP[0].eval_many(b)) - du_dx[0]
            if np.max(np.abs(residual)) <= cfg.newton_tol:
                self._prev_P = P
                return P
            slope = np.broadcast_to(np.atleast_1d(self.d2H_dP2[0][0].eval_many(b)),
                                    residual.shape)
            P = P - residual / slope
        worst = int(np.argmax(np.abs(residual)))
        raise NewtonError(worst, float(np.abs(residual[worst]).max()))

    def rhs(self, t: float, x: np.ndarray, u: np.ndarray, M: np.ndarray):
        P = self.reconstruct_P(t, x, u, M)
        b = self.binding(t, x, u, M, P)
        du = np.stack([np.broadcast_to(np.atleast_1d(e.eval_many(b)), x.shape)
                       for e in self.dH_dM])
        dHdu = np.stack([np.broadcast_to(np.atleast_1d(e.eval_many(b)), x.shape)
                         for e in self.dH_du])
        dM = -dHdu - _ddx(P, self.config.dx, self.config.boundary)
        if self.config.boundary == "dirichlet":
            du[:, 0] = du[:, -1] = 0.0
            dM[:, 0] = dM[:, -1] = 0.0
        return du, dM, P


def evolve_field(model, config: SolverConfig, u0: np.ndarray,
                 M0: np.ndarray) -> list[GridSection]:
    """Method-of-lines trajectory of the field equations.

    Deterministic: identical configs produce bit-identical output.
    """
    config.warn_cfl()
    system = _FieldSystem(model, config)
    K = config.K or u0.shape[-1]
    x = config.x0 + config.dx * np.arange(K)
    u = np.atleast_2d(np.asarray(u0, dtype=float)).copy()
    M = np.atleast_2d(np.asarray(M0, dtype=float)).copy()
    t = 0.0
    dt = config.dt

    def snapshot(t, u, M):
        P = system.reconstruct_P(t, x, u, M)
        return GridSection(t=t, x=x, u=u.copy(), M=M.copy(), P=P)

    traj = [snapshot(t, u, M)]
    steps = int(round(config.t_final / dt))
    for _ in range(steps):
        k1u, k1M, _ = system.rhs(t, x, u, M)
        k2u, k2M, _ = system.rhs(t + dt / 2, x, u + dt / 2 * k1u, M + dt / 2 * k1M)
        k3u, k3M, _ = system.rhs(t + dt / 2, x, u + dt / 2 * k2u, M + dt / 2 * k2M)
        k4u, k4M, _ = system.rhs(t + dt, x, u + dt * k3u, M + dt * k3M)
        u = u + dt / 6 * (k1u + 2 * k2u + 2 * k3u + k4u)
        M = M + dt / 6 * (k1M + 2 * k2M + 2 * k3M + k4M)
        t += dt
        traj.append(snapshot(t, u, M))
    return traj


def reconstruct_P(u: np.ndarray, model, config: SolverConfig,
                  t: float = 0.0, M: np.ndarray | None = None) -> np.ndarray:
    """Pointwise solve of the spatial constraint du/dx = dH/dP."""
    system = _FieldSystem(model, config)
    u = np.atleast_2d(np.asarray(u, dtype=float))
    K = u.shape[-1]
    x = config.x0 + config.dx * np.arange(K)
    if M is None:
        M = np.zeros_like(u)
    return system.reconstruct_P(t, x, u, M)


# ---------------------------------------------------------------------------
# Residual of the first-order equations along a trajectory


def hdw_residual(traj, h: HamiltonianSection, dt: float,
                 dx: float | None = None,
                 boundary: str = "periodic") -> dict[str, dict[str, float]]:
    """Central-difference residual norms of the field equations.

    For m = 1 expects a trajectory of :class:`OdeState`; for m = 2 a
    trajectory of :class:`GridSection` at uniform time spacing ``dt``.
    """
    if len(traj) < 3:
        raise ValueError("need at least 3 snapshots for the time stencil")
    chart = h.chart
    n = chart.n

    def norms(r):
        return {"max": float(np.max(np.abs(r))), "l2": float(np.sqrt(np.mean(r ** 2)))}

    if chart.m == 1:
        t = np.array([s.t for s in traj])
        u = np.stack([s.u for s in traj])  # (T, n)
        p = np.stack([s.p for s in traj])
        b = {"x1": t}
        for a in range(n):
            b[chart.u_names[a]] = u[:, a]
            b[chart.p_names[a]] = p[:, a]
        du_dt = (u[2:] - u[:-2]) / (2.0 * dt)
        dp_dt = (p[2:] - p[:-2]) / (2.0 * dt)
        res_u = np.empty_like(du_dt)
        res_p = np.empty_like(dp_dt)
        for a in range(n):
            dH_dp = np.broadcast_to(np.atleast_1d(
                h.H.diff(chart.p_names[a]).eval_many(b)), t.shape)
            dH_du = np.broadcast_to(np.atleast_1d(
                h.H.diff(chart.u_names[a]).eval_many(b)), t.shape)
            res_u[:, a] = du_dt[:, a] - dH_dp[1:-1]
            res_p[:, a] = dp_dt[:, a] + dH_du[1:-1]
        return {"evolution_u": norms(res_u), "evolution_p": norms(res_p)}

    if chart.m != 2:
        raise ValueError("residuals implemented for m in (1, 2)")
    if dx is None:
        raise ValueError("dx is required for field residuals")

    u = np.stack([s.u for s in traj])  # (T, n, K)
    M = np.stack([s.M for s in traj])
    P = np.stack([s.P for s in traj])
    t = np.array([s.t for s in traj])
    x = traj[0].x
    T, _, K = u.shape
    interior = slice(1, T - 1)

    b = {"x1": t[interior, None] * np.ones((1, K)), "x2": np.broadcast_to(x, (T - 2, K))}
    for a in range(n):
        b[chart.u_names[a]] = u[interior, a]
        b[chart.p_name(1, a + 1)] = M[interior, a]
        b[chart.p_name(2, a + 1)] = P[interior, a]

    du_dt = (u[2:] - u[:-2]) / (2.0 * dt)
    dM_dt = (M[2:] - M[:-2]) / (2.0 * dt)
    res_ut, res_ux, res_m = [], [], []
    for a in range(n):
        dH_dM = np.broadcast_to(h.H.diff(chart.p_name(1, a + 1)).eval_many(b), (T - 2, K))
        dH_dP = np.broadcast_to(h.H.diff(chart.p_name(2, a + 1)).eval_many(b), (T - 2, K))
        dH_du = np.broadcast_to(h.H.diff(chart.u_names[a]).eval_many(b), (T - 2, K))
        du_dx = _ddx(u[interior, a], dx, boundary)
        dP_dx = _ddx(P[interior, a], dx, boundary)
        res_ut.append(du_dt[:, a] - dH_dM)
        res_ux.append(du_dx - dH_dP)
        res_m.append(dM_dt[:, a] + dP_dx + dH_du)
    if boundary == "dirichlet":
        res_ut = [r[:, 2:-2] for r in res_ut]
        res_ux = [r[:, 2:-2] for r in res_ux]
        res_m = [r[:, 2:-2] for r in res_m]
    return {"evolution_u": norms(np.stack(res_ut)),
            "constraint_P": norms(np.stack(res_ux)),
            "evolution_M": norms(np.stack(res_m))}


# ---------------------------------------------------------------------------
# Abelian gauge field in temporal gauge (1+1-D)


def evolve_ym_abelian(E0: np.ndarray, u0: np.ndarray,
                      config: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """Temporal-gauge evolution of the 1+1-D abelian gauge field.

    State: spatial potential u_x(x) and the single momentum component
    E(x).  The momentum equation forces dE/dt = 0 and the curvature
    relation gives du_x/dt = -E/2.  Returns arrays shaped for
    :func:`models.ym_residual`: gauge field (T, K, 1, 2) and momentum
    (T, K, 1).
    """
    E = np.asarray(E0, dtype=float).copy()
    ux = np.asarray(u0, dtype=float).copy()
    K = E.shape[0]
    steps = int(round(config.t_final / config.dt))
    dt = config.dt
    u_traj = np.zeros((steps + 1, K, 1, 2))
    pi_traj = np.zeros((steps + 1, K, 1))
    u_traj[0, :, 0, 1] = ux
    pi_traj[0, :, 0] = E
    for s in range(steps):
        # RK4 on du/dt = -E/2, dE/dt = 0 (stages coincide; E is frozen)
        ux = ux + dt * (-0.5 * E)
        u_traj[s + 1, :, 0, 1] = ux
        pi_traj[s + 1, :, 0] = E
    return u_traj, pi_traj
