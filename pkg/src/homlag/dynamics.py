"""Rate assembly, RK4 integration and residual evaluation for the four ODE families.

* Euler-Lagrange for ``L(q, qdot)``.
* Scaling Lagrange-Poincare for ``ell(x, xdot, y)``:
  ``d/dt ell_xdot + y ell_xdot - ell_x = 0``, ``d/dt ell_y + y ell_y - ell = 0``.
* Standard abelian Lagrange-Poincare: ``d/dt ell_xdot - ell_x = 0``, ``d/dt ell_y = 0``.
* Herglotz for ``Lh(x, xdot, y)``:
  ``-d/dt Lh_xdot + Lh_y Lh_xdot + Lh_x = 0``, ``ydot = Lh``.

Covariant derivatives are ordinary time derivatives in the flat charts used throughout.
Rate forms need an invertible velocity block; residual forms work for any Lagrangian and
difference momenta with second-order stencils (one-sided at the endpoints).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from homlag import diffkit as dk
from homlag import quadrature
from homlag.errors import ReducedRegularityError, SingularLagrangianError
from homlag.reduction import ReducedLagrangian, ReducedTrajectory, Trajectory, uniform_grid
from homlag.systems import LagrangianSystem, columns, stack

COND_LIMIT = 1e12


@dataclass(frozen=True)
class IntegratorConfig:
    steps: int
    horizon: float
    method: str = "rk4"

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.horizon > 0.0:
            raise ValueError("horizon must be positive")
        if self.method != "rk4":
            raise ValueError(f"unsupported method {self.method!r}; only fixed-step rk4")

    @property
    def dt(self) -> float:
        return self.horizon / self.steps

    def grid(self) -> np.ndarray:
        return uniform_grid(self.steps, self.horizon)


@dataclass(frozen=True)
class HerglotzLagrangian:
    base_dim: int
    Lhat: dk.ScalarField

    def __post_init__(self):
        if self.Lhat.arity != 2 * self.base_dim + 1:
            raise ValueError(f"Herglotz Lagrangian arity must be {2 * self.base_dim + 1}")

    def __call__(self, x, xdot, y):
        return self.Lhat(*columns(x), *columns(xdot), y)


def _solve(matrix, rhs, error_cls, what):
    cond = np.linalg.cond(matrix) if matrix.size else np.inf
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise error_cls(f"{what} is singular (condition estimate {cond:.3e})", condition=cond)
    return np.linalg.solve(matrix, rhs)


def rk4(rhs: Callable, state0, dt: float, steps: int, t0: float = 0.0) -> np.ndarray:
    """Classical fixed-step RK4; ``dt`` may be negative.  Returns all ``steps + 1`` states."""
    out = np.empty((steps + 1, len(state0)))
    out[0] = state = np.asarray(state0, dtype=float)
    t = t0
    for i in range(steps):
        try:
            k1 = rhs(t, state)
            k2 = rhs(t + 0.5 * dt, state + 0.5 * dt * k1)
            k3 = rhs(t + 0.5 * dt, state + 0.5 * dt * k2)
            k4 = rhs(t + dt, state + dt * k3)
        except SingularLagrangianError as exc:
            exc.time = t
            exc.args = (f"{exc.args[0]} at t = {t:.6g}",)
            raise
        state = state + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[i + 1] = state
        t = t0 + (i + 1) * dt
    return out


def el_acceleration(L: LagrangianSystem, q, qdot) -> np.ndarray:
    """Solve ``M qddot = dL/dq - (d2L/dqdot dq) qdot`` with ``M = d2L/dqdot2``."""
    n = L.dim
    q = np.asarray(q, dtype=float)
    qdot = np.asarray(qdot, dtype=float)
    _, g, h = dk.value_grad_hess(L.L, np.concatenate([q, qdot]))
    mass = h[n:, n:]
    rhs = g[:n] - h[n:, :n] @ qdot
    return _solve(mass, rhs, SingularLagrangianError, "mass matrix d2L/dqdot2")


def integrate_el(L: LagrangianSystem, q0, v0, cfg: IntegratorConfig) -> Trajectory:
    n = L.dim

    def rhs(t, s):
        return np.concatenate([s[n:], el_acceleration(L, s[:n], s[n:])])

    states = rk4(rhs, np.concatenate([np.asarray(q0, float), np.asarray(v0, float)]), cfg.dt, cfg.steps)
    return Trajectory(cfg.grid(), states[:, :n], states[:, n:])


def _time_derivative(values, dt):
    return np.gradient(values, dt, axis=0, edge_order=2)


def el_residual(L: LagrangianSystem, g: Trajectory) -> np.ndarray:
    """Per-sample ``d/dt dL/dqdot - dL/dq`` along a sampled curve."""
    n = L.dim
    grad = dk.gradient(L.L, np.column_stack([g.q, g.qdot]))
    return _time_derivative(grad[:, n:], g.dt) - grad[:, :n]


def _reduced_parts(field: dk.ScalarField, x, xdot, y):
    z = np.concatenate([np.atleast_1d(np.asarray(x, float)), np.atleast_1d(np.asarray(xdot, float)), [float(y)]])
    k = (field.arity - 1) // 2
    val, g, h = dk.value_grad_hess(field, z)
    return k, float(y), np.atleast_1d(np.asarray(xdot, float)), float(val), g, h


def _block_solve(k, h, rhs_x, rhs_y, error_cls, what):
    block = h[k:, k:]
    sol = _solve(block, np.concatenate([rhs_x, [rhs_y]]), error_cls, what)
    return sol[:k], float(sol[k])


def slp_rates(ell: ReducedLagrangian, x, xdot, y):
    """``(xddot, ydot)`` from the expanded scaling Lagrange-Poincare equations."""
    k, y, xd, val, g, h = _reduced_parts(ell.ell, x, xdot, y)
    rhs_x = g[:k] - h[k : 2 * k, :k] @ xd - y * g[k : 2 * k]
    rhs_y = val - h[2 * k, :k] @ xd - y * g[2 * k]
    return _block_solve(k, h, rhs_x, rhs_y, ReducedRegularityError, "reduced block matrix [ell_xdot, ell_y] Hessian")


def std_lp_rates(ell: ReducedLagrangian, x, xdot, y):
    """``(xddot, ydot)`` for the standard abelian Lagrange-Poincare equations."""
    k, y, xd, val, g, h = _reduced_parts(ell.ell, x, xdot, y)
    rhs_x = g[:k] - h[k : 2 * k, :k] @ xd
    rhs_y = -h[2 * k, :k] @ xd
    return _block_solve(k, h, rhs_x, rhs_y, ReducedRegularityError, "reduced block matrix [ell_xdot, ell_y] Hessian")


def _integrate_reduced(rates, field_holder, x0, xdot0, y0, cfg, sigma):
    x0 = np.atleast_1d(np.asarray(x0, float))
    k = len(x0)

    def rhs(t, s):
        xdd, yd = rates(field_holder, s[:k], s[k : 2 * k], s[2 * k])
        return np.concatenate([s[k : 2 * k], xdd, [yd]])

    state0 = np.concatenate([x0, np.atleast_1d(np.asarray(xdot0, float)), [float(y0)]])
    states = rk4(rhs, state0, cfg.dt, cfg.steps)
    return ReducedTrajectory(cfg.grid(), states[:, :k], states[:, k : 2 * k], states[:, 2 * k], sigma)


def integrate_slp(ell: ReducedLagrangian, x0, xdot0, y0, cfg: IntegratorConfig, sigma: float = 1.0):
    return _integrate_reduced(slp_rates, ell, x0, xdot0, y0, cfg, sigma)


def integrate_std_lp(ell: ReducedLagrangian, x0, xdot0, y0, cfg: IntegratorConfig, sigma: float = 1.0):
    return _integrate_reduced(std_lp_rates, ell, x0, xdot0, y0, cfg, sigma)


def _reduced_derivatives(field: dk.ScalarField, r: ReducedTrajectory):
    z = np.column_stack([r.x, r.xdot, r.y])
    grad = dk.gradient(field, z)
    val = np.broadcast_to(np.asarray(field(*columns(z)), dtype=float), r.y.shape)
    return r.dim, val, grad


def slp_residual(ell: ReducedLagrangian, r: ReducedTrajectory):
    """Residuals ``-d/dt ell_xdot - y ell_xdot + ell_x`` and ``-d/dt ell_y - y ell_y + ell``."""
    k, val, g = _reduced_derivatives(ell.ell, r)
    px, py = g[:, k : 2 * k], g[:, 2 * k]
    horizontal = -_time_derivative(px, r.dt) - r.y[:, None] * px + g[:, :k]
    vertical = -_time_derivative(py, r.dt) - r.y * py + val
    return horizontal, vertical


def std_lp_residual(ell: ReducedLagrangian, r: ReducedTrajectory):
    """Residuals ``-d/dt ell_xdot + ell_x`` and ``-d/dt ell_y``."""
    k, _, g = _reduced_derivatives(ell.ell, r)
    horizontal = -_time_derivative(g[:, k : 2 * k], r.dt) + g[:, :k]
    vertical = -_time_derivative(g[:, 2 * k], r.dt)
    return horizontal, vertical


def standard_reconstruct(
    y, lift: Trajectory, g0: float, psi: dk.VectorMap, group: str = "multiplicative"
) -> Trajectory:
    """``gamma(t) = psi(g(t), h(t))`` with ``g = g0 * exp(int y)`` (or ``g0 + int y`` additively).

    ``psi`` takes the group element first, then the configuration coordinates.
    """
    y = np.asarray(y, dtype=float)
    integral = quadrature.cumulative(y, lift.dt)
    if group == "multiplicative":
        g = g0 * np.exp(integral)
        gdot = g * y
    elif group == "additive":
        g = g0 + integral
        gdot = y
    else:
        raise ValueError(f"unknown group tag {group!r}")
    gamma, gamma_dot = dk.pushforward(psi, [g, *columns(lift.q)], [gdot, *columns(lift.qdot)])
    return Trajectory(lift.times, stack(gamma), stack(gamma_dot))


def herglotz_rates(Lh: HerglotzLagrangian, x, xdot, y):
    """``ydot = Lh`` exactly; ``xddot`` from the expanded momentum equation."""
    k, y, xd, val, g, h = _reduced_parts(Lh.Lhat, x, xdot, y)
    px = g[k : 2 * k]
    rhs = g[:k] + g[2 * k] * px - h[k : 2 * k, :k] @ xd - h[k : 2 * k, 2 * k] * val
    xdd = _solve(h[k : 2 * k, k : 2 * k], rhs, SingularLagrangianError, "d2Lh/dxdot2")
    return xdd, val


def integrate_herglotz(Lh: HerglotzLagrangian, x0, xdot0, y0, cfg: IntegratorConfig):
    return _integrate_reduced(herglotz_rates, Lh, x0, xdot0, y0, cfg, 1.0)


def herglotz_residual(Lh: HerglotzLagrangian, r: ReducedTrajectory):
    """Per-sample residuals ``-d/dt Lh_xdot + Lh_y Lh_xdot + Lh_x`` and ``Lh - ydot``."""
    k, val, g = _reduced_derivatives(Lh.Lhat, r)
    px = g[:, k : 2 * k]
    momentum = -_time_derivative(px, r.dt) + g[:, 2 * k, None] * px + g[:, :k]
    action = val - _time_derivative(r.y, r.dt)
    return momentum, action
