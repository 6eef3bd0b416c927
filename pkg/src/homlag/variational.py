"""Discrete actions, admissible variations and first-variation probes.

Three functionals on uniform grids:

* full action ``A(gamma) = int L(gamma, gamma')``,
* scaling-reduced action ``int exp(int_0^t y) ell(x, xdot, y) dt``,
* standard reduced action ``int ell(x, xdot, y) dt``.

For interrelated data ``A(gamma) = sigma * Ared(x, y)`` holds for every curve, critical or not.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from homlag import quadrature
from homlag.errors import NumericError
from homlag.reduction import (
    ReducedLagrangian,
    ReducedTrajectory,
    Trajectory,
    project_trajectory,
    reduce_lagrangian,
)
from homlag.systems import LagrangianSystem, ScalingSystem

HAMILTON = "hamilton"
REDUCED = "reduced"


@dataclass(frozen=True)
class ActionValue:
    value: float
    method: str
    grid_size: int

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise NumericError("action value is not finite")


@dataclass
class VariationField:
    """Variation on a grid; ``delta`` is delta-gamma (hamilton) or delta-x (reduced).

    ``delta_dot`` is the exact time derivative of ``delta``; ``dy`` holds delta-y for the
    reduced class.
    """

    times: np.ndarray
    delta: np.ndarray
    delta_dot: np.ndarray
    kind: str
    dy: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in (HAMILTON, REDUCED):
            raise ValueError(f"unknown variation class {self.kind!r}")
        if self.kind == REDUCED and self.dy is None:
            raise ValueError("reduced variations need delta-y")

    def endpoint_defect(self) -> float:
        return float(max(np.max(np.abs(self.delta[0])), np.max(np.abs(self.delta[-1]))))

    def dy_integral(self) -> float:
        dt = self.times[1] - self.times[0]
        return quadrature.integrate_uniform(self.dy, dt) if self.dy is not None else 0.0

    def _combine(self, a, other, b):
        if other.kind != self.kind:
            raise ValueError("cannot combine variations of different classes")
        return VariationField(
            self.times,
            a * self.delta + b * other.delta,
            a * self.delta_dot + b * other.delta_dot,
            self.kind,
            None if self.dy is None else a * self.dy + b * other.dy,
        )

    def __add__(self, other):
        return self._combine(1.0, other, 1.0)

    def __mul__(self, a):
        return VariationField(
            self.times, a * self.delta, a * self.delta_dot, self.kind,
            None if self.dy is None else a * self.dy,
        )

    __rmul__ = __mul__


def action_full(L: LagrangianSystem, g: Trajectory, method: str = "auto") -> ActionValue:
    integrand = np.broadcast_to(np.asarray(L(g.q, g.qdot), dtype=float), g.times.shape)
    method = quadrature.method_for(len(g.times)) if method == "auto" else method
    return ActionValue(quadrature.integrate_uniform(integrand, g.dt, method), method, len(g.times) - 1)


def _reduced_integrand(ell: ReducedLagrangian, r: ReducedTrajectory):
    return np.broadcast_to(np.asarray(ell(r.x, r.xdot, r.y), dtype=float), r.y.shape)


def action_reduced(ell: ReducedLagrangian, r: ReducedTrajectory, method: str = "auto") -> ActionValue:
    method = quadrature.method_for(len(r.times)) if method == "auto" else method
    growth = np.exp(quadrature.cumulative(r.y, r.dt, method))
    value = quadrature.integrate_uniform(growth * _reduced_integrand(ell, r), r.dt, method)
    return ActionValue(value, method, len(r.times) - 1)


def action_standard_reduced(ell: ReducedLagrangian, r: ReducedTrajectory, method: str = "auto") -> ActionValue:
    method = quadrature.method_for(len(r.times)) if method == "auto" else method
    value = quadrature.integrate_uniform(_reduced_integrand(ell, r), r.dt, method)
    return ActionValue(value, method, len(r.times) - 1)


def _bump(times, rng, dim, modes):
    """Random sine series vanishing at both ends, with its exact derivative."""
    tau = times[-1] - times[0]
    s = times - times[0]
    k = np.arange(1, modes + 1)
    coeff = rng.standard_normal((modes, dim)) / k[:, None]
    phase = np.outer(s, k) * (np.pi / tau)
    value = np.sin(phase) @ coeff
    deriv = (np.cos(phase) * (k * np.pi / tau)) @ coeff
    value[0] = value[-1] = 0.0
    return value, deriv


def sample_variation(kind: str, times, seed: int, dim: int = 1, modes: int = 4) -> VariationField:
    """Seeded admissible variation.

    Hamilton class: endpoint-vanishing smooth field.  Reduced class: endpoint-vanishing
    delta-x and delta-y = d(eta)/dt for an endpoint-vanishing eta, so delta-y integrates
    to zero.
    """
    times = np.asarray(times, dtype=float)
    if len(times) < 4:
        raise ValueError("variation grid needs at least 4 samples")
    rng = np.random.default_rng(seed)
    delta, delta_dot = _bump(times, rng, dim, modes)
    if kind == HAMILTON:
        return VariationField(times, delta, delta_dot, HAMILTON)
    if kind == REDUCED:
        _, eta_dot = _bump(times, rng, 1, modes)
        return VariationField(times, delta, delta_dot, REDUCED, eta_dot[:, 0])
    raise ValueError(f"unknown variation class {kind!r}")


def perturb(base, v: VariationField, h: float):
    if v.kind == HAMILTON:
        return Trajectory(base.times, base.q + h * v.delta, base.qdot + h * v.delta_dot)
    return ReducedTrajectory(
        base.times, base.x + h * v.delta, base.xdot + h * v.delta_dot, base.y + h * v.dy, base.sigma
    )


def first_variation(kind: str, system, base, v: VariationField, h: float = 1e-5) -> float:
    """Central difference ``(F[c + h v] - F[c - h v]) / 2h`` for the matching functional."""
    if v.kind != kind:
        raise ValueError(f"variation class {v.kind!r} does not match functional {kind!r}")
    if h <= 0.0:
        raise ValueError("h must be positive")
    functional = action_full if kind == HAMILTON else action_reduced
    plus = functional(system, perturb(base, v, h)).value
    minus = functional(system, perturb(base, v, -h)).value
    result = (plus - minus) / (2.0 * h)
    if not np.isfinite(result):
        raise NumericError("first variation is not finite")
    return result


def criticality_report(kind, system, base, seeds, h: float = 1e-5, rel_tol: float = 1e-6) -> dict:
    """First variations over seeded admissible fields, judged against ``rel_tol * (1 + |F|)``."""
    functional = action_full if kind == HAMILTON else action_reduced
    action = functional(system, base).value
    dim = base.dim
    values = [
        first_variation(kind, system, base, sample_variation(kind, base.times, s, dim), h)
        for s in seeds
    ]
    bound = rel_tol * (1.0 + abs(action))
    worst = float(np.max(np.abs(values))) if values else 0.0
    return {
        "kind": kind,
        "action": action,
        "h": h,
        "seeds": list(seeds),
        "first_variations": [float(x) for x in values],
        "max_abs": worst,
        "tolerance": bound,
        "critical": bool(worst <= bound),
    }


@dataclass
class ProportionalityReport:
    action: float
    sigma: float
    reduced_action: float
    discrepancy: float
    relative: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def proportionality_check(L: LagrangianSystem, sys: ScalingSystem, g: Trajectory, ell=None) -> ProportionalityReport:
    """Compare ``A(gamma)`` with ``sigma * Ared(project(gamma))``, each computed independently."""
    ell = ell or reduce_lagrangian(L, sys)
    full = action_full(L, g).value
    r = project_trajectory(sys, g)
    red = action_reduced(ell, r).value
    gap = abs(full - r.sigma * red)
    return ProportionalityReport(full, r.sigma, red, gap, gap / (1.0 + abs(full)))
