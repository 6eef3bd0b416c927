"""Lagrangian systems, scaling structures and the validators for their standing hypotheses.

A scaling structure on a chart of ``Q`` consists of

* an action ``psi(s, q)`` of the multiplicative group of positive reals,
* a scaling function ``f > 0`` with ``f(psi(s, q)) = s * f(q)``,
* the projection ``pi: Q -> Q/R+`` in an explicit quotient chart,
* the inverse ``triv_inv(x, sigma)`` of the trivialization ``q -> (pi(q), f(q))``,
* optionally the infinitesimal generator of ``psi``.

Residuals are reported relative to ``1 + |reference|`` so that zero-valued references
(e.g. ``L = 0``) are compared absolutely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import qmc

from homlag import diffkit as dk
from homlag.errors import ChartViolation, DimensionError


def columns(arr):
    """Split a ``(..., n)`` array into its ``n`` coordinate arrays (lists pass through)."""
    if isinstance(arr, np.ndarray):
        return [arr[..., k] for k in range(arr.shape[-1])]
    return list(arr)


def stack(cols):
    return np.stack(np.broadcast_arrays(*[np.asarray(c, dtype=float) for c in cols]), axis=-1)


@dataclass(frozen=True)
class LagrangianSystem:
    dim: int
    L: dk.ScalarField

    def __post_init__(self):
        if self.L.arity != 2 * self.dim:
            raise DimensionError(f"Lagrangian arity {self.L.arity} != 2*dim = {2 * self.dim}")

    def __call__(self, q, v):
        return self.L(*columns(q), *columns(v))


@dataclass(frozen=True)
class ScalingSystem:
    ambient_dim: int
    base_dim: int
    psi: dk.VectorMap
    f: dk.ScalarField
    pi: dk.VectorMap
    triv_inv: dk.VectorMap
    generator: Optional[dk.VectorMap] = None

    def __post_init__(self):
        n, k = self.ambient_dim, self.base_dim
        if k != n - 1:
            raise DimensionError(f"base_dim must be ambient_dim - 1, got {k} for n = {n}")
        expected = {
            "psi": (self.psi.arity, self.psi.dim_out, n + 1, n),
            "f": (self.f.arity, 1, n, 1),
            "pi": (self.pi.arity, self.pi.dim_out, n, k),
            "triv_inv": (self.triv_inv.arity, self.triv_inv.dim_out, n, n),
        }
        if self.generator is not None:
            expected["generator"] = (self.generator.arity, self.generator.dim_out, n, n)
        for name, (a, o, ea, eo) in expected.items():
            if (a, o) != (ea, eo):
                raise DimensionError(f"{name} has signature {a}->{o}, expected {ea}->{eo}")

    def scaling(self, q) -> np.ndarray:
        """``f(q)`` on real samples, raising if the chart is left."""
        val = np.asarray(self.f(*columns(np.asarray(q, dtype=float))), dtype=float)
        if np.any(~np.isfinite(val)) or np.any(val <= 0.0):
            raise ChartViolation("scaling function is not strictly positive at the sampled points")
        return val

    def act(self, s, q) -> np.ndarray:
        return stack(self.psi(s, *columns(np.asarray(q, dtype=float))))

    def project(self, q) -> np.ndarray:
        return stack(self.pi(*columns(np.asarray(q, dtype=float))))

    def lift(self, x, sigma) -> np.ndarray:
        return stack(self.triv_inv(*columns(np.asarray(x, dtype=float)), sigma))


@dataclass(frozen=True)
class SamplingBox:
    lower: tuple
    upper: tuple
    count: int = 64
    seed: int = 0
    speed: float = 1.0

    def __post_init__(self):
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionError("lower and upper must be vectors of equal length")
        if np.any(lo >= hi):
            raise ValueError("sampling box needs lower < upper componentwise")
        if self.count < 1:
            raise ValueError("sampling box needs count >= 1")

    @property
    def dim(self) -> int:
        return len(self.lower)

    def unit(self, extra: int = 0) -> np.ndarray:
        """Deterministic scrambled Halton points in ``[0, 1)^(dim + extra)``."""
        sampler = qmc.Halton(d=self.dim + extra, scramble=True, seed=self.seed)
        return sampler.random(self.count)

    def states(self):
        """Seeded samples ``(q, v, s)``: q in the box, v in ``[-speed, speed]^n``, s log-uniform in [0.1, 10]."""
        n = self.dim
        u = self.unit(extra=n + 1)
        lo, hi = np.asarray(self.lower, float), np.asarray(self.upper, float)
        q = lo + (hi - lo) * u[:, :n]
        v = self.speed * (2.0 * u[:, n : 2 * n] - 1.0)
        s = 10.0 ** (2.0 * u[:, 2 * n] - 1.0)
        return q, v, s


@dataclass
class ValidationReport:
    name: str
    max_abs: float
    max_rel: float
    worst_point: list
    tolerance: float
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(self.max_rel <= self.tolerance)

    def to_dict(self) -> dict:
        return {
            "check": self.name,
            "max_abs": self.max_abs,
            "max_rel": self.max_rel,
            "worst_point": self.worst_point,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def _report(name, residual, reference, samples, tolerance) -> ValidationReport:
    residual = np.abs(np.asarray(residual, dtype=float))
    reference = np.abs(np.asarray(reference, dtype=float))
    if residual.ndim > 1:
        reference = np.broadcast_to(reference, residual.shape)
        residual, reference = residual.max(axis=-1), reference.max(axis=-1)
    rel = residual / (1.0 + reference)
    if not np.all(np.isfinite(rel)):
        rel = np.where(np.isfinite(rel), rel, np.inf)
    worst = int(np.argmax(rel))
    return ValidationReport(
        name,
        float(np.max(residual)),
        float(rel[worst]),
        [float(c) for c in np.atleast_1d(samples[worst])],
        tolerance,
    )


def tangent_lift(sys: ScalingSystem, s, q, v) -> np.ndarray:
    """``(psi_s)_* v`` at ``q``: the Jacobian of ``q -> psi(s, q)`` applied to ``v``.

    ``q`` and ``v`` may carry a leading batch axis, with ``s`` scalar or per-sample.
    """
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(np.asarray(s) <= 0.0):
        raise ChartViolation("group element must be positive")
    sys.scaling(q)
    at_s = dk.VectorMap(sys.ambient_dim, sys.ambient_dim, lambda *qs: sys.psi(s, *qs))
    jac = dk.jacobian(at_s, q)
    return np.einsum("...ij,...j->...i", jac, v)


def check_homogeneity(
    L: LagrangianSystem, sys: ScalingSystem, box: SamplingBox, tolerance: float = 1e-9, scales=None
) -> ValidationReport:
    """Degree-one homogeneity ``L(psi_s q, (psi_s)_* v) = s L(q, v)`` on seeded samples."""
    if L.dim != sys.ambient_dim or box.dim != sys.ambient_dim:
        raise DimensionError("Lagrangian, scaling system and box dimensions differ")
    q, v, s = box.states()
    if scales is not None:
        s = np.broadcast_to(np.asarray(scales, dtype=float), s.shape)
    moved = sys.act(s, q)
    lifted = tangent_lift(sys, s, q, v)
    lhs = np.asarray(L(moved, lifted), dtype=float)
    rhs = s * np.asarray(L(q, v), dtype=float)
    lhs, rhs = np.broadcast_arrays(lhs, rhs)
    return _report(
        "homogeneity", lhs - rhs, rhs, np.column_stack([q, v, s]), tolerance
    )


def check_scaling_structure(
    sys: ScalingSystem, box: SamplingBox, tolerance: float = 1e-9, scales=None
) -> list:
    """One report per standing hypothesis of the scaling structure."""
    if box.dim != sys.ambient_dim:
        raise DimensionError("sampling box dimension differs from the ambient dimension")
    q, _, s = box.states()
    if scales is not None:
        s = np.broadcast_to(np.asarray(scales, dtype=float), s.shape)
    points = np.column_stack([q, s])
    f_raw = np.broadcast_to(np.asarray(sys.f(*columns(q)), dtype=float), s.shape)
    positive = _report(
        "scaling-positivity", np.where(f_raw > 0.0, 0.0, 1.0 + np.abs(f_raw)), 0.0, points, tolerance
    )
    if not positive.passed:
        return [positive]
    fq = f_raw
    moved = sys.act(s, q)
    reports = [positive]
    f_moved = np.asarray(sys.f(*columns(moved)), dtype=float)
    reports.append(_report("scaling-function", f_moved - s * fq, s * fq, points, tolerance))
    x = sys.project(q)
    reports.append(
        _report("projection-invariance", sys.project(moved) - x, x, points, tolerance)
    )
    sigma = s * fq
    q_lift = sys.lift(x, sigma)
    back = np.column_stack([sys.project(q_lift), np.asarray(sys.f(*columns(q_lift)), dtype=float)])
    target = np.column_stack([x, sigma])
    reports.append(
        _report("trivialization-inverse", back - target, target, points, tolerance)
    )
    formula = sys.act(sigma / fq, q)
    reports.append(
        _report("trivialization-formula", q_lift - formula, formula, points, tolerance)
    )
    if sys.generator is not None:
        gen = np.asarray(stack(sys.generator(*columns(q))))
        _, df = dk.pushforward(sys.f, columns(q), columns(gen))
        reports.append(_report("generator-euler", np.asarray(df) - fq, fq, points, tolerance))
    return reports
