"""Atiyah map for the scaling case, reduced Lagrangians, and trajectory projection/reconstruction.

With the flat connection ``d ln f`` the quotient ``TQ/R+`` is identified with
``T(Q/R+) x R`` by ``v_q -> (pi_* v, df(v)/f(q))``.  A full curve ``gamma`` and its reduced
data ``(x, y, sigma)`` are related by

    x = pi(gamma),  y = d ln f(gamma'),  sigma = f(gamma(0)),
    gamma(t) = psi(exp(int_0^t y), triv_inv(x(t), sigma)).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from homlag import diffkit as dk
from homlag import quadrature
from homlag.errors import ChartViolation, DimensionError
from homlag.systems import LagrangianSystem, ScalingSystem, columns, stack


def _check_grid(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) < 2:
        raise DimensionError("time grid needs at least two samples")
    steps = np.diff(times)
    if np.any(steps <= 0.0):
        raise ValueError("time grid must be strictly increasing")
    if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise ValueError("time grid must be uniform")
    return times


def uniform_grid(steps: int, horizon: float, start: float = 0.0) -> np.ndarray:
    return start + (horizon / steps) * np.arange(steps + 1)


@dataclass
class Trajectory:
    times: np.ndarray
    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        self.times = _check_grid(self.times)
        self.q = np.atleast_2d(np.asarray(self.q, dtype=float).T).T
        self.qdot = np.atleast_2d(np.asarray(self.qdot, dtype=float).T).T
        if self.q.shape != self.qdot.shape or len(self.q) != len(self.times):
            raise DimensionError("q, qdot and times have inconsistent shapes")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def dim(self) -> int:
        return self.q.shape[1]

    def header(self, names=None):
        names = names or [f"q{i + 1}" for i in range(self.dim)]
        return ["t", *names, *[f"{n}dot" for n in names]]

    def rows(self):
        return np.column_stack([self.times, self.q, self.qdot])

    def to_csv(self, path=None, names=None, meta: Optional[dict] = None) -> str:
        return _write_csv(path, self.header(names), self.rows(), meta or {})

    @classmethod
    def from_csv(cls, source):
        _, data = _read_csv(source)
        n = (data.shape[1] - 1) // 2
        return cls(data[:, 0], data[:, 1 : 1 + n], data[:, 1 + n :])

    def to_json(self) -> str:
        return json.dumps(
            {"times": self.times.tolist(), "q": self.q.tolist(), "qdot": self.qdot.tolist()}
        )

    @classmethod
    def from_json(cls, text: str):
        d = json.loads(text)
        return cls(np.array(d["times"]), np.array(d["q"]), np.array(d["qdot"]))


@dataclass
class ReducedTrajectory:
    times: np.ndarray
    x: np.ndarray
    xdot: np.ndarray
    y: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        self.times = _check_grid(self.times)
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float).T).T
        self.xdot = np.atleast_2d(np.asarray(self.xdot, dtype=float).T).T
        self.y = np.asarray(self.y, dtype=float).reshape(-1)
        n = len(self.times)
        if self.x.shape != self.xdot.shape or len(self.x) != n or len(self.y) != n:
            raise DimensionError("x, xdot, y and times have inconsistent shapes")
        self.sigma = float(self.sigma)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def header(self, names=None):
        if names is None:
            names = ["x"] if self.dim == 1 else [f"x{i + 1}" for i in range(self.dim)]
        return ["t", *names, *[f"{n}dot" for n in names], "y"]

    def rows(self):
        return np.column_stack([self.times, self.x, self.xdot, self.y])

    def to_csv(self, path=None, names=None, meta: Optional[dict] = None) -> str:
        return _write_csv(path, self.header(names), self.rows(), {"sigma": self.sigma, **(meta or {})})

    @classmethod
    def from_csv(cls, source):
        meta, data = _read_csv(source)
        k = (data.shape[1] - 2) // 2
        return cls(
            data[:, 0], data[:, 1 : 1 + k], data[:, 1 + k : 1 + 2 * k], data[:, -1],
            float(meta.get("sigma", 1.0)),
        )

    def to_json(self) -> str:
        return json.dumps(
            {
                "times": self.times.tolist(),
                "x": self.x.tolist(),
                "xdot": self.xdot.tolist(),
                "y": self.y.tolist(),
                "sigma": self.sigma,
            }
        )

    @classmethod
    def from_json(cls, text: str):
        d = json.loads(text)
        return cls(np.array(d["times"]), np.array(d["x"]), np.array(d["xdot"]), np.array(d["y"]), d["sigma"])


def _write_csv(path, header, rows, meta) -> str:
    buf = io.StringIO()
    for key, value in meta.items():
        buf.write(f"# {key}={value!r}\n" if isinstance(value, float) else f"# {key}={value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def _read_csv(source):
    text = Path(source).read_text() if isinstance(source, Path) or (
        isinstance(source, str) and "\n" not in source
    ) else source
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            meta[key.strip()] = value.strip()
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))[1:]
    return meta, np.array(rows, dtype=float)


@dataclass(frozen=True)
class ReducedLagrangian:
    """``ell(x, xdot, y)`` on ``T(Q/R+) x R``; ``provenance`` is ``"derived"`` or ``"specified"``."""

    base_dim: int
    ell: dk.ScalarField
    provenance: str = "specified"
    source: Optional[tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.ell.arity != 2 * self.base_dim + 1:
            raise DimensionError(f"reduced Lagrangian arity must be {2 * self.base_dim + 1}")

    def __call__(self, x, xdot, y):
        return self.ell(*columns(x), *columns(xdot), y)


def atiyah_forward(sys: ScalingSystem, q, v):
    """``(x, xdot, y) = (pi(q), pi_* v, df(v)/f(q))``; batch axes allowed."""
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    fq = sys.scaling(q)
    x, xdot = dk.pushforward(sys.pi, columns(q), columns(v))
    _, df = dk.pushforward(sys.f, columns(q), columns(v))
    y = np.asarray(df, dtype=float) / fq
    xdot = np.broadcast_to(stack(xdot), np.shape(y) + (sys.base_dim,))
    return stack(x), np.array(xdot), y


def atiyah_inverse(sys: ScalingSystem, x, xdot, y, sigma):
    """Inverse of :func:`atiyah_forward` on the fiber ``f = sigma``.

    ``q = triv_inv(x, sigma)`` and ``v`` is the tangent map of ``triv_inv`` applied to
    ``(xdot, sigma * y)``, since ``df(v) = y * f`` fixes the fiber velocity.
    """
    if np.any(np.asarray(sigma) <= 0.0):
        raise ChartViolation("fiber constant sigma must be positive")
    x = np.asarray(x, dtype=float)
    xdot = np.asarray(xdot, dtype=float)
    q, v = dk.pushforward(
        sys.triv_inv, [*columns(x), sigma], [*columns(xdot), sigma * np.asarray(y, dtype=float)]
    )
    return stack(q), stack(v)


def reduce_lagrangian(L: LagrangianSystem, sys: ScalingSystem, representative: float = 1.0):
    """Reduced Lagrangian ``ell = L / f`` expressed on ``(x, xdot, y)``.

    Evaluated on the fiber ``f = representative``; by homogeneity every positive
    representative gives the same function.
    """
    if L.dim != sys.ambient_dim:
        raise DimensionError("Lagrangian and scaling system dimensions differ")
    k = sys.base_dim
    rep = float(representative)

    def ell(*args):
        x, xdot, y = args[:k], args[k : 2 * k], args[2 * k]
        q, v = dk.pushforward(sys.triv_inv, [*x, rep], [*xdot, rep * y])
        return L.L(*q, *v) / rep if rep != 1.0 else L.L(*q, *v)

    return ReducedLagrangian(k, dk.ScalarField(2 * k + 1, ell, "ell"), "derived", (L, sys))


def project_trajectory(sys: ScalingSystem, g: Trajectory) -> ReducedTrajectory:
    x, xdot, y = atiyah_forward(sys, g.q, g.qdot)
    sigma = float(sys.scaling(g.q[0]))
    return ReducedTrajectory(g.times, x, xdot, y, sigma)


def reconstruct_trajectory(sys: ScalingSystem, r: ReducedTrajectory, method: str = "auto") -> Trajectory:
    """Rebuild the full curve from ``(x, y, sigma)`` by one quadrature of ``y``.

    Velocities come from the chain rule through ``psi`` and ``triv_inv``, not differencing.
    """
    if r.sigma <= 0.0:
        raise ChartViolation("fiber constant sigma must be positive")
    growth = np.exp(quadrature.cumulative(r.y, r.dt, method))
    base, base_dot = dk.pushforward(
        sys.triv_inv, [*columns(r.x), r.sigma], [*columns(r.xdot), 0.0]
    )
    gamma, gamma_dot = dk.pushforward(
        sys.psi, [growth, *base], [growth * r.y, *base_dot]
    )
    return Trajectory(r.times, stack(gamma), stack(gamma_dot))
