"""Uniform-grid quadrature: Simpson when the interval count is even, trapezoid otherwise."""

import numpy as np
from scipy import integrate


def method_for(n_points: int) -> str:
    return "simpson" if n_points >= 3 and (n_points - 1) % 2 == 0 else "trapezoid"


def integrate_uniform(values, dt: float, method: str = "auto") -> float:
    values = np.asarray(values, dtype=float)
    method = method_for(len(values)) if method == "auto" else method
    if method == "simpson":
        return float(integrate.simpson(values, dx=dt, axis=0))
    return float(integrate.trapezoid(values, dx=dt, axis=0))


def cumulative(values, dt: float, method: str = "auto") -> np.ndarray:
    """Running integral ``Y[i] = int_0^{t_i}`` with ``Y[0] = 0``."""
    values = np.asarray(values, dtype=float)
    method = method_for(len(values)) if method == "auto" else method
    if len(values) < 2:
        return np.zeros_like(values)
    if method == "simpson":
        return integrate.cumulative_simpson(values, dx=dt, initial=0.0)
    return integrate.cumulative_trapezoid(values, dx=dt, initial=0.0)
