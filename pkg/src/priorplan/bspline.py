"""Clamped uniform B-spline through a waypoint control polygon."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline


def clamped_knots(n_ctrl: int, degree: int) -> np.ndarray:
    inner = np.linspace(0.0, 1.0, n_ctrl - degree + 1)[1:-1]
    return np.concatenate([np.zeros(degree + 1), inner, np.ones(degree + 1)])


@dataclass
class Trajectory:
    control_points: np.ndarray  # (L, n)
    knots: np.ndarray
    degree: int
    samples: np.ndarray  # dense curve points, (S, n)

    def __post_init__(self):
        self._spline = BSpline(self.knots, self.control_points, self.degree, extrapolate=False)

    def __call__(self, u) -> np.ndarray:
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        return self._spline(u)

    def derivative(self, order: int = 1) -> BSpline:
        return self._spline.derivative(order)


def fit_bspline(waypoints, spline_samples: int = 20) -> Trajectory:
    """Cubic where possible; 2 or 3 waypoints fall back to degree 1 or 2."""
    ctrl = np.asarray(waypoints, dtype=float)
    if ctrl.ndim != 2 or len(ctrl) < 2:
        raise ValueError("need at least 2 waypoints for a spline")
    if spline_samples < 1:
        raise ValueError("spline_samples must be at least 1")
    degree = min(3, len(ctrl) - 1)
    knots = clamped_knots(len(ctrl), degree)
    spans = len(ctrl) - degree
    traj = Trajectory(ctrl.copy(), knots, degree, np.empty((0, ctrl.shape[1])))
    u = np.linspace(0.0, 1.0, spans * spline_samples + 1)
    traj.samples = traj(u)
    return traj
