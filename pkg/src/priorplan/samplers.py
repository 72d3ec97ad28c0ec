"""Joint-space samplers used by the planner and the benchmark baselines."""

from __future__ import annotations

import numpy as np

SIGMA_FLOOR = 0.01  # rad


def _limits(limits) -> np.ndarray:
    lim = np.asarray(limits, dtype=float).reshape(-1, 2)
    if np.any(lim[:, 0] > lim[:, 1]):
        raise ValueError("limits need lo <= hi on every joint")
    return lim


def uniform_sampling(limits, rng: np.random.Generator) -> np.ndarray:
    lim = _limits(limits)
    return lim[:, 0] + rng.random(len(lim)) * (lim[:, 1] - lim[:, 0])


def goal_bias_sampling(limits, q_goal, p_goal: float, rng: np.random.Generator) -> np.ndarray:
    if not 0.0 <= p_goal <= 1.0:
        raise ValueError(f"p_goal must lie in [0, 1], got {p_goal}")
    lim = _limits(limits)
    # always draw both numbers so the stream does not depend on the branch taken
    u = rng.random()
    q = uniform_sampling(lim, rng)
    return np.array(q_goal, dtype=float) if u < p_goal else q


def progress_rate(D: float, d: float) -> float:
    if not D > 0:
        raise ValueError(f"D must be positive, got {D}")
    if d < 0:
        raise ValueError(f"d must be non-negative, got {d}")
    return min(max((D - d) / D, 0.0), 1.0)


def current_info_params(D: float, d: float, q_init, q_goal, sigma_floor: float = SIGMA_FLOOR):
    """Mean and isotropic standard deviation of the progress-driven Gaussian."""
    rate = progress_rate(D, d)
    q_init = np.asarray(q_init, dtype=float)
    mean = q_init + rate * (np.asarray(q_goal, dtype=float) - q_init)
    return mean, max(1.0 - rate, sigma_floor)


def current_info_sampling(D: float, d: float, q_init, q_goal, rng: np.random.Generator,
                          sigma_floor: float = SIGMA_FLOOR) -> np.ndarray:
    mean, sigma = current_info_params(D, d, q_init, q_goal, sigma_floor)
    return mean + sigma * rng.standard_normal(mean.shape)
