"""Collision-free exemplar collection around a target configuration.

Draws come from an isotropic Gaussian whose standard deviation grows by 10%
after every attempt and falls back to its initial value once it passes the cap.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .collision import Scene, config_is_free, configs_are_free


@dataclass
class ExemplarParams:
    M: int = 500
    sigma_init: float = 0.0872
    sigma_max: float = 0.3491
    max_attempts: int | None = None  # None means 200 * M

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be at least 1")
        if not 0 < self.sigma_init <= self.sigma_max:
            raise ValueError("need 0 < sigma_init <= sigma_max")
        if self.max_attempts is None:
            self.max_attempts = 200 * self.M
        if self.max_attempts < self.M:
            raise ValueError("max_attempts must be at least M")


class ExemplarError(RuntimeError):
    pass


def next_sigma(sigma: float, sigma_init: float, sigma_max: float) -> float:
    return 1.1 * sigma if sigma <= sigma_max else sigma_init


def sigma_schedule(sigma_init: float, sigma_max: float) -> Iterator[float]:
    sigma = sigma_init
    while True:
        yield sigma
        sigma = next_sigma(sigma, sigma_init, sigma_max)


def collect_exemplars(scene: Scene, target, params: ExemplarParams | None = None,
                      rng: np.random.Generator | None = None) -> np.ndarray:
    """Return an (M, n) array of free, in-limit configurations near ``target``."""
    params = params or ExemplarParams()
    rng = np.random.default_rng() if rng is None else rng
    target = scene.robot.check_config(target)
    if not config_is_free(scene, target):
        raise ExemplarError("target configuration is in collision")
    lo, hi = scene.robot.limits[:, 0], scene.robot.limits[:, 1]
    schedule = sigma_schedule(params.sigma_init, params.sigma_max)

    kept = []
    n_kept = attempts = 0
    while n_kept < params.M:
        # attempts are drawn in batches; results are consumed in draw order
        batch = min(max(2 * (params.M - n_kept), 64), params.max_attempts - attempts)
        if batch <= 0:
            rate = n_kept / attempts
            raise ExemplarError(
                f"only {n_kept} of {params.M} exemplars after {attempts} attempts "
                f"(acceptance rate {rate:.4f})"
            )
        sigmas = np.array([next(schedule) for _ in range(batch)])
        Q = target + sigmas[:, None] * rng.standard_normal((batch, len(target)))
        ok = np.all((Q >= lo) & (Q <= hi), axis=1)
        ok[ok] = configs_are_free(scene, Q[ok])
        Q = Q[ok][: params.M - n_kept]
        kept.append(Q)
        n_kept += len(Q)
        attempts += batch
    return np.concatenate(kept)
