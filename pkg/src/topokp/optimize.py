"""Plain gradient descent on a pair of raw height maps under the detector loss.

No network, no optimizer state: maps are treated as free parameters with
identity correspondence, so the dynamics of the loss itself are visible.
With the similarity weight at zero the maps sprout as many high-persistence
peaks as the projection box allows; a positive weight couples the pair and
suppresses that proliferation. Values are clamped to [0, 1] after each step
by default, matching the bounded range the loss is normally trained under;
without the projection the peak amplitudes, and hence the loss, grow
without bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import HeightMap
from .loss import CorrespondenceMap, LossConfig, LossResult, detector_loss, symmetrized_loss


@dataclass(frozen=True)
class OptimizeConfig:
    alpha: float = 10.0
    steps: int = 500
    lr: float = 0.01
    clamp: tuple[float, float] | None = (0.0, 1.0)
    symmetric: bool = False
    divergence_guard: float = 1e12

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.clamp is not None and self.clamp[0] >= self.clamp[1]:
            raise ValueError(f"clamp bounds must be increasing, got {self.clamp}")


class DivergenceError(RuntimeError):
    """Loss magnitude exceeded the divergence guard."""


@dataclass(frozen=True)
class StepRecord:
    step: int
    loss: float
    n_generators: int
    mean_pers: float
    mean_sim: float

    def as_dict(self) -> dict:
        return {
            "step": self.step,
            "loss": self.loss,
            "n_generators": self.n_generators,
            "mean_pers": self.mean_pers,
            "mean_sim": self.mean_sim,
        }


@dataclass(frozen=True)
class OptimizeResult:
    history: tuple[StepRecord, ...]
    map1: HeightMap
    map2: HeightMap


def _evaluate(map1, map2, u, lcfg, symmetric) -> LossResult:
    if symmetric:
        return symmetrized_loss(map1, map2, u, u, lcfg)
    return detector_loss(map1, map2, u, lcfg)


def optimize_pair(map1: HeightMap, map2: HeightMap, cfg: OptimizeConfig) -> OptimizeResult:
    """Descend both maps for cfg.steps steps; record stats before and after each.

    history[0] is the initial state; history[k] the state after step k.
    Raises DivergenceError when |loss| passes the guard.
    """
    if map1.shape != map2.shape:
        raise ValueError(f"maps must share a shape, got {map1.shape} and {map2.shape}")
    u = CorrespondenceMap.identity(map1.shape)
    lcfg = LossConfig(alpha=cfg.alpha)

    res = _evaluate(map1, map2, u, lcfg, cfg.symmetric)
    history = [StepRecord(0, res.loss, res.n_generators, res.mean_pers, res.mean_sim)]
    for step in range(1, cfg.steps + 1):
        if abs(res.loss) > cfg.divergence_guard:
            raise DivergenceError(
                f"|loss| = {abs(res.loss):.3e} exceeded guard {cfg.divergence_guard:.3e} at step {step - 1}"
            )
        v1 = map1.values - cfg.lr * res.grad_map1
        v2 = map2.values - cfg.lr * res.grad_map2
        if cfg.clamp is not None:
            v1 = np.clip(v1, cfg.clamp[0], cfg.clamp[1])
            v2 = np.clip(v2, cfg.clamp[0], cfg.clamp[1])
        map1 = HeightMap(v1)
        map2 = HeightMap(v2)
        res = _evaluate(map1, map2, u, lcfg, cfg.symmetric)
        history.append(StepRecord(step, res.loss, res.n_generators, res.mean_pers, res.mean_sim))
    if abs(res.loss) > cfg.divergence_guard:
        raise DivergenceError(
            f"|loss| = {abs(res.loss):.3e} exceeded guard {cfg.divergence_guard:.3e} at step {cfg.steps}"
        )
    return OptimizeResult(history=tuple(history), map1=map1, map2=map2)
