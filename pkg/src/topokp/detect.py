"""Keypoint extraction from height maps.

nms_keypoints takes strict 8-neighborhood maxima, where strictness is
decided by the same (value, linear index) order the filtration uses, so a
plateau yields exactly one candidate. That candidate only wins by index, so
it is rejected by default as a flat-region artifact; disable
reject_plateaus to keep it. persistence_keypoints instead ranks the death
maxima of the dimension-1 generators by their persistence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import HeightMap, _tie_indices
from .persistence import h1_generators


@dataclass(frozen=True)
class Keypoint:
    row: int
    col: int
    score: float
    persistence: float | None = None


@dataclass(frozen=True)
class DetectConfig:
    gamma: float = 0.7
    max_keypoints: int | None = None
    ranking: str = "score"
    reject_plateaus: bool = True

    def __post_init__(self):
        if self.max_keypoints is not None and self.max_keypoints < 1:
            raise ValueError(f"max_keypoints must be >= 1 when set, got {self.max_keypoints}")
        if self.ranking not in ("score", "persistence"):
            raise ValueError(f"ranking must be 'score' or 'persistence', got {self.ranking!r}")


_SHIFTS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _strict_max_mask(hm: HeightMap, reject_plateaus: bool) -> np.ndarray:
    """Vertices beating all in-bounds 8-neighbors under the tie-break order."""
    h, w = hm.shape
    vals = hm.values
    tie = _tie_indices(h, w)
    wins = np.ones((h, w), dtype=bool)
    has_equal = np.zeros((h, w), dtype=bool)

    for di, dj in _SHIFTS:
        # slice the overlap between the grid and its (di, dj)-shifted copy
        src_i = slice(max(di, 0), h + min(di, 0))
        src_j = slice(max(dj, 0), w + min(dj, 0))
        dst_i = slice(max(-di, 0), h + min(-di, 0))
        dst_j = slice(max(-dj, 0), w + min(-dj, 0))
        v = vals[src_i, src_j]
        nv = vals[dst_i, dst_j]
        greater = (v > nv) | ((v == nv) & (tie[src_i, src_j] > tie[dst_i, dst_j]))
        wins[src_i, src_j] &= greater
        has_equal[src_i, src_j] |= v == nv

    if reject_plateaus:
        wins &= ~has_equal
    return wins


def _ranked(cands: list[Keypoint], hm_height: int) -> list[Keypoint]:
    """Descending score; score ties broken by descending tie-break index."""
    cands.sort(key=lambda k: (-k.score, -(k.row + hm_height * k.col)))
    return cands


def nms_keypoints(hm: HeightMap, cfg: DetectConfig = DetectConfig()) -> list[Keypoint]:
    """Strict local maxima scoring above gamma, best first.

    Out-of-bounds neighbors are ignored, so border pixels can qualify. The
    list is sorted by descending score and truncated to max_keypoints.
    """
    mask = _strict_max_mask(hm, cfg.reject_plateaus)
    mask &= hm.values > cfg.gamma
    rows, cols = np.nonzero(mask)
    cands = [Keypoint(int(i), int(j), float(hm.values[i, j])) for i, j in zip(rows, cols)]
    cands = _ranked(cands, hm.height)
    if cfg.max_keypoints is not None:
        cands = cands[: cfg.max_keypoints]
    return cands


def persistence_keypoints(
    hm: HeightMap, min_persistence: float, cfg: DetectConfig = DetectConfig()
) -> list[Keypoint]:
    """Death maxima of generators with persistence >= min_persistence.

    Keeps positions whose map value clears gamma, ranked by descending
    persistence (score and tie index break ties), truncated to
    max_keypoints. Generators never share a death maximum, so positions are
    unique.
    """
    out = []
    for g in h1_generators(hm):
        if g.persistence >= min_persistence and hm.values[g.maximum] > cfg.gamma:
            out.append(
                Keypoint(g.maximum[0], g.maximum[1], float(hm.values[g.maximum]), g.persistence)
            )
    out.sort(key=lambda k: (-k.persistence, -k.score, -(k.row + hm.height * k.col)))
    if cfg.max_keypoints is not None:
        out = out[: cfg.max_keypoints]
    return out


def truncate_keypoints(kps: list[Keypoint], budget: int, ranking: str = "score") -> list[Keypoint]:
    """Re-rank and keep the top `budget` keypoints.

    ranking 'score' sorts by score; 'persistence' sorts by persistence with
    unscored entries last. Used when enforcing per-image budgets.
    """
    if ranking == "persistence":
        ranked = sorted(kps, key=lambda k: (-(k.persistence if k.persistence is not None else -np.inf), -k.score))
    else:
        ranked = sorted(kps, key=lambda k: -k.score)
    return ranked[:budget]
