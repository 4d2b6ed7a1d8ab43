"""Geometric evaluation: homography warps and repeatability metrics.

Points are (row, col) throughout; a homography acts on the homogeneous
column (row, col, 1). Two repeatability variants are provided: the classic
pooled fraction of positively-referenced keypoints, which rewards clustered
detections, and a mutual-nearest-neighbor variant normalized by the smaller
covisible set, which counts each keypoint in at most one match.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .detect import Keypoint, truncate_keypoints
from .loss import CorrespondenceMap

_W_EPS = 1e-12


@dataclass(frozen=True)
class Homography:
    """Nonsingular 3x3 projective map acting on (row, col, 1) columns."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"homography must be 3x3, got {m.shape}")
        if not np.isfinite(m).all():
            raise ValueError("homography contains non-finite entries")
        if abs(np.linalg.det(m)) < 1e-15:
            raise ValueError("homography is singular")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))


@dataclass(frozen=True)
class EvalConfig:
    epsilons: tuple[float, ...] = (1.0, 2.0, 3.0, 4.0, 5.0)

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if not eps:
            raise ValueError("epsilons must be non-empty")
        if any(e <= 0 for e in eps):
            raise ValueError(f"thresholds must be positive, got {eps}")
        if any(a >= b for a, b in zip(eps, eps[1:])):
            raise ValueError(f"thresholds must be strictly ascending, got {eps}")
        object.__setattr__(self, "epsilons", eps)


def warp_points(points: np.ndarray, h: Homography) -> tuple[np.ndarray, np.ndarray]:
    """Projective transform of (N, 2) points.

    Returns (warped, valid); rows whose homogeneous w collapses below 1e-12
    in magnitude are flagged invalid and filled with nan.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError(f"expected an (N, 2) point array, got shape {pts.shape}")
    homog = np.column_stack([pts, np.ones(len(pts))])
    out = homog @ h.matrix.T
    w = out[:, 2]
    valid = np.abs(w) >= _W_EPS
    warped = np.full((len(pts), 2), np.nan)
    warped[valid] = out[valid, :2] / w[valid, None]
    return warped, valid


def _round_half_away(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer, halves away from zero (not banker's)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def build_correspondence_map(
    shape1: tuple[int, int], shape2: tuple[int, int], h: Homography
) -> CorrespondenceMap:
    """Dense pixel correspondence: project, round, keep in-bounds targets."""
    h1, w1 = shape1
    h2, w2 = shape2
    ii, jj = np.indices((h1, w1))
    pts = np.column_stack([ii.ravel(), jj.ravel()])
    warped, valid = warp_points(pts, h)

    rounded = np.full_like(warped, -1.0)
    rounded[valid] = _round_half_away(warped[valid])
    rr = rounded[:, 0]
    cc = rounded[:, 1]
    inside = valid & (rr >= 0) & (rr < h2) & (cc >= 0) & (cc < w2)
    tr = np.where(inside, rr, -1).astype(np.int64).reshape(h1, w1)
    tc = np.where(inside, cc, -1).astype(np.int64).reshape(h1, w1)
    return CorrespondenceMap(tr, tc, (h2, w2))


@dataclass(frozen=True)
class RepeatabilityScores:
    per_eps: dict
    mean: float
    n_covisible_a: int
    n_covisible_b: int
    n_matches_per_eps: dict


def _as_points(kps) -> np.ndarray:
    if isinstance(kps, np.ndarray):
        pts = np.asarray(kps, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError(f"keypoint arrays must be (N, 2), got {pts.shape}")
        return pts
    return np.array([[k.row, k.col] for k in kps], dtype=np.float64).reshape(-1, 2)


def _inside(pts: np.ndarray, shape: tuple[int, int] | None) -> np.ndarray:
    """Mask of points landing within [0, H-1] x [0, W-1]."""
    if shape is None:
        return np.ones(len(pts), dtype=bool)
    ok = np.isfinite(pts).all(axis=1)
    out = np.zeros(len(pts), dtype=bool)
    out[ok] = (
        (pts[ok, 0] >= 0)
        & (pts[ok, 0] <= shape[0] - 1)
        & (pts[ok, 1] >= 0)
        & (pts[ok, 1] <= shape[1] - 1)
    )
    return out


def _covisible(a, b, h, shape1, shape2):
    """Restrict both sets to keypoints whose projection lands in the other image.

    Returns (a_cov, b_cov, a_proj, b_back): the surviving original points,
    a_cov projected into frame 2, and b_cov back-projected into frame 1.
    """
    pa = _as_points(a)
    pb = _as_points(b)
    hinv = h.inverse()
    a_proj, a_valid = warp_points(pa, h) if len(pa) else (pa.copy(), np.ones(0, bool))
    b_back, b_valid = warp_points(pb, hinv) if len(pb) else (pb.copy(), np.ones(0, bool))
    keep_a = a_valid & _inside(a_proj, shape2)
    keep_b = b_valid & _inside(b_back, shape1)
    return pa[keep_a], pb[keep_b], a_proj[keep_a], b_back[keep_b]


def mutual_nn_repeatability(
    a,
    b,
    h: Homography,
    cfg: EvalConfig = EvalConfig(),
    *,
    shape1: tuple[int, int] | None = None,
    shape2: tuple[int, int] | None = None,
) -> RepeatabilityScores:
    """Mutual nearest-neighbor repeatability, normalized by min coverage.

    A pair (x, y) matches when x is y's nearest neighbor among projected
    a-keypoints in frame 2, y is x's nearest neighbor among back-projected
    b-keypoints in frame 1, and their frame-1 distance is within epsilon.
    Score per threshold is matches / min(|a_cov|, |b_cov|); 0 when either
    covisible set is empty. Every keypoint lands in at most one match.
    """
    a_cov, b_cov, a_proj, b_back = _covisible(a, b, h, shape1, shape2)
    na, nb = len(a_cov), len(b_cov)
    if na == 0 or nb == 0:
        zeros = {float(e): 0.0 for e in cfg.epsilons}
        return RepeatabilityScores(zeros, 0.0, na, nb, {float(e): 0 for e in cfg.epsilons})

    # frame-2 distances: b_cov vs projected a_cov; frame-1: a_cov vs back-projection
    d2 = np.linalg.norm(b_cov[:, None, :] - a_proj[None, :, :], axis=2)
    d1 = np.linalg.norm(a_cov[:, None, :] - b_back[None, :, :], axis=2)
    nn_of_b = np.argmin(d2, axis=1)  # index into a_cov for each y
    nn_of_a = np.argmin(d1, axis=1)  # index into b_cov for each x

    mutual = [(x, y) for y, x in enumerate(nn_of_b) if nn_of_a[x] == y]
    dists = np.array([d1[x, y] for x, y in mutual]) if mutual else np.empty(0)

    denom = min(na, nb)
    per_eps = {}
    n_matches = {}
    for e in cfg.epsilons:
        count = int(np.sum(dists <= e))
        per_eps[float(e)] = count / denom
        n_matches[float(e)] = count
    mean = float(np.mean(list(per_eps.values())))
    return RepeatabilityScores(per_eps, mean, na, nb, n_matches)


def classic_repeatability(
    a,
    b,
    h: Homography,
    cfg: EvalConfig = EvalConfig(),
    *,
    shape1: tuple[int, int] | None = None,
    shape2: tuple[int, int] | None = None,
) -> RepeatabilityScores:
    """Pooled fraction of keypoints with any counterpart within epsilon.

    Counts a-keypoints within epsilon of some back-projected b-keypoint
    (frame 1) plus b-keypoints within epsilon of some projected a-keypoint
    (frame 2), over |a_cov| + |b_cov|. A tight cluster near one counterpart
    can inflate this; the mutual variant is immune.
    """
    a_cov, b_cov, a_proj, b_back = _covisible(a, b, h, shape1, shape2)
    na, nb = len(a_cov), len(b_cov)
    if na == 0 or nb == 0:
        zeros = {float(e): 0.0 for e in cfg.epsilons}
        return RepeatabilityScores(zeros, 0.0, na, nb, {float(e): 0 for e in cfg.epsilons})

    d1 = np.linalg.norm(a_cov[:, None, :] - b_back[None, :, :], axis=2)
    d2 = np.linalg.norm(b_cov[:, None, :] - a_proj[None, :, :], axis=2)
    best_a = d1.min(axis=1)
    best_b = d2.min(axis=1)

    per_eps = {}
    n_matches = {}
    for e in cfg.epsilons:
        hits = int(np.sum(best_a <= e)) + int(np.sum(best_b <= e))
        per_eps[float(e)] = hits / (na + nb)
        n_matches[float(e)] = hits
    mean = float(np.mean(list(per_eps.values())))
    return RepeatabilityScores(per_eps, mean, na, nb, n_matches)


@dataclass(frozen=True)
class ScaleEntry:
    """Detector output at one rescaled rendering plus the exact scale map."""

    keypoints: list
    homography: Homography
    shape: tuple[int, int]


def scale_experiment(
    reference_keypoints,
    reference_shape: tuple[int, int],
    scales: dict,
    *,
    budget: int = 500,
    cfg: EvalConfig = EvalConfig(),
    ranking: str = "score",
) -> dict:
    """Mutual-NN repeatability of each rescaled rendering against the reference.

    scales maps a label (e.g. 0.75 for the relative pixel area) to a
    ScaleEntry whose homography takes reference coordinates to the rescaled
    frame. Each keypoint list is truncated to the budget before scoring.
    """
    if not scales:
        raise ValueError("scales must contain at least one entry")
    ref = reference_keypoints
    if not isinstance(ref, np.ndarray):
        ref = truncate_keypoints(list(ref), budget, ranking)
    else:
        ref = ref[:budget]
    out = {}
    for label, entry in scales.items():
        if entry is None:
            raise ValueError(f"missing scale entry for {label!r}")
        kps = entry.keypoints
        if not isinstance(kps, np.ndarray):
            kps = truncate_keypoints(list(kps), budget, ranking)
        else:
            kps = kps[:budget]
        out[label] = mutual_nn_repeatability(
            ref, kps, entry.homography, cfg, shape1=reference_shape, shape2=entry.shape
        )
    return out
