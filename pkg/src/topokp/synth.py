"""Seeded synthetic scenes: Gaussian bump maps warped by bounded homographies.

All randomness flows through one numpy Generator so a seed fixes the scene
byte for byte. The second image is produced by inverse bilinear resampling
of the first under the scene homography; pixels pulled from outside the
source grid are 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .evaluation import Homography, warp_points
from .grid import HeightMap
from . import io as tio

RNG_ALGORITHM = "PCG64"


@dataclass(frozen=True)
class SynthConfig:
    size: int = 64
    n_blobs: int = 4
    warp: str = "random"  # "none" keeps the identity homography
    noise: float = 0.0
    max_rotation: float = 0.15  # radians
    scale_range: tuple[float, float] = (0.9, 1.1)
    max_translation: float = 3.0

    def __post_init__(self):
        if self.size < 16:
            raise ValueError(f"size must be >= 16, got {self.size}")
        if self.n_blobs < 1:
            raise ValueError(f"n_blobs must be >= 1, got {self.n_blobs}")
        if self.warp not in ("none", "random"):
            raise ValueError(f"warp must be 'none' or 'random', got {self.warp!r}")
        if self.noise < 0:
            raise ValueError(f"noise must be >= 0, got {self.noise}")


def gaussian_bump_map(size: int, n_blobs: int, rng: np.random.Generator) -> HeightMap:
    """Sum of n_blobs Gaussian bumps with random interior centers.

    Centers avoid a margin near the border so each bump peak is interior;
    off-grid centers keep sampled values distinct in practice.
    """
    margin = max(2.0, size * 0.15)
    ii, jj = np.indices((size, size), dtype=np.float64)
    vals = np.zeros((size, size))
    for _ in range(n_blobs):
        ci = rng.uniform(margin, size - 1 - margin)
        cj = rng.uniform(margin, size - 1 - margin)
        sigma = rng.uniform(size * 0.05, size * 0.12)
        height = rng.uniform(0.6, 1.0)
        vals += height * np.exp(-((ii - ci) ** 2 + (jj - cj) ** 2) / (2.0 * sigma * sigma))
    peak = vals.max()
    if peak > 0:
        vals /= peak
    return HeightMap(vals)


def random_bounded_homography(size: int, cfg: SynthConfig, rng: np.random.Generator) -> Homography:
    """Rotation + isotropic scale + translation about the grid center."""
    theta = rng.uniform(-cfg.max_rotation, cfg.max_rotation)
    s = rng.uniform(*cfg.scale_range)
    ti = rng.uniform(-cfg.max_translation, cfg.max_translation)
    tj = rng.uniform(-cfg.max_translation, cfg.max_translation)
    c = (size - 1) / 2.0
    cos, sin = np.cos(theta), np.sin(theta)
    rot = np.array([[s * cos, -s * sin, 0.0], [s * sin, s * cos, 0.0], [0.0, 0.0, 1.0]])
    to_center = np.array([[1, 0, -c], [0, 1, -c], [0, 0, 1.0]])
    back = np.array([[1, 0, c + ti], [0, 1, c + tj], [0, 0, 1.0]])
    return Homography(back @ rot @ to_center)


def warp_height_map(hm: HeightMap, h: Homography, out_shape: tuple[int, int]) -> HeightMap:
    """Inverse-warp resampling with bilinear interpolation, 0 outside."""
    oh, ow = out_shape
    ii, jj = np.indices((oh, ow))
    pts = np.column_stack([ii.ravel(), jj.ravel()]).astype(np.float64)
    src, valid = warp_points(pts, h.inverse())

    vals = hm.values
    hh, ww = hm.shape
    out = np.zeros(oh * ow)
    r = src[:, 0]
    c = src[:, 1]
    ok = valid & (r >= 0) & (r <= hh - 1) & (c >= 0) & (c <= ww - 1)
    r = np.clip(r[ok], 0, hh - 1)
    c = np.clip(c[ok], 0, ww - 1)
    r0 = np.clip(np.floor(r).astype(int), 0, hh - 2) if hh > 1 else np.zeros(len(r), int)
    c0 = np.clip(np.floor(c).astype(int), 0, ww - 2) if ww > 1 else np.zeros(len(c), int)
    fr = r - r0
    fc = c - c0
    r1 = np.minimum(r0 + 1, hh - 1)
    c1 = np.minimum(c0 + 1, ww - 1)
    out[ok] = (
        vals[r0, c0] * (1 - fr) * (1 - fc)
        + vals[r0, c1] * (1 - fr) * fc
        + vals[r1, c0] * fr * (1 - fc)
        + vals[r1, c1] * fr * fc
    )
    return HeightMap(out.reshape(oh, ow))


@dataclass(frozen=True)
class Scene:
    map1: HeightMap
    map2: HeightMap
    homography: Homography


def make_scene(cfg: SynthConfig, seed: int) -> Scene:
    """Deterministic bump pair: map2 is map1 warped (plus optional noise)."""
    rng = np.random.default_rng(seed)
    map1 = gaussian_bump_map(cfg.size, cfg.n_blobs, rng)
    if cfg.warp == "none":
        h = Homography.identity()
    else:
        h = random_bounded_homography(cfg.size, cfg, rng)
    map2 = warp_height_map(map1, h, map1.shape)
    if cfg.noise > 0:
        noisy = map2.values + rng.normal(0.0, cfg.noise, map2.shape)
        map2 = HeightMap(noisy)
    return Scene(map1=map1, map2=map2, homography=h)


def write_scene(scene: Scene, out_dir) -> list[str]:
    """Scene directory layout: numbered matrix images plus H_1_k files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tio.save_matrix_text(out / "1.txt", scene.map1.values)
    tio.save_matrix_text(out / "2.txt", scene.map2.values)
    tio.save_homography_matrix(out / "H_1_2", scene.homography.matrix)
    return ["1.txt", "2.txt", "H_1_2"]
