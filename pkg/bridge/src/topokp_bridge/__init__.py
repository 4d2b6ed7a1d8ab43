"""Array-in/array-out bindings for the topological keypoint engine.

Generator extraction and the detector loss are exposed as plain numpy
functions so a host autodiff framework can register the loss as a custom
differentiable node: one call returns the scalar together with both gradient
arrays, since the backward pass needs only the critical positions the forward
pass already found. Inputs are validated at this boundary and never mutated;
the functions keep no state beyond the module handle, so concurrent calls on
distinct arrays are safe.
"""

from __future__ import annotations

import numpy as np

import topokp
from topokp import CorrespondenceMap, HeightMap, LossConfig, detector_loss, h1_generators

__version__ = topokp.__version__

GENERATOR_DTYPE = np.dtype(
    [
        ("b", np.float64),
        ("d", np.float64),
        ("s_row", np.int64),
        ("s_col", np.int64),
        ("m_row", np.int64),
        ("m_col", np.int64),
    ]
)

__all__ = ["GENERATOR_DTYPE", "__version__", "identity_u", "py_h1_generators", "py_loss"]


def _as_height_map(arr, name: str) -> HeightMap:
    a = np.asarray(arr)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2D array, got ndim={a.ndim}")
    if a.size == 0:
        raise ValueError(f"{name} must have at least one row and column, got shape {a.shape}")
    return HeightMap(a.astype(np.float64, copy=False))


def identity_u(shape) -> np.ndarray:
    """Identity correspondence for a grid of the given (H, W) shape.

    Returned as the (H, W, 2) integer layout py_loss expects, every pixel
    mapping to itself. Mark pixels undefined by writing (-1, -1).
    """
    h, w = int(shape[0]), int(shape[1])
    ii, jj = np.indices((h, w), dtype=np.int64)
    return np.stack([ii, jj], axis=2)


def py_h1_generators(arr) -> np.ndarray:
    """Positive-persistence dimension-1 pairs of a height map, as a record array.

    Records are (b, d, s_row, s_col, m_row, m_col): birth value, death value,
    saddle pixel, maximum pixel, ordered by decreasing persistence. A map
    without interior peaks (constant, ramp, single row or column) yields an
    empty array.
    """
    gens = h1_generators(_as_height_map(arr, "arr"))
    out = np.empty(len(gens), dtype=GENERATOR_DTYPE)
    for k, g in enumerate(gens):
        out[k] = (g.birth, g.death, g.saddle[0], g.saddle[1], g.maximum[0], g.maximum[1])
    return out


def py_loss(map1, map2, u=None, alpha: float = 10.0):
    """Fused forward+backward of the detector loss.

    u is an (H, W, 2) integer array of (row, col) targets in map2's frame with
    (-1, -1) marking undefined pixels; None means identity (requires equal
    shapes). Returns (loss, grad1, grad2, terms) where the gradient arrays
    match the map shapes and terms is one dict per generator with keys s_row,
    s_col, m_row, m_col, pers, sim.
    """
    m1 = _as_height_map(map1, "map1")
    m2 = _as_height_map(map2, "map2")
    if u is None:
        if m1.shape != m2.shape:
            raise ValueError(
                f"identity correspondence needs equal shapes, got {m1.shape} and {m2.shape}"
            )
        corr = CorrespondenceMap.identity(m1.shape)
    else:
        ua = np.asarray(u)
        if ua.ndim != 3 or ua.shape[2] != 2:
            raise ValueError(f"u must be an (H, W, 2) integer array, got shape {ua.shape}")
        if ua.shape[:2] != m1.shape:
            raise ValueError(f"u shape {ua.shape[:2]} does not match map1 shape {m1.shape}")
        corr = CorrespondenceMap.from_stacked(ua.astype(np.int64, copy=False), m2.shape)
    res = detector_loss(m1, m2, corr, LossConfig(alpha=alpha))
    terms = [
        {
            "s_row": t.saddle[0],
            "s_col": t.saddle[1],
            "m_row": t.maximum[0],
            "m_col": t.maximum[1],
            "pers": t.pers,
            "sim": t.sim,
        }
        for t in res.terms
    ]
    return res.loss, res.grad_map1, res.grad_map2, terms
