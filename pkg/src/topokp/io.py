"""File formats: matrix text, 8-bit grayscale images, and JSON records.

Matrix text is whitespace-separated decimals, one row per line, written
with 17 significant digits so float64 values round-trip exactly. Images
must be single-channel 8-bit; pixel p maps to p/255. Homography files hold
nine whitespace-separated scalars, row-major.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .detect import Keypoint
from .grid import DimensionError, HeightMap
from .persistence import PersistencePair, PersistenceDiagram

_IMAGE_SUFFIXES = {".png", ".pgm", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg", ".ppm"}


class ParseError(ValueError):
    """Malformed text input (ragged rows, bad tokens)."""


def load_matrix_text(path) -> np.ndarray:
    """Parse a whitespace/newline matrix file; errors carry path and line."""
    path = Path(path)
    rows: list[list[float]] = []
    width = None
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            row = [float(t) for t in tokens]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(
                f"{path}:{lineno}: ragged row, expected {width} values, got {len(row)}"
            )
        rows.append(row)
    if not rows:
        raise DimensionError(f"{path}: no rows in matrix file")
    return np.array(rows, dtype=np.float64)


def _ensure_parent(path) -> Path:
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def save_matrix_text(path, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype=np.float64)
    np.savetxt(_ensure_parent(path), arr.reshape(arr.shape[0], -1), fmt="%.17g")


def load_image_grayscale(path) -> np.ndarray:
    """8-bit single-channel image to floats in [0, 1] (pixel / 255)."""
    img = Image.open(path)
    if img.mode != "L":
        raise ValueError(f"{path}: expected single-channel 8-bit image, got mode {img.mode!r}")
    return np.asarray(img, dtype=np.float64) / 255.0


def load_height_map(path) -> HeightMap:
    """Dispatch on suffix: known image formats decode, anything else parses as text."""
    path = Path(path)
    if path.suffix.lower() in _IMAGE_SUFFIXES:
        return HeightMap(load_image_grayscale(path))
    return HeightMap(load_matrix_text(path))


def load_homography_matrix(path) -> np.ndarray:
    path = Path(path)
    try:
        vals = [float(t) for t in path.read_text().split()]
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    if len(vals) != 9:
        raise ParseError(f"{path}: expected 9 scalars for a homography, got {len(vals)}")
    return np.array(vals, dtype=np.float64).reshape(3, 3)


def save_homography_matrix(path, matrix: np.ndarray) -> None:
    np.savetxt(path, np.asarray(matrix, dtype=np.float64).reshape(3, 3), fmt="%.17g")


# JSON records ------------------------------------------------------------

def pair_record(p: PersistencePair) -> dict:
    return {
        "dim": p.dim,
        "b": p.birth,
        "d": p.death,
        "s_row": p.saddle[0],
        "s_col": p.saddle[1],
        "m_row": p.maximum[0],
        "m_col": p.maximum[1],
    }


def diagram_payload(pairs, essential_vertices=()) -> dict:
    return {
        "pairs": [pair_record(p) for p in pairs],
        "essential": [{"dim": 0, "row": int(v[0]), "col": int(v[1])} for v in essential_vertices],
    }


def save_diagram(path, pairs, essential_vertices=()) -> None:
    write_json(path, diagram_payload(pairs, essential_vertices))


def load_diagram(path) -> dict:
    return json.loads(Path(path).read_text())


def keypoint_records(kps) -> list[dict]:
    out = []
    for k in kps:
        rec = {"row": k.row, "col": k.col, "score": k.score}
        if k.persistence is not None:
            rec["persistence"] = k.persistence
        out.append(rec)
    return out


def save_keypoints(path, kps, shape=None) -> None:
    payload = {"keypoints": keypoint_records(kps)}
    if shape is not None:
        payload["shape"] = [int(shape[0]), int(shape[1])]
    write_json(path, payload)


def load_keypoints(path) -> tuple[list[Keypoint], tuple[int, int] | None]:
    data = json.loads(Path(path).read_text())
    kps = [
        Keypoint(int(r["row"]), int(r["col"]), float(r["score"]), r.get("persistence"))
        for r in data["keypoints"]
    ]
    shape = tuple(data["shape"]) if data.get("shape") else None
    return kps, shape


def loss_payload(result, alpha: float) -> dict:
    return {
        "loss": result.loss,
        "alpha": alpha,
        "n_generators": result.n_generators,
        "terms": [
            {
                "s": [t.saddle[0], t.saddle[1]],
                "m": [t.maximum[0], t.maximum[1]],
                "pers": t.pers,
                "sim": t.sim,
            }
            for t in result.terms
        ],
    }


def write_json(path, payload) -> None:
    _ensure_parent(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def render_keypoint_overlay(path, hm: HeightMap, kps, *, lo=None, hi=None) -> None:
    """Grayscale rendering of the map with 3x3 white boxes at keypoints."""
    vals = hm.values
    lo = float(vals.min()) if lo is None else lo
    hi = float(vals.max()) if hi is None else hi
    span = hi - lo if hi > lo else 1.0
    img = np.clip((vals - lo) / span * 205.0, 0, 205).astype(np.uint8)
    for k in kps:
        i0, i1 = max(k.row - 1, 0), min(k.row + 2, vals.shape[0])
        j0, j1 = max(k.col - 1, 0), min(k.col + 2, vals.shape[1])
        img[i0:i1, j0:j1] = 255
    Image.fromarray(img, mode="L").save(_ensure_parent(path))
