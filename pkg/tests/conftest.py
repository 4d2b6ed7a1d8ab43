"""Shared helpers: independent brute-force oracles used across test modules.

Nothing here imports the package's pairing internals; the point is to check
the library against reimplementations that share no code with it.
"""

from __future__ import annotations

import heapq

import numpy as np

# the worked 3x3 grid used throughout: one interior peak at (1,1)
GRID_3X3 = [[1.0, 2.0, 3.0], [8.0, 9.0, 4.0], [7.0, 6.0, 5.0]]


def interior_strict_maxima(values: np.ndarray) -> list[tuple[int, int]]:
    """Interior pixels strictly above all 8 neighbours (distinct values)."""
    v = np.asarray(values, dtype=float)
    h, w = v.shape
    out = []
    for i in range(1, h - 1):
        for j in range(1, w - 1):
            patch = v[i - 1 : i + 2, j - 1 : j + 2].copy()
            c = patch[1, 1]
            patch[1, 1] = -np.inf
            if c > patch.max():
                out.append((i, j))
    return out


def bruteforce_dim1_pairs(values: np.ndarray) -> set[tuple]:
    """Positive dim-1 pairs of a distinct-valued map, from first principles.

    Dual view: every interior strict 8-maximum p owns one pair whose death is
    value(p) at p and whose birth is the bottleneck level from p to higher
    ground, i.e. the max over 8-connected pixel paths (leaving p) of the min
    value en route, where a path terminates on reaching any strictly higher
    pixel or the image border (the outside counts as higher than everything).
    With distinct values the birth level identifies the saddle pixel uniquely.

    Returns {(b, d, saddle_pixel, max_pixel)}.
    """
    v = np.asarray(values, dtype=float)
    h, w = v.shape
    pairs = set()
    for mi, mj in interior_strict_maxima(v):
        d = v[mi, mj]
        best = np.full((h, w), -np.inf)
        best[mi, mj] = d
        heap = [(-d, mi, mj)]
        b = None
        while heap:
            neg, i, j = heapq.heappop(heap)
            cur = -neg
            if cur < best[i, j]:
                continue
            if (i, j) != (mi, mj) and v[i, j] > d:
                b = cur
                break
            if i in (0, h - 1) or j in (0, w - 1):
                b = cur
                break
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    ni, nj = i + di, j + dj
                    cand = min(cur, v[ni, nj])
                    if cand > best[ni, nj]:
                        best[ni, nj] = cand
                        heapq.heappush(heap, (-cand, ni, nj))
        assert b is not None
        si, sj = map(int, np.argwhere(v == b)[0])
        pairs.add((b, d, (si, sj), (mi, mj)))
    return pairs


def fast_pairs_as_set(generators) -> set[tuple]:
    return {(p.birth, p.death, p.saddle, p.maximum) for p in generators}


def distinct_grid(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """All-distinct values on a fixed lattice, safely away from fp ties."""
    return rng.permutation(h * w).reshape(h, w) / float(h * w)


def brute_mutual_count(a_frame1, a_frame2, b_frame1, b_frame2, eps) -> int:
    """Reciprocal-NN matches within eps, quadratic-time reimplementation.

    a/b given in both frames (already projected); NN of each b among the
    projected a in frame 2, NN of each a among the back-projected b in
    frame 1, reciprocal pairs kept if the frame-1 distance is within eps.
    Also asserts injectivity of the matching on both sides.
    """
    a1 = np.asarray(a_frame1, float)
    a2 = np.asarray(a_frame2, float)
    b1 = np.asarray(b_frame1, float)
    b2 = np.asarray(b_frame2, float)
    if len(a1) == 0 or len(b1) == 0:
        return 0
    d2 = np.linalg.norm(b2[:, None, :] - a2[None, :, :], axis=-1)
    d1 = np.linalg.norm(a1[:, None, :] - b1[None, :, :], axis=-1)
    nn_of_b = d2.argmin(axis=1)
    nn_of_a = d1.argmin(axis=1)
    matches = [
        (ia, ib)
        for ib, ia in enumerate(nn_of_b)
        if nn_of_a[ia] == ib and d1[ia, ib] <= eps
    ]
    assert len({ia for ia, _ in matches}) == len(matches)
    assert len({ib for _, ib in matches}) == len(matches)
    return len(matches)


def two_bump_map(h: int, w: int, c1, c2, s1, s2, a1, a2) -> np.ndarray:
    """Sum of two Gaussian bumps at centres c1, c2 (row, col)."""
    ii, jj = np.mgrid[0:h, 0:w].astype(float)
    g1 = a1 * np.exp(-(((ii - c1[0]) ** 2 + (jj - c1[1]) ** 2) / (2 * s1**2)))
    g2 = a2 * np.exp(-(((ii - c2[0]) ** 2 + (jj - c2[1]) ** 2) / (2 * s2**2)))
    return g1 + g2
