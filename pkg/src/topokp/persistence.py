"""Persistence pairing of the sublevel filtration, by two independent routes.

The oracle is a textbook boundary-matrix reduction over GF(2) with sparse
columns. The fast path pairs dimension-1 classes by a union-find sweep over
the dual grid (squares plus the outer face) in descending cell order, and
dimension-0 classes by the usual ascending merge. Both routes consume the
same strict total order on cells, so their pairings must coincide exactly;
the test suite compares them cell by cell on random grids.

Pair bookkeeping: a pair's birth value is the map value at the tie-break
maximal vertex of its birth cell (the saddle), its death value the map value
at the maximal vertex of its death cell (the maximum). For dimension-0 pairs
the "saddle" slot holds the component's minimum vertex and the "maximum"
slot the merge edge's maximal vertex, so the same record shape serves both
dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    Cell,
    FiltrationOrder,
    HeightMap,
    build_filtration,
    cell_faces,
    vertex_ranks,
)


@dataclass(frozen=True)
class PersistencePair:
    dim: int
    birth_cell: Cell
    death_cell: Cell
    birth: float
    death: float
    saddle: tuple[int, int]
    maximum: tuple[int, int]

    @property
    def persistence(self) -> float:
        return self.death - self.birth

    def key(self) -> tuple:
        """Canonical tuple for multiset comparison across algorithms."""
        bc = (self.birth_cell.dim, self.birth_cell.anchor, self.birth_cell.orientation or "")
        dc = (self.death_cell.dim, self.death_cell.anchor, self.death_cell.orientation or "")
        return (self.dim, bc, dc, self.birth, self.death, self.saddle, self.maximum)


@dataclass(frozen=True)
class PersistenceDiagram:
    pairs: tuple[PersistencePair, ...]
    essential: tuple[Cell, ...]

    def pairs_of_dim(self, dim: int) -> list[PersistencePair]:
        return [p for p in self.pairs if p.dim == dim]


def reduce_boundary_matrix(filtration: FiltrationOrder) -> PersistenceDiagram:
    """Oracle pairing: left-to-right column reduction of the boundary matrix.

    Columns are kept as sets of row indices; reduction XORs in the column
    whose lowest one matches until the lowest one is unclaimed or the column
    clears. Includes zero-persistence pairs. No clearing or twist speedups,
    on purpose: this is the reference implementation.
    """
    cells = filtration.cells
    pos = filtration.positions
    reduced: dict[int, set[int]] = {}
    low_owner: dict[int, int] = {}
    pair_idx: list[tuple[int, int]] = []
    creators: list[int] = []

    for j, cell in enumerate(cells):
        col = {pos[f] for f in cell_faces(cell)}
        while col:
            low = max(col)
            k = low_owner.get(low)
            if k is None:
                break
            col ^= reduced[k]
        if col:
            low = max(col)
            reduced[j] = col
            low_owner[low] = j
            pair_idx.append((low, j))
        else:
            creators.append(j)

    values = filtration.values
    mv = filtration.max_vertices
    pairs = tuple(
        PersistencePair(
            dim=cells[i].dim,
            birth_cell=cells[i],
            death_cell=cells[j],
            birth=float(values[i]),
            death=float(values[j]),
            saddle=(int(mv[i, 0]), int(mv[i, 1])),
            maximum=(int(mv[j, 0]), int(mv[j, 1])),
        )
        for i, j in pair_idx
    )
    essential = tuple(cells[j] for j in creators if j not in low_owner)
    return PersistenceDiagram(pairs=pairs, essential=essential)


class _UnionFind:
    """Array union-find with path halving; merge direction chosen by caller."""

    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x


def _edge_arrays(hm: HeightMap):
    """Vectorized edge table: ranks, tie keys, and flanking dual faces.

    Horizontal edges come first (anchor grid H x (W-1)), then vertical
    (anchor grid (H-1) x W). Dual faces are square ids, with -1 standing for
    the outer face. Square id for anchor (i, j) is i*(W-1)+j.
    """
    h, w = hm.shape
    ranks = vertex_ranks(hm)

    n_h = h * (w - 1)
    n_v = (h - 1) * w

    # horizontal: (i,j)->(i,j+1); above square anchor (i-1,j), below (i,j)
    hi, hj = np.divmod(np.arange(n_h), w - 1) if n_h else (np.empty(0, int), np.empty(0, int))
    h_rank = np.maximum(ranks[:, :-1], ranks[:, 1:]).ravel()
    h_tie = hi + h * hj
    h_above = np.where(hi >= 1, (hi - 1) * (w - 1) + hj, -1)
    h_below = np.where(hi <= h - 2, hi * (w - 1) + hj, -1)

    # vertical: (i,j)->(i+1,j); left square anchor (i,j-1), right (i,j)
    vi, vj = np.divmod(np.arange(n_v), w) if n_v else (np.empty(0, int), np.empty(0, int))
    v_rank = np.maximum(ranks[:-1, :], ranks[1:, :]).ravel()
    v_tie = vi + h * vj
    v_left = np.where(vj >= 1, vi * (w - 1) + (vj - 1), -1)
    v_right = np.where(vj <= w - 2, vi * (w - 1) + vj, -1)

    return {
        "rank": np.concatenate([h_rank, v_rank]),
        "orient": np.concatenate([np.zeros(n_h, np.int64), np.ones(n_v, np.int64)]),
        "tie": np.concatenate([h_tie, v_tie]),
        "face_a": np.concatenate([h_above, v_left]),
        "face_b": np.concatenate([h_below, v_right]),
        "anchor_i": np.concatenate([hi, vi]),
        "anchor_j": np.concatenate([hj, vj]),
    }


def _dim1_pairs_fast(hm: HeightMap) -> list[PersistencePair]:
    """All dimension-1 pairs (zero persistence included) via the dual sweep.

    Walking the cell order backwards, each square opens a region of the
    complement and each edge glues the two regions flanking it. A glue that
    joins two distinct regions kills the younger one, pairing that region's
    opening square with the edge; in forward time this is exactly the
    edge-creates / square-destroys pairing of the sublevel filtration. The
    outer face is the eldest region and is never paired.
    """
    h, w = hm.shape
    if h < 2 or w < 2:
        return []

    e = _edge_arrays(hm)
    ranks = vertex_ranks(hm)
    order_flat = np.empty(h * w, dtype=np.int64)
    order_flat[ranks.ravel()] = np.arange(h * w)  # rank -> flat vertex id

    n_sq = (h - 1) * (w - 1)
    sq_i, sq_j = np.divmod(np.arange(n_sq), w - 1)
    sq_rank = np.maximum.reduce(
        [ranks[:-1, :-1], ranks[:-1, 1:], ranks[1:, :-1], ranks[1:, 1:]]
    ).ravel()
    sq_tie = sq_i + h * sq_j
    # scalar standing in for a square's position in the global cell order;
    # larger means later entry, i.e. elder in the backward sweep
    hw = h * w
    sq_age = sq_rank * hw + sq_tie

    # edges descending by (max-vertex rank, orientation, anchor tie)
    desc = np.lexsort((e["tie"], e["orient"], e["rank"]))[::-1]

    outer = n_sq
    uf = _UnionFind(n_sq + 1)
    find = uf.find
    parent = uf.parent
    birth_sq = np.concatenate([np.arange(n_sq), [outer]])
    age = np.concatenate([sq_age, [np.iinfo(np.int64).max]])

    face_a = e["face_a"]
    face_b = e["face_b"]
    pair_edges: list[int] = []
    pair_squares: list[int] = []
    for t in desc:
        fa = face_a[t]
        fb = face_b[t]
        ra = find(outer if fa < 0 else fa)
        rb = find(outer if fb < 0 else fb)
        if ra == rb:
            continue
        if age[ra] < age[rb]:
            young, old = ra, rb
        else:
            young, old = rb, ra
        pair_edges.append(t)
        pair_squares.append(birth_sq[young])
        parent[young] = old

    vals = hm.values
    pairs = []
    for t, sq in zip(pair_edges, pair_squares):
        s_flat = order_flat[e["rank"][t]]
        m_flat = order_flat[sq_rank[sq]]
        s = (int(s_flat // w), int(s_flat % w))
        m = (int(m_flat // w), int(m_flat % w))
        orient = "h" if e["orient"][t] == 0 else "v"
        pairs.append(
            PersistencePair(
                dim=1,
                birth_cell=Cell(1, (int(e["anchor_i"][t]), int(e["anchor_j"][t])), orient),
                death_cell=Cell(2, (int(sq_i[sq]), int(sq_j[sq]))),
                birth=float(vals[s]),
                death=float(vals[m]),
                saddle=s,
                maximum=m,
            )
        )
    return pairs


def h1_generators(hm: HeightMap, *, keep_zero_persistence: bool = False) -> list[PersistencePair]:
    """Dimension-1 pairs of the sublevel filtration, largest persistence first.

    Zero-persistence pairs (birth equal to death) are dropped by default;
    keep_zero_persistence retains them for ablation runs. Matches the oracle
    reduction pair for pair.
    """
    pairs = _dim1_pairs_fast(hm)
    if not keep_zero_persistence:
        pairs = [p for p in pairs if p.death > p.birth]
    pairs.sort(key=lambda p: (-(p.death - p.birth), p.birth, p.saddle, p.maximum))
    return pairs


def h0_pairs(
    hm: HeightMap, *, keep_zero_persistence: bool = False
) -> tuple[list[PersistencePair], tuple[int, int]]:
    """Dimension-0 pairs plus the essential minimum, by ascending union-find.

    Edges are processed in the global cell order; an edge joining two
    components pairs the younger component's minimum with the edge. Returns
    pairs in merge order and the coordinates of the global minimum, whose
    component never dies. Zero-persistence pairs are dropped by default.
    """
    h, w = hm.shape
    ranks = vertex_ranks(hm)
    order_flat = np.empty(h * w, dtype=np.int64)
    order_flat[ranks.ravel()] = np.arange(h * w)

    e = _edge_arrays(hm)
    asc = np.lexsort((e["tie"], e["orient"], e["rank"]))

    uf = _UnionFind(h * w)
    find = uf.find
    parent = uf.parent
    # union-find nodes are flat vertex ids; each root remembers the rank of
    # its component's minimum vertex
    rank_of_flat = ranks.ravel()
    min_rank = rank_of_flat.copy()

    vals = hm.values
    pairs: list[PersistencePair] = []
    ai = e["anchor_i"]
    aj = e["anchor_j"]
    orient = e["orient"]
    for t in asc:
        i0, j0 = int(ai[t]), int(aj[t])
        if orient[t] == 0:
            u_flat, v_flat = i0 * w + j0, i0 * w + (j0 + 1)
        else:
            u_flat, v_flat = i0 * w + j0, (i0 + 1) * w + j0
        ru = find(u_flat)
        rv = find(v_flat)
        if ru == rv:
            continue
        if min_rank[ru] > min_rank[rv]:
            young, old = ru, rv
        else:
            young, old = rv, ru
        b_flat = order_flat[min_rank[young]]
        m_flat = order_flat[e["rank"][t]]
        bpos = (int(b_flat // w), int(b_flat % w))
        mpos = (int(m_flat // w), int(m_flat % w))
        pairs.append(
            PersistencePair(
                dim=0,
                birth_cell=Cell(0, bpos),
                death_cell=Cell(1, (i0, j0), "h" if orient[t] == 0 else "v"),
                birth=float(vals[bpos]),
                death=float(vals[mpos]),
                saddle=bpos,
                maximum=mpos,
            )
        )
        parent[young] = old
        min_rank[old] = min(min_rank[old], min_rank[young])

    g_flat = order_flat[0]
    essential = (int(g_flat // w), int(g_flat % w))
    if not keep_zero_persistence:
        pairs = [p for p in pairs if p.death > p.birth]
    return pairs, essential


def oracle_diagram(hm: HeightMap) -> PersistenceDiagram:
    """Full diagram via the reduction; convenience wrapper for checks."""
    return reduce_boundary_matrix(build_filtration(hm))


def pairing_mismatch(hm: HeightMap) -> str | None:
    """Compare fast-path pairs against the oracle; None when they agree.

    Checks the complete dimension-1 multiset (zero persistence included) and
    the dimension-0 multiset plus the essential vertex. Returns a short
    description of the first discrepancy otherwise.
    """
    diagram = oracle_diagram(hm)

    fast1 = sorted(p.key() for p in _dim1_pairs_fast(hm))
    oracle1 = sorted(p.key() for p in diagram.pairs_of_dim(1))
    if fast1 != oracle1:
        return f"dim-1 pairing mismatch: fast path {len(fast1)} vs oracle {len(oracle1)} pairs or differing cells"

    fast0_pairs, fast_min = h0_pairs(hm, keep_zero_persistence=True)
    fast0 = sorted(p.key() for p in fast0_pairs)
    oracle0 = sorted(p.key() for p in diagram.pairs_of_dim(0))
    if fast0 != oracle0:
        return "dim-0 pairing mismatch"

    ess = [c for c in diagram.essential if c.dim == 0]
    if len(ess) != 1 or ess[0].anchor != fast_min:
        return f"essential vertex mismatch: oracle {ess} vs fast {fast_min}"
    ess1 = [c for c in diagram.essential if c.dim >= 1]
    if ess1:
        return f"unexpected essential cells of positive dimension: {ess1}"
    return None
