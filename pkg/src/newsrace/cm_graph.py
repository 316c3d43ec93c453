"""Configuration-model multigraphs with per-edge (lF, lR) weight pairs.

Vertices are numbered ``0..n-1`` and edges ``0..m-1``.  Self-loops and
parallel edges are kept.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .degrees import DegreeSequence
from .traversal import JointModel, sample_pairs


@dataclass(frozen=True)
class MultiGraph:
    n: int
    u: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return int(self.u.size)

    def degrees(self) -> np.ndarray:
        """Multigraph degrees, self-loops counted twice."""
        return np.bincount(self.u, minlength=self.n) + np.bincount(self.v, minlength=self.n)

    def incidence(self) -> dict[int, list[int]]:
        inc: dict[int, list[int]] = {x: [] for x in range(self.n)}
        for e, (a, b) in enumerate(zip(self.u.tolist(), self.v.tolist())):
            inc[a].append(e)
            if b != a:
                inc[b].append(e)
        return inc

    def adjacency(self, skip_loops: bool = True):
        """CSR-style arrays ``(indptr, nbr, eid)`` over both edge directions."""
        u, v = self.u, self.v
        eid = np.arange(self.m, dtype=np.int64)
        if skip_loops:
            keep = u != v
            u, v, eid = u[keep], v[keep], eid[keep]
        src = np.concatenate([u, v])
        dst = np.concatenate([v, u])
        ids = np.concatenate([eid, eid])
        order = np.argsort(src, kind="stable")
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=self.n), out=indptr[1:])
        return indptr, dst[order].astype(np.int64), ids[order]


@dataclass(frozen=True)
class WeightedMultiGraph:
    graph: MultiGraph
    lf: np.ndarray = field(repr=False)
    lr: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.graph.n

    def weights(self, e: int) -> tuple[float, float]:
        return float(self.lf[e]), float(self.lr[e])


def build_cm(seq: DegreeSequence, rng: np.random.Generator) -> MultiGraph:
    """Uniform perfect matching of half-edges: shuffle, then pair neighbours."""
    half = np.repeat(np.arange(seq.n, dtype=np.int64), seq.d)
    half = rng.permutation(half)
    u, v = half[0::2].copy(), half[1::2].copy()
    u.setflags(write=False)
    v.setflags(write=False)
    return MultiGraph(seq.n, u, v)


def from_edges(n: int, edges) -> MultiGraph:
    arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    return MultiGraph(n, arr[:, 0].copy(), arr[:, 1].copy())


def assign_weights(g: MultiGraph, model: JointModel, rng: np.random.Generator) -> WeightedMultiGraph:
    lf, lr = sample_pairs(model, rng, g.m)
    return WeightedMultiGraph(g, lf, lr)


def with_weights(g: MultiGraph, lf, lr) -> WeightedMultiGraph:
    lf = np.asarray(lf, dtype=float)
    lr = np.asarray(lr, dtype=float)
    if lf.shape != (g.m,) or lr.shape != (g.m,):
        raise ValueError("need exactly one weight pair per edge")
    if np.any(lf < 0) or np.any(lr < 0):
        raise ValueError("weights must be non-negative")
    return WeightedMultiGraph(g, lf, lr)


def components(g: MultiGraph) -> tuple[np.ndarray, np.ndarray]:
    """Component labels and sizes.

    Labels are renumbered by the smallest vertex they contain, so component
    ``0`` always holds vertex ``0``.
    """
    adj = sparse.coo_matrix((np.ones(g.m), (g.u, g.v)), shape=(g.n, g.n)).tocsr()
    _, raw = csgraph.connected_components(adj, directed=False)
    _, first = np.unique(raw, return_index=True)
    # rank raw labels by first occurrence
    order = np.argsort(first)
    relabel = np.empty_like(order)
    relabel[order] = np.arange(order.size)
    labels = relabel[raw]
    return labels, np.bincount(labels)


def largest_component(g: MultiGraph) -> tuple[np.ndarray, np.ndarray, int]:
    """``(membership, sizes, giant_id)``; ties go to the smallest id."""
    labels, sizes = components(g)
    return labels, sizes, int(np.argmax(sizes))


def dump_graph(wg: WeightedMultiGraph, path) -> None:
    """Write ``n m`` then ``edgeId u v lF lR`` lines, 17 significant digits."""
    g = wg.graph
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for e in range(g.m):
            fh.write(f"{e} {int(g.u[e])} {int(g.v[e])} {wg.lf[e]:.17g} {wg.lr[e]:.17g}\n")


def load_graph(path) -> WeightedMultiGraph:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    n, m = (int(x) for x in lines[0].split())
    rows = [ln.split() for ln in lines[1 : 1 + m]]
    if len(rows) != m:
        raise ValueError(f"graph file declares {m} edges but holds {len(rows)}")
    g = MultiGraph(n, np.array([int(r[1]) for r in rows], dtype=np.int64), np.array([int(r[2]) for r in rows], dtype=np.int64))
    return with_weights(g, [float(r[3]) for r in rows], [float(r[4]) for r in rows])
