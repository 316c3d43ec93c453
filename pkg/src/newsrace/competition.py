"""The fake/correct news race on a weighted multigraph.

Correct news spreads unimpeded, so its arrival times are plain shortest-path
distances under ``lR``, shifted by the delay ``d``.  Fake news is a gated
shortest-path sweep under ``lF``: a vertex relays fake news only if it heard
it strictly before the correction (the source always relays).  A relay keeps
transmitting along every incident edge even if the correction lands while a
transmission is in flight; ties go to correct news.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .cm_graph import WeightedMultiGraph

INF = math.inf


class InconsistentArrivalMap(ValueError):
    """The correct-news arrival map does not belong to this graph/source."""


@njit(cache=True)
def _dijkstra(indptr, nbr, eid, w, source, start, gate):
    """Heap sweep from ``source``; with a gate, only gated vertices relay.

    ``gate`` is ignored when empty.  Returns arrival times.
    """
    n = indptr.size - 1
    dist = np.full(n, np.inf)
    done = np.zeros(n, dtype=np.bool_)
    dist[source] = start
    heap = [(start, source)]
    use_gate = gate.size > 0
    while len(heap) > 0:
        t, x = heapq.heappop(heap)
        if done[x]:
            continue
        done[x] = True
        if use_gate and x != source and not (t < gate[x]):
            continue
        for j in range(indptr[x], indptr[x + 1]):
            y = nbr[j]
            if done[y]:
                continue
            nt = t + w[eid[j]]
            if nt < dist[y]:
                dist[y] = nt
                heapq.heappush(heap, (nt, y))
    return dist


def _adjacency(wg: WeightedMultiGraph):
    # cached on the instance; graphs are immutable
    cache = wg.__dict__.get("_adj")
    if cache is None:
        cache = wg.graph.adjacency(skip_loops=True)
        object.__setattr__(wg, "_adj", cache)
    return cache


def correct_arrivals(wg: WeightedMultiGraph, source: int, d: float = 0.0) -> np.ndarray:
    """``C(v) = d + dist_lR(source, v)``; ``inf`` off the source's component."""
    indptr, nbr, eid = _adjacency(wg)
    return _dijkstra(indptr, nbr, eid, wg.lr, int(source), float(d), np.empty(0))


@dataclass(frozen=True)
class ExposureResult:
    source: int
    d: float
    correct_time: np.ndarray = field(repr=False)
    fake_time: np.ndarray = field(repr=False)
    exposed: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.exposed.size)

    @property
    def n_fake(self) -> int:
        return int(self.exposed.sum())

    def exposure_times(self) -> np.ndarray:
        """Sorted fake-news arrival times of the exposed vertices."""
        return np.sort(self.fake_time[self.exposed])


def fake_exposure(wg: WeightedMultiGraph, source: int, d: float, correct: np.ndarray) -> ExposureResult:
    """Gated fake-news sweep given correct-news arrivals ``correct``."""
    correct = np.asarray(correct, dtype=float)
    if correct.shape != (wg.n,):
        raise InconsistentArrivalMap(f"arrival map has shape {correct.shape}, graph has {wg.n} vertices")
    if not (0 <= source < wg.n) or correct[source] != d:
        raise InconsistentArrivalMap(f"arrival map does not start at source {source} with delay {d}")
    indptr, nbr, eid = _adjacency(wg)
    fake = _dijkstra(indptr, nbr, eid, wg.lf, int(source), 0.0, correct)
    exposed = fake < correct
    exposed[source] = True
    return ExposureResult(int(source), float(d), correct, fake, exposed)


def race(wg: WeightedMultiGraph, source: int, d: float = 0.0) -> ExposureResult:
    return fake_exposure(wg, source, d, correct_arrivals(wg, source, d))


def epidemic_curve(res: ExposureResult, grid) -> np.ndarray:
    """Fraction of all n vertices exposed by each time in ``grid``."""
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted ascending")
    times = res.exposure_times()
    return np.searchsorted(times, grid, side="right") / res.n


def time_to_reach(res: ExposureResult, a: int) -> float:
    """Time at which the ``a``-th exposed vertex hears fake news."""
    if a < 1:
        raise ValueError("a must be >= 1")
    times = res.exposure_times()
    return float(times[a - 1]) if a <= times.size else INF


def unrestricted_fake(wg: WeightedMultiGraph, source: int) -> np.ndarray:
    """Fake-news distances with no blocking at all."""
    indptr, nbr, eid = _adjacency(wg)
    return _dijkstra(indptr, nbr, eid, wg.lf, int(source), 0.0, np.empty(0))
