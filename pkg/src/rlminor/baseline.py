"""Randomized shortest-path chain-growth heuristic.

Variables are embedded one at a time in decreasing-degree order (random tie
break). Each variable grows its chain from the qubit minimizing the total
vertex-weighted shortest-path cost to every already-embedded neighbor chain,
where a qubit's weight is weight_base**usage so congested qubits are
exponentially discouraged but temporary overlap stays possible. Refinement
sweeps then re-route one variable at a time while the weighted size
decreases; a try succeeds when no qubit is shared.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .embedding import Embedding, validate_embedding
from .problems import ProblemGraph
from .topology import HardwareGraph


@dataclass(frozen=True)
class BaselineConfig:
    tries: int = 100
    improvement_passes: int = 10
    weight_base: float | None = None  # default |V(H)|: any overlap outweighs any simple path
    seed: int = 0


@dataclass
class TryReport:
    try_index: int
    success: bool
    qubits: int | None


@dataclass
class BaselineResult:
    embedding: Embedding | None
    qubits: int | None
    reports: list[TryReport] = field(default_factory=list)

    @property
    def success(self) -> bool:
        return self.embedding is not None


class _TryFailed(Exception):
    """No feasible placement for a variable in this try."""


class _Router:
    def __init__(self, g: ProblemGraph, h: HardwareGraph, weight_base: float, rng: np.random.Generator):
        self.g = g
        self.h = h
        self.base = weight_base
        self.rng = rng
        self.usage = np.zeros(h.node_count, dtype=np.int64)
        self.chains: list[set[int] | None] = [None] * g.n
        self.g_neighbors = g.neighbors()

    def weights(self) -> np.ndarray:
        """Congestion weights with a vanishing random jitter; the jitter only
        breaks shortest-path ties, so route choice is randomized per try
        while distinct costs keep their order."""
        w = np.minimum(self.base ** self.usage.astype(np.float64), 1e300)
        return w * (1.0 + 1e-9 * self.rng.random(len(w)))

    def _dijkstra(self, sources: set[int], w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        dist = np.full(self.h.node_count, np.inf)
        parent = np.full(self.h.node_count, -1, dtype=np.int64)
        heap = []
        for s in sources:
            dist[s] = 0.0
            heap.append((0.0, s))
        heapq.heapify(heap)
        while heap:
            d, v = heapq.heappop(heap)
            if d > dist[v]:
                continue
            for q in self.h.neighbors[v]:
                q = int(q)
                nd = d + w[q]
                if nd < dist[q]:
                    dist[q] = nd
                    parent[q] = v
                    heapq.heappush(heap, (nd, q))
        return dist, parent

    def _min_random(self, candidates: np.ndarray, scores: np.ndarray) -> int:
        best = scores.min()
        pool = candidates[scores <= best]
        return int(pool[self.rng.integers(len(pool))])

    def place(self, var: int) -> None:
        embedded = [j for j in self.g_neighbors[var] if self.chains[j] is not None]
        if not embedded:
            w = self.weights()
            free = np.nonzero(self.usage == 0)[0]
            pool = free if len(free) else np.arange(self.h.node_count)
            root = self._min_random(pool, w[pool])
            self._commit(var, {root})
            return

        w = self.weights()
        dists, parents = [], []
        banned = set()
        for j in embedded:
            dist, parent = self._dijkstra(self.chains[j], w)
            dists.append(dist)
            parents.append(parent)
            banned |= self.chains[j]
        total = np.sum(dists, axis=0) - (len(embedded) - 1) * w
        candidates = np.array([q for q in range(self.h.node_count) if q not in banned], dtype=np.int64)
        if not len(candidates) or not np.isfinite(total[candidates].min()):
            raise _TryFailed(f"no reachable root for variable {var}")
        root = self._min_random(candidates, total[candidates])

        chain = {root}
        for j, parent in zip(embedded, parents):
            v = root
            while v not in self.chains[j]:
                chain.add(v)
                v = int(parent[v])
        self._commit(var, chain)

    def _commit(self, var: int, chain: set[int]) -> None:
        self.chains[var] = chain
        for q in chain:
            self.usage[q] += 1

    def _remove(self, var: int) -> set[int]:
        chain = self.chains[var]
        for q in chain:
            self.usage[q] -= 1
        self.chains[var] = None
        return chain

    def weighted_size(self) -> float:
        used = self.usage[self.usage > 0].astype(np.float64)
        return float(np.sum(used * np.minimum(self.base ** (used - 1), 1e300)))

    def overlap_free(self) -> bool:
        return int(self.usage.max()) <= 1


def _single_try(
    g: ProblemGraph, h: HardwareGraph, cfg: BaselineConfig, rng: np.random.Generator
) -> tuple[Embedding | None, int | None]:
    base = cfg.weight_base if cfg.weight_base is not None else float(h.node_count)
    router = _Router(g, h, base, rng)

    degrees = [len(nbrs) for nbrs in router.g_neighbors]
    order = sorted(range(g.n), key=lambda v: (-degrees[v], rng.random()))
    try:
        for var in order:
            router.place(var)

        # sweeps continue while the total weighted size decreases; individual
        # re-routes may move sideways so the search can leave plateaus
        for _ in range(cfg.improvement_passes):
            sweep_start = router.weighted_size()
            sweep_order = list(order)
            rng.shuffle(sweep_order)
            for var in sweep_order:
                before = router.weighted_size()
                old = router._remove(var)
                router.place(var)
                if router.weighted_size() > before:
                    router._remove(var)
                    router._commit(var, old)
            if router.weighted_size() >= sweep_start:
                break
    except _TryFailed:
        return None, None

    if not router.overlap_free():
        return None, None
    embedding = Embedding.from_chains([sorted(router.chains[v]) for v in range(g.n)], graph_id=g.graph_id, hardware=h)
    verdict = validate_embedding(g, h, embedding)
    if not verdict:
        return None, None
    return embedding, sum(len(c) for c in embedding.chains)


def heuristic_embed(g: ProblemGraph, h: HardwareGraph, cfg: BaselineConfig) -> BaselineResult:
    """Best valid embedding over cfg.tries independent restarts."""
    result = BaselineResult(embedding=None, qubits=None)
    for t in range(cfg.tries):
        rng = np.random.default_rng(np.random.SeedSequence((cfg.seed, t)))
        embedding, qubits = _single_try(g, h, cfg, rng)
        result.reports.append(TryReport(t, embedding is not None, qubits))
        if embedding is not None and (result.qubits is None or qubits < result.qubits):
            result.embedding = embedding
            result.qubits = qubits
    return result
