"""Embeddings: minor validation, parameter setting, and size metrics.

An embedding maps each problem-graph node i to a chain C_i of hardware
qubits. It is a valid minor when chains are nonempty, pairwise disjoint,
each chain induces a connected subgraph of H, and every problem edge (i, j)
is realized by at least one hardware edge between C_i and C_j.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .problems import ProblemGraph
from .topology import HardwareGraph

H_SUM_TOL = 1e-9


class StructuralError(ValueError):
    """The embedding does not even reference g and h consistently
    (wrong chain count, dangling qubit index); distinct from invalidity."""


@dataclass(frozen=True)
class Embedding:
    """Chains per problem node, plus the identities they refer to."""

    chains: tuple[tuple[int, ...], ...]
    graph_id: int | None = None
    family: str | None = None
    m: int | None = None

    @staticmethod
    def from_chains(chains, graph_id=None, hardware: HardwareGraph | None = None) -> "Embedding":
        return Embedding(
            chains=tuple(tuple(int(q) for q in c) for c in chains),
            graph_id=graph_id,
            family=hardware.family if hardware else None,
            m=hardware.m if hardware else None,
        )


def qubit_count(e: Embedding) -> int:
    return sum(len(c) for c in e.chains)


@dataclass(frozen=True)
class Verdict:
    valid: bool
    clause: str | None = None  # "empty_chain" | "overlap" | "disconnected" | "missing_edge"
    detail: str | None = None

    def __bool__(self) -> bool:
        return self.valid


def validate_embedding(g: ProblemGraph, h: HardwareGraph, e: Embedding) -> Verdict:
    """Check the four minor clauses in order; diagnostics name the first failure."""
    if len(e.chains) != g.n:
        raise StructuralError(f"embedding has {len(e.chains)} chains for a {g.n}-node graph")
    for i, chain in enumerate(e.chains):
        for q in chain:
            if not 0 <= q < h.node_count:
                raise StructuralError(f"chain {i} references qubit {q} outside H")

    for i, chain in enumerate(e.chains):
        if not chain:
            return Verdict(False, "empty_chain", f"node {i} has an empty chain")

    owner: dict[int, int] = {}
    for i, chain in enumerate(e.chains):
        for q in chain:
            if q in owner:
                return Verdict(False, "overlap", f"qubit {q} in chains {owner[q]} and {i}")
            owner[q] = i

    for i, chain in enumerate(e.chains):
        members = set(chain)
        seen = {chain[0]}
        stack = [chain[0]]
        while stack:
            v = stack.pop()
            for w in h.neighbors[v]:
                w = int(w)
                if w in members and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if seen != members:
            return Verdict(False, "disconnected", f"chain of node {i} is not connected in H")

    chain_sets = [set(c) for c in e.chains]
    for a, b in g.edges:
        if not _chains_adjacent(h, chain_sets[a], chain_sets[b]):
            return Verdict(False, "missing_edge", f"problem edge ({a}, {b}) has no coupler")
    return Verdict(True)


def _chains_adjacent(h: HardwareGraph, ca: set[int], cb: set[int]) -> bool:
    if len(cb) < len(ca):
        ca, cb = cb, ca
    for p in ca:
        for q in h.neighbors[p]:
            if int(q) in cb:
                return True
    return False


@dataclass
class EmbeddedIsing:
    """Parameter-set minor: per-qubit biases, intra-chain couplings on a
    spanning tree of each chain, and one hardware edge per problem edge.

    The intra-chain term is measured relative to its coherent baseline, so the
    energy of a coherent spin assignment equals the problem Ising energy.
    """

    h_prime: dict[int, float] = field(default_factory=dict)
    chain_couplings: list[tuple[int, int, float]] = field(default_factory=list)
    inter_couplings: list[tuple[int, int, float]] = field(default_factory=list)

    def energy(self, spins: dict[int, int] | np.ndarray) -> float:
        total = 0.0
        for q, bias in self.h_prime.items():
            total -= bias * spins[q]
        for p, q, coupling in self.inter_couplings:
            total -= coupling * spins[p] * spins[q]
        for p, q, f in self.chain_couplings:
            total += f * (spins[p] * spins[q] - 1)
        return total


def ising_energy(g: ProblemGraph, spins) -> float:
    """Problem Ising energy -sum h_i s_i - sum J_ij s_i s_j."""
    if g.h is None or g.j is None:
        raise ValueError("problem graph carries no Ising coefficients")
    total = 0.0
    for i in range(g.n):
        total -= g.h[i] * spins[i]
    for (a, b), coupling in zip(g.edges, g.j):
        total -= coupling * spins[a] * spins[b]
    return total


def _chain_spanning_tree(h: HardwareGraph, chain: tuple[int, ...]) -> list[tuple[int, int]]:
    members = set(chain)
    seen = {chain[0]}
    stack = [chain[0]]
    tree = []
    while stack:
        v = stack.pop()
        for w in h.neighbors[v]:
            w = int(w)
            if w in members and w not in seen:
                seen.add(w)
                tree.append((v, w))
                stack.append(w)
    return tree


def embed_parameters(g: ProblemGraph, h: HardwareGraph, e: Embedding, chain_strength: float) -> EmbeddedIsing:
    """Distribute biases and couplings over a valid embedding.

    h_i is split uniformly over the chain, F = -chain_strength sits on every
    spanning-tree edge of the chain, and each J_ij lands on the
    lexicographically smallest hardware edge between the two chains.
    """
    if chain_strength <= 0:
        raise ValueError("chain_strength must be positive")
    if g.h is None or g.j is None:
        raise ValueError("problem graph carries no Ising coefficients")
    verdict = validate_embedding(g, h, e)
    if not verdict:
        raise ValueError(f"invalid embedding: {verdict.clause} ({verdict.detail})")

    out = EmbeddedIsing()
    for i, chain in enumerate(e.chains):
        share = g.h[i] / len(chain)
        for q in chain:
            out.h_prime[q] = share
        for p, q in _chain_spanning_tree(h, chain):
            out.chain_couplings.append((p, q, -chain_strength))

    chain_sets = [set(c) for c in e.chains]
    for (a, b), coupling in zip(g.edges, g.j):
        candidates = []
        for p in chain_sets[a]:
            for q in h.neighbors[p]:
                if int(q) in chain_sets[b]:
                    candidates.append((min(p, int(q)), max(p, int(q))))
        p, q = min(candidates)
        out.inter_couplings.append((p, q, coupling))
    return out


def expand_spins(e: Embedding, logical_spins, hw_nodes: int) -> np.ndarray:
    """Coherent qubit assignment: every qubit of chain i carries spin s_i."""
    spins = np.zeros(hw_nodes, dtype=np.int64)
    for i, chain in enumerate(e.chains):
        for q in chain:
            spins[q] = logical_spins[i]
    return spins


# -- JSON wire format ------------------------------------------------------


def embedding_to_json(e: Embedding) -> str:
    rec = {
        "graph_id": e.graph_id,
        "topology": {"family": e.family, "m": e.m},
        "chains": [list(c) for c in e.chains],
    }
    return json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n"


def embedding_from_json(text: str) -> Embedding:
    rec = json.loads(text)
    topo = rec.get("topology") or {}
    return Embedding(
        chains=tuple(tuple(int(q) for q in c) for c in rec["chains"]),
        graph_id=rec.get("graph_id"),
        family=topo.get("family"),
        m=topo.get("m"),
    )
