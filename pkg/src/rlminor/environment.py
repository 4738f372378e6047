"""Episodic minor-embedding environment.

One problem variable is active at a time, scheduled round-robin over the
variables that still miss inter-chain links. The action picks a hardware
qubit for the active variable's chain; qubits not adjacent to the chain are
masked out, so chains stay connected by construction. Every step costs -0.1.

Observation layout: [S_G | S_R | S_H | S_C]
  S_G  missing-link counts per problem node (padded to max_nodes)
  S_R  one-hot active node (padded to max_nodes)
  S_H  qubit availability restricted to the active chain's neighborhood;
       this is exactly the action mask
  S_C  membership flags of the active chain
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .embedding import Embedding, validate_embedding
from .problems import ProblemGraph
from .topology import HardwareGraph

STEP_REWARD = -0.1


class MaskViolation(RuntimeError):
    """A masked action was submitted; the agent must never do this."""


@dataclass(frozen=True)
class ObsLayout:
    max_nodes: int
    hw_nodes: int

    @property
    def dim(self) -> int:
        return 2 * self.max_nodes + 2 * self.hw_nodes

    @property
    def sg(self) -> slice:
        return slice(0, self.max_nodes)

    @property
    def sr(self) -> slice:
        return slice(self.max_nodes, 2 * self.max_nodes)

    @property
    def sh(self) -> slice:
        return slice(2 * self.max_nodes, 2 * self.max_nodes + self.hw_nodes)

    @property
    def sc(self) -> slice:
        return slice(2 * self.max_nodes + self.hw_nodes, self.dim)


@dataclass(frozen=True)
class StepOutcome:
    observation: np.ndarray
    reward: float
    terminated: bool
    success: bool


class EmbeddingEnv:
    """Mutable single-agent environment over one hardware graph.

    `strict=True` recounts missing links from scratch after every step and
    cross-checks terminal success against the full validator (test mode).
    """

    def __init__(
        self,
        hardware: HardwareGraph,
        max_nodes: int | None = None,
        strict: bool = False,
        trace=None,
    ):
        self.hardware = hardware
        self.max_nodes = max_nodes
        self.strict = strict
        self.trace = trace
        self.problem: ProblemGraph | None = None
        self.layout: ObsLayout | None = None
        self.terminated = True  # live only between reset() and termination
        if max_nodes is not None:
            self.layout = ObsLayout(max_nodes, hardware.node_count)

    # -- episode lifecycle -------------------------------------------------

    def reset(self, problem: ProblemGraph) -> np.ndarray:
        if self.max_nodes is None:
            self.max_nodes = problem.n
            self.layout = ObsLayout(self.max_nodes, self.hardware.node_count)
        if problem.n > self.max_nodes:
            raise ValueError(f"problem has {problem.n} nodes, environment allows {self.max_nodes}")
        if not problem.is_connected():
            raise ValueError("problem graph must be connected")
        self.problem = problem
        self.g_neighbors = problem.neighbors()
        n = problem.n
        hw = self.hardware.node_count
        self.chains: list[list[int]] = [[] for _ in range(n)]
        self.unassigned = np.ones(hw, dtype=bool)
        self.owner = np.full(hw, -1, dtype=np.int64)
        # adj_to_chain[i][q]: q is H-adjacent to some qubit of chain i
        self.adj_to_chain = np.zeros((n, hw), dtype=bool)
        self.linked = np.zeros((n, n), dtype=bool)
        self.missing = np.array([len(self.g_neighbors[i]) for i in range(n)], dtype=np.int64)
        self.pointer = 0
        self.steps = 0
        self.terminated = False
        self.success = False
        return self.observation()

    def action_mask(self) -> np.ndarray:
        """1 on qubits the active chain may take: unassigned, and adjacent to
        the chain once it is nonempty."""
        if self.chains[self.pointer]:
            return self.adj_to_chain[self.pointer] & self.unassigned
        return self.unassigned.copy()

    def observation(self) -> np.ndarray:
        lay = self.layout
        obs = np.zeros(lay.dim, dtype=np.float32)
        n = self.problem.n
        obs[lay.sg][:n] = self.missing
        if not self.terminated:
            obs[lay.sr][self.pointer] = 1.0
        obs[lay.sh] = self.action_mask()
        chain = self.chains[self.pointer]
        if chain:
            obs[lay.sc][np.array(chain)] = 1.0
        return obs

    def step(self, action: int) -> StepOutcome:
        if self.terminated:
            raise RuntimeError("episode already terminated; call reset()")
        mask = self.action_mask()
        if not mask[action]:
            raise MaskViolation(f"action {action} is masked for node {self.pointer}")
        cur = self.pointer
        self.chains[cur].append(int(action))
        self.unassigned[action] = False
        self.owner[action] = cur
        self.adj_to_chain[cur][self.hardware.neighbors[action]] = True

        # new chain adjacencies created by this qubit decrement both endpoints
        for p in self.hardware.neighbors[action]:
            other = int(self.owner[p])
            if other < 0 or other == cur or self.linked[cur, other]:
                continue
            if self.problem.has_edge(cur, other):
                self.linked[cur, other] = self.linked[other, cur] = True
                self.missing[cur] -= 1
                self.missing[other] -= 1

        self.steps += 1
        if self.strict:
            self._assert_invariants()

        if int(self.missing.sum()) == 0:
            self.terminated = True
            self.success = True
        else:
            self._advance_pointer()
            if not self.action_mask().any():
                self.terminated = True
                self.success = False
        if self.strict and self.terminated:
            assert self.success == bool(validate_embedding(self.problem, self.hardware, self.embedding()))

        outcome = StepOutcome(self.observation(), STEP_REWARD, self.terminated, self.success)
        if self.trace is not None:
            self.trace.write(
                json.dumps(
                    {
                        "step": self.steps,
                        "action": int(action),
                        "reward": STEP_REWARD,
                        "mask_popcount": int(self.action_mask().sum()) if not self.terminated else 0,
                        "success": self.success,
                    }
                )
                + "\n"
            )
        return outcome

    def _advance_pointer(self) -> None:
        n = self.problem.n
        for off in range(1, n + 1):
            cand = (self.pointer + off) % n
            if self.missing[cand] > 0:
                self.pointer = cand
                return
        raise AssertionError("no incomplete node while missing sum > 0")

    # -- inspection ----------------------------------------------------------

    def embedding(self) -> Embedding:
        return Embedding.from_chains(
            self.chains, graph_id=self.problem.graph_id, hardware=self.hardware
        )

    def is_success(self) -> bool:
        """Terminal success, checked against the independent validator."""
        if not self.terminated:
            raise RuntimeError("episode still live")
        valid = bool(validate_embedding(self.problem, self.hardware, self.embedding())) if all(
            self.chains
        ) else False
        assert valid == self.success, "validator disagrees with missing-links counter"
        return valid

    def recount_missing_links(self) -> np.ndarray:
        """Missing links recomputed from scratch (test oracle for the
        incremental counters)."""
        n = self.problem.n
        chain_sets = [set(c) for c in self.chains]
        missing = np.zeros(n, dtype=np.int64)
        for i in range(n):
            for j in self.g_neighbors[i]:
                if not chain_sets[i] or not chain_sets[j]:
                    missing[i] += 1
                    continue
                adjacent = any(
                    int(q) in chain_sets[j] for p in chain_sets[i] for q in self.hardware.neighbors[p]
                )
                if not adjacent:
                    missing[i] += 1
        return missing

    def _assert_invariants(self) -> None:
        assert (self.missing == self.recount_missing_links()).all()
        assert int((~self.unassigned).sum()) == sum(len(c) for c in self.chains) == self.steps
