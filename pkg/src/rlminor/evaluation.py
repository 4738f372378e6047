"""Evaluation rollouts, success rate, and qubit efficiency ratio.

Each (agent, graph) pair rolls out stochastic policy episodes; every terminal
embedding is re-checked by the independent validator, and a CSV row
(graph_id, agent_seed, episode, success, qubits) is written per episode.
SR is the percentage of valid minors; QER divides the baseline's best qubit
count by the agent's best.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import ppo
from .augmentation import AugmentationSampler, apply_to_mask, apply_to_observation
from .embedding import qubit_count, validate_embedding
from .environment import EmbeddingEnv
from .problems import ProblemGraph
from .topology import HardwareGraph

EVAL_SEED_STRIDE = 10007


class ConfigError(ValueError):
    """Run configuration is inconsistent (dimensions, files, modes)."""


@dataclass(frozen=True)
class RunConfig:
    """Mirrors the CLI/JSON run configuration; defaults follow the protocol
    of 10 agents and 10 evaluation episodes per graph."""

    scenario: str = "complete"  # "complete" | "dataset"
    family: str = "chimera"
    m: int = 2
    g_size: int = 6
    dataset: str | None = None
    steps: int | None = None  # default 1M (complete) / 3M (dataset)
    agents: int = 10
    episodes: int = 10
    augment: str = "off"  # "off" | "train" | "train+test"
    seed: int = 0

    @property
    def total_steps(self) -> int:
        if self.steps is not None:
            return self.steps
        return 1_000_000 if self.scenario == "complete" else 3_000_000


@dataclass(frozen=True)
class EvalRecord:
    graph_id: int
    agent_seed: int
    episode: int
    success: bool
    qubits: int


@dataclass
class Aggregates:
    episodes: int
    successes: int
    sr: float
    mean_qubits: float | None
    std_qubits: float | None
    best_qubits: int | None


def success_rate(records: list[EvalRecord]) -> float:
    """Percentage of episodes whose embedding passed validation."""
    if not records:
        raise ValueError("success rate needs at least one record")
    return 100.0 * sum(r.success for r in records) / len(records)


def best_qubits(records: list[EvalRecord]) -> int | None:
    vals = [r.qubits for r in records if r.success]
    return min(vals) if vals else None


def qubit_efficiency_ratio(rl_records: list[EvalRecord], baseline_best: int) -> float | None:
    """Baseline best qubit count over the agent's best; None when the agent
    never produced a valid minor."""
    rl_best = best_qubits(rl_records)
    if rl_best is None:
        return None
    return baseline_best / rl_best


def aggregate(records: list[EvalRecord]) -> Aggregates:
    qubits = [r.qubits for r in records if r.success]
    return Aggregates(
        episodes=len(records),
        successes=sum(r.success for r in records),
        sr=success_rate(records),
        mean_qubits=float(np.mean(qubits)) if qubits else None,
        std_qubits=float(np.std(qubits)) if qubits else None,
        best_qubits=min(qubits) if qubits else None,
    )


def run_episode(
    policy: ppo.PolicyNet,
    env: EmbeddingEnv,
    g: ProblemGraph,
    rng: np.random.Generator,
    sampler: AugmentationSampler | None = None,
    greedy: bool = False,
):
    """One stochastic (or greedy) rollout; returns (success, qubits, steps).

    With a sampler, a fresh composed transform is drawn at every action step:
    the policy sees the permuted view and actions map back through the inverse.
    """
    obs = env.reset(g)
    done = False
    steps = 0
    while not done:
        mask = env.action_mask()
        if sampler is not None:
            perm, inv = sampler.sample()
            v_obs = apply_to_observation(obs, perm, env.layout)
            v_mask = apply_to_mask(mask, perm).astype(np.float32)
        else:
            v_obs, v_mask, inv = obs, mask.astype(np.float32), None
        probs = ppo.forward_policy(policy, v_obs, v_mask)
        action = int(np.argmax(probs)) if greedy else ppo.sample_action(probs, rng)
        if inv is not None:
            action = int(inv[action])
        out = env.step(action)
        obs = out.observation
        done = out.terminated
        steps += 1
    embedding = env.embedding()
    valid = all(env.chains) and bool(validate_embedding(g, env.hardware, embedding))
    return valid, qubit_count(embedding), steps


def evaluate(
    checkpoints: list,
    hardware: HardwareGraph,
    graphs: list[ProblemGraph],
    episodes: int = 10,
    augment: str = "off",
    csv_path: str | Path | None = None,
    greedy: bool = False,
) -> list[EvalRecord]:
    """Roll out every (checkpoint, graph, episode) triple and collect records.

    `checkpoints` holds (policy, header) pairs or paths; dimension mismatches
    raise ConfigError before any rollout.
    """
    loaded = []
    for c in checkpoints:
        if isinstance(c, (str, Path)):
            policy, _, header = ppo.load_checkpoint(c)
        else:
            policy, header = c
        loaded.append((policy, header))

    for policy, header in loaded:
        if header["action_dim"] != hardware.node_count:
            raise ConfigError(
                f"checkpoint expects {header['action_dim']} actions, hardware has {hardware.node_count}"
            )
        spare = header["obs_dim"] - 2 * hardware.node_count
        if spare <= 0 or spare % 2 != 0:
            raise ConfigError("checkpoint observation size does not match the hardware graph")
        if any(g.n > spare // 2 for g in graphs):
            raise ConfigError("a problem graph exceeds the checkpoint's padded size")
        topo = header.get("topology")
        if topo and (topo.get("family") != hardware.family or topo.get("m") != hardware.m):
            raise ConfigError(f"checkpoint was trained on {topo}, not {hardware.family} m={hardware.m}")

    records: list[EvalRecord] = []
    for policy, header in loaded:
        agent_seed = header["seed"]
        max_nodes = (header["obs_dim"] - 2 * hardware.node_count) // 2
        env = EmbeddingEnv(hardware, max_nodes=max_nodes)
        for g in graphs:
            gid = g.graph_id if g.graph_id is not None else g.n
            rng = np.random.default_rng(agent_seed * EVAL_SEED_STRIDE + gid)
            sampler = (
                AugmentationSampler(hardware, seed=agent_seed * EVAL_SEED_STRIDE + gid + 1)
                if augment == "train+test"
                else None
            )
            for ep in range(episodes):
                success, qubits, _ = run_episode(policy, env, g, rng, sampler=sampler, greedy=greedy)
                records.append(EvalRecord(gid, agent_seed, ep, success, qubits))

    if csv_path is not None:
        write_records_csv(records, csv_path)
    return records


def write_records_csv(records: list[EvalRecord], path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["graph_id", "agent_seed", "episode", "success", "qubits"])
        for r in records:
            writer.writerow([r.graph_id, r.agent_seed, r.episode, int(r.success), r.qubits])


def read_records_csv(path: str | Path) -> list[EvalRecord]:
    records = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            records.append(
                EvalRecord(
                    graph_id=int(row["graph_id"]),
                    agent_seed=int(row["agent_seed"]),
                    episode=int(row["episode"]),
                    success=bool(int(row["success"])),
                    qubits=int(row["qubits"]),
                )
            )
    return records
