import io
import json

import numpy as np
import pytest

from rlminor import problems as pr
from rlminor import topology as topo
from rlminor.embedding import validate_embedding
from rlminor.environment import STEP_REWARD, EmbeddingEnv, MaskViolation, ObsLayout

C1 = topo.build_chimera(1)
C2 = topo.build_chimera(2)


def rollout_random(env, g, rng):
    out = None
    obs = env.reset(g)
    while True:
        mask = env.action_mask()
        action = int(rng.choice(np.nonzero(mask)[0]))
        out = env.step(action)
        if out.terminated:
            return out


def test_reset_k4():
    env = EmbeddingEnv(C1)
    obs = env.reset(pr.complete_graph(4))
    lay = env.layout
    assert np.array_equal(obs[lay.sg], [3, 3, 3, 3])
    assert np.array_equal(obs[lay.sr], [1, 0, 0, 0])
    assert np.array_equal(obs[lay.sh], np.ones(8))
    assert np.array_equal(obs[lay.sc], np.zeros(8))


def test_reset_deterministic_and_padded():
    env = EmbeddingEnv(C1, max_nodes=10)
    g = pr.complete_graph(4)
    obs1 = env.reset(g)
    obs2 = env.reset(g)
    assert np.array_equal(obs1, obs2)
    lay = env.layout
    assert lay.dim == 2 * 10 + 2 * 8
    assert np.array_equal(obs1[lay.sg], [3, 3, 3, 3, 0, 0, 0, 0, 0, 0])
    assert np.array_equal(obs1[lay.sr], [1, 0, 0, 0, 0, 0, 0, 0, 0, 0])


def test_reset_rejects_oversize_and_disconnected():
    env = EmbeddingEnv(C1, max_nodes=3)
    with pytest.raises(ValueError):
        env.reset(pr.complete_graph(4))
    env2 = EmbeddingEnv(C1)
    with pytest.raises(ValueError):
        env2.reset(pr.ProblemGraph.from_edges(4, [(0, 1), (2, 3)]))


def test_fig5_mask():
    """Chains {1}, {2}, {5} on one cell with the {2}-chain active admit exactly
    qubits 4, 6 and 7."""
    env = EmbeddingEnv(C1, strict=True)
    env.reset(pr.complete_graph(3))
    for action in (5, 2, 1):
        env.step(action)
    assert env.chains[env.pointer] == [2]
    assert sorted(np.nonzero(env.action_mask())[0].tolist()) == [4, 6, 7]


def test_fig6_observation():
    env = EmbeddingEnv(C1, strict=True)
    env.reset(pr.complete_graph(4))
    for action in (5, 2, 1, 3):
        out = env.step(action)
    lay = env.layout
    obs = out.observation
    assert np.array_equal(obs[lay.sg], [0, 2, 2, 2])
    assert np.array_equal(obs[lay.sr], [0, 1, 0, 0])
    assert np.array_equal(obs[lay.sh], [0, 0, 0, 0, 1, 0, 1, 1])
    assert np.array_equal(obs[lay.sc], [0, 0, 1, 0, 0, 0, 0, 0])


def test_fresh_reset_mask_all_ones():
    env = EmbeddingEnv(C2)
    env.reset(pr.complete_graph(5))
    assert env.action_mask().all()


def test_k3_four_step_success():
    env = EmbeddingEnv(C1, strict=True)
    env.reset(pr.complete_graph(3))
    rewards = []
    for action in (0, 4, 1, 5):
        out = env.step(action)
        rewards.append(out.reward)
    assert out.terminated and out.success
    assert sum(rewards) == pytest.approx(-0.4)
    assert sum(len(c) for c in env.chains) == 4
    assert env.is_success()
    assert validate_embedding(env.problem, C1, env.embedding()).valid


def test_reward_constant_every_step():
    rng = np.random.default_rng(0)
    env = EmbeddingEnv(C2)
    obs = env.reset(pr.complete_graph(5))
    while True:
        out = env.step(int(rng.choice(np.nonzero(env.action_mask())[0])))
        assert out.reward == STEP_REWARD
        if out.terminated:
            break


def test_masked_action_raises():
    env = EmbeddingEnv(C1)
    env.reset(pr.complete_graph(3))
    env.step(0)  # chain of node 0 is {0}; node 1 is now active with full mask
    env.step(4)  # node 2 active
    env.step(1)  # back to node 0, whose chain {0} only admits its neighbors
    with pytest.raises(MaskViolation):
        env.step(2)  # qubit 2 is not adjacent to chain {0}
    with pytest.raises(RuntimeError):
        EmbeddingEnv(C1).step(0)


def test_mask_exhaustion_fails_episode():
    """A chain whose whole neighborhood is assigned terminates without success."""
    # frozen random trajectory (seed 0) that boxes itself in
    actions = [27, 19, 15, 7, 9, 1, 11, 3, 8, 2, 14, 17, 29, 21, 24, 6, 13, 20,
               28, 23, 12, 18, 25, 4, 30, 31, 5, 10, 0, 26, 22]
    env = EmbeddingEnv(C2, strict=True)
    env.reset(pr.complete_graph(6))
    for action in actions:
        out = env.step(action)
    assert out.terminated and not out.success
    assert not env.action_mask().any()
    assert env.missing.sum() > 0
    assert not env.is_success()


def test_random_play_fails_sometimes_on_c2():
    failures = 0
    for trial in range(100):
        env = EmbeddingEnv(C2)
        out = rollout_random(env, pr.complete_graph(6), np.random.default_rng(trial))
        failures += not out.success
    assert failures > 0


def test_success_agrees_with_validator_on_random_rollouts():
    rng = np.random.default_rng(123)
    hardware = [C1, C2, topo.build_zephyr(1)]
    for trial in range(1000):
        h = hardware[trial % 3]
        env = EmbeddingEnv(h, strict=(trial % 100 == 0))
        n = int(rng.integers(3, 6))
        out = rollout_random(env, pr.complete_graph(n), rng)
        assert env.is_success() == out.success


def test_step_conservation_and_chain_connectivity():
    rng = np.random.default_rng(5)
    env = EmbeddingEnv(C2, strict=True)  # strict recounts missing links each step
    g = pr.complete_graph(6)
    obs = env.reset(g)
    steps = 0
    while True:
        mask = env.action_mask()
        out = env.step(int(rng.choice(np.nonzero(mask)[0])))
        steps += 1
        assert steps == sum(len(c) for c in env.chains) == int((~env.unassigned).sum())
        for chain in env.chains:
            if chain:
                members = set(chain)
                seen = {chain[0]}
                frontier = [chain[0]]
                while frontier:
                    v = frontier.pop()
                    for w in env.hardware.neighbors[v]:
                        if int(w) in members and int(w) not in seen:
                            seen.add(int(w))
                            frontier.append(int(w))
                assert seen == members
        if out.terminated:
            break
    assert steps <= C2.node_count


def test_episode_length_bounded_by_hardware():
    for trial in range(20):
        env = EmbeddingEnv(C1)
        out = rollout_random(env, pr.complete_graph(5), np.random.default_rng(trial))
        assert env.steps <= C1.node_count


def test_pointer_skips_complete_nodes():
    env = EmbeddingEnv(C1, strict=True)
    env.reset(pr.complete_graph(4))
    for action in (5, 2, 1, 3):
        env.step(action)
    # node 0 is complete; the pointer wrapped past it to node 1
    assert env.pointer == 1
    assert env.missing[0] == 0


def test_trajectory_trace_jsonl():
    buf = io.StringIO()
    env = EmbeddingEnv(C1, trace=buf)
    env.reset(pr.complete_graph(3))
    for action in (0, 4, 1, 5):
        env.step(action)
    lines = [json.loads(line) for line in buf.getvalue().splitlines()]
    assert len(lines) == 4
    assert lines[0]["step"] == 1 and lines[0]["action"] == 0
    assert all(line["reward"] == STEP_REWARD for line in lines)
    assert lines[-1]["success"] is True
    assert set(lines[0]) == {"step", "action", "reward", "mask_popcount", "success"}


def test_obs_layout_slices():
    lay = ObsLayout(max_nodes=10, hw_nodes=32)
    assert lay.dim == 84
    assert lay.sg == slice(0, 10)
    assert lay.sr == slice(10, 20)
    assert lay.sh == slice(20, 52)
    assert lay.sc == slice(52, 84)
