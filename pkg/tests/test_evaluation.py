import csv

import numpy as np
import pytest
import torch

from rlminor import evaluation as ev
from rlminor import ppo
from rlminor import problems as pr
from rlminor import topology as topo
from rlminor.environment import EmbeddingEnv

C1 = topo.build_chimera(1)


def rec(graph_id, seed, episode, success, qubits):
    return ev.EvalRecord(graph_id, seed, episode, success, qubits)


def test_success_rate_arithmetic():
    records = [rec(0, 0, i, True, 4) for i in range(100)]
    assert ev.success_rate(records) == 100.0
    records = [rec(0, 0, i, False, 4) for i in range(10)]
    assert ev.success_rate(records) == 0.0
    assert ev.qubit_efficiency_ratio(records, baseline_best=4) is None
    with pytest.raises(ValueError):
        ev.success_rate([])


def test_qer_arithmetic():
    ok = [rec(0, 0, 0, True, 4)]
    assert ev.qubit_efficiency_ratio(ok, baseline_best=4) == pytest.approx(1.0)
    worse = [rec(0, 0, 0, True, 44)]
    assert ev.qubit_efficiency_ratio(worse, baseline_best=22) == pytest.approx(0.5)


def fresh_checkpoint(hardware, max_nodes, seed=0):
    gen = torch.Generator().manual_seed(seed)
    layout_dim = 2 * max_nodes + 2 * hardware.node_count
    policy = ppo.PolicyNet(layout_dim, hardware.node_count, gen)
    header = {
        "obs_dim": layout_dim,
        "action_dim": hardware.node_count,
        "seed": seed,
        "topology": {"family": hardware.family, "m": hardware.m},
    }
    return policy, header


def test_untrained_agent_yields_only_valid_or_failed(tmp_path):
    ck = fresh_checkpoint(C1, max_nodes=4)
    graphs = [pr.complete_graph(4)]
    records = ev.evaluate([ck], C1, graphs, episodes=30, csv_path=tmp_path / "r.csv")
    assert len(records) == 30
    for r in records:
        if r.success:
            assert r.qubits >= 4


def test_episode_count_and_csv_shape(tmp_path):
    cks = [fresh_checkpoint(C1, 4, seed=s) for s in range(10)]
    records = ev.evaluate(cks, C1, [pr.complete_graph(4)], episodes=10, csv_path=tmp_path / "r.csv")
    assert len(records) == 100
    with open(tmp_path / "r.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 100
    assert set(rows[0]) == {"graph_id", "agent_seed", "episode", "success", "qubits"}
    again = ev.read_records_csv(tmp_path / "r.csv")
    assert again == records


def test_eval_deterministic(tmp_path):
    ck = fresh_checkpoint(C1, 4, seed=3)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    ev.evaluate([ck], C1, [pr.complete_graph(4)], episodes=15, csv_path=p1)
    ev.evaluate([ck], C1, [pr.complete_graph(4)], episodes=15, csv_path=p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_success_rows_pass_independent_validator():
    from rlminor.embedding import validate_embedding

    ck = fresh_checkpoint(C1, 3, seed=1)
    policy, header = ck
    env = EmbeddingEnv(C1, max_nodes=3)
    g = pr.complete_graph(3)
    rng = np.random.default_rng(0)
    for _ in range(20):
        success, qubits, _ = ev.run_episode(policy, env, g, rng)
        assert success == validate_embedding(g, C1, env.embedding()).valid


def test_incompatible_dimensions_raise_config_error():
    ck = fresh_checkpoint(C1, 4)
    z1 = topo.build_zephyr(1)
    with pytest.raises(ev.ConfigError):
        ev.evaluate([ck], z1, [pr.complete_graph(3)], episodes=1)
    with pytest.raises(ev.ConfigError):
        ev.evaluate([ck], C1, [pr.complete_graph(6)], episodes=1)  # exceeds padding
    mismatched = fresh_checkpoint(topo.build_chimera(2), 4)
    with pytest.raises(ev.ConfigError):
        ev.evaluate([mismatched], C1, [pr.complete_graph(3)], episodes=1)


def test_aggregates_recomputable_from_records():
    records = [
        rec(0, 0, 0, True, 5),
        rec(0, 0, 1, True, 7),
        rec(0, 0, 2, False, 9),
        rec(0, 1, 0, True, 6),
    ]
    agg = ev.aggregate(records)
    assert agg.episodes == 4 and agg.successes == 3
    assert agg.sr == pytest.approx(75.0)
    assert agg.best_qubits == 5
    assert agg.mean_qubits == pytest.approx(6.0)


def test_greedy_mode_is_deterministic():
    ck = fresh_checkpoint(C1, 3, seed=2)
    records1 = ev.evaluate([ck], C1, [pr.complete_graph(3)], episodes=3, greedy=True)
    records2 = ev.evaluate([ck], C1, [pr.complete_graph(3)], episodes=3, greedy=True)
    assert records1 == records2
    assert len({r.qubits for r in records1}) == 1


def test_augmented_evaluation_still_validates():
    ck = fresh_checkpoint(C1, 4, seed=4)
    records = ev.evaluate([ck], C1, [pr.complete_graph(4)], episodes=10, augment="train+test")
    assert len(records) == 10
    assert all(r.qubits > 0 for r in records)


def test_run_config_defaults():
    cfg = ev.RunConfig()
    assert cfg.agents == 10 and cfg.episodes == 10
    assert cfg.total_steps == 1_000_000
    assert ev.RunConfig(scenario="dataset").total_steps == 3_000_000
    assert ev.RunConfig(steps=5000).total_steps == 5000
