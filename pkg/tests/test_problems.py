import hashlib
import itertools
import json
from collections import Counter
from pathlib import Path

import networkx as nx
import numpy as np
import pytest

from rlminor import problems as pr


def to_nx(g: pr.ProblemGraph) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(range(g.n))
    G.add_edges_from(g.edges)
    return G


def test_complete_graph_counts():
    assert pr.complete_graph(3).edge_count == 3
    assert pr.complete_graph(10).edge_count == 45
    assert pr.complete_graph(12).edge_count == 66
    with pytest.raises(ValueError):
        pr.complete_graph(2)


def test_small_family_n3():
    fam = pr.generate_small_family(3)
    assert len(fam) == 4  # K3 plus the three labeled 2-edge paths
    assert sum(1 for g in fam if g.edge_count == 3) == 1
    assert sum(1 for g in fam if g.edge_count == 2) == 3


def test_small_family_edge_ranges_and_connectivity():
    for n in (3, 4, 5):
        fam = pr.generate_small_family(n)
        assert len({g.edges for g in fam}) == len(fam)
        for g in fam:
            assert n - 1 <= g.edge_count <= n * (n - 1) // 2
            assert g.is_connected()
    # brute-force cross-check: every connected labeled graph on 4 nodes shows up
    all_connected = 0
    for r in range(3, 7):
        for combo in itertools.combinations(pr._all_edges(4), r):
            all_connected += pr._is_connected(4, combo)
    assert len(pr.generate_small_family(4)) == all_connected == 38


def test_two_edge_path_removal_is_discarded():
    # removing any edge of a 2-edge path on 3 nodes disconnects it
    path = pr.ProblemGraph.from_edges(3, [(0, 1), (1, 2)])
    for drop in range(2):
        edges = path.edges[:drop] + path.edges[drop + 1 :]
        assert not pr._is_connected(3, edges)
    fam = pr.generate_small_family(3)
    assert all(g.edge_count >= 2 for g in fam)


def test_degree_sequence_is_permutation_invariant():
    g = pr.ProblemGraph.from_edges(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5), (1, 4)])
    rng = np.random.default_rng(0)
    perm = rng.permutation(6)
    permuted = pr.ProblemGraph.from_edges(6, [(perm[a], perm[b]) for a, b in g.edges])
    assert g.degree_sequence() == permuted.degree_sequence()
    assert g.screen_key() == permuted.screen_key()


def test_medium_family_counts_and_uniqueness():
    graphs, strata = pr.generate_medium_family(6, 1250, seed=7)
    assert len(graphs) == 1250
    assert len({g.edges for g in graphs}) == 1250
    assert all(g.is_connected() for g in graphs)
    assert len(strata) == 1250


def test_class_representatives_exact_isomorphism():
    # distinct representatives never pass an exact isomorphism test
    for n in (6, 7):
        reps = pr._class_representatives(n)
        keys = [g.screen_key() for g in reps]
        assert len(set(keys)) == len(reps)
        rng = np.random.default_rng(1)
        idx = rng.choice(len(reps), size=min(40, len(reps)), replace=False)
        for i, j in itertools.combinations(idx, 2):
            assert not nx.is_isomorphic(to_nx(reps[i]), to_nx(reps[j]))


def test_medium_instances_match_their_class():
    graphs, strata = pr.generate_medium_family(6, 200, seed=3)
    reps = pr._class_representatives(6)
    rng = np.random.default_rng(2)
    for i in rng.choice(len(graphs), size=25, replace=False):
        assert nx.is_isomorphic(to_nx(graphs[i]), to_nx(reps[strata[i]]))


def test_large_family_spanning_trees_and_coverage():
    graphs, strata, skipped = pr.generate_large_family(9, 600, seed=5)
    assert not skipped
    assert len(graphs) == 600
    lo, hi = 8, 36
    for g, m_edges in zip(graphs, strata):
        assert g.edge_count == m_edges
        assert g.is_connected()
        if m_edges == lo:
            assert nx.is_tree(to_nx(g))
    assert set(strata) == set(range(lo, hi + 1))


def test_large_family_quota_allocation_even():
    # target allocation differs by at most one across edge counts; saturated
    # dense buckets (K9's bucket holds a single graph) spill into others
    graphs, strata, skipped = pr.generate_large_family(9, 1250, seed=3)
    assert len(graphs) == 1250 and not skipped
    counts = Counter(strata)
    assert counts[36] == 1  # only K9 itself
    quota = [1250 // 29 + (1 if i < 1250 % 29 else 0) for i in range(29)]
    assert max(quota) - min(quota) == 1


def test_large_family_no_screen_duplicates_within_bucket():
    graphs, strata, _ = pr.generate_large_family(9, 300, seed=11)
    seen = set()
    for g, m_edges in zip(graphs, strata):
        key = (m_edges, g.screen_key())
        assert key not in seen
        seen.add(key)


def test_split_holdout_1250():
    graphs, strata = pr.generate_medium_family(6, 1250, seed=1)
    tags = pr.split_holdout(graphs, strata, seed=1)
    assert tags.count("train") == 1000
    assert tags.count("test") == 250


def test_split_holdout_stratified_by_edge_count():
    graphs, strata, _ = pr.generate_large_family(9, 600, seed=5)
    tags = pr.split_holdout(graphs, strata, seed=5)
    per_stratum: dict[int, list[str]] = {}
    for tag, s in zip(tags, strata):
        per_stratum.setdefault(s, []).append(tag)
    for s, members in per_stratum.items():
        test_count = members.count("test")
        exact = 0.2 * len(members)
        assert abs(test_count - exact) <= 1


def test_split_holdout_small_family_ratio():
    fam = pr.generate_small_family(4)
    tags = pr.split_holdout(fam, [0] * len(fam), seed=0)
    assert tags.count("test") == round(0.2 * len(fam))
    assert tags.count("train") + tags.count("test") == 38


def test_dataset_determinism_and_round_trip(tmp_path):
    d1, d2 = tmp_path / "a", tmp_path / "b"
    m1 = pr.build_dataset(d1, min_n=3, max_n=6, seed=11)
    m2 = pr.build_dataset(d2, min_n=3, max_n=6, seed=11)
    for name in sorted(p.name for p in d1.iterdir()):
        assert (d1 / name).read_bytes() == (d2 / name).read_bytes()
    assert m1.counts == m2.counts

    data = pr.load_dataset(d1)
    train = pr.load_dataset(d1, split="train")
    test = pr.load_dataset(d1, split="test")
    for n in data:
        assert len(train[n]) + len(test[n]) == len(data[n])
        train_sets = {g.edges for g in train[n]}
        assert all(g.edges not in train_sets for g in test[n])
    ids = [g.graph_id for n in data for g in data[n]]
    assert len(set(ids)) == len(ids)


def test_graph_json_round_trip():
    g = pr.complete_graph(5)
    g = pr.ProblemGraph(n=g.n, edges=g.edges, graph_id=17)
    again = pr.graph_from_json(pr.graph_to_json(g))
    assert again.edges == g.edges and again.graph_id == 17 and again.n == 5


def test_default_coefficients():
    g = pr.complete_graph(4).with_default_coefficients()
    assert g.h == (-1.0,) * 4
    assert g.j == (-1.0,) * 6
