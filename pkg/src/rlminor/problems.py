"""Problem graphs and the randomly generated train/test corpus.

Connected undirected graphs on n nodes with edge counts between n-1 and
n(n-1)/2. Families are built three ways depending on size:

* n in [3, 5]: exhaustive closure of iterated single-edge removal from K_n
  (equivalently, every connected labeled graph on n nodes).
* n in [6, 8]: one representative per approximate isomorphism class
  (sorted degree sequence + triangle-count screen), then random node
  permutations of the representatives up to a target count.
* n >= 9: uniform random connected graphs with a fixed edge count, the
  target split evenly across the feasible edge-count range.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

Edge = tuple[int, int]


@dataclass(frozen=True)
class ProblemGraph:
    """Small undirected connected graph, optionally carrying Ising coefficients."""

    n: int
    edges: tuple[Edge, ...]
    h: tuple[float, ...] | None = None
    j: tuple[float, ...] | None = None  # aligned with `edges`
    graph_id: int | None = None

    @staticmethod
    def from_edges(n: int, edges, graph_id: int | None = None) -> "ProblemGraph":
        canon = tuple(sorted((min(a, b), max(a, b)) for a, b in edges))
        return ProblemGraph(n=n, edges=canon, graph_id=graph_id)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def neighbors(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n)]
        for a, b in self.edges:
            out[a].append(b)
            out[b].append(a)
        return out

    def degree_sequence(self) -> tuple[int, ...]:
        deg = [0] * self.n
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return tuple(sorted(deg))

    def has_edge(self, a: int, b: int) -> bool:
        e = (min(a, b), max(a, b))
        return e in set(self.edges)

    def is_connected(self) -> bool:
        return _is_connected(self.n, self.edges)

    def triangle_count(self) -> int:
        nbr = [set() for _ in range(self.n)]
        for a, b in self.edges:
            nbr[a].add(b)
            nbr[b].add(a)
        count = 0
        for a, b in self.edges:
            count += len(nbr[a] & nbr[b])
        return count // 3

    def screen_key(self) -> tuple:
        """Approximate isomorphism invariant: degree sequence + triangle count."""
        return (self.degree_sequence(), self.triangle_count())

    def with_default_coefficients(self, bias: float = -1.0, coupling: float = -1.0) -> "ProblemGraph":
        return ProblemGraph(
            n=self.n,
            edges=self.edges,
            h=tuple([bias] * self.n),
            j=tuple([coupling] * len(self.edges)),
            graph_id=self.graph_id,
        )


def _is_connected(n: int, edges) -> bool:
    if n == 0:
        return False
    nbr: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        nbr[a].append(b)
        nbr[b].append(a)
    seen = [False] * n
    seen[0] = True
    stack = [0]
    while stack:
        v = stack.pop()
        for w in nbr[v]:
            if not seen[w]:
                seen[w] = True
                stack.append(w)
    return all(seen)


def complete_graph(n: int) -> ProblemGraph:
    if n < 3:
        raise ValueError(f"complete problem graphs need n >= 3, got {n}")
    return ProblemGraph.from_edges(n, [(a, b) for a in range(n) for b in range(a + 1, n)])


def _all_edges(n: int) -> list[Edge]:
    return [(a, b) for a in range(n) for b in range(a + 1, n)]


def generate_small_family(n: int) -> list[ProblemGraph]:
    """All connected labeled graphs on n nodes, via iterated edge removal from K_n."""
    if not 3 <= n <= 5:
        raise ValueError(f"small family covers n in [3, 5], got {n}")
    start = complete_graph(n)
    seen = {start.edges}
    frontier = [start]
    result = [start]
    floor = n - 1
    while frontier:
        nxt = []
        for g in frontier:
            if g.edge_count <= floor:
                continue
            for drop in range(g.edge_count):
                edges = g.edges[:drop] + g.edges[drop + 1 :]
                if edges in seen or not _is_connected(n, edges):
                    continue
                seen.add(edges)
                child = ProblemGraph(n=n, edges=edges)
                nxt.append(child)
                result.append(child)
        frontier = nxt
    result.sort(key=lambda g: (-g.edge_count, g.edges))
    return result


def _class_representatives(n: int) -> list[ProblemGraph]:
    """One representative per screen class, via iterated removal with per-level dedup."""
    start = complete_graph(n)
    reps = {start.screen_key(): start}
    level = [start]
    floor = n - 1
    while level:
        found: dict[tuple, ProblemGraph] = {}
        for g in level:
            if g.edge_count <= floor:
                continue
            for drop in range(g.edge_count):
                edges = g.edges[:drop] + g.edges[drop + 1 :]
                if not _is_connected(n, edges):
                    continue
                child = ProblemGraph(n=n, edges=edges)
                key = child.screen_key()
                if key not in reps and key not in found:
                    found[key] = child
        reps.update(found)
        level = list(found.values())
    out = list(reps.values())
    out.sort(key=lambda g: (-g.edge_count, g.screen_key()))
    return out


def _permuted(g: ProblemGraph, perm: np.ndarray) -> tuple[Edge, ...]:
    return tuple(sorted((min(int(perm[a]), int(perm[b])), max(int(perm[a]), int(perm[b]))) for a, b in g.edges))


def generate_medium_family(n: int, target_total: int, seed: int) -> tuple[list[ProblemGraph], list[int]]:
    """Random node permutations of the class representatives, `target_total` in all.

    Returns (graphs, class_index per graph). Classes that run out of distinct
    labeled instances (e.g. K_n) hand their leftover quota to later classes.
    """
    if not 6 <= n <= 8:
        raise ValueError(f"medium family covers n in [6, 8], got {n}")
    reps = _class_representatives(n)
    rng = np.random.default_rng(seed)
    per_class = [target_total // len(reps)] * len(reps)
    for i in range(target_total % len(reps)):
        per_class[i] += 1

    graphs: list[ProblemGraph] = []
    strata: list[int] = []
    instances: list[set[tuple[Edge, ...]]] = [set() for _ in reps]
    saturated = [False] * len(reps)

    def fill(ci: int, quota: int) -> int:
        """Add up to `quota` fresh instances of class ci; return how many were added."""
        added = 0
        misses = 0
        while added < quota and misses < 64:
            perm = rng.permutation(n)
            edges = _permuted(reps[ci], perm)
            if edges in instances[ci]:
                misses += 1
                continue
            misses = 0
            instances[ci].add(edges)
            graphs.append(ProblemGraph(n=n, edges=edges))
            strata.append(ci)
            added += 1
        if added < quota:
            saturated[ci] = True
        return added

    deficit = 0
    for ci, quota in enumerate(per_class):
        deficit += quota - fill(ci, quota)
    while deficit > 0 and not all(saturated):
        for ci in range(len(reps)):
            if deficit == 0:
                break
            if not saturated[ci]:
                deficit -= fill(ci, 1)
    return graphs, strata


def _random_spanning_tree(n: int, rng: np.random.Generator) -> tuple[Edge, ...]:
    """Uniform random labeled tree from a random Pruefer sequence."""
    if n == 2:
        return ((0, 1),)
    prufer = rng.integers(0, n, size=n - 2)
    degree = [1] * n
    for v in prufer:
        degree[v] += 1
    edges = []
    import heapq

    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    for v in prufer:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, int(v)), max(leaf, int(v))))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, int(v))
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((min(a, b), max(a, b)))
    return tuple(sorted(edges))


def generate_large_family(
    n: int, target_total: int, seed: int, retry_budget: int = 200
) -> tuple[list[ProblemGraph], list[int], list[tuple[int, int]]]:
    """Uniform random connected graphs, target split evenly across edge counts.

    Returns (graphs, edge-count stratum per graph, skipped (edge_count, slot) pairs).
    No two admitted graphs share a screen key within an edge count. Dense edge
    counts admit very few non-isomorphic graphs (the complete graph's bucket
    holds exactly one), so a bucket that stalls within the retry budget hands
    its remaining slots to buckets that still accept fresh graphs; slots are
    reported as skipped only when every bucket is exhausted.
    """
    if n < 9:
        raise ValueError(f"large family covers n >= 9, got {n}")
    rng = np.random.default_rng(seed)
    all_edges = _all_edges(n)
    lo, hi = n - 1, n * (n - 1) // 2
    buckets = list(range(lo, hi + 1))
    per_bucket = [target_total // len(buckets)] * len(buckets)
    for i in range(target_total % len(buckets)):
        per_bucket[i] += 1

    by_bucket: dict[int, list[ProblemGraph]] = {m: [] for m in buckets}
    seen_keys: dict[int, set[tuple]] = {m: set() for m in buckets}
    saturated: dict[int, bool] = {m: False for m in buckets}

    def draw(m_edges: int) -> bool:
        for _ in range(retry_budget):
            if m_edges == lo:
                edges = _random_spanning_tree(n, rng)
            else:
                pick = rng.choice(len(all_edges), size=m_edges, replace=False)
                edges = tuple(sorted(all_edges[i] for i in pick))
                if not _is_connected(n, edges):
                    continue
            g = ProblemGraph(n=n, edges=edges)
            key = g.screen_key()
            if key in seen_keys[m_edges]:
                continue
            seen_keys[m_edges].add(key)
            by_bucket[m_edges].append(g)
            return True
        saturated[m_edges] = True
        return False

    produced = 0
    for bi, m_edges in enumerate(buckets):
        for _ in range(per_bucket[bi]):
            if draw(m_edges):
                produced += 1
            else:
                break
    while produced < target_total and not all(saturated.values()):
        progress = False
        for m_edges in buckets:
            if produced == target_total:
                break
            if not saturated[m_edges] and draw(m_edges):
                produced += 1
                progress = True
        if not progress:
            break

    graphs: list[ProblemGraph] = []
    strata: list[int] = []
    for m_edges in buckets:
        graphs.extend(by_bucket[m_edges])
        strata.extend([m_edges] * len(by_bucket[m_edges]))
    skipped = [(0, slot) for slot in range(target_total - produced)]
    return graphs, strata, skipped


# -- holdout split and on-disk dataset -----------------------------------


@dataclass
class DatasetManifest:
    seed: int
    counts: dict[int, dict[str, int]] = field(default_factory=dict)
    files: dict[int, str] = field(default_factory=dict)
    skipped: dict[int, list[tuple[int, int]]] = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "counts": {str(n): c for n, c in sorted(self.counts.items())},
            "files": {str(n): f for n, f in sorted(self.files.items())},
            "skipped": {str(n): s for n, s in sorted(self.skipped.items())},
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ": "), indent=1) + "\n"


def split_holdout(
    graphs: list[ProblemGraph],
    strata: list,
    seed: int,
    test_fraction: float = 0.2,
) -> list[str]:
    """Stratified 80/20 split; returns a per-graph "train"/"test" tag.

    Within each stratum the split is random; test seats are assigned by
    largest remainder so the overall test count is round(fraction * total).
    """
    rng = np.random.default_rng(seed)
    by_stratum: dict = {}
    for i, s in enumerate(strata):
        by_stratum.setdefault(s, []).append(i)
    total_test = int(round(test_fraction * len(graphs)))
    floors = {}
    remainders = []
    for s, members in sorted(by_stratum.items(), key=lambda kv: str(kv[0])):
        exact = test_fraction * len(members)
        floors[s] = int(exact)
        remainders.append((exact - int(exact), s))
    leftover = total_test - sum(floors.values())
    remainders.sort(key=lambda t: (-t[0], str(t[1])))
    for _, s in remainders[:leftover]:
        floors[s] += 1
    tags = ["train"] * len(graphs)
    for s, members in sorted(by_stratum.items(), key=lambda kv: str(kv[0])):
        members = list(members)
        rng.shuffle(members)
        for i in members[: floors[s]]:
            tags[i] = "test"
    return tags


def generate_family(n: int, target_total: int, seed: int):
    """Dispatch to the size-appropriate generator; returns (graphs, strata, skipped)."""
    if n <= 5:
        graphs = generate_small_family(n)
        return graphs, [0] * len(graphs), []
    if n <= 8:
        graphs, strata = generate_medium_family(n, target_total, seed)
        return graphs, strata, []
    return generate_large_family(n, target_total, seed)


def build_dataset(
    out_dir: str | Path,
    min_n: int = 3,
    max_n: int = 10,
    train_target: int = 1000,
    test_target: int = 250,
    seed: int = 0,
) -> DatasetManifest:
    """Generate families for each n, split them, and write JSONL + manifest.

    Sub-seeds are derived as seed + n so families are independent; identical
    seeds give byte-identical files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    target_total = train_target + test_target
    fraction = test_target / target_total
    manifest = DatasetManifest(seed=seed)
    next_id = 0
    for n in range(min_n, max_n + 1):
        graphs, strata, skipped = generate_family(n, target_total, seed + n)
        tags = split_holdout(graphs, strata, seed + n, fraction)
        fname = f"graphs_n{n}.jsonl"
        with open(out_dir / fname, "w") as fh:
            for g, tag in zip(graphs, tags):
                rec = {
                    "id": next_id,
                    "n": n,
                    "edges": [[a, b] for a, b in g.edges],
                    "split": tag,
                }
                fh.write(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n")
                next_id += 1
        manifest.counts[n] = {"train": tags.count("train"), "test": tags.count("test")}
        manifest.files[n] = fname
        if skipped:
            manifest.skipped[n] = skipped
    (out_dir / "manifest.json").write_text(manifest.to_json())
    return manifest


def load_dataset(dataset_dir: str | Path, split: str | None = None) -> dict[int, list[ProblemGraph]]:
    """Read the JSONL corpus back; returns {n: graphs}, optionally one split only."""
    dataset_dir = Path(dataset_dir)
    manifest = json.loads((dataset_dir / "manifest.json").read_text())
    out: dict[int, list[ProblemGraph]] = {}
    for n_str, fname in manifest["files"].items():
        n = int(n_str)
        graphs = []
        for line in (dataset_dir / fname).read_text().splitlines():
            rec = json.loads(line)
            if split is not None and rec["split"] != split:
                continue
            graphs.append(
                ProblemGraph.from_edges(rec["n"], [tuple(e) for e in rec["edges"]], graph_id=rec["id"])
            )
        out[n] = graphs
    return out


def graph_to_json(g: ProblemGraph) -> str:
    rec = {"id": g.graph_id, "n": g.n, "edges": [[a, b] for a, b in g.edges]}
    return json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n"


def graph_from_json(text: str) -> ProblemGraph:
    rec = json.loads(text)
    return ProblemGraph.from_edges(rec["n"], [tuple(e) for e in rec["edges"]], graph_id=rec.get("id"))
