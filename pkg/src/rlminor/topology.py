"""Chimera and Zephyr hardware graphs with stable indexing and adjacency queries.

Both families use the vendor-standard shore size t=4. Linear node indices are
fixed so that masks, fixtures and checkpoints stay stable across runs:

* Chimera(m): node (row, col, u, k) -> 8*(row*m + col) + 4*u + k
* Zephyr(m):  node (u, w, k, j, z)  -> lexicographic rank of (u, w, k, j, z)
  over u in {0,1}, w in [0,2m], k in [0,4), j in {0,1}, z in [0,m)
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SHORE = 4

CHIMERA = "chimera"
ZEPHYR = "zephyr"

CHIMERA_MAX_SIZE = 16
ZEPHYR_MAX_SIZE = 8


@dataclass(frozen=True)
class ChimeraCoord:
    """Cell-grid coordinate: cell (row, col), orientation u, shore index k."""

    row: int
    col: int
    u: int
    k: int


@dataclass(frozen=True)
class ZephyrCoord:
    """Zephyr coordinate: orientation u, perpendicular offset w, shore index k,
    half-offset j, parallel offset z."""

    u: int
    w: int
    k: int
    j: int
    z: int


class HardwareGraph:
    """Immutable undirected hardware graph with per-node sorted neighbor lists."""

    def __init__(self, family: str, m: int, node_count: int, edges: list[tuple[int, int]]):
        self.family = family
        self.m = m
        self.node_count = node_count
        adj: list[list[int]] = [[] for _ in range(node_count)]
        for i, j in edges:
            adj[i].append(j)
            adj[j].append(i)
        neighbors = []
        for lst in adj:
            arr = np.array(sorted(lst), dtype=np.int64)
            arr.setflags(write=False)
            neighbors.append(arr)
        self.neighbors: tuple[np.ndarray, ...] = tuple(neighbors)
        self._edge_count = len(edges)
        self._neighbor_sets = tuple(frozenset(int(v) for v in arr) for arr in neighbors)

    @property
    def edge_count(self) -> int:
        return self._edge_count

    def degree(self, i: int) -> int:
        return len(self.neighbors[i])

    def max_degree(self) -> int:
        return max(len(a) for a in self.neighbors)

    def has_edge(self, i: int, j: int) -> bool:
        return j in self._neighbor_sets[i]

    def edges(self) -> list[tuple[int, int]]:
        """All edges as (i, j) pairs with i < j, sorted."""
        out = []
        for i, arr in enumerate(self.neighbors):
            for j in arr:
                if i < j:
                    out.append((i, int(j)))
        return out

    def is_connected(self) -> bool:
        if self.node_count == 0:
            return False
        seen = np.zeros(self.node_count, dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            v = stack.pop()
            for w in self.neighbors[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(int(w))
        return bool(seen.all())

    # -- coordinate maps -------------------------------------------------

    def to_coord(self, index: int):
        if self.family == CHIMERA:
            return chimera_coord(self.m, index)
        return zephyr_coord(self.m, index)

    def from_coord(self, coord) -> int:
        if self.family == CHIMERA:
            return chimera_index(self.m, coord.row, coord.col, coord.u, coord.k)
        return zephyr_index(self.m, coord.u, coord.w, coord.k, coord.j, coord.z)

    def __repr__(self) -> str:
        return f"HardwareGraph({self.family}, m={self.m}, nodes={self.node_count})"


def chimera_index(m: int, row: int, col: int, u: int, k: int) -> int:
    return 8 * (row * m + col) + 4 * u + k


def chimera_coord(m: int, index: int) -> ChimeraCoord:
    cell, rem = divmod(index, 8)
    u, k = divmod(rem, SHORE)
    row, col = divmod(cell, m)
    return ChimeraCoord(row=row, col=col, u=u, k=k)


def zephyr_index(m: int, u: int, w: int, k: int, j: int, z: int) -> int:
    return (((u * (2 * m + 1) + w) * SHORE + k) * 2 + j) * m + z


def zephyr_coord(m: int, index: int) -> ZephyrCoord:
    rest, z = divmod(index, m)
    rest, j = divmod(rest, 2)
    rest, k = divmod(rest, SHORE)
    u, w = divmod(rest, 2 * m + 1)
    return ZephyrCoord(u=u, w=w, k=k, j=j, z=z)


def build_chimera(m: int) -> HardwareGraph:
    """Chimera graph of m x m unit cells, 8m^2 qubits.

    Edge families:
    * internal: (row, col, 0, k) -- (row, col, 1, k') for all k, k'
    * vertical external: (row, col, 0, k) -- (row+1, col, 0, k)
    * horizontal external: (row, col, 1, k) -- (row, col+1, 1, k)
    """
    if not 1 <= m <= CHIMERA_MAX_SIZE:
        raise ValueError(f"chimera size must be in [1, {CHIMERA_MAX_SIZE}], got {m}")
    edges: list[tuple[int, int]] = []
    for row in range(m):
        for col in range(m):
            for k in range(SHORE):
                for k2 in range(SHORE):
                    edges.append((chimera_index(m, row, col, 0, k), chimera_index(m, row, col, 1, k2)))
            for k in range(SHORE):
                if row + 1 < m:
                    edges.append((chimera_index(m, row, col, 0, k), chimera_index(m, row + 1, col, 0, k)))
                if col + 1 < m:
                    edges.append((chimera_index(m, row, col, 1, k), chimera_index(m, row, col + 1, 1, k)))
    return HardwareGraph(CHIMERA, m, 8 * m * m, edges)


def build_zephyr(m: int) -> HardwareGraph:
    """Zephyr graph with 16m(2m+1) qubits.

    Edge families (coordinates always kept in range):
    * external: (u, w, k, j, z) -- (u, w, k, j, z+1)
    * odd: (u, w, k, 0, z) -- (u, w, k, 1, z) and (u, w, k, 1, z) -- (u, w, k, 0, z+1)
    * internal: (0, w, k, j, z) -- (1, w', k', j', z') iff
      w' in {2z+j, 2z+j+1} and w in {2z'+j', 2z'+j'+1}

    Interior qubits reach degree 20 (16 internal + 2 external + 2 odd).
    """
    if not 1 <= m <= ZEPHYR_MAX_SIZE:
        raise ValueError(f"zephyr size must be in [1, {ZEPHYR_MAX_SIZE}], got {m}")
    edges: list[tuple[int, int]] = []
    for u in (0, 1):
        for w in range(2 * m + 1):
            for k in range(SHORE):
                for z in range(m):
                    if z + 1 < m:
                        edges.append((zephyr_index(m, u, w, k, 0, z), zephyr_index(m, u, w, k, 0, z + 1)))
                        edges.append((zephyr_index(m, u, w, k, 1, z), zephyr_index(m, u, w, k, 1, z + 1)))
                        edges.append((zephyr_index(m, u, w, k, 1, z), zephyr_index(m, u, w, k, 0, z + 1)))
                    edges.append((zephyr_index(m, u, w, k, 0, z), zephyr_index(m, u, w, k, 1, z)))
    # internal couplers, generated once from the vertical (u=0) side
    for w in range(2 * m + 1):
        for k in range(SHORE):
            for j in (0, 1):
                for z in range(m):
                    for wp in (2 * z + j, 2 * z + j + 1):
                        for v in (w - 1, w):
                            if not 0 <= v <= 2 * m - 1:
                                continue
                            zp, jp = divmod(v, 2)
                            for kp in range(SHORE):
                                edges.append(
                                    (zephyr_index(m, 0, w, k, j, z), zephyr_index(m, 1, wp, kp, jp, zp))
                                )
    return HardwareGraph(ZEPHYR, m, 16 * m * (2 * m + 1), edges)


def build_hardware(family: str, m: int) -> HardwareGraph:
    if family == CHIMERA:
        return build_chimera(m)
    if family == ZEPHYR:
        return build_zephyr(m)
    raise ValueError(f"unknown hardware family: {family!r}")


# -- text edge-list export/import ---------------------------------------


def export_adjacency(h: HardwareGraph) -> str:
    """One "i j" pair per line with i < j, sorted; round-trips bit-exactly."""
    return "".join(f"{i} {j}\n" for i, j in sorted(h.edges()))


def import_adjacency(text: str, family: str, m: int) -> HardwareGraph:
    edges = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        a, b = line.split()
        edges.append((int(a), int(b)))
    node_count = 8 * m * m if family == CHIMERA else 16 * m * (2 * m + 1)
    return HardwareGraph(family, m, node_count, edges)


def descriptor(h: HardwareGraph) -> dict:
    return {"family": h.family, "m": h.m, "node_count": h.node_count}


def write_topology(h: HardwareGraph, path: str | Path) -> None:
    """Write the edge list to `path` and a JSON descriptor to `path + ".json"`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(export_adjacency(h))
    Path(str(path) + ".json").write_text(json.dumps(descriptor(h), sort_keys=True) + "\n")
