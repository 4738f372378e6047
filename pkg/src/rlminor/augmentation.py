"""Hardware-graph symmetry transforms used as training/test augmentation.

Eight transforms per topology: two 90-degree rotations, four mirrorings, and
two random shore permutations (one permutation of the shore index k shared by
all vertical qubits of a cell column / track, and the horizontal analogue).
Every transform is an automorphism of H and is verified as such when built;
the literal per-row reading of the vertical permutation would break vertical
external couplers, so the coupler-preserving variant is used.

Permutations map node i to position perm[i]. A transformed observation puts
the value of node i at position perm[i]; an action a chosen in the
transformed view therefore refers to hardware node perm^-1[a].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .environment import ObsLayout
from .topology import CHIMERA, SHORE, HardwareGraph, chimera_index, zephyr_index

TRANSFORM_NAMES = (
    "rot_cw",
    "rot_ccw",
    "mirror_v",
    "mirror_h",
    "mirror_diag",
    "mirror_antidiag",
    "perm_vertical",
    "perm_horizontal",
)


@dataclass(frozen=True)
class Transform:
    name: str
    permutation: np.ndarray
    seed: int

    @property
    def inverse(self) -> np.ndarray:
        return invert_permutation(self.permutation)


def invert_permutation(perm: np.ndarray) -> np.ndarray:
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return inv


def is_automorphism(h: HardwareGraph, perm: np.ndarray) -> bool:
    """Edge-set preservation: (i, j) in E(H) iff (perm[i], perm[j]) in E(H)."""
    if sorted(perm.tolist()) != list(range(h.node_count)):
        return False
    edges = {(min(i, j), max(i, j)) for i, j in h.edges()}
    mapped = {(min(int(perm[i]), int(perm[j])), max(int(perm[i]), int(perm[j]))) for i, j in edges}
    return mapped == edges


def _chimera_coord_transform(h: HardwareGraph, cell_map, flip_u: bool) -> np.ndarray:
    m = h.m
    perm = np.empty(h.node_count, dtype=np.int64)
    for idx in range(h.node_count):
        c = h.to_coord(idx)
        row, col = cell_map(c.row, c.col)
        u = 1 - c.u if flip_u else c.u
        perm[idx] = chimera_index(m, row, col, u, c.k)
    return perm


def _zephyr_transform(h: HardwareGraph, vertical_map, horizontal_map) -> np.ndarray:
    m = h.m
    perm = np.empty(h.node_count, dtype=np.int64)
    for idx in range(h.node_count):
        c = h.to_coord(idx)
        mapper = vertical_map if c.u == 0 else horizontal_map
        u, w, k, j, z = mapper(c.w, c.k, c.j, c.z)
        perm[idx] = zephyr_index(m, u, w, k, j, z)
    return perm


def _geometric_permutation(h: HardwareGraph, name: str) -> np.ndarray:
    m = h.m
    if h.family == CHIMERA:
        last = m - 1
        cell_maps = {
            "rot_cw": (lambda r, c: (c, last - r), True),
            "rot_ccw": (lambda r, c: (last - c, r), True),
            "mirror_v": (lambda r, c: (r, last - c), False),
            "mirror_h": (lambda r, c: (last - r, c), False),
            "mirror_diag": (lambda r, c: (c, r), True),
            "mirror_antidiag": (lambda r, c: (last - c, last - r), True),
        }
        cell_map, flip_u = cell_maps[name]
        return _chimera_coord_transform(h, cell_map, flip_u)

    # Zephyr: a vertical qubit sits at column w and spans rows 2z+j .. 2z+j+1;
    # flips act on w for one orientation and on the (j, z) span for the other.
    W = 2 * m

    def flip_w(w, k, j, z, u):
        return (u, W - w, k, j, z)

    def flip_span(w, k, j, z, u):
        return (u, w, k, 1 - j, m - 1 - z)

    maps = {
        "mirror_v": (lambda w, k, j, z: flip_w(w, k, j, z, 0), lambda w, k, j, z: flip_span(w, k, j, z, 1)),
        "mirror_h": (lambda w, k, j, z: flip_span(w, k, j, z, 0), lambda w, k, j, z: flip_w(w, k, j, z, 1)),
        "mirror_diag": (lambda w, k, j, z: (1, w, k, j, z), lambda w, k, j, z: (0, w, k, j, z)),
        "mirror_antidiag": (
            lambda w, k, j, z: (1, W - w, k, 1 - j, m - 1 - z),
            lambda w, k, j, z: (0, W - w, k, 1 - j, m - 1 - z),
        ),
        "rot_cw": (
            lambda w, k, j, z: (1, w, k, 1 - j, m - 1 - z),
            lambda w, k, j, z: (0, W - w, k, j, z),
        ),
        "rot_ccw": (
            lambda w, k, j, z: (1, W - w, k, j, z),
            lambda w, k, j, z: (0, w, k, 1 - j, m - 1 - z),
        ),
    }
    vertical_map, horizontal_map = maps[name]
    return _zephyr_transform(h, vertical_map, horizontal_map)


def _shore_permutation(h: HardwareGraph, orientation: int, rng: np.random.Generator) -> np.ndarray:
    """Permute the shore index k of all `orientation` qubits, one random
    permutation per cell column (vertical) / cell row (horizontal) on Chimera
    and per (u, w) track on Zephyr."""
    m = h.m
    perm = np.arange(h.node_count, dtype=np.int64)
    if h.family == CHIMERA:
        tracks = m
        sigmas = [rng.permutation(SHORE) for _ in range(tracks)]
        for idx in range(h.node_count):
            c = h.to_coord(idx)
            if c.u != orientation:
                continue
            track = c.col if orientation == 0 else c.row
            perm[idx] = chimera_index(m, c.row, c.col, c.u, int(sigmas[track][c.k]))
    else:
        tracks = 2 * m + 1
        sigmas = [rng.permutation(SHORE) for _ in range(tracks)]
        for idx in range(h.node_count):
            c = h.to_coord(idx)
            if c.u != orientation:
                continue
            perm[idx] = zephyr_index(m, c.u, c.w, int(sigmas[c.w][c.k]), c.j, c.z)
    return perm


def enumerate_transforms(h: HardwareGraph, seed: int) -> tuple[Transform, ...]:
    """The 8 named transforms, each verified to be an automorphism of H."""
    rng = np.random.default_rng(seed)
    out = []
    for name in TRANSFORM_NAMES:
        if name == "perm_vertical":
            perm = _shore_permutation(h, 0, rng)
        elif name == "perm_horizontal":
            perm = _shore_permutation(h, 1, rng)
        else:
            perm = _geometric_permutation(h, name)
        if not is_automorphism(h, perm):
            raise RuntimeError(f"transform {name} is not an automorphism of {h!r}")
        perm.setflags(write=False)
        out.append(Transform(name=name, permutation=perm, seed=seed))
    return tuple(out)


def compose(perms: list[np.ndarray], n: int) -> np.ndarray:
    """Apply the permutations left to right; empty list gives the identity."""
    out = np.arange(n, dtype=np.int64)
    for p in perms:
        out = p[out]
    return out


def sample_transform_set(transforms: tuple[Transform, ...], rng: np.random.Generator) -> np.ndarray:
    """Uniformly sampled subset of the transforms, composed in fixed name order."""
    n = len(transforms[0].permutation)
    chosen = [t.permutation for t in transforms if rng.random() < 0.5]
    return compose(chosen, n)


class AugmentationSampler:
    """Per-agent sampler holding the verified transforms and a seeded stream."""

    def __init__(self, h: HardwareGraph, seed: int):
        self.transforms = enumerate_transforms(h, seed)
        self.rng = np.random.default_rng(seed)
        self._n = h.node_count

    def sample(self) -> tuple[np.ndarray, np.ndarray]:
        perm = sample_transform_set(self.transforms, self.rng)
        return perm, invert_permutation(perm)


def apply_to_observation(obs: np.ndarray, perm: np.ndarray, layout: ObsLayout) -> np.ndarray:
    """Permute the S_H and S_C sections; S_G and S_R are untouched."""
    out = obs.copy()
    sh = obs[layout.sh]
    sc = obs[layout.sc]
    out[layout.sh][perm] = sh
    out[layout.sc][perm] = sc
    return out


def apply_to_mask(mask: np.ndarray, perm: np.ndarray) -> np.ndarray:
    out = np.empty_like(mask)
    out[perm] = mask
    return out


def map_action(action: int, perm: np.ndarray) -> int:
    """Translate an action chosen in the permuted view back to a hardware node."""
    return int(invert_permutation(perm)[action])
