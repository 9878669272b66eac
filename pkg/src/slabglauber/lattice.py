"""Finite slab geometry: an L x L in-plane torus stacked ``k`` layers deep.

Sites are linearised z-major, then y, then x::

    index = x + L * (y + L * z)

so a spin array reshaped to ``(k, L, L)`` is indexed ``[z, y, x]``, which is
also the row order of the text snapshot format.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np


class BoundaryCondition(str, enum.Enum):
    FREE = "free"
    PERIODIC = "periodic"


class Site(NamedTuple):
    x: int
    y: int
    z: int


@dataclass(frozen=True)
class SlabGeometry:
    """Slab of thickness ``k`` over an ``L x L`` torus.

    With periodic vertical boundaries and ``k == 2`` the two layers are joined
    by a double edge, so each site sees its vertical partner twice.
    """

    k: int
    L: int
    vertical_bc: BoundaryCondition = BoundaryCondition.FREE

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"slab thickness must be >= 2, got k={self.k}")
        if self.L < 8 or self.L % 2:
            raise ValueError(f"in-plane side must be even and >= 8, got L={self.L}")
        object.__setattr__(self, "vertical_bc", BoundaryCondition(self.vertical_bc))

    @property
    def periodic(self) -> bool:
        return self.vertical_bc is BoundaryCondition.PERIODIC

    @property
    def n_sites(self) -> int:
        return self.L * self.L * self.k

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.k, self.L, self.L)

    def validate(self, v) -> Site:
        x, y, z = (int(c) for c in v)
        if not (0 <= x < self.L and 0 <= y < self.L and 0 <= z < self.k):
            raise ValueError(f"site {tuple(v)} outside slab k={self.k} L={self.L}")
        return Site(x, y, z)

    def wrap(self, x: int, y: int, z: int) -> Site:
        """Reduce in-plane coordinates modulo L; z must already be in range."""
        if not 0 <= z < self.k:
            raise ValueError(f"level z={z} outside 0..{self.k - 1}")
        return Site(x % self.L, y % self.L, z)

    @cached_property
    def neighbor_table(self) -> np.ndarray:
        """``(n_sites, 6)`` int64 table of neighbour indices, padded with -1.

        Edge multiplicity is encoded by repetition.
        """
        L, k = self.L, self.k
        z, y, x = np.meshgrid(np.arange(k), np.arange(L), np.arange(L), indexing="ij")
        cols = [
            (x + 1) % L + L * (y + L * z),
            (x - 1) % L + L * (y + L * z),
            x + L * ((y + 1) % L + L * z),
            x + L * ((y - 1) % L + L * z),
        ]
        if self.periodic:
            cols.append(x + L * (y + L * ((z + 1) % k)))
            cols.append(x + L * (y + L * ((z - 1) % k)))
        else:
            cols.append(np.where(z + 1 < k, x + L * (y + L * (z + 1)), -1))
            cols.append(np.where(z > 0, x + L * (y + L * (z - 1)), -1))
        table = np.stack([c.ravel() for c in cols], axis=1).astype(np.int64)
        # free slabs: move the -1 padding of the top layer to the last column
        top = table[:, 4] < 0
        table[top, 4] = table[top, 5]
        table[top, 5] = -1
        table.setflags(write=False)
        return table

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = (self.neighbor_table >= 0).sum(axis=1).astype(np.int64)
        deg.setflags(write=False)
        return deg


def neighbors(geom: SlabGeometry, v) -> list[Site]:
    """Nearest neighbours of ``v`` as a multiset (list with repeats)."""
    x, y, z = geom.validate(v)
    L, k = geom.L, geom.k
    out = [
        Site((x + 1) % L, y, z),
        Site((x - 1) % L, y, z),
        Site(x, (y + 1) % L, z),
        Site(x, (y - 1) % L, z),
    ]
    if geom.periodic:
        out.append(Site(x, y, (z + 1) % k))
        out.append(Site(x, y, (z - 1) % k))
    else:
        if z + 1 < k:
            out.append(Site(x, y, z + 1))
        if z > 0:
            out.append(Site(x, y, z - 1))
    return out


def degree(geom: SlabGeometry, v) -> int:
    x, y, z = geom.validate(v)
    if geom.periodic or 0 < z < geom.k - 1:
        return 6
    return 5


def site_index(geom: SlabGeometry, v) -> int:
    x, y, z = geom.validate(v)
    return x + geom.L * (y + geom.L * z)


def index_site(geom: SlabGeometry, i: int) -> Site:
    i = int(i)
    if not 0 <= i < geom.n_sites:
        raise ValueError(f"index {i} outside [0, {geom.n_sites})")
    x = i % geom.L
    y = (i // geom.L) % geom.L
    z = i // (geom.L * geom.L)
    return Site(x, y, z)


def neighbor_sums(geom: SlabGeometry, spins: np.ndarray) -> np.ndarray:
    """Sum of neighbouring spins (with multiplicity), shaped ``(k, L, L)``."""
    s = np.asarray(spins, dtype=np.int64).reshape(geom.shape)
    total = (
        np.roll(s, 1, axis=2)
        + np.roll(s, -1, axis=2)
        + np.roll(s, 1, axis=1)
        + np.roll(s, -1, axis=1)
    )
    if geom.periodic:
        # for k == 2 both rolls land on the partner layer: the double edge
        total += np.roll(s, 1, axis=0) + np.roll(s, -1, axis=0)
    else:
        total[1:] += s[:-1]
        total[:-1] += s[1:]
    return total
