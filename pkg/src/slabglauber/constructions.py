"""Initial states: product-measure samples and the pinned blinker scaffolds.

Construction coordinates are relative to an in-plane ``center`` and live on
the infinite slab; they are shifted by ``center`` and wrapped onto the torus
when written into a configuration.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dynamics import SpinConfig
from .lattice import SlabGeometry, site_index

FOOTPRINT = 20
MIN_L = 48

# designated blinker sites, relative to the center
BLINKERS = ((0, 0, 1), (1, 0, 1))


class Construction(str, enum.Enum):
    NONE = "none"
    EVENT_A = "event-a"
    EVENT_A_PRIME = "event-a-prime"
    EVENT_PERIODIC = "event-periodic"


@dataclass(frozen=True)
class ConstructionSpec:
    kind: Construction = Construction.NONE
    center: tuple[int, int] | None = None
    p: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", Construction(self.kind))
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    def check(self, geom: SlabGeometry):
        check_geometry(self.kind, geom)


def check_geometry(kind: Construction, geom: SlabGeometry):
    kind = Construction(kind)
    if kind is Construction.NONE:
        return
    if kind is Construction.EVENT_A and not (geom.k == 3 and not geom.periodic):
        raise ValueError("event A needs a free slab with k=3")
    if kind is Construction.EVENT_A_PRIME and not (geom.k >= 4 and not geom.periodic):
        raise ValueError("event A' needs a free slab with k>=4")
    if kind is Construction.EVENT_PERIODIC and not (geom.k >= 5 and geom.periodic):
        raise ValueError("the periodic construction needs a periodic slab with k>=5")
    if geom.L < MIN_L:
        raise ValueError(f"construction footprint needs L >= {MIN_L}, got L={geom.L}")


def default_center(geom: SlabGeometry) -> tuple[int, int]:
    return (geom.L // 2, geom.L // 2)


def sample_product(geom: SlabGeometry, p: float, rng: np.random.Generator) -> SpinConfig:
    """I.i.d. spins with ``P(+1) = p``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    plus = rng.random(geom.n_sites) < p
    return SpinConfig(geom, np.where(plus, 1, -1).astype(np.int8))


def pillar(m: int, n: int) -> set[tuple[int, int, int]]:
    """The 2 x 2 x 3 column ``{m, m+1} x {n, n+1} x {0, 1, 2}``."""
    return {(x, y, z) for x in (m, m + 1) for y in (n, n + 1) for z in (0, 1, 2)}


def table(n: int) -> set[tuple[int, int, int]]:
    """Top plate ``{-n..n}^2 x {2}`` on four corner pillars."""
    if n < 2:
        raise ValueError(f"table size must be >= 2, got {n}")
    plate = {(x, y, 2) for x in range(-n, n + 1) for y in range(-n, n + 1)}
    legs = pillar(-n, -n) | pillar(-n, n - 1) | pillar(n - 1, -n) | pillar(n - 1, n - 1)
    return plate | legs


def inverted_table(n: int) -> set[tuple[int, int, int]]:
    """``table(n)`` reflected through the middle level (z -> 2 - z)."""
    return {(x, y, 2 - z) for x, y, z in table(n)}


def event_a_spins() -> dict[tuple[int, int, int], int]:
    """Relative site -> spin for the four conditions of event A.

    Later conditions only write sites not already claimed by earlier ones,
    which is the set-difference order of the definition.
    """
    p1 = pillar(-2, -2) | pillar(-2, -1) | pillar(2, -2)
    p2 = pillar(-2, 1) | pillar(2, 0) | pillar(2, 1)
    spins: dict[tuple[int, int, int], int] = {}
    for v in p1:
        spins[v] = 1
    for v in p2:
        spins[v] = -1
    for x in (0, 1):
        for y in (-2, -1):
            spins[(x, y, 1)] = 1
        for y in (1, 2):
            spins[(x, y, 1)] = -1
    for v in inverted_table(10) - (p1 | p2):
        spins[v] = 1
    for v in table(20) - (inverted_table(10) | p1 | p2):
        spins[v] = -1
    return spins


def event_a_sets() -> dict[str, set[tuple[int, int, int]]]:
    """Named pieces of event A, for building certification candidates."""
    return {
        "P1": pillar(-2, -2) | pillar(-2, -1) | pillar(2, -2),
        "P2": pillar(-2, 1) | pillar(2, 0) | pillar(2, 1),
        "middle": {(x, y, 1) for x in (0, 1) for y in (-2, -1, 1, 2)},
        "T10'": inverted_table(10),
        "T20": table(20),
    }


def _place(geom: SlabGeometry, center, rel) -> int:
    cx, cy = center
    x, y, z = rel
    return site_index(geom, ((x + cx) % geom.L, (y + cy) % geom.L, z))


def construction_assignment(kind, geom: SlabGeometry, center=None) -> dict[int, int]:
    """Site index -> pinned spin written by ``kind`` (before copying layers)."""
    kind = Construction(kind)
    check_geometry(kind, geom)
    if kind is Construction.NONE:
        return {}
    center = default_center(geom) if center is None else tuple(center)
    return {_place(geom, center, v): s for v, s in event_a_spins().items()}


def _copy_layers(kind: Construction, geom: SlabGeometry) -> list[tuple[int, int]]:
    """(target level, source level) pairs for the layer-duplicating variants."""
    if kind is Construction.EVENT_A_PRIME:
        return [(z, 2) for z in range(3, geom.k)]
    if kind is Construction.EVENT_PERIODIC:
        return [(z, 2) for z in range(3, geom.k - 1)] + [(geom.k - 1, 0)]
    return []


def _footprint_columns(geom: SlabGeometry, center):
    cx, cy = center
    r = np.arange(-FOOTPRINT, FOOTPRINT + 1)
    xs = (r + cx) % geom.L
    ys = (r + cy) % geom.L
    return np.ix_(ys, xs)


def apply_construction(config: SpinConfig, kind, center=None) -> SpinConfig:
    """Return a copy of ``config`` with construction ``kind`` written in."""
    kind = Construction(kind)
    geom = config.geom
    check_geometry(kind, geom)
    out = config.copy()
    if kind is Construction.NONE:
        return out
    center = default_center(geom) if center is None else tuple(center)
    for i, s in construction_assignment(kind, geom, center).items():
        out.spins[i] = s
    grid = out.grid
    cols = _footprint_columns(geom, center)
    for target, source in _copy_layers(kind, geom):
        grid[target][cols] = grid[source][cols]
    return out


def apply_event_A(config: SpinConfig, center=None) -> SpinConfig:
    return apply_construction(config, Construction.EVENT_A, center)


def apply_event_A_prime(config: SpinConfig, center=None) -> SpinConfig:
    return apply_construction(config, Construction.EVENT_A_PRIME, center)


def apply_event_periodic(config: SpinConfig, center=None) -> SpinConfig:
    return apply_construction(config, Construction.EVENT_PERIODIC, center)


def constrained_sites(kind, geom: SlabGeometry, center=None) -> np.ndarray:
    """Sorted indices of every site a construction writes."""
    kind = Construction(kind)
    check_geometry(kind, geom)
    if kind is Construction.NONE:
        return np.empty(0, dtype=np.int64)
    center = default_center(geom) if center is None else tuple(center)
    written = set(construction_assignment(kind, geom, center))
    mask = np.zeros(geom.shape, dtype=bool)
    cols = _footprint_columns(geom, center)
    for target, _ in _copy_layers(kind, geom):
        mask[target][cols] = True
    written.update(np.flatnonzero(mask.reshape(-1)).tolist())
    return np.array(sorted(written), dtype=np.int64)


def blinker_sites(geom: SlabGeometry, center=None) -> list[int]:
    center = default_center(geom) if center is None else tuple(center)
    return [_place(geom, center, v) for v in BLINKERS]


def build_initial(geom: SlabGeometry, spec: ConstructionSpec,
                  rng: np.random.Generator) -> SpinConfig:
    """Sample the background from the product measure, then overwrite."""
    spec.check(geom)
    config = sample_product(geom, spec.p, rng)
    return apply_construction(config, spec.kind, spec.center)
