"""Modified bootstrap percolation on the block lattice of a k=2 slab.

A block ``B_x = 2x + {0,1}^3`` is occupied at step 0 when all eight of its
spins agree.  Under the dynamics an empty site becomes occupied once it has
an occupied neighbour along each axis (two occupied neighbours at L-infinity
distance 1 from each other); occupied sites stay occupied.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dynamics import SpinConfig


@dataclass
class EtaConfig:
    occ: np.ndarray  # (M, M) bool, indexed [y, x]
    n: int = 0

    def __post_init__(self):
        self.occ = np.asarray(self.occ, dtype=bool)
        if self.occ.ndim != 2 or self.occ.shape[0] != self.occ.shape[1]:
            raise ValueError("eta must live on a square torus")

    @property
    def M(self) -> int:
        return self.occ.shape[0]


def extract_eta(config: SpinConfig) -> EtaConfig:
    geom = config.geom
    if geom.k != 2:
        raise ValueError(f"block extraction needs k=2, got k={geom.k}")
    if geom.L % 2:
        raise ValueError("block extraction needs even L")
    M = geom.L // 2
    # axes: z, by, dy, bx, dx
    blocks = config.grid.reshape(2, M, 2, M, 2)
    mono = (blocks == blocks[0:1, :, 0:1, :, 0:1]).all(axis=(0, 2, 4))
    return EtaConfig(mono, 0)


def bootstrap_step(eta: EtaConfig) -> EtaConfig:
    occ = eta.occ
    vertical = np.roll(occ, 1, axis=0) | np.roll(occ, -1, axis=0)
    horizontal = np.roll(occ, 1, axis=1) | np.roll(occ, -1, axis=1)
    return EtaConfig(occ | (vertical & horizontal), eta.n + 1)


def closure(eta: EtaConfig, trajectory: list | None = None) -> EtaConfig:
    """Iterate :func:`bootstrap_step` to its fixed point.

    The returned ``n`` counts the steps that changed something.  When
    ``trajectory`` is a list, the occupation fraction after each of those
    steps (starting with the input) is appended to it.
    """
    cur = eta
    if trajectory is not None:
        trajectory.append(occupation_fraction(cur))
    while True:
        nxt = bootstrap_step(cur)
        if np.array_equal(nxt.occ, cur.occ):
            return cur
        cur = nxt
        if trajectory is not None:
            trajectory.append(occupation_fraction(cur))


def occupation_fraction(eta: EtaConfig) -> Fraction:
    return Fraction(int(eta.occ.sum()), eta.occ.size)


def random_eta(M: int, density: float, rng: np.random.Generator) -> EtaConfig:
    return EtaConfig(rng.random((M, M)) < density, 0)


def find_empty_contour(eta: EtaConfig, x0: int, y0: int, x1: int, y1: int,
                       max_margin: int | None = None):
    """Look for an all-empty rectangular contour strictly enclosing a rectangle.

    Diagnostic only.  Searches rectangles ``[x0-a, x1+b] x [y0-c, y1+d]`` with
    margins ``1..max_margin`` on the torus (the contour must not wrap onto
    itself) and returns the first ``(a, b, c, d)`` whose boundary is entirely
    empty, or ``None``.
    """
    occ = eta.occ
    M = eta.M
    width, height = x1 - x0 + 1, y1 - y0 + 1
    limit_x = M - width - 1
    limit_y = M - height - 1
    if max_margin is not None:
        limit_x = min(limit_x, 2 * max_margin)
        limit_y = min(limit_y, 2 * max_margin)
    hi = max_margin if max_margin is not None else M
    for a in range(1, hi + 1):
        for b in range(1, hi + 1):
            if a + b > limit_x:
                break
            xs = np.arange(x0 - a, x1 + b + 1) % M
            for c in range(1, hi + 1):
                for d in range(1, hi + 1):
                    if c + d > limit_y:
                        break
                    ys = np.arange(y0 - c, y1 + d + 1) % M
                    if (occ[ys[0], xs].any() or occ[ys[-1], xs].any()
                            or occ[ys, xs[0]].any() or occ[ys, xs[-1]].any()):
                        continue
                    return (a, b, c, d)
    return None

