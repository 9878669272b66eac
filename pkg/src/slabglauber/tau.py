"""Two-layer projection of a k=2 slab onto one in-plane field.

Each column ``(x, y)`` is ``PLUS``/``MINUS`` when both layers agree, and
grey otherwise: ``GREY_PM`` when the ``z=1`` spin is +1 over a -1 at ``z=0``,
``GREY_MP`` for the reverse.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dynamics import SpinConfig
from .lattice import SlabGeometry


class Tau(enum.IntEnum):
    MINUS = -1
    PLUS = 1
    GREY_PM = 2
    GREY_MP = -2


@dataclass
class TauConfig:
    values: np.ndarray  # (L, L) int8 of Tau codes, indexed [y, x]

    @property
    def L(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class GreyStats:
    count_plus: int
    count_minus: int
    count_grey_pm: int
    count_grey_mp: int

    @property
    def grey(self) -> int:
        return self.count_grey_pm + self.count_grey_mp


def _require_k2(geom: SlabGeometry):
    if geom.k != 2:
        raise ValueError(f"tau projection needs k=2, got k={geom.k}")


def project(config: SpinConfig) -> TauConfig:
    _require_k2(config.geom)
    bottom = config.grid[0].astype(np.int8)
    top = config.grid[1].astype(np.int8)
    # agree -> the common sign; disagree -> +2 if top is +, -2 if top is -
    values = np.where(top == bottom, top, 2 * top).astype(np.int8)
    return TauConfig(values)


def reconstruct(tau: TauConfig, geom: SlabGeometry) -> SpinConfig:
    """Inverse of :func:`project` for a k=2 geometry."""
    _require_k2(geom)
    v = tau.values
    top = np.sign(v).astype(np.int8)
    bottom = np.where(np.abs(v) == 2, -top, top).astype(np.int8)
    return SpinConfig(geom, np.stack([bottom, top]))


def grey_stats(tau: TauConfig) -> GreyStats:
    v = tau.values
    return GreyStats(
        int(np.count_nonzero(v == Tau.PLUS)),
        int(np.count_nonzero(v == Tau.MINUS)),
        int(np.count_nonzero(v == Tau.GREY_PM)),
        int(np.count_nonzero(v == Tau.GREY_MP)),
    )


def column_transitions(geom: SlabGeometry, initial: SpinConfig, sites, old_spins):
    """Replay flips and yield ``(column, tau_before, tau_after)`` per flip.

    ``sites`` and ``old_spins`` come from an event log started at
    ``initial``.
    """
    _require_k2(geom)
    spins = initial.spins.copy()
    plane = geom.L * geom.L
    for i, old in zip(np.asarray(sites), np.asarray(old_spins)):
        col = int(i) % plane
        before = _code(spins[col], spins[col + plane])
        if spins[i] != old:
            raise ValueError(f"event log does not match the replayed state at site {i}")
        spins[i] = -old
        yield col, before, _code(spins[col], spins[col + plane])


def _code(bottom: int, top: int) -> Tau:
    if bottom == top:
        return Tau(int(top))
    return Tau.GREY_PM if top > 0 else Tau.GREY_MP
