"""Zero-temperature Glauber dynamics on a slab.

Every site carries a rate-1 exponential clock.  With ``n`` sites the
superposed clock rings at rate ``n`` and each ring hits a uniformly chosen
site, so the process is simulated exactly by drawing a uniform site and an
``Exp(n)`` time increment per event.  On a ring the site flips if its local
energy is positive, resamples its spin with a fair coin if the energy is
zero, and stays put otherwise.

Randomness comes from numpy ``PCG64`` streams spawned from
``SeedSequence(seed, spawn_key=(replica,))`` (see :func:`replica_streams`):
one draws ``2 * site + coin`` as a single integer in ``[0, 2n)``, another
draws the unit exponentials.
Draws are buffered in fixed-size blocks that survive across calls, so a run
split into several ``run`` calls follows the same trajectory as one long run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .lattice import SlabGeometry, neighbor_sums, neighbors, site_index

CHUNK = 1 << 16

STOP_BUFFER = 0
STOP_TIME = 1
STOP_ABSORBED = 2

# slots of the int64 counters array shared with the kernel
_H, _ACTIVE, _EVENTS, _FLIPS, _TIES, _LOWERING, _LOGN = range(7)


def replica_streams(seed: int | None, replica: int = 0):
    """Independent generators ``(initial, sites, clock)`` for one replica."""
    children = np.random.SeedSequence(seed, spawn_key=(replica,)).spawn(3)
    return tuple(np.random.Generator(np.random.PCG64(c)) for c in children)


@dataclass
class SpinConfig:
    """A spin field over ``geom``, stored flat in site-index order."""

    geom: SlabGeometry
    spins: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.spins)
        if s.size != self.geom.n_sites:
            raise ValueError(f"expected {self.geom.n_sites} spins, got {s.size}")
        if not np.all((s == 1) | (s == -1)):
            raise ValueError("spins must be exactly -1 or +1")
        self.spins = np.ascontiguousarray(s.reshape(-1), dtype=np.int8)

    @classmethod
    def filled(cls, geom: SlabGeometry, value: int = 1) -> "SpinConfig":
        return cls(geom, np.full(geom.n_sites, value, dtype=np.int8))

    @property
    def grid(self) -> np.ndarray:
        """View shaped ``(k, L, L)`` indexed ``[z, y, x]``."""
        return self.spins.reshape(self.geom.shape)

    def copy(self) -> "SpinConfig":
        return SpinConfig(self.geom, self.spins.copy())

    def __getitem__(self, v) -> int:
        return int(self.spins[site_index(self.geom, v)])

    def __setitem__(self, v, value: int):
        if value not in (-1, 1):
            raise ValueError("spin must be -1 or +1")
        self.spins[site_index(self.geom, v)] = value

    def __eq__(self, other):
        if not isinstance(other, SpinConfig):
            return NotImplemented
        return self.geom == other.geom and np.array_equal(self.spins, other.spins)


def local_energy(config: SpinConfig, v) -> int:
    """``e_v``: disagreeing minus agreeing neighbours, with multiplicity."""
    s = config[v]
    return -sum(s * config[w] for w in neighbors(config.geom, v))


def local_energies(config: SpinConfig) -> np.ndarray:
    """Local energies of every site, flat in site-index order (int64)."""
    geom = config.geom
    s = config.spins.astype(np.int64)
    return -(s * neighbor_sums(geom, s).reshape(-1))


def hamiltonian(config: SpinConfig) -> int:
    """``-sum over edges of s_u s_v``, each edge once with its multiplicity."""
    return int(local_energies(config).sum()) // 2


def is_absorbing(config: SpinConfig) -> bool:
    return bool(np.all(local_energies(config) < 0))


def is_legal_flip_sequence(config: SpinConfig, sites) -> bool:
    """Whether flipping ``sites`` in order is a positive-probability path.

    Each flip must happen at a site whose energy is >= 0 at its turn.  The
    input config is not modified.
    """
    work = config.copy()
    for v in sites:
        if local_energy(work, v) < 0:
            return False
        work[v] = -work[v]
    return True


@njit(cache=True, nogil=True)
def _flip(v, spins, energy, nbr, counters):
    old = spins[v]
    ev = energy[v]
    if ev > 0:
        counters[_ACTIVE] -= 1
    energy[v] = -ev
    spins[v] = -old
    for j in range(nbr.shape[1]):
        w = nbr[v, j]
        if w < 0:
            break
        before = energy[w]
        after = before + 2 * spins[w] * old
        energy[w] = after
        if before >= 0 and after < 0:
            counters[_ACTIVE] -= 1
        elif before < 0 and after >= 0:
            counters[_ACTIVE] += 1


@njit(cache=True, nogil=True)
def _advance(spins, energy, nbr, draws, clock, pos, end, t, t_max, inv_rate,
             stop_absorbed, n_flips, n_lowering, counters,
             log_t, log_site, log_old, log_e):
    """Process buffered events ``pos..end-1``; returns ``(pos, t, reason)``."""
    cap = log_t.shape[0]
    if stop_absorbed and counters[_ACTIVE] == 0:
        return pos, t, STOP_ABSORBED
    i = pos
    while i < end:
        tn = t + clock[i] * inv_rate
        if tn > t_max:
            return i, t, STOP_TIME
        t = tn
        r = draws[i]
        i += 1
        v = r >> 1
        counters[_EVENTS] += 1
        e = energy[v]
        if e < 0:
            continue
        if e == 0:
            counters[_TIES] += 1
            new = 1 if (r & 1) else -1
            if new == spins[v]:
                continue
        if cap > 0:
            slot = counters[_LOGN] % cap
            log_t[slot] = t
            log_site[slot] = v
            log_old[slot] = spins[v]
            log_e[slot] = e
        counters[_LOGN] += 1
        _flip(v, spins, energy, nbr, counters)
        n_flips[v] += 1
        counters[_FLIPS] += 1
        if e > 0:
            n_lowering[v] += 1
            counters[_LOWERING] += 1
        counters[_H] -= 2 * e
        if stop_absorbed and counters[_ACTIVE] == 0:
            return i, t, STOP_ABSORBED
    return i, t, STOP_BUFFER


@dataclass
class EventLog:
    """Flip events in chronological order (the most recent ``capacity``)."""

    time: np.ndarray
    site: np.ndarray
    old_spin: np.ndarray
    energy: np.ndarray
    total: int

    @property
    def truncated(self) -> bool:
        return self.total > len(self.site)

    def __len__(self):
        return len(self.site)


class DynamicsState:
    """A running simulation.

    Attributes
    ----------
    config : SpinConfig
        Current spins, mutated in place by the kernel.
    t : float
        Continuous time of the last processed clock ring.
    flips, lowering_flips : ndarray
        Per-site count of spin changes and of energy-lowering changes
        (pre-flip energy > 0).
    energy, energy0 : ndarray
        Cached current local energies and the energies at construction.
    """

    def __init__(self, config: SpinConfig, seed: int | None = 0, replica: int = 0,
                 log_capacity: int = 0):
        self.config = config.copy()
        self.geom = config.geom
        n = self.geom.n_sites
        self.seed = seed
        self.replica = replica
        _, self.site_rng, self.clock_rng = replica_streams(seed, replica)
        self._draws = np.empty(0, dtype=np.int64)
        self._clock = np.empty(0, dtype=np.float64)
        self._pos = 0
        self.t = 0.0
        self.flips = np.zeros(n, dtype=np.int64)
        self.lowering_flips = np.zeros(n, dtype=np.int64)
        self.energy = local_energies(self.config).astype(np.int8)
        self.energy0 = self.energy.copy()
        self._counters = np.zeros(7, dtype=np.int64)
        self._counters[_H] = int(self.energy.astype(np.int64).sum()) // 2
        self._counters[_ACTIVE] = int(np.count_nonzero(self.energy >= 0))
        self._log_t = np.zeros(log_capacity, dtype=np.float64)
        self._log_site = np.zeros(log_capacity, dtype=np.int64)
        self._log_old = np.zeros(log_capacity, dtype=np.int8)
        self._log_e = np.zeros(log_capacity, dtype=np.int8)

    # counters -------------------------------------------------------------
    @property
    def H(self) -> int:
        return int(self._counters[_H])

    @property
    def n_events(self) -> int:
        return int(self._counters[_EVENTS])

    @property
    def n_flips(self) -> int:
        return int(self._counters[_FLIPS])

    @property
    def n_ties(self) -> int:
        """Clock rings that found a zero-energy site (coin updates)."""
        return int(self._counters[_TIES])

    @property
    def n_lowering(self) -> int:
        return int(self._counters[_LOWERING])

    @property
    def n_active(self) -> int:
        """Sites with energy >= 0, i.e. sites a ring could still change."""
        return int(self._counters[_ACTIVE])

    @property
    def absorbed(self) -> bool:
        return self.n_active == 0

    @property
    def sweeps(self) -> float:
        return self.n_events / self.geom.n_sites

    def event_log(self) -> EventLog:
        cap = len(self._log_t)
        total = int(self._counters[_LOGN])
        if cap == 0:
            order = np.empty(0, dtype=np.int64)
        elif total <= cap:
            order = np.arange(total)
        else:
            order = (np.arange(cap) + total) % cap
        return EventLog(self._log_t[order].copy(), self._log_site[order].copy(),
                        self._log_old[order].copy(), self._log_e[order].copy(), total)

    def check_energy(self) -> bool:
        """Compare the cached energies and Hamiltonian to a full recomputation."""
        fresh = local_energies(self.config)
        return bool(np.array_equal(fresh, self.energy)) and self.H == int(fresh.sum()) // 2

    # stepping -------------------------------------------------------------
    def _refill(self):
        n = self.geom.n_sites
        self._draws = self.site_rng.integers(0, 2 * n, size=CHUNK, dtype=np.int64)
        self._clock = self.clock_rng.standard_exponential(CHUNK)
        self._pos = 0

    def advance(self, max_events: int | None = None, t_max: float = np.inf,
                until_absorbed: bool = False) -> int:
        """Process up to ``max_events`` rings; returns the stop reason code."""
        nbr = self.geom.neighbor_table
        inv_rate = 1.0 / self.geom.n_sites
        remaining = np.inf if max_events is None else int(max_events)
        while remaining > 0:
            if self._pos >= len(self._draws):
                self._refill()
            end = len(self._draws) if remaining == np.inf else int(
                min(len(self._draws), self._pos + remaining))
            before = self._pos
            self._pos, self.t, reason = _advance(
                self.config.spins, self.energy, nbr, self._draws, self._clock,
                self._pos, end, self.t, t_max, inv_rate, until_absorbed,
                self.flips, self.lowering_flips, self._counters,
                self._log_t, self._log_site, self._log_old, self._log_e)
            remaining -= self._pos - before
            if reason != STOP_BUFFER:
                return reason
        return STOP_BUFFER


def step(state: DynamicsState) -> DynamicsState:
    """Apply exactly one clock ring."""
    state.advance(max_events=1)
    return state


@dataclass
class RunReport:
    stop_reason: str
    events: int
    flips: int
    lowering_flips: int
    ties: int
    H: int
    t: float
    absorbed: bool
    samples: list[dict] = field(default_factory=list)


_REASONS = {STOP_BUFFER: "max_events", STOP_TIME: "t_max", STOP_ABSORBED: "absorbed"}


def run(state: DynamicsState, *, t_max: float | None = None,
        max_events: int | None = None, until_absorbed: bool = False,
        sample_every: int | None = None) -> tuple[DynamicsState, RunReport]:
    """Step ``state`` until a stop criterion fires.

    At least one of ``t_max`` (continuous time), ``max_events`` (clock rings
    counted from the start of this call) or ``until_absorbed`` must be given;
    the first to trigger wins.  With ``sample_every`` a row of observables is
    recorded every that many events.
    """
    if t_max is None and max_events is None and not until_absorbed:
        raise ValueError("run needs at least one of t_max, max_events, until_absorbed")
    if t_max is not None and t_max < 0:
        raise ValueError("t_max must be >= 0")
    if max_events is not None and max_events < 0:
        raise ValueError("max_events must be >= 0")
    if sample_every is not None and sample_every <= 0:
        raise ValueError("sample_every must be positive")
    tm = np.inf if t_max is None else float(t_max)

    samples = []

    def sample():
        samples.append({"events": state.n_events, "t": state.t, "H": state.H,
                        "flips": state.n_flips, "active": state.n_active})

    start = state.n_events
    if sample_every is not None:
        sample()
    reason = STOP_BUFFER
    while True:
        done = state.n_events - start
        left = None if max_events is None else max_events - done
        if left is not None and left <= 0:
            reason = STOP_BUFFER
            break
        if until_absorbed and state.absorbed:
            reason = STOP_ABSORBED
            break
        chunk = left
        if sample_every is not None:
            chunk = sample_every if chunk is None else min(chunk, sample_every)
        reason = state.advance(chunk, tm, until_absorbed)
        if sample_every is not None:
            sample()
        if reason != STOP_BUFFER:
            break
        if chunk is None:
            continue
    report = RunReport(_REASONS[reason], state.n_events - start, state.n_flips,
                       state.n_lowering, state.n_ties, state.H, state.t,
                       state.absorbed, samples)
    return state, report
