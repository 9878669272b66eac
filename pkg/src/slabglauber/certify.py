"""Stability certificates for pinned spin sets.

A set ``S`` is stable for a configuration when every member has strictly
more than half of its neighbours (counted with multiplicity) inside ``S``
carrying its own spin.  Such a member always has negative local energy while
the rest of ``S`` keeps its spins, so no member can ever be the first to
flip: the whole set is frozen for every trajectory.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .dynamics import SpinConfig
from .lattice import SlabGeometry, index_site, site_index


@dataclass(frozen=True)
class CertifiedSet:
    geom: SlabGeometry
    indices: np.ndarray  # sorted site indices
    pinned: np.ndarray  # spin of each member, aligned with ``indices``

    def __len__(self):
        return len(self.indices)

    def __contains__(self, v) -> bool:
        i = v if isinstance(v, (int, np.integer)) else site_index(self.geom, v)
        j = np.searchsorted(self.indices, i)
        return bool(j < len(self.indices) and self.indices[j] == i)

    @property
    def sites(self) -> set:
        return {index_site(self.geom, i) for i in self.indices}


def _as_indices(geom: SlabGeometry, candidate) -> np.ndarray:
    items = list(candidate)
    if not items:
        return np.empty(0, dtype=np.int64)
    if isinstance(items[0], (int, np.integer)):
        idx = np.asarray(items, dtype=np.int64)
        if idx.min() < 0 or idx.max() >= geom.n_sites:
            raise ValueError("candidate index out of range")
    else:
        idx = np.array([site_index(geom, v) for v in items], dtype=np.int64)
    return np.unique(idx)


def certify(geom: SlabGeometry, config: SpinConfig, candidate, order=None) -> CertifiedSet:
    """Largest subset of ``candidate`` satisfying the strict-majority rule.

    ``candidate`` holds site indices or ``(x, y, z)`` triples.  ``order``
    optionally fixes the sequence in which sites are first examined; the
    result does not depend on it.
    """
    idx = _as_indices(geom, candidate)
    nbr = geom.neighbor_table
    deg = geom.degrees
    spins = config.spins
    alive = np.zeros(geom.n_sites, dtype=bool)
    alive[idx] = True

    support = np.zeros(geom.n_sites, dtype=np.int64)
    for i in idx:
        for w in nbr[i]:
            if w >= 0 and alive[w] and spins[w] == spins[i]:
                support[i] += 1

    if order is None:
        first = idx
    else:
        first = np.array([v if isinstance(v, (int, np.integer)) else site_index(geom, v)
                          for v in order], dtype=np.int64)
        if sorted(set(first.tolist())) != idx.tolist():
            raise ValueError("order must be a permutation of the candidate")
    queue = deque(int(i) for i in first)
    queued = np.zeros(geom.n_sites, dtype=bool)
    queued[idx] = True
    while queue:
        i = queue.popleft()
        queued[i] = False
        if not alive[i] or 2 * support[i] > deg[i]:
            continue
        alive[i] = False
        for w in nbr[i]:
            if w >= 0 and alive[w] and spins[w] == spins[i]:
                support[w] -= 1
                if not queued[w]:
                    queued[w] = True
                    queue.append(int(w))
    kept = idx[alive[idx]]
    return CertifiedSet(geom, kept, spins[kept].copy())


def is_stable_set(geom: SlabGeometry, config: SpinConfig, S) -> bool:
    idx = _as_indices(geom, S)
    if len(idx) == 0:
        return True
    nbr = geom.neighbor_table[idx]
    member = np.zeros(geom.n_sites, dtype=bool)
    member[idx] = True
    valid = nbr >= 0
    safe = np.where(valid, nbr, 0)
    agree = valid & member[safe] & (config.spins[safe] == config.spins[idx][:, None])
    return bool(np.all(2 * agree.sum(axis=1) > geom.degrees[idx]))
