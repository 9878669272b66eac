"""Replica-level experiment drivers behind the command-line interface.

Every command returns an :class:`ExperimentResult` holding a JSON-ready
summary and long-format series rows ``(replica, t_sweeps, observable, value)``.
Time is measured in sweeps (``L * L * k`` clock rings); the continuous clock
value is reported next to it where relevant.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bootstrap as bp
from .certify import certify
from .constructions import (
    Construction,
    ConstructionSpec,
    blinker_sites,
    build_initial,
    constrained_sites,
    default_center,
)
from .dynamics import DynamicsState, replica_streams
from .lattice import BoundaryCondition, SlabGeometry
from .snapshots import format_spins, format_tau
from .tau import Tau, column_transitions, grey_stats, project

log = logging.getLogger(__name__)

COMMANDS = ("fixation", "blinker", "tau", "bootstrap", "certify")


class CertificateViolation(RuntimeError):
    """A site of a certified-stable set flipped during a run."""


@dataclass
class ExperimentConfig:
    command: str
    k: int = 2
    L: int = 64
    bc: str = "free"
    p: float = 0.5
    seed: int = 0
    replicas: int = 1
    t_max: float = 1024.0
    sample_interval: float = 1.0
    construction: str = "none"
    center: tuple[int, int] | None = None
    out: Path | None = None
    snapshot_every: float | None = None
    workers: int = 1
    density: float | None = None
    blocks: int | None = None
    window_min: int = 3
    window_max: int | None = None
    snapshot: Path | None = None
    candidate: str | None = None
    log_capacity: int = 1 << 20

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        self.construction = Construction(self.construction).value
        if self.command == "certify":
            if self.snapshot is None or self.candidate is None:
                raise ValueError("certify needs a snapshot and a candidate")
            return
        if self.command != "bootstrap" or self.density is None:
            # raises on bad k / L / bc
            self.geometry()
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if self.t_max < 0 or self.sample_interval <= 0:
            raise ValueError("t_max must be >= 0 and sample_interval > 0")
        if self.command == "tau" and self.k != 2:
            raise ValueError("tau needs k=2")
        if self.command == "blinker":
            if self.construction == "none":
                raise ValueError("blinker needs a construction")
            ConstructionSpec(self.construction, self.center, self.p).check(self.geometry())
        if self.command == "bootstrap":
            if self.density is None and self.k != 2:
                raise ValueError("bootstrap extraction needs k=2 (or pass a density)")
            if self.density is not None and not 0.0 <= self.density <= 1.0:
                raise ValueError("density must lie in [0, 1]")

    def geometry(self) -> SlabGeometry:
        return SlabGeometry(self.k, self.L, BoundaryCondition(self.bc))


@dataclass
class ExperimentResult:
    summary: dict
    series: list[tuple] = field(default_factory=list)
    snapshots: dict[str, str] = field(default_factory=dict)
    exit_code: int = 0
    listing: str | None = None


def _map_replicas(cfg: ExperimentConfig, fn):
    """Run ``fn(r)`` for every replica; results ordered by replica index."""
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            return list(pool.map(fn, range(cfg.replicas)))
    return [fn(r) for r in range(cfg.replicas)]


def _header(cfg: ExperimentConfig) -> dict:
    return {
        "command": cfg.command,
        "geometry": {"k": cfg.k, "L": cfg.L, "bc": cfg.bc},
        "p": cfg.p,
        "seed": cfg.seed,
        "replicas": cfg.replicas,
    }


def doubling_windows(t_max: float) -> list[tuple[float, float]]:
    """``[0, 1], [1, 2], [2, 4], ...`` truncated at ``t_max`` (sweeps)."""
    out = []
    lo, hi = 0.0, 1.0
    while lo < t_max:
        out.append((lo, min(hi, t_max)))
        lo, hi = hi, 2 * hi
    return out


def _boundaries(cfg: ExperimentConfig, n_sites: int, extra=()) -> list[int]:
    """Event counts at which the driver pauses to sample or snapshot."""
    end = int(round(cfg.t_max * n_sites))
    marks = {end} if end > 0 else set()
    step = max(1, int(round(cfg.sample_interval * n_sites)))
    marks.update(range(step, end, step))
    if cfg.snapshot_every:
        snap = max(1, int(round(cfg.snapshot_every * n_sites)))
        marks.update(range(snap, end, snap))
    for s in extra:
        e = int(round(s * n_sites))
        if 0 < e < end:
            marks.add(e)
    return sorted(marks)


def _sample_rows(r: int, state: DynamicsState, rows: list, grey: bool, ts: float):
    rows.append((r, ts, "t", state.t))
    rows.append((r, ts, "H", state.H))
    rows.append((r, ts, "flips", state.n_flips))
    rows.append((r, ts, "active", state.n_active))
    if grey:
        g = grey_stats(project(state.config))
        rows.append((r, ts, "grey_pm", g.count_grey_pm))
        rows.append((r, ts, "grey_mp", g.count_grey_mp))


def _snap(cfg, r, state, snaps):
    key = f"snap_r{r:03d}_e{state.n_events}.txt"
    snaps[key] = format_spins(state.config, state.t)
    if cfg.k == 2:
        snaps[f"tau_r{r:03d}_e{state.n_events}.txt"] = format_tau(project(state.config), state.t)


def grey_to_grey_count(initial, state: DynamicsState) -> int | None:
    """Direct grey-to-grey column transitions in the event log (None if truncated)."""
    ev = state.event_log()
    if ev.truncated:
        return None
    grey = (Tau.GREY_PM, Tau.GREY_MP)
    return sum(1 for _, a, b in column_transitions(state.geom, initial, ev.site, ev.old_spin)
               if a in grey and b in grey and a != b)


# fixation / tau -------------------------------------------------------------

def _relaxation_replica(cfg: ExperimentConfig, r: int, with_grey: bool):
    geom = cfg.geometry()
    n = geom.n_sites
    init_rng, _, _ = replica_streams(cfg.seed, r)
    spec = ConstructionSpec(cfg.construction, cfg.center, cfg.p)
    initial = build_initial(geom, spec, init_rng)
    cap = cfg.log_capacity if geom.k == 2 else 0
    state = DynamicsState(initial, seed=cfg.seed, replica=r, log_capacity=cap)
    windows = doubling_windows(cfg.t_max)
    rows: list = []
    snaps: dict = {}
    _sample_rows(r, state, rows, with_grey, 0.0)
    sample_step = max(1, int(round(cfg.sample_interval * n)))
    snap_step = max(1, int(round(cfg.snapshot_every * n))) if cfg.snapshot_every else 0
    window_ends = {int(round(hi * n)) for _, hi in windows}
    end = int(round(cfg.t_max * n))
    window_flips = []
    last_flips = 0
    absorbed_at = None
    for mark in _boundaries(cfg, n, [hi for _, hi in windows]):
        frozen = state.absorbed
        if not frozen:
            state.advance(mark - state.n_events, until_absorbed=True)
            if state.absorbed:
                absorbed_at = (state.sweeps, state.t)
        if mark in window_ends:
            window_flips.append(state.n_flips - last_flips)
            last_flips = state.n_flips
        # an absorbed state is frozen: one more row at t_max, stamped nominally
        if (mark % sample_step == 0 and not frozen) or mark == end:
            _sample_rows(r, state, rows, with_grey, mark / n)
        if snap_step and mark % snap_step == 0:
            _snap(cfg, r, state, snaps)
    if state.absorbed and absorbed_at is None:
        absorbed_at = (0.0, 0.0)
    rep = {
        "replica": r,
        "absorbed": state.absorbed,
        "absorption_sweeps": None if absorbed_at is None else absorbed_at[0],
        "absorption_time": None if absorbed_at is None else absorbed_at[1],
        "events": state.n_events,
        "total_flips": state.n_flips,
        "energy_lowering_flips": state.n_lowering,
        "coin_updates": state.n_ties,
        "max_site_flips": int(state.flips.max()),
        "final_H": state.H,
        "window_flips": window_flips,
        "cache_consistent": state.check_energy(),
    }
    if geom.k == 2:
        g0 = grey_stats(project(initial))
        g1 = grey_stats(project(state.config))
        rep["grey_initial"] = g0.grey
        rep["grey_final"] = g1.grey
        rep["grey_final_pm"] = g1.count_grey_pm
        rep["grey_final_mp"] = g1.count_grey_mp
        rep["grey_to_grey"] = grey_to_grey_count(initial, state)
    return rep, rows, snaps


def cmd_fixation(cfg: ExperimentConfig) -> ExperimentResult:
    with_grey = cfg.k == 2
    results = _map_replicas(cfg, lambda r: _relaxation_replica(cfg, r, with_grey))
    per = [rep for rep, _, _ in results]
    L = cfg.L
    agg = {
        "absorbed_fraction": sum(p["absorbed"] for p in per) / len(per),
        "max_total_flips": max(p["total_flips"] for p in per),
        "mean_total_flips": sum(p["total_flips"] for p in per) / len(per),
        "windows": [list(w) for w in doubling_windows(cfg.t_max)],
    }
    if cfg.k == 2 and cfg.bc == "free":
        agg["flip_bound"] = 5 * L * L
        agg["flip_bound_respected"] = all(p["total_flips"] <= 5 * L * L for p in per)
        agg["coin_updates"] = sum(p["coin_updates"] for p in per)
    if cfg.k == 2:
        absorbed = [p for p in per if p["absorbed"]]
        agg["absorbed_with_grey"] = sum(1 for p in absorbed if p["grey_final"] > 0)
    summary = _header(cfg) | {"per_replica": per, "aggregate": agg}
    return _collect(summary, results)


def cmd_tau(cfg: ExperimentConfig) -> ExperimentResult:
    results = _map_replicas(cfg, lambda r: _relaxation_replica(cfg, r, True))
    per = [rep for rep, _, _ in results]
    n_col = cfg.L * cfg.L
    agg = {
        "initial_grey_fraction": sum(p["grey_initial"] for p in per) / (len(per) * n_col),
        "final_grey_fraction": sum(p["grey_final"] for p in per) / (len(per) * n_col),
        "absorbed_fraction": sum(p["absorbed"] for p in per) / len(per),
        "grey_to_grey": None if any(p["grey_to_grey"] is None for p in per)
        else sum(p["grey_to_grey"] for p in per),
    }
    summary = _header(cfg) | {"per_replica": per, "aggregate": agg}
    return _collect(summary, results)


def _collect(summary, results, exit_code=0) -> ExperimentResult:
    series = [row for _, rows, _ in results for row in rows]
    snaps = {}
    for _, _, s in results:
        snaps.update(s)
    return ExperimentResult(summary, series, snaps, exit_code)


# blinker --------------------------------------------------------------------

def blinker_windows(t_max: float) -> list[int]:
    """Exponents ``j`` with ``[2^j, 2^(j+1)]`` inside ``[0, t_max]``."""
    if t_max < 2:
        return []
    return list(range(0, int(math.floor(math.log2(t_max)))))


def _blinker_replica(cfg: ExperimentConfig, r: int):
    geom = cfg.geometry()
    n = geom.n_sites
    center = default_center(geom) if cfg.center is None else tuple(cfg.center)
    init_rng, _, _ = replica_streams(cfg.seed, r)
    spec = ConstructionSpec(cfg.construction, center, cfg.p)
    initial = build_initial(geom, spec, init_rng)
    candidate = constrained_sites(cfg.construction, geom, center)
    cert = certify(geom, initial, candidate)
    blinkers = blinker_sites(geom, center)
    if np.isin(blinkers, candidate).any():
        raise AssertionError("blinker sites must not be constrained by the construction")
    state = DynamicsState(initial, seed=cfg.seed, replica=r)
    js = blinker_windows(cfg.t_max)
    edges = [2.0 ** j for j in js] + ([2.0 ** (js[-1] + 1)] if js else [])
    edge_events = {int(round(e * n)): e for e in edges}
    sample_step = max(1, int(round(cfg.sample_interval * n)))
    snap_step = max(1, int(round(cfg.snapshot_every * n))) if cfg.snapshot_every else 0
    rows: list = []
    snaps: dict = {}
    at_edge: dict[float, list[int]] = {}

    def sample():
        ts = state.sweeps
        rows.append((r, ts, "t", state.t))
        rows.append((r, ts, "H", state.H))
        rows.append((r, ts, "flips", state.n_flips))
        for b, i in zip("ab", blinkers):
            rows.append((r, ts, f"blinker_{b}_flips", int(state.flips[i])))
        rows.append((r, ts, "certified_flips", int(state.flips[cert.indices].sum())))

    sample()
    for mark in _boundaries(cfg, n, edges):
        state.advance(mark - state.n_events)
        violated = int(state.flips[cert.indices].sum())
        if violated:
            raise CertificateViolation(
                f"replica {r}: {violated} flips inside the certified set by sweep {state.sweeps}")
        if mark in edge_events:
            at_edge[edge_events[mark]] = [int(state.flips[i]) for i in blinkers]
        if mark % sample_step == 0:
            sample()
        if snap_step and mark % snap_step == 0:
            _snap(cfg, r, state, snaps)

    windows = {}
    for j in js:
        lo, hi = at_edge[2.0 ** j], at_edge[2.0 ** (j + 1)]
        windows[str(j)] = [hi[0] - lo[0], hi[1] - lo[1]]
    j_hi = js[-1] if cfg.window_max is None else min(cfg.window_max, js[-1] if js else -1)
    checked = [j for j in js if cfg.window_min <= j <= j_hi]
    rep = {
        "replica": r,
        "candidate_size": int(len(candidate)),
        "certified_size": int(len(cert)),
        "candidate_fully_certified": len(cert) == len(candidate),
        "certified_flips": int(state.flips[cert.indices].sum()),
        "blinker_sites": [list(map(int, np.unravel_index(i, geom.shape)[::-1])) for i in blinkers],
        "blinker_total_flips": [int(state.flips[i]) for i in blinkers],
        "window_flips": windows,
        "checked_windows": checked,
        "flips_in_every_window": all(min(windows[str(j)]) > 0 for j in checked),
        "events": state.n_events,
        "t": state.t,
        "final_H": state.H,
    }
    return rep, rows, snaps


def cmd_blinker(cfg: ExperimentConfig) -> ExperimentResult:
    results = _map_replicas(cfg, lambda r: _blinker_replica(cfg, r))
    per = [rep for rep, _, _ in results]
    agg = {
        "construction": cfg.construction,
        "center": list(cfg.center) if cfg.center else list(default_center(cfg.geometry())),
        "fraction_flipping_every_window": sum(p["flips_in_every_window"] for p in per) / len(per),
        "certified_flips_total": sum(p["certified_flips"] for p in per),
        "checked_windows": per[0]["checked_windows"],
    }
    summary = _header(cfg) | {"per_replica": per, "aggregate": agg}
    return _collect(summary, results)


# bootstrap ------------------------------------------------------------------

def _bootstrap_replica(cfg: ExperimentConfig, r: int):
    init_rng, _, _ = replica_streams(cfg.seed, r)
    if cfg.density is not None:
        M = cfg.blocks if cfg.blocks is not None else cfg.L // 2
        eta = bp.random_eta(M, cfg.density, init_rng)
    else:
        from .constructions import sample_product
        eta = bp.extract_eta(sample_product(cfg.geometry(), cfg.p, init_rng))
    traj: list = []
    final = bp.closure(eta, traj)
    rows = [(r, n, "occupation", float(f)) for n, f in enumerate(traj)]
    rep = {
        "replica": r,
        "blocks": eta.M,
        "initial_fraction": float(traj[0]),
        "final_fraction": float(traj[-1]),
        "steps": final.n,
        "fully_occupied": bool(final.occ.all()),
    }
    return rep, rows, {}


def cmd_bootstrap(cfg: ExperimentConfig) -> ExperimentResult:
    results = _map_replicas(cfg, lambda r: _bootstrap_replica(cfg, r))
    per = [rep for rep, _, _ in results]
    agg = {
        "mode": "density" if cfg.density is not None else "extraction",
        "density": cfg.density,
        "mean_initial_fraction": sum(p["initial_fraction"] for p in per) / len(per),
        "fully_occupied_fraction": sum(p["fully_occupied"] for p in per) / len(per),
        "max_steps": max(p["steps"] for p in per),
    }
    summary = _header(cfg) | {"per_replica": per, "aggregate": agg}
    return _collect(summary, results)


# certify --------------------------------------------------------------------

def read_site_file(path: Path) -> list[tuple[int, int, int]]:
    sites = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        x, y, z = (int(v) for v in line.split())
        sites.append((x, y, z))
    return sites


def resolve_candidate(text: str, geom: SlabGeometry, center=None) -> np.ndarray:
    """Named candidate (construction, ``table-N``, ``inverted-table-N``) or a file."""
    from .constructions import inverted_table, table, _place

    center = default_center(geom) if center is None else tuple(center)
    if text in {c.value for c in Construction}:
        return constrained_sites(text, geom, center)
    for prefix, fn in (("table-", table), ("inverted-table-", inverted_table)):
        if text.startswith(prefix) and text[len(prefix):].isdigit():
            rel = fn(int(text[len(prefix):]))
            return np.array(sorted({_place(geom, center, v) for v in rel}), dtype=np.int64)
    from .lattice import site_index
    return np.array(sorted({site_index(geom, v) for v in read_site_file(Path(text))}),
                    dtype=np.int64)


def cmd_certify(cfg: ExperimentConfig) -> ExperimentResult:
    from .snapshots import parse_spins

    config, t = parse_spins(Path(cfg.snapshot).read_text())
    geom = config.geom
    candidate = resolve_candidate(cfg.candidate, geom, cfg.center)
    cert = certify(geom, config, candidate)
    listing = "".join(f"{x} {y} {z}\n" for x, y, z in sorted(cert.sites, key=lambda s: (s.z, s.y, s.x)))
    full = len(cert) == len(candidate)
    summary = {
        "command": "certify",
        "geometry": {"k": geom.k, "L": geom.L, "bc": geom.vertical_bc.value},
        "snapshot_t": t,
        "candidate": cfg.candidate,
        "candidate_size": int(len(candidate)),
        "certified_size": int(len(cert)),
        "fully_certified": full,
    }
    return ExperimentResult(summary, [], {}, 0 if full else 1, listing)


def run_command(cfg: ExperimentConfig) -> ExperimentResult:
    return {
        "fixation": cmd_fixation,
        "blinker": cmd_blinker,
        "tau": cmd_tau,
        "bootstrap": cmd_bootstrap,
        "certify": cmd_certify,
    }[cfg.command](cfg)
