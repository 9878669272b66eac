"""Plain-text snapshot formats for spins, tau fields and eta fields."""

from __future__ import annotations

import numpy as np

from .bootstrap import EtaConfig
from .dynamics import SpinConfig
from .lattice import SlabGeometry
from .tau import Tau, TauConfig

_TAU_CHARS = {Tau.PLUS: "+", Tau.MINUS: "-", Tau.GREY_PM: "g", Tau.GREY_MP: "G"}
_TAU_CODES = {c: int(t) for t, c in _TAU_CHARS.items()}


def _header_fields(line: str, tag: str) -> dict[str, str]:
    parts = line.split()
    if not parts or parts[0] != tag:
        raise ValueError(f"expected a '{tag}' header, got {line!r}")
    return dict(p.split("=", 1) for p in parts[1:])


def format_spins(config: SpinConfig, t: float = 0.0) -> str:
    g = config.geom
    lines = [f"slab k={g.k} L={g.L} bc={g.vertical_bc.value} t={t!r}"]
    for layer in config.grid:
        for row in layer:
            lines.append("".join("+" if s > 0 else "-" for s in row))
    return "\n".join(lines) + "\n"


def parse_spins(text: str) -> tuple[SpinConfig, float]:
    lines = text.splitlines()
    h = _header_fields(lines[0], "slab")
    geom = SlabGeometry(int(h["k"]), int(h["L"]), h["bc"])
    rows = lines[1:1 + geom.k * geom.L]
    if len(rows) != geom.k * geom.L or any(len(r) != geom.L for r in rows):
        raise ValueError("snapshot body does not match its header")
    chars = np.frombuffer("".join(rows).encode("ascii"), dtype=np.uint8)
    if not np.all((chars == ord("+")) | (chars == ord("-"))):
        raise ValueError("snapshot body must contain only '+' and '-'")
    spins = np.where(chars == ord("+"), 1, -1).astype(np.int8)
    return SpinConfig(geom, spins), float(h["t"])


def format_tau(tau: TauConfig, t: float = 0.0) -> str:
    lines = [f"tau L={tau.L} t={t!r}"]
    for row in tau.values:
        lines.append("".join(_TAU_CHARS[Tau(int(v))] for v in row))
    return "\n".join(lines) + "\n"


def parse_tau(text: str) -> tuple[TauConfig, float]:
    lines = text.splitlines()
    h = _header_fields(lines[0], "tau")
    L = int(h["L"])
    values = np.array([[_TAU_CODES[c] for c in row] for row in lines[1:1 + L]], dtype=np.int8)
    if values.shape != (L, L):
        raise ValueError("tau snapshot body does not match its header")
    return TauConfig(values), float(h["t"])


def format_eta(eta: EtaConfig) -> str:
    lines = [f"eta L={eta.M} n={eta.n}"]
    for row in eta.occ:
        lines.append("".join("1" if v else "0" for v in row))
    return "\n".join(lines) + "\n"


def parse_eta(text: str) -> EtaConfig:
    lines = text.splitlines()
    h = _header_fields(lines[0], "eta")
    M = int(h["L"])
    occ = np.array([[c == "1" for c in row] for row in lines[1:1 + M]], dtype=bool)
    if occ.shape != (M, M):
        raise ValueError("eta snapshot body does not match its header")
    return EtaConfig(occ, int(h["n"]))
