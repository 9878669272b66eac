import numpy as np
import pytest

from slabglauber.dynamics import SpinConfig
from slabglauber.lattice import SlabGeometry

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record():
    """Record a one-line pass/fail verdict for the acceptance summary."""

    def _record(name: str, ok: bool, detail: str = ""):
        _ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip())
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_config(geom: SlabGeometry, seed: int, p: float = 0.5) -> SpinConfig:
    rng = np.random.default_rng(seed)
    return SpinConfig(geom, np.where(rng.random(geom.n_sites) < p, 1, -1))


def edge_list(geom: SlabGeometry):
    """Every edge of the slab once per multiplicity, enumerated from coordinates."""
    L, k = geom.L, geom.k
    edges = []
    for z in range(k):
        for y in range(L):
            for x in range(L):
                edges.append(((x, y, z), ((x + 1) % L, y, z)))
                edges.append(((x, y, z), (x, (y + 1) % L, z)))
                if z + 1 < k:
                    edges.append(((x, y, z), (x, y, z + 1)))
                elif geom.periodic:
                    # wraps z=k-1 to z=0; for k=2 this duplicates the (0,1) edge
                    edges.append(((x, y, z), (x, y, 0)))
    return edges


def brute_hamiltonian(config: SpinConfig) -> int:
    return -sum(config[u] * config[v] for u, v in edge_list(config.geom))
