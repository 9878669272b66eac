from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slabglauber.bootstrap import (
    EtaConfig,
    bootstrap_step,
    closure,
    extract_eta,
    find_empty_contour,
    occupation_fraction,
    random_eta,
)
from slabglauber.certify import is_stable_set
from slabglauber.dynamics import SpinConfig
from slabglauber.lattice import SlabGeometry

from conftest import random_config


def eta_from(points, M=8):
    occ = np.zeros((M, M), dtype=bool)
    for x, y in points:
        occ[y % M, x % M] = True
    return EtaConfig(occ)


def async_closure(occ: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Single-site updates in random order until nothing can change."""
    occ = occ.copy()
    M = occ.shape[0]

    def can_fill(y, x):
        vert = occ[(y - 1) % M, x] or occ[(y + 1) % M, x]
        horiz = occ[y, (x - 1) % M] or occ[y, (x + 1) % M]
        return not occ[y, x] and vert and horiz

    while True:
        changed = False
        for flat in rng.permutation(M * M):
            y, x = divmod(int(flat), M)
            if can_fill(y, x):
                occ[y, x] = True
                changed = True
        if not changed:
            return occ


def test_extract_all_plus():
    g = SlabGeometry(2, 16)
    eta = extract_eta(SpinConfig.filled(g))
    assert eta.M == 8 and eta.occ.all() and eta.n == 0


def test_extract_single_flip_clears_one_block():
    g = SlabGeometry(2, 16, "periodic")
    c = SpinConfig.filled(g)
    c[(5, 2, 1)] = -1
    eta = extract_eta(c)
    assert np.count_nonzero(~eta.occ) == 1 and not eta.occ[1, 2]


def test_extract_matches_block_definition():
    g = SlabGeometry(2, 16)
    c = random_config(g, 0, p=0.8)
    eta = extract_eta(c)
    for bx in range(8):
        for by in range(8):
            vals = {c[(2 * bx + dx, 2 * by + dy, dz)]
                    for dx in (0, 1) for dy in (0, 1) for dz in (0, 1)}
            assert eta.occ[by, bx] == (len(vals) == 1)


def test_extract_requires_k2():
    with pytest.raises(ValueError):
        extract_eta(SpinConfig.filled(SlabGeometry(3, 8)))


@pytest.mark.parametrize("bc", ["free", "periodic"])
def test_occupied_blocks_are_stable(bc):
    g = SlabGeometry(2, 32, bc)
    c = random_config(g, 4, p=0.7)
    eta = extract_eta(c)
    assert eta.occ.any()
    for by, bx in zip(*np.nonzero(eta.occ)):
        block = [(2 * bx + dx, 2 * by + dy, dz) for dx in (0, 1) for dy in (0, 1) for dz in (0, 1)]
        assert is_stable_set(g, c, block)


def test_perpendicular_pair_fills():
    out = bootstrap_step(eta_from([(3, 4), (4, 3)]))  # north and east of (3, 3)
    assert out.occ[3, 3] and out.n == 1


def test_opposite_pair_does_not_fill():
    out = bootstrap_step(eta_from([(3, 4), (3, 2)]))
    assert not out.occ[3, 3]


def test_isolated_square_is_stuck():
    eta = eta_from([(2, 2), (3, 2), (2, 3), (3, 3)])
    assert np.array_equal(bootstrap_step(eta).occ, eta.occ)


def test_closure_grows_to_rectangle():
    eta = eta_from([(0, 0), (0, 1), (1, 0), (1, 1), (2, 1)])
    final = closure(eta)
    expected = eta_from([(x, y) for x in range(3) for y in range(2)])
    assert np.array_equal(final.occ, expected.occ)
    assert np.array_equal(async_closure(eta.occ, np.random.default_rng(0)), expected.occ)


def test_closure_trivial_cases():
    assert not closure(EtaConfig(np.zeros((8, 8), bool))).occ.any()
    full = closure(EtaConfig(np.ones((8, 8), bool)))
    assert full.occ.all() and full.n == 0


def test_occupation_fraction():
    assert occupation_fraction(EtaConfig(np.ones((4, 4), bool))) == 1
    assert occupation_fraction(EtaConfig(np.zeros((4, 4), bool))) == 0
    assert occupation_fraction(eta_from([(0, 0)], M=4)) == Fraction(1, 16)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.05, 0.15, 0.3]))
def test_closure_properties(seed, density):
    rng = np.random.default_rng(seed)
    eta = random_eta(16, density, rng)
    traj = []
    final = closure(eta, traj)
    assert traj == sorted(traj)
    assert np.all(final.occ >= eta.occ)
    assert np.array_equal(closure(final).occ, final.occ)
    bigger = EtaConfig(eta.occ | (rng.random((16, 16)) < 0.05))
    assert np.all(closure(bigger).occ >= final.occ)
    assert np.array_equal(async_closure(eta.occ, rng), final.occ)


def test_empty_contour_diagnostic():
    occ = np.zeros((16, 16), dtype=bool)
    occ[6:9, 6:9] = True
    eta = EtaConfig(occ)
    assert find_empty_contour(eta, 6, 6, 8, 8, max_margin=3) == (1, 1, 1, 1)
    occ2 = occ.copy()
    occ2[5, 6:9] = True  # block the bottom edge at margin 1
    assert find_empty_contour(EtaConfig(occ2), 6, 6, 8, 8, max_margin=3) == (1, 1, 2, 1)
    assert find_empty_contour(EtaConfig(np.ones((16, 16), bool)), 6, 6, 8, 8, 3) is None


def test_extraction_density_matches_block_probability():
    # two monochromatic assignments out of 2^8 block states
    g = SlabGeometry(2, 512)
    rng = np.random.default_rng(77)
    eta = extract_eta(SpinConfig(g, np.where(rng.random(g.n_sites) < 0.5, 1, -1)))
    q = 2 / 2**8
    assert abs(float(occupation_fraction(eta)) - q) <= 3 * np.sqrt(q * (1 - q) / 256**2)
