import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotating_cavity import analytic
from rotating_cavity.analytic import (
    dark_state_census,
    general_offsets,
    general_offsets_textbook,
    predict_spectrum,
    spectrum_general,
    spectrum_nonrotating,
    spectrum_xy,
    xy_offset,
)
from rotating_cavity.arrowhead import eigensolve_arrowhead
from rotating_cavity.atom_cavity import (
    CavitySpec,
    EnsembleSpec,
    NonPlanarAxis,
    RotationSpec,
    build_ensemble,
    build_ensemble_full,
)
from rotating_cavity.core import cluster_levels, eigenvalues_dense


def random_rotation(rng, planar=False):
    v = rng.normal(size=3)
    if planar:
        v[2] = 0.0
    return RotationSpec(tuple(v / np.linalg.norm(v)), rng.uniform(0.05, 0.8))


def quartic(x, w, wz, n, g):
    return x**4 - (w * w + n * g * g) * x * x + n * g * g * wz * wz


@settings(max_examples=200, deadline=None)
@given(
    wxy=st.floats(0.0, 3.0),
    wz=st.floats(-3.0, 3.0),
    n=st.integers(1, 500),
    g=st.floats(0.0, 1.0),
)
def test_general_offsets_solve_quartic(wxy, wz, n, g):
    big, small = general_offsets(wxy, wz, n, g)
    w = math.hypot(wxy, wz)
    scale = (w * w + n * g * g) ** 2 + 1e-300
    assert 0.0 <= small <= big * (1 + 1e-15)
    for x in (big, small):
        assert abs(quartic(x, w, wz, n, g)) <= 1e-12 * scale
    # Vieta: product and sum of squares
    assert math.isclose(big * big + small * small, w * w + n * g * g, rel_tol=1e-12, abs_tol=1e-300)
    assert math.isclose(big * small, math.sqrt(n) * g * abs(wz), rel_tol=1e-12, abs_tol=1e-300)


def test_stable_and_textbook_offsets_agree(rng):
    for _ in range(200):
        wxy, wz, g = rng.uniform(0, 1, 3)
        n = int(rng.integers(1, 50))
        assert np.allclose(general_offsets(wxy, wz, n, g), general_offsets_textbook(wxy, wz, n, g), atol=1e-12)


def test_stable_offsets_survive_cancellation():
    # Omega >> g sqrt(N) and tiny Omega_z: the textbook small root loses every digit
    big, small = general_offsets(1.0, 1e-9, 1, 1e-6)
    exact = 1e-6 * 1e-9 / big
    assert small == pytest.approx(exact, rel=1e-14)
    assert abs(general_offsets_textbook(1.0, 1e-9, 1, 1e-6)[1] - exact) > 1e-3 * exact


def test_xy_limit_of_general_branches(rng):
    for _ in range(1000):
        w, g = rng.uniform(0, 2, 2)
        n = int(rng.integers(1, 100))
        big, small = general_offsets(w, 0.0, n, g)
        assert abs(big - xy_offset(w, n, g)) <= 1e-11
        assert small == 0.0


def test_nonrotating_limit(rng):
    for n in (1, 3, 10):
        cav = CavitySpec(1.0, 0.1)
        rot = RotationSpec((1.0, 0.0, 0.0), 1e-14)
        p = predict_spectrum(cav, rot, n)
        lo, hi = p.branch_energies[0], p.branch_energies[-1]
        x = math.sqrt(n) * 0.1
        assert abs(lo - (1 - x)) < 1e-11 and abs(hi - (1 + x)) < 1e-11
        assert spectrum_nonrotating(cav, n).branch_energies == pytest.approx((1 - x, 1 + x), abs=1e-15)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
@pytest.mark.parametrize("planar", [True, False])
def test_prediction_matches_dense_oracle(n, planar, rng):
    for _ in range(5):
        cav = CavitySpec(rng.uniform(0.5, 2), rng.uniform(0.01, 0.3))
        rot = random_rotation(rng, planar)
        p = predict_spectrum(cav, rot, n)
        dense = eigenvalues_dense(build_ensemble_full(cav, rot, EnsembleSpec(n)))
        assert p.n_states == p.dim == 3 * n + 1
        assert np.max(np.abs(p.multiset() - dense)) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 4])
def test_census_matches_arrowhead_deflation(n, rng):
    cav = CavitySpec(1.0, 0.1)
    for planar, case in ((True, analytic.XY), (False, analytic.GENERAL)):
        rot = random_rotation(rng, planar)
        census = dark_state_census(cav, rot, n, case)
        sol = eigensolve_arrowhead(build_ensemble(cav, rot, EnsembleSpec(n), case=case))
        got = cluster_levels(np.repeat(list(sol.dark_multiplicities), list(sol.dark_multiplicities.values())), 1e-12)
        want = sorted(census.shaft)
        assert [m for _, m in got] == [m for _, m in want]
        assert np.allclose([e for e, _ in got], [e for e, _ in want], atol=1e-14)


def test_census_totals():
    cav = CavitySpec(1.0, 0.1)
    xy = dark_state_census(cav, RotationSpec.in_plane(0.3), 5, analytic.XY)
    assert xy.as_dict() == {0.7: 4, 1.3: 4}
    assert xy.decoupled == ((1.0, 5),)
    assert xy.total + 3 == 3 * 5 + 1
    gen = dark_state_census(cav, RotationSpec((1, 1, 1), 0.3), 5, analytic.GENERAL)
    assert gen.total + 4 == 3 * 5 + 1
    single = dark_state_census(cav, RotationSpec.in_plane(0.3), 1, analytic.XY)
    assert single.shaft == () and single.decoupled == ((1.0, 1),)
    with pytest.raises(ValueError):
        dark_state_census(cav, RotationSpec.in_plane(0.3), 2, "bogus")


def test_spectrum_guards():
    cav = CavitySpec(1.0, 0.1)
    with pytest.raises(NonPlanarAxis):
        spectrum_xy(cav, RotationSpec((0, 1, 1), 0.2), 2)
    with pytest.raises(ValueError):
        predict_spectrum(CavitySpec(1.0, 0.1, detuning=0.01), RotationSpec.in_plane(0.2), 2)
    assert len(spectrum_general(cav, RotationSpec((0, 1, 1), 0.2), 2).branch_energies) == 4
