import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotating_cavity.atom_cavity import CavitySpec, RotationSpec
from rotating_cavity.molecule import (
    ConstantDipole,
    DiatomicModel,
    DomainError,
    Harmonic,
    Morse,
    NoCrossing,
    ShiftDegenerate,
    Tabulated,
    adiabatic_scan,
    build_sigma_pi_norot,
    build_sigma_pi_rotating,
    compare_with_oracle,
    crossing_gap,
    distinct_r_values,
    f_phi,
    find_licis,
    rotated_angular_momentum_oracle,
    rotation_matrix,
    sigma_pi_stack,
    write_scan_csv,
)


def harmonic_model(g0=0.02):
    return DiatomicModel(
        Harmonic(1.0, 2.0), Harmonic(0.0, 2.0, 0.5), ConstantDipole(1.0), g0, CavitySpec(0.3, 0.0), 1.0, 0.5, 3.5
    )


def rot_with_oz(oz, oxy=0.075):
    return RotationSpec.from_vector([oxy, 0.0, oz])


def test_curves():
    assert Harmonic(2.0, 1.0, 0.1)(np.array([1.0, 2.0])) == pytest.approx([0.1, 1.1])
    m = Morse(0.2, 1.5, 1.0, -0.3)
    assert m(1.0) == pytest.approx(-0.3)
    assert m(50.0) == pytest.approx(-0.1)
    assert ConstantDipole(0.7)(np.zeros(4)).tolist() == [0.7] * 4


def test_tabulated_reproduces_cubic(tmp_path):
    r = np.linspace(1.0, 3.0, 9)
    cubic = lambda x: 0.3 * x**3 - x + 0.2
    path = tmp_path / "v.dat"
    np.savetxt(path, np.column_stack([r, cubic(r)]), header="r value")
    t = Tabulated.from_file(path)
    x = np.linspace(1.0, 3.0, 37)
    assert np.allclose(t(x), cubic(x), atol=1e-13)
    assert t.domain == (1.0, 3.0)
    with pytest.raises(DomainError):
        t(3.5)
    with pytest.raises(ValueError):
        Tabulated([1, 2, 3], [0, 0, 0])
    with pytest.raises(ValueError):
        Tabulated([1, 3, 2, 4], [0, 0, 0, 0])


def test_model_rejects_uncovered_table():
    t = Tabulated(np.linspace(1, 3, 6), np.zeros(6))
    with pytest.raises(ValueError):
        DiatomicModel(t, t, ConstantDipole(1.0), 0.1, CavitySpec(0.3, 0.0), 1.0, 0.5, 3.0)


@settings(max_examples=50, deadline=None)
@given(ox=st.floats(-1, 1), oy=st.floats(-1, 1), phi=st.floats(0, 2 * math.pi))
def test_f_phi_closed_form(ox, oy, phi):
    rot = RotationSpec.from_vector([ox, oy, 0.3])
    assert f_phi(rot, phi) == pytest.approx(2 * (ox * math.cos(phi) + oy * math.sin(phi)), abs=1e-14)


def test_rotating_matrix_is_norot_plus_pi_shift():
    model = harmonic_model()
    rot = RotationSpec.from_vector([0.05, -0.03, 0.08])
    r, theta, phi = 1.7, 0.9, 2.2
    s = -f_phi(rot, phi) * math.sin(theta) + rot.omega_z * math.cos(theta)
    diff = build_sigma_pi_rotating(model, rot, r, theta, phi).entries - build_sigma_pi_norot(model, r, theta).entries
    assert np.allclose(diff, np.diag([0, s, -s]), atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(
    r=st.floats(0.5, 3.5),
    theta=st.floats(0, math.pi),
    phi=st.floats(0, 2 * math.pi),
    ox=st.floats(-0.3, 0.3),
    oz=st.floats(-0.3, 0.3),
)
def test_surface_invariants(r, theta, phi, ox, oz):
    model = harmonic_model(0.05)
    rot = RotationSpec.from_vector([ox, 0.1, oz])
    h = sigma_pi_stack(model, rot, r, theta, phi)
    e = np.linalg.eigvalsh(h)
    # the Pi shifts are traceless
    assert e.sum() == pytest.approx(model.v_sigma(r) + 0.3 + 2 * model.v_pi(r), abs=1e-12)
    # the Sigma+photon level only mixes through sin(theta), so at theta = 0 it is exact
    hz = sigma_pi_stack(model, rot, r, 0.0, phi)
    assert np.min(np.abs(np.linalg.eigvalsh(hz) - hz[0, 0])) == 0.0


def test_rotation_matrix_is_proper():
    for theta, phi in [(0.3, 1.2), (2.0, 5.0), (math.pi, 0.0)]:
        r = rotation_matrix(theta, phi)
        assert np.allclose(r.T @ r, np.eye(3), atol=1e-15)
        assert np.linalg.det(r) == pytest.approx(1.0)


def test_oracle_report_structure():
    rot = RotationSpec.from_vector([0.05, 0.02, 0.1])
    rep = compare_with_oracle(rot)
    assert rep["grid"] == [32, 32]
    assert rep["agree"] is False
    rel = rep["discrepancy"]["relation"]
    assert rel["in_plane"]["ratio"] == pytest.approx(-2.0, abs=1e-12)
    assert rel["axial"]["ratio"] == pytest.approx(-1.0, abs=1e-12)
    assert rel["in_plane"]["fit_residual"] < 1e-14
    assert rep["discrepancy"]["samples"]
    assert compare_with_oracle(RotationSpec.none())["agree"] is True


def test_oracle_is_hermitian():
    rot = RotationSpec.from_vector([0.05, 0.02, 0.1])
    assert rotated_angular_momentum_oracle(rot, 1.0, 2.0).hermiticity_error() == 0.0


def test_scan_properties(tmp_path):
    model = harmonic_model()
    r = np.linspace(1.0, 3.0, 11)
    theta = np.linspace(0, math.pi, 7)
    phi = np.linspace(0, 2 * math.pi, 5)
    still = adiabatic_scan(model, RotationSpec.none(), r, theta, phi)
    assert np.all(np.ptp(still.energies, axis=2) == 0.0)
    rot = adiabatic_scan(model, rot_with_oz(0.1), r, theta, phi, threads=3)
    assert np.array_equal(rot.energies, adiabatic_scan(model, rot_with_oz(0.1), r, theta, phi).energies)
    assert np.all(np.diff(rot.energies, axis=-1) >= 0)
    assert rot.continuity_violations(10.0) == []
    assert rot.continuity_violations(1e-6)
    write_scan_csv(rot, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "r,theta,phi,e1,e2,e3" and len(lines) == 1 + 11 * 7 * 5
    with pytest.raises(ValueError):
        adiabatic_scan(model, None, r, theta, phi, max_points=10)
    with pytest.raises(DomainError):
        adiabatic_scan(model, None, [0.1, 1.0], theta, phi)


def test_lici_doubling():
    model = harmonic_model()
    with pytest.warns(ShiftDegenerate):
        two = find_licis(model, rot_with_oz(0.0), (0.8, 3.2))
    assert np.allclose(distinct_r_values(two), [2 - math.sqrt(0.4), 2 + math.sqrt(0.4)], atol=1e-8)
    four = find_licis(model, rot_with_oz(0.1), (0.8, 3.2))
    want = sorted(2 + s * math.sqrt(x) for s in (-1, 1) for x in (0.6, 0.2))
    assert np.allclose(distinct_r_values(four), want, atol=1e-8)
    for lici in two + four:
        assert lici.point.gap <= 1e-10
        assert lici.seam.certified and lici.seam.phi.size == 64
        assert lici.point.theta in (0.0, math.pi)
    rec = four[0].record()
    assert set(rec) == {"r", "theta", "branch", "gap", "seam_max_gap", "phi_grid_size"}


def test_lici_gap_opens_off_axis():
    model = harmonic_model()
    r = 2 + math.sqrt(0.2)
    assert crossing_gap(model, rot_with_oz(0.1), r, 0.0, 0.0) < 1e-12
    assert crossing_gap(model, rot_with_oz(0.1), r, 0.3, 0.0) > 1e-3


def test_no_crossing():
    model = harmonic_model()
    with pytest.raises(NoCrossing):
        find_licis(model, rot_with_oz(0.1), (1.8, 2.2))
