import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotating_cavity.atom_cavity import CavitySpec, RotationSpec
from rotating_cavity.dynamics import (
    Frame,
    FrameMismatch,
    FrozenAngleConfig,
    GridTooCoarse,
    Propagator,
    RadialGrid,
    StabilityViolation,
    TRAJECTORY_COLUMNS,
    angular_term,
    assemble_hamiltonian_reduced,
    eigenstate_wavepacket,
    frame_transform,
    gaussian_wavepacket,
    kinetic_matrix,
    propagate,
    rabi_period,
)
from rotating_cavity.molecule import ConstantDipole, DiatomicModel, Harmonic, Morse


def flat_model(g0):
    # Sigma + photon resonant with Pi everywhere
    return DiatomicModel(Harmonic(0.0, 0.0, 0.0), Harmonic(0.0, 0.0, 0.3), ConstantDipole(1.0), g0, CavitySpec(0.3, 0.0), 1.0, 0.5, 3.5)


def morse_model():
    return DiatomicModel(
        Morse(0.2, 1.2, 2.0), Morse(0.1, 1.0, 2.3, 0.25), ConstantDipole(1.0), 0.01, CavitySpec(0.3, 0.0), 20.0, 1.0, 4.0
    )


def test_grid_validation():
    with pytest.raises(ValueError):
        RadialGrid(0.0, 1.0, 32)
    with pytest.raises(ValueError):
        RadialGrid(1.0, 1.0, 32)
    with pytest.raises(ValueError):
        RadialGrid(0.5, 1.0, 8)
    g = RadialGrid(1.0, 2.0, 99)
    assert g.dr == pytest.approx(0.01)
    assert g.points[0] == pytest.approx(1.01) and g.points[-1] == pytest.approx(1.99)


def test_kinetic_matrix_reproduces_box_levels():
    grid = RadialGrid(0.5, 3.5, 64, reduced_mass=2.0)
    t = kinetic_matrix(grid)
    assert np.array_equal(t, t.T)
    j = np.arange(1, 65)
    exact = (j * math.pi / 3.0) ** 2 / (2 * 2.0)
    assert np.allclose(np.linalg.eigvalsh(t), exact, rtol=1e-12)


def test_harmonic_oscillator_levels():
    mu, k = 1.0, 1.0
    grid = RadialGrid(0.1, 10.1, 200, mu)
    h = kinetic_matrix(grid) + np.diag(Harmonic(k, 5.1)(grid.points))
    w = np.linalg.eigvalsh(h)[:5]
    assert np.allclose(w, np.arange(5) + 0.5, atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(
    ell=st.tuples(*[st.floats(-3, 3)] * 3),
    omega=st.tuples(*[st.floats(-0.5, 0.5)] * 3),
    mu=st.floats(0.5, 30),
)
def test_angular_term_expanded_equals_simplified(ell, omega, mu):
    rot = RotationSpec.from_vector(omega)
    r = np.linspace(0.5, 4.0, 7)
    a = angular_term(r, rot, ell, mu, expanded=True)
    b = angular_term(r, rot, ell, mu, expanded=False)
    scale = 1 + np.max(np.abs(a)) + mu * 16 * rot.omega**2
    assert np.allclose(a, b, atol=1e-12 * scale)


def test_hamiltonian_structure():
    model = morse_model()
    grid = RadialGrid(1.0, 4.0, 40, 20.0)
    h = assemble_hamiltonian_reduced(model, RotationSpec.from_vector([0.01, 0.02, 0.03]), grid, FrozenAngleConfig(0.7, 1.1))
    assert h.dim == 120 and h.hermiticity_error() == 0.0
    with pytest.raises(GridTooCoarse):
        assemble_hamiltonian_reduced(model, RotationSpec.none(), grid, FrozenAngleConfig(0.7), max_dr=1e-3)
    with pytest.raises(ValueError):
        FrozenAngleConfig(4.0)


@pytest.fixture(scope="module")
def morse_setup():
    model = morse_model()
    grid = RadialGrid(1.0, 4.0, 96, 20.0)
    rot = RotationSpec.from_vector([0.004, 0.0, 0.003])
    cfg = FrozenAngleConfig(0.6, 0.4)
    h = assemble_hamiltonian_reduced(model, rot, grid, cfg)
    return model, grid, rot, cfg, h, Propagator(h)


def test_gaussian_propagation_conserves(morse_setup):
    _, grid, _, _, h, prop = morse_setup
    psi = gaussian_wavepacket(grid, 2.2, 0.15, momentum=1.0)
    assert psi.norm() == pytest.approx(1.0)
    traj = propagate(h, psi, 0.5, 300, grid, prop)
    assert traj.norm_drift <= 1e-10
    assert traj.energy_drift <= 1e-9
    assert len(list(traj.rows())) == 301 and len(TRAJECTORY_COLUMNS) == 9
    assert traj.populations[:, 1:].max() > 0  # the cavity transfers population to Pi


def test_eigenstate_is_stationary(morse_setup):
    _, grid, _, _, h, prop = morse_setup
    psi0, e0 = eigenstate_wavepacket(h, grid, 0)
    assert prop.energy(psi0) == pytest.approx(e0, abs=1e-12)
    traj = propagate(h, psi0, 1.0, 200, grid, prop)
    assert abs(psi0.overlap(traj.final)) ** 2 >= 1 - 1e-9


def test_stability_violation_and_frame_guard(morse_setup):
    _, grid, rot, cfg, h, prop = morse_setup
    psi = gaussian_wavepacket(grid, 2.2, 0.15)
    with pytest.raises(StabilityViolation):
        propagate(h, psi, 0.5, 3, grid, prop, norm_tol=-1.0)
    lab = frame_transform(psi, rot, 1.0, Frame.LAB, cfg.theta, cfg.phi)
    with pytest.raises(FrameMismatch):
        propagate(h, lab, 0.5, 3, grid, prop)
    with pytest.raises(FrameMismatch):
        frame_transform(lab, rot, 1.0, Frame.LAB, cfg.theta, cfg.phi)


@settings(max_examples=20, deadline=None)
@given(t=st.floats(0, 1e3), theta=st.floats(0, math.pi), phi=st.floats(0, 2 * math.pi))
def test_frame_round_trip(t, theta, phi):
    grid = RadialGrid(1.0, 4.0, 32)
    rot = RotationSpec.from_vector([0.02, -0.01, 0.05])
    psi = gaussian_wavepacket(grid, 2.0, 0.3, channel=1)
    lab = frame_transform(psi, rot, t, Frame.LAB, theta, phi)
    assert lab.norm() == pytest.approx(1.0, abs=1e-14)
    back = frame_transform(lab, rot, t, Frame.ROTATING, theta, phi)
    assert abs(psi.overlap(back)) >= 1 - 1e-12


def test_rabi_period_matches_two_level():
    g0 = 0.05
    grid = RadialGrid(0.5, 3.5, 128)
    h = assemble_hamiltonian_reduced(flat_model(g0), RotationSpec.none(), grid, FrozenAngleConfig(math.pi / 2))
    psi = gaussian_wavepacket(grid, 2.0, 0.3)
    period = rabi_period(Propagator(h), psi, 2.5 * math.pi / g0, 400)
    assert period == pytest.approx(math.pi / g0, rel=1e-8)
