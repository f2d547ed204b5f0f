"""Closed-form polariton branches and dark-state bookkeeping for atom ensembles.

With x = E - omega_c the coupled energies of N atoms solve

    x^4 - (Omega^2 + N g^2) x^2 + N g^2 Omega_z^2 = 0,

whose larger root is evaluated directly and whose smaller one through the
product of the two roots, so no cancellation occurs when Omega_z is small or
Omega >> g sqrt(N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .atom_cavity import (
    CavitySpec,
    NonPlanarAxis,
    RotationSpec,
    ZeroTotalRotation,
    shifted_levels,
)

XY = "xy"
GENERAL = "general"


@dataclass(frozen=True)
class SpectrumPrediction:
    """Predicted spectrum of one ensemble Hamiltonian.

    ``dark_levels`` are collective dark states that live inside the arrowhead
    (shaft entries that deflate); ``decoupled`` are states split off before the
    arrowhead is formed: the per-atom entangled dark states for an in-plane
    axis, or the idle m = +-1 sublevels without rotation.
    """

    branch_energies: tuple
    dark_levels: tuple = ()
    decoupled: tuple = ()
    dim: int = 0

    def multiset(self) -> np.ndarray:
        vals = list(self.branch_energies)
        for e, m in (*self.dark_levels, *self.decoupled):
            vals.extend([e] * m)
        return np.sort(np.array(vals, dtype=float))

    @property
    def n_states(self) -> int:
        return len(self.branch_energies) + sum(m for _, m in (*self.dark_levels, *self.decoupled))


def _require_resonant(cavity: CavitySpec) -> None:
    if cavity.detuning != 0.0:
        raise ValueError("closed forms assume the atoms are resonant with the cavity")


def _levels(pairs) -> tuple:
    return tuple((float(e), int(m)) for e, m in pairs if m > 0)


def xy_offset(omega: float, n: int, g: float) -> float:
    """sqrt(Omega^2 + N g^2)."""
    return math.hypot(omega, math.sqrt(n) * g)


def general_offsets(omega_xy: float, omega_z: float, n: int, g: float) -> tuple[float, float]:
    """The two non-negative |E - omega_c| of the four general-axis branches."""
    ng2 = n * g * g
    s = omega_xy * omega_xy + omega_z * omega_z + ng2
    root_d = math.hypot(omega_xy * omega_xy - omega_z * omega_z + ng2, 2.0 * omega_xy * omega_z)
    big = math.sqrt(0.5 * (s + root_d))
    small = math.sqrt(n) * g * abs(omega_z) / big if big > 0 else 0.0
    return big, small


def general_offsets_textbook(omega_xy: float, omega_z: float, n: int, g: float) -> tuple[float, float]:
    """Same two offsets evaluated term by term, without the cancellation guard."""
    ng2 = n * g * g
    s = omega_xy**2 + omega_z**2 + ng2
    inner = math.sqrt((omega_xy**2 - omega_z**2 + ng2) ** 2 + 4.0 * omega_xy**2 * omega_z**2)
    return math.sqrt(s + inner) / math.sqrt(2.0), math.sqrt(max(s - inner, 0.0)) / math.sqrt(2.0)


def spectrum_nonrotating(cavity: CavitySpec, n: int) -> SpectrumPrediction:
    _require_resonant(cavity)
    wc = cavity.omega_c
    x = math.sqrt(n) * cavity.g
    return SpectrumPrediction(
        (wc - x, wc + x),
        _levels([(wc, n - 1)]),
        _levels([(wc, 2 * n)]),
        3 * n + 1,
    )


def spectrum_xy(cavity: CavitySpec, rot: RotationSpec, n: int) -> SpectrumPrediction:
    """Three branches omega_c, omega_c +- sqrt(Omega^2 + N g^2) for an in-plane axis."""
    _require_resonant(cavity)
    if not rot.is_planar:
        raise NonPlanarAxis("spectrum_xy needs Omega_z = 0")
    wc, w = cavity.omega_c, rot.omega
    x = xy_offset(w, n, cavity.g)
    census = dark_state_census(cavity, rot, n, XY)
    return SpectrumPrediction((wc - x, wc, wc + x), census.shaft, census.decoupled, 3 * n + 1)


def spectrum_general(cavity: CavitySpec, rot: RotationSpec, n: int) -> SpectrumPrediction:
    """Four branches for an arbitrary axis, plus the 3N - 3 collective dark states."""
    _require_resonant(cavity)
    if rot.omega == 0.0:
        raise ZeroTotalRotation("use spectrum_nonrotating for Omega = 0")
    wc = cavity.omega_c
    big, small = general_offsets(rot.omega_xy, rot.omega_z, n, cavity.g)
    census = dark_state_census(cavity, rot, n, GENERAL)
    return SpectrumPrediction(
        (wc - big, wc - small, wc + small, wc + big), census.shaft, census.decoupled, 3 * n + 1
    )


def predict_spectrum(cavity: CavitySpec, rot: RotationSpec, n: int) -> SpectrumPrediction:
    if rot.omega == 0.0:
        return spectrum_nonrotating(cavity, n)
    if rot.is_planar:
        return spectrum_xy(cavity, rot, n)
    return spectrum_general(cavity, rot, n)


@dataclass(frozen=True)
class DarkCensus:
    shaft: tuple = field(default=())
    decoupled: tuple = field(default=())

    def as_dict(self) -> dict:
        return {e: m for e, m in self.shaft}

    @property
    def total(self) -> int:
        return sum(m for _, m in (*self.shaft, *self.decoupled))


def dark_state_census(cavity: CavitySpec, rot: RotationSpec, n: int, case: str) -> DarkCensus:
    """Dark energies and multiplicities for N atoms.

    In-plane axis: N - 1 at each of omega_c +- Omega inside the arrowhead, plus
    N entangled per-atom dark states at omega_c removed beforehand.

    General axis: N - 1 at each of omega_c + Omega, omega_c - Omega and omega_c.
    Nothing is removed before the arrowhead here, so the 3N + 1 states are the
    four branches plus these 3N - 3.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    up, down, mid = shifted_levels(cavity, rot)
    if case == XY:
        return DarkCensus(_levels([(down, n - 1), (up, n - 1)]), _levels([(mid, n)]))
    if case == GENERAL:
        return DarkCensus(_levels([(down, n - 1), (mid, n - 1), (up, n - 1)]), ())
    raise ValueError(f"unknown case {case!r}")
