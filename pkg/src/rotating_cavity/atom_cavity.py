"""Single-excitation Hamiltonians of l=0 -> l=1 atoms in a rotating cavity.

The cavity polarization is fixed along Z. In the rotating frame the atom sees
the extra term -Omega.L, which couples the three excited sublevels m = -1, 0, +1.
Ladder operators are normalised as L_pm = (L_x +- i L_y)/sqrt(2), so that

    Omega_x L_x + Omega_y L_y = Omega_plus L_plus + Omega_minus L_minus,
    Omega_plus = (Omega_x - i Omega_y)/sqrt(2),  Omega_minus = conj(Omega_plus),

and L_plus |1,0> = |1,+1>, L_minus |1,0> = |1,-1>.

Basis orders used by the builders:

* m basis (one atom): [ground+1 photon, |1,0>, |1,+1>, |1,-1>]
* reduced XY basis: [ground+1 photon, psi_plus, psi_minus]
* axis basis: [ground+1 photon, m_u=-1, m_u=+1, m_u=0] where m_u is the
  projection on the rotation axis, i.e. energies omega_c+Omega, omega_c-Omega,
  omega_c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arrowhead import ArrowheadMatrix
from .core import BasisState, CavityError, HermitianMatrix, Kind, fix_phases

SQRT2 = math.sqrt(2.0)
PLANAR_TOL = 1e-12


class NonPlanarAxis(CavityError, ValueError):
    pass


class ZeroPlanarRotation(CavityError, ValueError):
    pass


class ZeroTotalRotation(CavityError, ValueError):
    pass


class ZeroCoupling(CavityError, ValueError):
    pass


@dataclass(frozen=True)
class CavitySpec:
    """Cavity photon energy omega_c and coupling g = g0 * d_z.

    ``detuning`` shifts the atomic excitation energy away from resonance. The
    closed forms in :mod:`rotating_cavity.analytic` only cover detuning = 0.
    """

    omega_c: float
    g: float
    detuning: float = 0.0

    def __post_init__(self):
        if not self.omega_c > 0:
            raise ValueError(f"omega_c must be positive, got {self.omega_c}")
        if not self.g >= 0:
            raise ValueError(f"g must be non-negative, got {self.g}")

    @property
    def excitation(self) -> float:
        return self.omega_c + self.detuning


@dataclass(frozen=True)
class EnsembleSpec:
    n_atoms: int

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError(f"n_atoms must be a positive integer, got {self.n_atoms}")


@dataclass(frozen=True)
class RotationSpec:
    """Uniform rotation with angular velocity ``omega`` (as hbar*Omega) about ``axis``."""

    axis: tuple
    omega: float
    _vec: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        u = np.asarray(self.axis, dtype=float).reshape(3)
        norm = float(np.linalg.norm(u))
        if norm == 0.0:
            raise ValueError("rotation axis must be non-zero")
        if abs(norm - 1.0) > 1e-12:
            u = u / norm
        if not self.omega >= 0:
            raise ValueError(f"omega must be non-negative, got {self.omega}")
        object.__setattr__(self, "axis", tuple(float(x) for x in u))
        object.__setattr__(self, "_vec", self.omega * u)

    @classmethod
    def from_vector(cls, omega_vec) -> "RotationSpec":
        v = np.asarray(omega_vec, dtype=float)
        n = float(np.linalg.norm(v))
        if n == 0.0:
            return cls((0.0, 0.0, 1.0), 0.0)
        return cls(tuple(v / n), n)

    @classmethod
    def in_plane(cls, omega: float, alpha: float = 0.0) -> "RotationSpec":
        """Axis in the XY plane at azimuth alpha from X."""
        return cls((math.cos(alpha), math.sin(alpha), 0.0), omega)

    @classmethod
    def none(cls) -> "RotationSpec":
        return cls((0.0, 0.0, 1.0), 0.0)

    @property
    def vector(self) -> np.ndarray:
        return self._vec.copy()

    @property
    def omega_x(self) -> float:
        return float(self._vec[0])

    @property
    def omega_y(self) -> float:
        return float(self._vec[1])

    @property
    def omega_z(self) -> float:
        return float(self._vec[2])

    @property
    def omega_xy(self) -> float:
        return math.hypot(self.omega_x, self.omega_y)

    @property
    def omega_plus(self) -> complex:
        return complex(self.omega_x, -self.omega_y) / SQRT2

    @property
    def omega_minus(self) -> complex:
        return complex(self.omega_x, self.omega_y) / SQRT2

    @property
    def is_planar(self) -> bool:
        return abs(self.omega_z) <= PLANAR_TOL * self.omega


def _require_planar(rot: RotationSpec) -> None:
    if not rot.is_planar:
        raise NonPlanarAxis(
            f"axis has Omega_z = {rot.omega_z:.3e}; use build_single_atom_general"
        )


def _require_planar_rotation(rot: RotationSpec) -> None:
    if rot.omega_xy == 0.0:
        raise ZeroPlanarRotation(
            "Omega_xy = 0: the m = +-1 states are already decoupled; use build_nonrotating"
        )


def _require_rotation(rot: RotationSpec) -> None:
    if rot.omega == 0.0:
        raise ZeroTotalRotation("Omega = 0: use build_nonrotating")


def m_basis_labels(atom: int = 0) -> list[BasisState]:
    return [BasisState(Kind.ATOM_EXCITED, atom_index=atom, m=m) for m in (0, 1, -1)]


def rotation_block(rot: RotationSpec) -> np.ndarray:
    """-Omega.L on the l = 1 manifold in the order [|1,0>, |1,+1>, |1,-1>]."""
    wp, wm, wz = rot.omega_plus, rot.omega_minus, rot.omega_z
    return np.array(
        [
            [0.0, -wm, -wp],
            [-wp, -wz, 0.0],
            [-wm, 0.0, wz],
        ],
        dtype=complex,
    )


def build_single_atom_m_basis(cavity: CavitySpec, rot: RotationSpec) -> HermitianMatrix:
    """One atom for an arbitrary axis, in the m basis (no basis change applied)."""
    h = np.zeros((4, 4), dtype=complex)
    h[0, 0] = cavity.omega_c
    h[1:, 1:] = cavity.excitation * np.eye(3) + rotation_block(rot)
    h[0, 1] = h[1, 0] = cavity.g
    return HermitianMatrix(h, [BasisState.ground()] + m_basis_labels())


def build_single_atom_xy(cavity: CavitySpec, rot: RotationSpec) -> HermitianMatrix:
    """4x4 one-atom matrix for an axis in the XY plane (m basis)."""
    _require_planar(rot)
    h = np.diag([cavity.omega_c] + [cavity.excitation] * 3).astype(complex)
    h[0, 1] = h[1, 0] = cavity.g
    h[1, 2] = -rot.omega_minus
    h[1, 3] = -rot.omega_plus
    h[2, 1] = -rot.omega_plus
    h[3, 1] = -rot.omega_minus
    return HermitianMatrix(h, [BasisState.ground()] + m_basis_labels())


def dark_state_xy(rot: RotationSpec) -> np.ndarray:
    """Coefficients of the entangled dark state on (|1,+1>, |1,-1>)."""
    _require_planar_rotation(rot)
    w = rot.omega
    return np.array([rot.omega_plus / w, -rot.omega_minus / w], dtype=complex)


def reduced_basis_xy(rot: RotationSpec) -> np.ndarray:
    """Unitary whose columns are [ground, psi_plus, psi_minus, dark] in the m basis."""
    _require_planar(rot)
    _require_planar_rotation(rot)
    w = rot.omega
    wp, wm = rot.omega_plus / w, rot.omega_minus / w
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = 1.0
    u[1:, 1] = np.array([1.0, -wp, -wm]) / SQRT2
    u[1:, 2] = np.array([1.0, wp, wm]) / SQRT2
    u[2:, 3] = dark_state_xy(rot)
    return u


def reduced_labels(atom: int = 0) -> list[BasisState]:
    return [BasisState(Kind.PSI_PLUS, atom_index=atom), BasisState(Kind.PSI_MINUS, atom_index=atom)]


def build_single_atom_reduced_xy(cavity: CavitySpec, rot: RotationSpec) -> HermitianMatrix:
    """3x3 matrix on [ground, psi_plus, psi_minus] once the dark state is split off."""
    _require_planar(rot)
    _require_planar_rotation(rot)
    e, w, c = cavity.excitation, rot.omega, cavity.g / SQRT2
    h = np.array(
        [
            [cavity.omega_c, c, c],
            [c, e + w, 0.0],
            [c, 0.0, e - w],
        ],
        dtype=complex,
    )
    return HermitianMatrix(h, [BasisState.ground()] + reduced_labels())


def rotation_induced_polariton_xy(cavity: CavitySpec, rot: RotationSpec) -> np.ndarray:
    """Normalised eigenvector at omega_c on [ground, psi_plus, psi_minus].

    Proportional to (Omega*sqrt(2)/g, -1, +1). Its photon weight is
    Omega^2 / (Omega^2 + g^2), which vanishes as Omega -> 0.
    """
    _require_planar(rot)
    _require_planar_rotation(rot)
    if cavity.g == 0.0:
        raise ZeroCoupling("g = 0: no polariton is induced")
    v = np.array([rot.omega * SQRT2 / cavity.g, -1.0, 1.0], dtype=complex)
    return v / np.linalg.norm(v)


def photon_weight(vector: np.ndarray) -> float:
    return float(abs(vector[0]) ** 2)


def axis_basis(rot: RotationSpec) -> np.ndarray:
    """Unitary with columns [ground, m_u=-1, m_u=+1, m_u=0] in the m basis.

    Obtained by diagonalising -Omega.L numerically; each column's phase is set
    so that its |1,0> component (hence its coupling to the photon state) is
    real, non-negative for m_u = +-1 and of the sign of Omega_z for m_u = 0.
    """
    _require_rotation(rot)
    w, v = np.linalg.eigh(rotation_block(rot))
    # eigenvalues of -Omega.L ascending: -Omega (m_u=+1), 0, +Omega (m_u=-1)
    v = fix_phases(v)
    for k in range(3):
        p = v[0, k]
        if abs(p) > 1e-12:
            v[:, k] *= abs(p) / p
    if rot.omega_z < 0:
        v[:, 1] *= -1
    u = np.zeros((4, 4), dtype=complex)
    u[0, 0] = 1.0
    u[1:, 1] = v[:, 2]
    u[1:, 2] = v[:, 0]
    u[1:, 3] = v[:, 1]
    return u


def axis_labels(atom: int = 0) -> list[BasisState]:
    return [BasisState(Kind.AXIS_EXCITED, atom_index=atom, m=m) for m in (-1, 1, 0)]


def general_couplings(cavity: CavitySpec, rot: RotationSpec) -> np.ndarray:
    """Photon couplings to the axis states: (g~ Oxy/O, g~ Oxy/O, g Oz/O), g~ = g/sqrt(2)."""
    _require_rotation(rot)
    gt = cavity.g / SQRT2
    r_xy = rot.omega_xy / rot.omega
    return np.array([gt * r_xy, gt * r_xy, cavity.g * rot.omega_z / rot.omega])


def shifted_levels(cavity: CavitySpec, rot: RotationSpec) -> tuple[float, float, float]:
    """Energies of the axis states: (excitation + Omega, excitation - Omega, excitation)."""
    e = cavity.excitation
    return (e + rot.omega, e - rot.omega, e)


def build_single_atom_general(cavity: CavitySpec, rot: RotationSpec) -> HermitianMatrix:
    """4x4 one-atom matrix for an arbitrary axis, in the axis basis."""
    c = general_couplings(cavity, rot)
    h = np.diag([cavity.omega_c, *shifted_levels(cavity, rot)]).astype(complex)
    h[0, 1:] = c
    h[1:, 0] = c
    return HermitianMatrix(h, [BasisState.ground()] + axis_labels())


def build_nonrotating(cavity: CavitySpec, ens: EnsembleSpec) -> ArrowheadMatrix:
    """N atoms without rotation: only each |1,0> couples, with strength g."""
    n = ens.n_atoms
    labels = [BasisState.ground()] + [
        BasisState(Kind.ATOM_EXCITED, atom_index=i, m=0) for i in range(n)
    ]
    return ArrowheadMatrix(
        cavity.omega_c,
        np.full(n, cavity.excitation),
        np.full(n, cavity.g, dtype=complex),
        labels=labels,
    )


def build_ensemble(
    cavity: CavitySpec, rot: RotationSpec, ens: EnsembleSpec, case: str = "auto"
) -> ArrowheadMatrix:
    """Arrowhead Hamiltonian of N identical atoms in the rotating cavity.

    ``case="xy"`` uses the reduced basis (entangled dark states removed, dim
    2N+1); ``case="general"`` uses the axis basis (dim 3N+1). ``"auto"`` picks
    "xy" for planar axes.
    """
    _require_rotation(rot)
    if case == "auto":
        case = "xy" if rot.is_planar else "general"
    n = ens.n_atoms
    if case == "xy":
        _require_planar(rot)
        e, w = cavity.excitation, rot.omega
        shaft = np.tile([e + w, e - w], n)
        couplings = np.full(2 * n, cavity.g / SQRT2, dtype=complex)
        per_atom = reduced_labels
    elif case == "general":
        shaft = np.tile(shifted_levels(cavity, rot), n)
        couplings = np.tile(general_couplings(cavity, rot), n).astype(complex)
        per_atom = axis_labels
    else:
        raise ValueError(f"unknown case {case!r}")
    labels = [BasisState.ground()]
    for i in range(n):
        labels.extend(per_atom(i))
    return ArrowheadMatrix(cavity.omega_c, shaft, couplings, labels=labels)


def build_ensemble_full(cavity: CavitySpec, rot: RotationSpec, ens: EnsembleSpec) -> HermitianMatrix:
    """Dense (3N+1)-dim ensemble matrix in the m basis, with no basis change at all."""
    n = ens.n_atoms
    dim = 3 * n + 1
    h = np.zeros((dim, dim), dtype=complex)
    h[0, 0] = cavity.omega_c
    block = cavity.excitation * np.eye(3) + rotation_block(rot)
    labels = [BasisState.ground()]
    for i in range(n):
        s = slice(1 + 3 * i, 4 + 3 * i)
        h[s, s] = block
        h[0, 1 + 3 * i] = h[1 + 3 * i, 0] = cavity.g
        labels.extend(m_basis_labels(i))
    return HermitianMatrix(h, labels)


def entangled_dark_states(rot: RotationSpec, ens: EnsembleSpec) -> np.ndarray:
    """The N per-atom dark states as columns in the (3N+1)-dim m basis."""
    _require_planar(rot)
    d = dark_state_xy(rot)
    n = ens.n_atoms
    out = np.zeros((3 * n + 1, n), dtype=complex)
    for i in range(n):
        out[2 + 3 * i, i] = d[0]
        out[3 + 3 * i, i] = d[1]
    return out
