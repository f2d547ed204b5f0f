"""Basic containers and the dense Hermitian eigensolver.

Everything in the package works in one energy unit with hbar = 1, so an
angular velocity Omega is passed around as the energy hbar*Omega.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

HERMITIAN_RTOL = 1e-12


class CavityError(Exception):
    """Base class for all errors raised by this package."""


class NonHermitianInput(CavityError, ValueError):
    pass


class ConvergenceFailure(CavityError, RuntimeError):
    pass


@dataclass(frozen=True)
class EnergyUnit:
    """Informational label for the single energy unit of a computation."""

    name: str = "arb. units"


class Kind(enum.Enum):
    GROUND_ONE_PHOTON = "ground_1c"
    ATOM_EXCITED = "excited"
    PSI_PLUS = "psi_plus"
    PSI_MINUS = "psi_minus"
    DARK = "dark"
    # eigenstates of u.L in the excited manifold, labelled by m along the axis
    AXIS_EXCITED = "axis_excited"
    SIGMA_ONE_PHOTON = "sigma_1c"
    PI_PLUS = "pi_plus"
    PI_MINUS = "pi_minus"
    GENERIC = "generic"


_ONE_PHOTON = {Kind.GROUND_ONE_PHOTON, Kind.SIGMA_ONE_PHOTON}


@dataclass(frozen=True)
class BasisState:
    kind: Kind
    photon_number: int = 0
    atom_index: Optional[int] = None
    m: Optional[int] = None
    grid_index: Optional[int] = None

    def __post_init__(self):
        if self.kind is Kind.GENERIC:
            return
        expected = 1 if self.kind in _ONE_PHOTON else 0
        if self.photon_number != expected:
            raise ValueError(
                f"{self.kind.value} must carry photon_number {expected}, got {self.photon_number}"
            )
        if self.m is not None and self.m not in (-1, 0, 1):
            raise ValueError(f"m must be -1, 0 or 1, got {self.m}")

    @classmethod
    def ground(cls) -> "BasisState":
        return cls(Kind.GROUND_ONE_PHOTON, photon_number=1)

    @classmethod
    def generic(cls, index: int) -> "BasisState":
        return cls(Kind.GENERIC, atom_index=index)

    def __str__(self) -> str:
        parts = [self.kind.value]
        if self.m is not None:
            parts.append(f"m={self.m:+d}")
        if self.atom_index is not None:
            parts.append(f"#{self.atom_index}")
        if self.grid_index is not None:
            parts.append(f"r[{self.grid_index}]")
        return ":".join(parts)


@dataclass(frozen=True, eq=False)
class HermitianMatrix:
    """Dense complex matrix over a labelled single-excitation basis.

    The entries are copied and frozen on construction. Hermiticity is not
    enforced here; builders are expected to mirror their conjugate entries and
    :meth:`hermiticity_error` is exposed for tests.
    """

    entries: np.ndarray
    basis_labels: tuple = field(default=())

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ValueError(f"expected a non-empty square matrix, got shape {a.shape}")
        labels = tuple(self.basis_labels) or tuple(BasisState.generic(i) for i in range(a.shape[0]))
        if len(labels) != a.shape[0]:
            raise ValueError(f"{len(labels)} basis labels for dimension {a.shape[0]}")
        if len(set(labels)) != len(labels):
            raise ValueError("basis labels must be pairwise distinct")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)
        object.__setattr__(self, "basis_labels", labels)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def transformed(self, u: np.ndarray, labels: Sequence[BasisState] = ()) -> "HermitianMatrix":
        """Return u^dagger H u, i.e. the matrix in the basis given by the columns of u."""
        u = np.asarray(u, dtype=complex)
        h = u.conj().T @ self.entries @ u
        return HermitianMatrix(0.5 * (h + h.conj().T), tuple(labels))


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __iter__(self):
        return iter((self.eigenvalues, self.eigenvectors))


def _check_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> None:
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    err = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if err > rtol * max(scale, np.finfo(float).tiny):
        raise NonHermitianInput(f"matrix is not Hermitian: max |H - H^dagger| = {err:.3e}")


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so that its first significant component is real positive."""
    v = np.array(vectors, dtype=complex)
    mags = np.abs(v)
    thresh = 1e-12 * np.max(mags, axis=0, keepdims=True)
    first = np.argmax(mags > thresh, axis=0)
    pivots = v[first, np.arange(v.shape[1])]
    phases = np.where(np.abs(pivots) > 0, pivots / np.where(pivots == 0, 1, np.abs(pivots)), 1.0)
    return v / phases


def _real_if_possible(a: np.ndarray) -> np.ndarray:
    # real symmetric input goes to the (much cheaper) real LAPACK driver
    if np.iscomplexobj(a) and not np.any(a.imag):
        return a.real.copy()
    return a


def eigensolve_dense(h: HermitianMatrix | np.ndarray) -> EigenDecomposition:
    """All eigenpairs of a Hermitian matrix, eigenvalues ascending.

    Backed by LAPACK ``zheevd`` (``dsyevd`` when the matrix is real) through
    :func:`numpy.linalg.eigh`. The phase of
    every eigenvector is fixed with :func:`fix_phases` so results are
    reproducible.
    """
    a = h.entries if isinstance(h, HermitianMatrix) else np.asarray(h, dtype=complex)
    _check_hermitian(a)
    a = _real_if_possible(0.5 * (a + a.conj().T))
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return EigenDecomposition(w, fix_phases(v))


def eigenvalues_dense(h: HermitianMatrix | np.ndarray) -> np.ndarray:
    a = h.entries if isinstance(h, HermitianMatrix) else np.asarray(h, dtype=complex)
    _check_hermitian(a)
    try:
        return np.linalg.eigvalsh(_real_if_possible(0.5 * (a + a.conj().T)))
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc


def matrix_exponential_unitary(h: HermitianMatrix | np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) from the eigendecomposition of h."""
    w, v = eigensolve_dense(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def cluster_levels(values: Sequence[float], atol: float) -> list[tuple[float, int]]:
    """Group sorted values into (mean, multiplicity) runs separated by more than atol."""
    vals = np.sort(np.asarray(values, dtype=float))
    if vals.size == 0:
        return []
    breaks = np.flatnonzero(np.diff(vals) > atol) + 1
    return [(float(np.mean(chunk)), int(chunk.size)) for chunk in np.split(vals, breaks)]
