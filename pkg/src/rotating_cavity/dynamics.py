"""Radial wavepacket dynamics of the diatomic in the rotating frame.

The molecular angles are frozen (theta, phi fixed) and the rotational angular
momentum is replaced by a fixed vector ell (default zero). The radial kinetic
energy uses a sine DVR on a box with the wavefunction pinned to zero at
r_min and r_max; grid points are the n interior nodes.

States are stored channel-major: index = channel * n_points + grid_index.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .atom_cavity import RotationSpec
from .core import BasisState, CavityError, HermitianMatrix, Kind, eigensolve_dense
from .molecule import DiatomicModel, sigma_pi_stack, electronic_rotation_generator

CHANNELS = ("sigma", "pi_plus", "pi_minus")
NORM_TOL = 1e-10


class StabilityViolation(CavityError, RuntimeError):
    pass


class FrameMismatch(CavityError, ValueError):
    pass


class GridTooCoarse(CavityError, ValueError):
    pass


class Frame(enum.Enum):
    LAB = "lab"
    ROTATING = "rotating"


@dataclass(frozen=True)
class RadialGrid:
    r_min: float
    r_max: float
    n_points: int
    reduced_mass: float = 1.0

    def __post_init__(self):
        if not self.r_min > 0:
            raise ValueError("r_min must be positive")
        if not self.r_max > self.r_min:
            raise ValueError("r_max must exceed r_min")
        if self.n_points < 16:
            raise ValueError("need at least 16 grid points")
        if not self.reduced_mass > 0:
            raise ValueError("reduced_mass must be positive")

    @property
    def dr(self) -> float:
        return (self.r_max - self.r_min) / (self.n_points + 1)

    @property
    def points(self) -> np.ndarray:
        return self.r_min + self.dr * np.arange(1, self.n_points + 1)


def kinetic_matrix(grid: RadialGrid) -> np.ndarray:
    """-1/(2 mu) d^2/dr^2 in the sine DVR, exactly symmetric."""
    n = grid.n_points
    j = np.arange(1, n + 1)
    s = math.sqrt(2.0 / (n + 1)) * np.sin(np.pi * np.outer(j, j) / (n + 1))
    k = j * np.pi / (grid.r_max - grid.r_min)
    t = (s * (k * k / (2.0 * grid.reduced_mass))) @ s
    return 0.5 * (t + t.T)


@dataclass(frozen=True)
class FrozenAngleConfig:
    theta: float
    phi: float = 0.0
    include_centrifugal: bool = False
    angular_momentum: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        if not 0.0 <= self.phi <= 2.0 * math.pi:
            raise ValueError("phi must lie in [0, 2 pi]")


def angular_term(r, rot: RotationSpec, ell, mu: float, expanded: bool) -> np.ndarray:
    """Rotational energy added to every channel.

    ``expanded=True`` evaluates (ell - mu r^2 Omega)^2 / (2 mu r^2) - mu r^2 Omega^2 / 2
    literally; otherwise the simplified ell^2 / (2 mu r^2) - Omega.ell is used.
    """
    r = np.asarray(r, dtype=float)
    ell = np.asarray(ell, dtype=float)
    w = rot.vector
    mr2 = mu * r * r
    if expanded:
        diff = ell[None, :] - mr2[:, None] * w[None, :]
        return np.sum(diff * diff, axis=1) / (2.0 * mr2) - 0.5 * mr2 * float(w @ w)
    return float(ell @ ell) / (2.0 * mr2) - float(w @ ell)


def grid_labels(n: int) -> list[BasisState]:
    kinds = [(Kind.SIGMA_ONE_PHOTON, 1), (Kind.PI_PLUS, 0), (Kind.PI_MINUS, 0)]
    return [BasisState(k, photon_number=p, grid_index=i) for k, p in kinds for i in range(n)]


def assemble_hamiltonian_reduced(
    model: DiatomicModel,
    rot: RotationSpec,
    grid: RadialGrid,
    cfg: FrozenAngleConfig,
    max_dr: Optional[float] = None,
) -> HermitianMatrix:
    """Radial kinetic energy (x) 1_3 + rotational term + H_ec(r; theta, phi)."""
    if max_dr is not None and grid.dr > max_dr:
        raise GridTooCoarse(f"dr = {grid.dr:.3e} exceeds the bound {max_dr:.3e}")
    n = grid.n_points
    r = grid.points
    mu = grid.reduced_mass
    hec = sigma_pi_stack(model, rot, r, cfg.theta, cfg.phi)  # (n, 3, 3)
    extra = angular_term(r, rot, cfg.angular_momentum, mu, cfg.include_centrifugal)
    h = np.kron(np.eye(3), kinetic_matrix(grid)).astype(complex)
    idx = np.arange(n)
    for a in range(3):
        h[a * n + idx, a * n + idx] += extra
        for b in range(3):
            h[a * n + idx, b * n + idx] += hec[:, a, b]
    return HermitianMatrix(h, grid_labels(n))


@dataclass(eq=False)
class Wavepacket:
    components: np.ndarray  # (3, n_points)
    dr: float
    frame: Frame = Frame.ROTATING
    time: float = 0.0

    def __post_init__(self):
        self.components = np.array(self.components, dtype=complex)
        if self.components.ndim != 2 or self.components.shape[0] != 3:
            raise ValueError("components must have shape (3, n_points)")

    @property
    def flat(self) -> np.ndarray:
        return self.components.reshape(-1)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.components) ** 2) * self.dr)

    def populations(self) -> np.ndarray:
        return np.sum(np.abs(self.components) ** 2, axis=1) * self.dr

    def normalized(self) -> "Wavepacket":
        return replace(self, components=self.components / math.sqrt(self.norm()))

    def overlap(self, other: "Wavepacket") -> complex:
        return complex(np.vdot(self.flat, other.flat) * self.dr)


def gaussian_wavepacket(
    grid: RadialGrid, center: float, width: float, momentum: float = 0.0, channel: int = 0
) -> Wavepacket:
    r = grid.points
    comp = np.zeros((3, grid.n_points), dtype=complex)
    comp[channel] = np.exp(-((r - center) ** 2) / (2.0 * width**2) + 1j * momentum * r)
    return Wavepacket(comp, grid.dr).normalized()


def eigenstate_wavepacket(
    h: HermitianMatrix, grid: RadialGrid, index: int = 0, propagator: Optional["Propagator"] = None
) -> tuple[Wavepacket, float]:
    if propagator is not None:
        w, v = propagator.energies, propagator.vectors
    else:
        w, v = eigensolve_dense(h)
    psi = Wavepacket(v[:, index].reshape(3, grid.n_points), grid.dr).normalized()
    return psi, float(w[index])


class Propagator:
    """Exact short-time propagator exp(-i H dt) from one diagonalisation of H."""

    def __init__(self, h: HermitianMatrix):
        self.h = h
        self.energies, self.vectors = eigensolve_dense(h)
        self._real_h = None if np.any(h.entries.imag) else np.ascontiguousarray(h.entries.real)

    def unitary(self, dt: float) -> np.ndarray:
        v = self.vectors
        return (v * np.exp(-1j * self.energies * dt)) @ v.conj().T

    def evolve(self, psi: Wavepacket, t: float) -> Wavepacket:
        c = self.vectors.conj().T @ psi.flat
        out = self.vectors @ (np.exp(-1j * self.energies * t) * c)
        return replace(psi, components=out.reshape(psi.components.shape), time=psi.time + t)

    def energy(self, psi: Wavepacket) -> float:
        x = psi.flat
        if self._real_h is not None:
            # two real products avoid promoting H to complex on every call
            hx = self._real_h @ x.real + 1j * (self._real_h @ x.imag)
        else:
            hx = self.h.entries @ x
        return float(np.vdot(x, hx).real / np.vdot(x, x).real)


@dataclass
class Trajectory:
    times: np.ndarray
    norm: np.ndarray
    energy: np.ndarray
    populations: np.ndarray  # (steps+1, 3)
    r_mean: np.ndarray  # (steps+1, 3)
    final: Wavepacket
    states: Optional[list] = field(default=None, repr=False)

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm - self.norm[0])))

    @property
    def energy_drift(self) -> float:
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / max(abs(e0), np.finfo(float).tiny))

    def rows(self):
        for k, t in enumerate(self.times):
            yield (t, self.norm[k], self.energy[k], *self.populations[k], *self.r_mean[k])


TRAJECTORY_COLUMNS = (
    "t",
    "norm",
    "energy",
    "pop_sigma",
    "pop_pi_plus",
    "pop_pi_minus",
    "r_mean_sigma",
    "r_mean_pi_plus",
    "r_mean_pi_minus",
)


def _r_mean(psi: Wavepacket, r: np.ndarray) -> np.ndarray:
    dens = np.abs(psi.components) ** 2
    pop = dens.sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(pop > 0, (dens * r).sum(axis=1) / np.where(pop > 0, pop, 1.0), np.nan)


def propagate(
    h: HermitianMatrix,
    psi0: Wavepacket,
    dt: float,
    n_steps: int,
    grid: Optional[RadialGrid] = None,
    propagator: Optional[Propagator] = None,
    keep_states: bool = False,
    norm_tol: float = NORM_TOL,
) -> Trajectory:
    """Step psi0 forward n_steps times with exp(-i H dt), recording observables."""
    if psi0.frame is not Frame.ROTATING:
        raise FrameMismatch("propagation happens in the rotating frame")
    prop = propagator or Propagator(h)
    u = prop.unitary(dt)
    n = psi0.components.shape[1]
    r = grid.points if grid is not None else np.arange(1, n + 1) * psi0.dr
    times = psi0.time + dt * np.arange(n_steps + 1)
    norms = np.empty(n_steps + 1)
    energies = np.empty(n_steps + 1)
    pops = np.empty((n_steps + 1, 3))
    rmean = np.empty((n_steps + 1, 3))
    states = [] if keep_states else None
    psi = psi0
    x = psi0.flat.copy()
    for k in range(n_steps + 1):
        if k:
            x = u @ x
            psi = replace(psi0, components=x.reshape(3, n), time=times[k])
        norms[k] = psi.norm()
        energies[k] = prop.energy(psi)
        pops[k] = psi.populations()
        rmean[k] = _r_mean(psi, r)
        if keep_states:
            states.append(psi)
        if abs(norms[k] - norms[0]) > norm_tol:
            raise StabilityViolation(
                f"norm drifted by {abs(norms[k] - norms[0]):.3e} after {k} steps (dt = {dt})"
            )
    return Trajectory(times, norms, energies, pops, rmean, psi, states)


def frame_transform(
    psi: Wavepacket, rot: RotationSpec, t: float, to: Frame, theta: float, phi: float
) -> Wavepacket:
    """Apply exp(-i Omega.L t) (to the lab frame) or its inverse (to the rotating frame).

    Omega.L acts on the channel index only and is taken from the rotating
    electronic-cavity matrix, so the transform is consistent with the
    Hamiltonian used for propagation.
    """
    if psi.frame is to:
        raise FrameMismatch(f"wavepacket is already in the {to.value} frame")
    gen = np.diag(electronic_rotation_generator(rot, theta, phi))
    sign = -1.0 if to is Frame.LAB else 1.0
    phases = np.exp(sign * 1j * gen * t)
    return replace(psi, components=psi.components * phases[:, None], frame=to)


def rabi_period(
    prop: Propagator, psi0: Wavepacket, t_max: float, n_samples: int = 2000, channel: int = 0
) -> float:
    """Time between the first two downward crossings of 1/2 by a channel population."""

    def pop(t):
        return prop.evolve(psi0, t).populations()[channel] - 0.5

    ts = np.linspace(0.0, t_max, n_samples)
    ys = np.array([pop(t) for t in ts])
    down = np.flatnonzero((ys[:-1] > 0) & (ys[1:] <= 0))
    if down.size < 2:
        raise ValueError("fewer than two population crossings in the sampled window")
    t1, t2 = (brentq(pop, ts[i], ts[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps) for i in down[:2])
    return t2 - t1
