"""Homonuclear diatomic (Sigma ground, Pi excited) in a rotating cavity.

Electronic-cavity basis: [Sigma + 1 photon, Pi_plus + 0 photons, Pi_minus + 0
photons] with Pi_pm = (Pi_x +- Pi_y)/sqrt(2). The molecular axis starts along
Z, is turned by theta about Y and then by phi about Z.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .atom_cavity import CavitySpec, RotationSpec
from .core import BasisState, CavityError, HermitianMatrix, Kind

SQRT2 = math.sqrt(2.0)
DEGENERACY_TOL = 1e-10
MAX_SCAN_POINTS = 10**7

BASIS = (
    BasisState(Kind.SIGMA_ONE_PHOTON, photon_number=1),
    BasisState(Kind.PI_PLUS),
    BasisState(Kind.PI_MINUS),
)


class DomainError(CavityError, ValueError):
    pass


class NoCrossing(CavityError, ValueError):
    pass


class ShiftDegenerate(UserWarning):
    """Omega_z = 0, so the two shifted crossing conditions coincide."""


# -- potential curves -------------------------------------------------------


@dataclass(frozen=True)
class Harmonic:
    k: float
    r0: float
    offset: float = 0.0

    def __call__(self, r):
        return 0.5 * self.k * (np.asarray(r, dtype=float) - self.r0) ** 2 + self.offset


@dataclass(frozen=True)
class Morse:
    depth: float
    a: float
    r0: float
    offset: float = 0.0

    def __call__(self, r):
        x = np.exp(-self.a * (np.asarray(r, dtype=float) - self.r0))
        return self.depth * (1.0 - x) ** 2 + self.offset


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Cubic-spline interpolation of (r, value) samples."""

    r: np.ndarray
    values: np.ndarray
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape:
            raise ValueError("r and values must be 1-d arrays of equal length")
        if r.size < 4:
            raise ValueError("need at least 4 tabulated points")
        if np.any(np.diff(r) <= 0):
            raise ValueError("tabulated r grid must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ValueError("tabulated values must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_spline", CubicSpline(r, v))

    @classmethod
    def from_file(cls, path) -> "Tabulated":
        data = np.loadtxt(Path(path), comments="#", ndmin=2)
        if data.shape[1] != 2:
            raise ValueError(f"{path}: expected two columns (r, value)")
        return cls(data[:, 0], data[:, 1])

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.r[0]), float(self.r[-1])

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        lo, hi = self.domain
        if np.any((r < lo) | (r > hi)):
            raise DomainError(f"r outside tabulated range [{lo}, {hi}]")
        return self._spline(r)


@dataclass(frozen=True)
class ConstantDipole:
    d: float

    def __call__(self, r):
        return np.full(np.shape(r), float(self.d)) if np.ndim(r) else float(self.d)


TabulatedDipole = Tabulated


@dataclass(frozen=True, eq=False)
class DiatomicModel:
    """Potentials, transition dipole and cavity for one Sigma-Pi molecule.

    The molecular coupling is g(r) = g0 * d(r); ``cavity.g`` is not used here.
    """

    v_sigma: object
    v_pi: object
    dipole: object
    g0: float
    cavity: CavitySpec
    reduced_mass: float = 1.0
    r_min: float = 0.1
    r_max: float = 10.0

    def __post_init__(self):
        if not self.reduced_mass > 0:
            raise ValueError("reduced_mass must be positive")
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        for name in ("v_sigma", "v_pi", "dipole"):
            curve = getattr(self, name)
            if isinstance(curve, Tabulated):
                lo, hi = curve.domain
                if self.r_min < lo or self.r_max > hi:
                    raise ValueError(f"{name} table [{lo}, {hi}] does not cover [{self.r_min}, {self.r_max}]")

    def check_domain(self, r) -> None:
        r = np.asarray(r, dtype=float)
        if np.any((r < self.r_min) | (r > self.r_max)):
            raise DomainError(f"r outside model domain [{self.r_min}, {self.r_max}]")

    def coupling(self, r):
        return self.g0 * np.asarray(self.dipole(r), dtype=float)

    def crossing_function(self, r, shift: float = 0.0):
        """V_Sigma(r) + omega_c - V_Pi(r) - shift."""
        return self.v_sigma(r) + self.cavity.omega_c - self.v_pi(r) - shift


# -- electronic-cavity matrices ---------------------------------------------


def f_phi(rot: RotationSpec, phi) -> np.ndarray:
    """f(phi) = (Omega_plus e^{i phi} + Omega_minus e^{-i phi}) sqrt(2), real by construction."""
    phi = np.asarray(phi, dtype=float)
    val = (rot.omega_plus * np.exp(1j * phi) + rot.omega_minus * np.exp(-1j * phi)) * SQRT2
    if np.any(np.abs(val.imag) > 1e-14 * max(rot.omega, 1.0)):
        raise ArithmeticError("f(phi) acquired an imaginary part")
    return val.real


def sigma_pi_stack(model, rot, r, theta, phi):
    """(..., 3, 3) real symmetric matrices broadcast over r, theta, phi."""
    r, theta, phi = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (r, theta, phi)))
    model.check_domain(r)
    vs = model.v_sigma(r) + model.cavity.omega_c
    vp = model.v_pi(r)
    c = model.coupling(r) * np.sin(theta) / SQRT2
    h = np.zeros(r.shape + (3, 3))
    h[..., 0, 0] = vs
    h[..., 0, 1] = h[..., 1, 0] = c
    h[..., 0, 2] = h[..., 2, 0] = c
    if rot is None or rot.omega == 0.0:
        h[..., 1, 1] = vp
        h[..., 2, 2] = vp
    else:
        s = -f_phi(rot, phi) * np.sin(theta) + np.cos(theta) * rot.omega_z
        h[..., 1, 1] = vp + s
        h[..., 2, 2] = vp - s
    return h


def build_sigma_pi_norot(model: DiatomicModel, r: float, theta: float) -> HermitianMatrix:
    return HermitianMatrix(sigma_pi_stack(model, None, r, theta, 0.0), BASIS)


def build_sigma_pi_rotating(
    model: DiatomicModel, rot: RotationSpec, r: float, theta: float, phi: float
) -> HermitianMatrix:
    """Non-rotating matrix plus -+ (f(phi) sin(theta) - Omega_z cos(theta)) on the Pi_pm diagonal."""
    return HermitianMatrix(sigma_pi_stack(model, rot, r, theta, phi), BASIS)


def electronic_rotation_generator(rot: RotationSpec, theta: float, phi: float) -> np.ndarray:
    """Omega.L on the channels, taken from the rotating builder (H(0) - H(Omega))."""
    s = float(-f_phi(rot, phi) * math.sin(theta) + math.cos(theta) * rot.omega_z) if rot.omega else 0.0
    return np.diag([0.0, -s, s])


def rotation_matrix(theta: float, phi: float) -> np.ndarray:
    """R = R_z(phi) R_y(theta) with the sign convention of the Sigma-Pi model."""
    ct, st, cp, sp = math.cos(theta), math.sin(theta), math.cos(phi), math.sin(phi)
    return np.array(
        [
            [cp * ct, -sp, -cp * st],
            [sp * ct, cp, -sp * st],
            [st, 0.0, ct],
        ]
    )


# angular momentum matrix elements between the unrotated Pi_pm states:
# only <Pi_pm|L_z|Pi_pm> = +-1 survive
_L_UNROTATED = np.zeros((2, 2, 3))
_L_UNROTATED[0, 0, 2] = 1.0
_L_UNROTATED[1, 1, 2] = -1.0


def rotated_angular_momentum_oracle(rot: RotationSpec, theta: float, phi: float) -> HermitianMatrix:
    """-Omega.L between the rotated Pi_pm states, from <U psi|L|U psi'> = R <psi|L|psi'>."""
    rmat = rotation_matrix(theta, phi)
    l_rot = np.einsum("ij,abj->abi", rmat, _L_UNROTATED)
    block = -np.einsum("i,abi->ab", rot.vector, l_rot)
    return HermitianMatrix(block.astype(complex), BASIS[1:])


def _builder_pi_block(rot, theta, phi):
    s = -f_phi(rot, phi) * math.sin(theta) + math.cos(theta) * rot.omega_z
    return np.diag([s, -s]).astype(complex)


def _ratio(target, basis):
    den = float(np.sum(basis * basis))
    if den == 0.0:
        return None, 0.0
    a = float(np.sum(target * basis)) / den
    return a, float(np.max(np.abs(target - a * basis)))


def compare_with_oracle(
    rot: RotationSpec, n_theta: int = 32, n_phi: int = 32, atol: float = 1e-12, n_samples: int = 4
) -> dict:
    """Compare the builder's Pi-block shifts with the vector-operator oracle on a grid.

    Returns a JSON-ready report. If the entries disagree, the report carries
    the least-squares factor relating builder to oracle separately for the
    in-plane and the axial parts of the rotation, plus side-by-side samples.
    """
    thetas = np.linspace(0.0, math.pi, n_theta)
    phis = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    parts = {
        "in_plane": RotationSpec.from_vector([rot.omega_x, rot.omega_y, 0.0]),
        "axial": RotationSpec.from_vector([0.0, 0.0, rot.omega_z]),
    }
    builder = {k: [] for k in parts}
    oracle = {k: [] for k in parts}
    max_diff = 0.0
    samples = []
    for i, t in enumerate(thetas):
        for j, p in enumerate(phis):
            b = _builder_pi_block(rot, t, p) if rot.omega else np.zeros((2, 2), complex)
            o = rotated_angular_momentum_oracle(rot, t, p).entries
            max_diff = max(max_diff, float(np.max(np.abs(b - o))))
            for k, sub in parts.items():
                builder[k].append(np.diag(_builder_pi_block(sub, t, p)).real if sub.omega else np.zeros(2))
                oracle[k].append(np.diag(rotated_angular_momentum_oracle(sub, t, p).entries).real)
            if len(samples) < n_samples and (i * n_phi + j) % max(1, (n_theta * n_phi) // n_samples) == 0:
                samples.append(
                    {
                        "theta": float(t),
                        "phi": float(p),
                        "builder": [[float(x) for x in row] for row in b.real],
                        "oracle": [[float(x) for x in row] for row in o.real],
                    }
                )
    relation = {}
    for k in parts:
        ratio, resid = _ratio(np.ravel(builder[k]), np.ravel(oracle[k]))
        relation[k] = {"ratio": ratio, "fit_residual": resid}
    agree = max_diff <= atol
    report = {
        "grid": [n_theta, n_phi],
        "tolerance": atol,
        "agree": agree,
        "max_abs_diff": max_diff,
        "omega": [rot.omega_x, rot.omega_y, rot.omega_z],
    }
    if not agree:
        report["discrepancy"] = {"relation": relation, "samples": samples}
    return report


# -- adiabatic surfaces -----------------------------------------------------


def _check_grid(name, grid):
    g = np.asarray(grid, dtype=float).reshape(-1)
    if g.size == 0:
        raise ValueError(f"{name} grid is empty")
    if np.any(np.diff(g) <= 0):
        raise ValueError(f"{name} grid must be strictly increasing")
    return g


@dataclass(frozen=True, eq=False)
class AdiabaticScan:
    r: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    energies: np.ndarray  # (n_r, n_theta, n_phi, 3), ascending in the last axis

    def max_jumps(self) -> tuple[float, float, float]:
        out = []
        for ax in range(3):
            if self.energies.shape[ax] < 2:
                out.append(0.0)
            else:
                out.append(float(np.max(np.abs(np.diff(self.energies, axis=ax)))))
        return tuple(out)

    def continuity_violations(self, bound: float) -> list[tuple[int, int, int, int]]:
        """Grid steps (axis, i, j, k) where some surface jumps by more than ``bound``."""
        bad = []
        for ax in range(3):
            if self.energies.shape[ax] < 2:
                continue
            jump = np.max(np.abs(np.diff(self.energies, axis=ax)), axis=-1)
            for idx in zip(*np.nonzero(jump > bound)):
                bad.append((ax, *map(int, idx)))
        return bad

    def rows(self):
        for i, r in enumerate(self.r):
            for j, t in enumerate(self.theta):
                for k, p in enumerate(self.phi):
                    yield (r, t, p, *self.energies[i, j, k])


def adiabatic_scan(
    model: DiatomicModel,
    rot: Optional[RotationSpec],
    r_grid: Sequence[float],
    theta_grid: Sequence[float],
    phi_grid: Sequence[float],
    max_points: int = MAX_SCAN_POINTS,
    threads: int = 1,
) -> AdiabaticScan:
    r = _check_grid("r", r_grid)
    theta = _check_grid("theta", theta_grid)
    phi = _check_grid("phi", phi_grid)
    total = r.size * theta.size * phi.size
    if total > max_points:
        raise ValueError(f"scan has {total} points, cap is {max_points}")
    model.check_domain(r)
    energies = np.empty((r.size, theta.size, phi.size, 3))

    def work(i):
        h = sigma_pi_stack(model, rot, r[i], theta[:, None], phi[None, :])
        energies[i] = np.linalg.eigvalsh(h)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, range(r.size)))
    else:
        for i in range(r.size):
            work(i)
    return AdiabaticScan(r, theta, phi, energies)


def write_scan_csv(scan: AdiabaticScan, path) -> None:
    with open(path, "w") as fh:
        fh.write("r,theta,phi,e1,e2,e3\n")
        for row in scan.rows():
            fh.write(",".join(format(float(x), ".17g") for x in row) + "\n")


# -- light-induced conical intersections ------------------------------------


@dataclass(frozen=True)
class LiciPoint:
    r: float
    theta: float
    branch: str  # "plus": V_Sigma + omega_c = V_Pi + Omega_z, "minus": ... - Omega_z
    gap: float


@dataclass(frozen=True, eq=False)
class LiciSeam:
    phi: np.ndarray
    gaps: np.ndarray
    tolerance: float

    @property
    def max_gap(self) -> float:
        return float(np.max(self.gaps))

    @property
    def certified(self) -> bool:
        return self.max_gap <= self.tolerance


@dataclass(frozen=True)
class Lici:
    point: LiciPoint
    seam: LiciSeam

    def record(self) -> dict:
        return {
            "r": self.point.r,
            "theta": self.point.theta,
            "branch": self.point.branch,
            "gap": self.point.gap,
            "seam_max_gap": self.seam.max_gap,
            "phi_grid_size": int(self.seam.phi.size),
        }


def crossing_gap(model, rot, r, theta, phi) -> float:
    """Splitting of the two adiabatic surfaces meeting at the Sigma + photon level."""
    h = sigma_pi_stack(model, rot, r, theta, phi)
    e = np.linalg.eigvalsh(h)
    target = model.v_sigma(r) + model.cavity.omega_c
    dist = np.sort(np.abs(e - np.asarray(target)[..., None]), axis=-1)
    return dist[..., 1]


def _bracket_roots(fn, lo, hi, n_samples):
    x = np.linspace(lo, hi, n_samples)
    y = fn(x)
    roots = [float(x[i]) for i in np.flatnonzero(y == 0.0)]
    for i in np.flatnonzero(np.sign(y[:-1]) * np.sign(y[1:]) < 0):
        roots.append(brentq(fn, x[i], x[i + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200))
    return sorted(roots)


def find_licis(
    model: DiatomicModel,
    rot: Optional[RotationSpec],
    r_window: tuple[float, float],
    n_samples: int = 512,
    n_phi: int = 64,
    tol: float = DEGENERACY_TOL,
) -> list[Lici]:
    """Locate LICIs at theta = 0 and pi and certify each as a seam over phi.

    At theta = 0, pi the Sigma state decouples and the Pi levels are shifted by
    +-Omega_z, so crossings solve V_Sigma + omega_c = V_Pi +- Omega_z.
    """
    lo, hi = map(float, r_window)
    if not lo < hi:
        raise ValueError("r_window must be increasing")
    model.check_domain([lo, hi])
    oz = rot.omega_z if rot is not None else 0.0
    if oz == 0.0:
        warnings.warn("Omega_z = 0: the plus and minus crossings coincide", ShiftDegenerate, stacklevel=2)
        branches = [("plus", 0.0)]
    else:
        branches = [("plus", oz), ("minus", -oz)]
    phis = np.linspace(0.0, 2.0 * math.pi, n_phi, endpoint=False)
    found = []
    for name, shift in branches:
        for r in _bracket_roots(lambda x: model.crossing_function(x, shift), lo, hi, n_samples):
            for theta in (0.0, math.pi):
                gap = float(crossing_gap(model, rot, r, theta, 0.0))
                if gap > tol:
                    continue
                seam = LiciSeam(phis, np.asarray(crossing_gap(model, rot, r, theta, phis)), tol)
                found.append(Lici(LiciPoint(r, theta, name, gap), seam))
    if not found:
        raise NoCrossing(f"no crossing of V_Sigma + omega_c with V_Pi +- Omega_z in [{lo}, {hi}]")
    return found


def distinct_r_values(licis: Sequence[Lici], atol: float = 1e-9) -> list[float]:
    rs = sorted(l.point.r for l in licis)
    out = []
    for r in rs:
        if not out or r - out[-1] > atol:
            out.append(r)
    return out
