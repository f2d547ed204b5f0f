"""Run configuration: a YAML file checked against a strict schema.

Unknown keys anywhere in the file are rejected. Energies and angular
velocities share one unit (hbar = 1), so ``rotation.omega`` means hbar*Omega.

Example::

    system: ensemble
    seed: 0
    cavity: {omega_c: 1.0, g: 0.05}
    rotation: {axis: X, omega: 0.3}     # or [ux, uy, uz], Y, Z, "XY(0.4)"
    ensemble: {n_atoms: 4}
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .atom_cavity import CavitySpec, EnsembleSpec, RotationSpec
from .molecule import ConstantDipole, DiatomicModel, Harmonic, Morse, Tabulated


class ConfigError(Exception):
    """Raised for unreadable or invalid configuration files."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CavityConfig(_Strict):
    omega_c: float = Field(gt=0)
    g: float = Field(default=0.0, ge=0)
    detuning: float = 0.0

    def build(self) -> CavitySpec:
        return CavitySpec(self.omega_c, self.g, self.detuning)


_XY_RE = re.compile(r"^XY\(\s*([-+0-9.eE]+)\s*\)$")
_NAMED = {"X": (1.0, 0.0, 0.0), "Y": (0.0, 1.0, 0.0), "Z": (0.0, 0.0, 1.0)}


def parse_axis(value) -> Tuple[float, float, float]:
    if isinstance(value, str):
        s = value.strip().upper()
        if s in _NAMED:
            return _NAMED[s]
        m = _XY_RE.match(s)
        if m:
            a = float(m.group(1))
            return (math.cos(a), math.sin(a), 0.0)
        raise ValueError(f"unknown axis name {value!r}; use X, Y, Z, XY(alpha) or a 3-vector")
    vec = np.asarray(value, dtype=float)
    if vec.shape != (3,) or not np.all(np.isfinite(vec)) or np.linalg.norm(vec) == 0:
        raise ValueError("axis must be a non-zero 3-vector")
    vec = vec / np.linalg.norm(vec)
    return tuple(float(x) for x in vec)


class RotationConfig(_Strict):
    axis: Union[str, List[float]] = "X"
    omega: float = Field(default=0.0, ge=0)

    @field_validator("axis")
    @classmethod
    def _axis(cls, v):
        parse_axis(v)
        return v

    def build(self) -> RotationSpec:
        return RotationSpec(parse_axis(self.axis), self.omega)


class EnsembleConfig(_Strict):
    n_atoms: int = Field(default=1, ge=1)

    def build(self) -> EnsembleSpec:
        return EnsembleSpec(self.n_atoms)


class CurveConfig(_Strict):
    kind: Literal["harmonic", "morse", "tabulated", "constant"]
    k: Optional[float] = None
    r0: Optional[float] = None
    offset: float = 0.0
    depth: Optional[float] = None
    a: Optional[float] = None
    d: Optional[float] = None
    file: Optional[str] = None

    def build(self, base: Path, what: str):
        def need(*names):
            missing = [n for n in names if getattr(self, n) is None]
            if missing:
                raise ConfigError(f"{what}: kind {self.kind!r} needs {', '.join(missing)}")

        if self.kind == "harmonic":
            need("k", "r0")
            return Harmonic(self.k, self.r0, self.offset)
        if self.kind == "morse":
            need("depth", "a", "r0")
            return Morse(self.depth, self.a, self.r0, self.offset)
        if self.kind == "constant":
            need("d")
            return ConstantDipole(self.d)
        need("file")
        path = Path(self.file)
        if not path.is_absolute():
            path = base / path
        try:
            return Tabulated.from_file(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{what}: {exc}") from exc


class MoleculeConfig(_Strict):
    v_sigma: CurveConfig
    v_pi: CurveConfig
    dipole: CurveConfig = CurveConfig(kind="constant", d=1.0)
    g0: float = 0.0
    reduced_mass: float = Field(default=1.0, gt=0)
    r_min: float = Field(gt=0)
    r_max: float

    def build(self, cavity: CavitySpec, base: Path) -> DiatomicModel:
        try:
            return DiatomicModel(
                self.v_sigma.build(base, "molecule.v_sigma"),
                self.v_pi.build(base, "molecule.v_pi"),
                self.dipole.build(base, "molecule.dipole"),
                self.g0,
                cavity,
                self.reduced_mass,
                self.r_min,
                self.r_max,
            )
        except ValueError as exc:
            raise ConfigError(f"molecule: {exc}") from exc


GridSpec = Tuple[float, float, int]


def grid_values(spec: GridSpec) -> np.ndarray:
    start, stop, count = spec
    return np.linspace(start, stop, int(count))


class ScanConfig(_Strict):
    r: GridSpec
    theta: GridSpec = (0.0, math.pi, 9)
    phi: GridSpec = (0.0, 2 * math.pi, 9)
    max_points: int = 10**7


class LiciConfig(_Strict):
    r_window: Tuple[float, float]
    samples: int = Field(default=512, ge=8)
    phi_points: int = Field(default=64, ge=1)
    tolerance: float = Field(default=1e-10, gt=0)
    expected_count: Optional[int] = None
    oracle_grid: Tuple[int, int] = (32, 32)


class InitialState(_Strict):
    kind: Literal["gaussian", "eigenstate"] = "gaussian"
    center: float = 0.0
    width: float = Field(default=0.2, gt=0)
    momentum: float = 0.0
    channel: Literal["sigma", "pi_plus", "pi_minus"] = "sigma"
    index: int = Field(default=0, ge=0)


class PropagationConfig(_Strict):
    n_points: int = Field(default=128, ge=16)
    dt: float = Field(gt=0)
    n_steps: int = Field(ge=1)
    theta: float = Field(default=0.0, ge=0, le=math.pi)
    phi: float = Field(default=0.0, ge=0, le=2 * math.pi)
    include_centrifugal: bool = False
    angular_momentum: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    max_dr: Optional[float] = None
    initial: InitialState = InitialState()


class BenchConfig(_Strict):
    sizes: List[int] = [1000, 10000, 100000]
    dense_limit: int = 2000
    repeats: int = Field(default=3, ge=1)


class DarkStatesConfig(_Strict):
    inject_mismatch: bool = False


class RunConfig(_Strict):
    system: Literal["atom", "ensemble", "diatomic"]
    seed: int = 0
    cavity: CavityConfig
    rotation: RotationConfig = RotationConfig()
    ensemble: Optional[EnsembleConfig] = None
    molecule: Optional[MoleculeConfig] = None
    scan: Optional[ScanConfig] = None
    lici: Optional[LiciConfig] = None
    propagation: Optional[PropagationConfig] = None
    bench: Optional[BenchConfig] = None
    darkstates: DarkStatesConfig = DarkStatesConfig()
    tolerance: float = Field(default=1e-10, gt=0)

    @property
    def n_atoms(self) -> int:
        if self.system == "atom":
            return 1
        return self.ensemble.n_atoms if self.ensemble else 1


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "invalid configuration:\n" + "\n".join(lines)


def load_config(path) -> tuple[RunConfig, Path]:
    """Parse and validate a YAML run config; returns it with the directory it lives in."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: YAML error: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"{path}: " + _format_errors(exc)) from exc
    return cfg, path.parent.resolve()
