"""Hermitian arrowhead matrices and their secular-equation eigensolver.

An arrowhead matrix has a head value ``a`` in the (0, 0) slot, a real diagonal
"shaft" d_1..d_n and a first row w_1..w_n (first column conjugated)::

    [ a    w_1  w_2 ... ]
    [ w_1* d_1          ]
    [ w_2*      d_2     ]
    [ ...           ... ]

Shaft entries that share a value collapse into one coupled entry of weight
sqrt(sum |w_k|^2) plus dark states sitting exactly at that value. The coupled
eigenvalues are the zeros of

    f(e) = (e - a) - sum_k |w_k|^2 / (e - d_k),

one in each gap between consecutive coupled shaft values and one beyond each
end.
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .core import CavityError, ConvergenceFailure, HermitianMatrix, eigenvalues_dense

ROOT_RTOL = 1e-13
DEFLATION_RTOL = 1e-12
MAX_ITER = 200
_CHUNK_ELEMS = 4_000_000


class PoleEvaluation(CavityError, ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ArrowheadMatrix:
    head: float
    shaft: np.ndarray
    couplings: np.ndarray
    labels: tuple = ()

    def __post_init__(self):
        d = np.array(self.shaft, dtype=float).reshape(-1)
        w = np.array(self.couplings, dtype=complex).reshape(-1)
        if d.shape != w.shape:
            raise ValueError(f"shaft has {d.size} entries but couplings has {w.size}")
        d.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "head", float(self.head))
        object.__setattr__(self, "shaft", d)
        object.__setattr__(self, "couplings", w)
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.labels and len(self.labels) != d.size + 1:
            raise ValueError("labels must cover head plus shaft")

    @property
    def n(self) -> int:
        return self.shaft.size

    @property
    def dim(self) -> int:
        return self.shaft.size + 1

    @property
    def scale(self) -> float:
        parts = [abs(self.head)]
        if self.n:
            parts += [float(np.max(np.abs(self.shaft))), float(np.max(np.abs(self.couplings)))]
        return max(parts) or 1.0

    def dense(self) -> HermitianMatrix:
        h = np.diag(np.concatenate([[self.head], self.shaft])).astype(complex)
        h[0, 1:] = self.couplings
        h[1:, 0] = self.couplings.conj()
        return HermitianMatrix(h, self.labels)


@dataclass(frozen=True, eq=False)
class SecularSolution:
    eigenvalues: np.ndarray
    dark_multiplicities: dict
    eigenvectors: Optional[np.ndarray] = None
    # coupled (non-deflated) eigenvalues and the distinct coupled shaft values
    roots: np.ndarray = field(default_factory=lambda: np.empty(0))
    poles: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n_deflated(self) -> int:
        return sum(self.dark_multiplicities.values())


def secular_function(a: ArrowheadMatrix, e: float) -> float:
    """f(e) = (e - head) - sum |w_k|^2 / (e - d_k)."""
    diff = e - a.shaft
    if a.n and np.min(np.abs(diff)) < 1e-14 * a.scale:
        raise PoleEvaluation(f"e = {e!r} sits on a shaft value")
    return float((e - a.head) - np.sum(np.abs(a.couplings) ** 2 / diff))


@dataclass(frozen=True)
class _Groups:
    order: np.ndarray  # permutation sorting the shaft
    starts: np.ndarray  # group start offsets into the sorted shaft
    values: np.ndarray  # representative shaft value per group
    weights: np.ndarray  # sum |w|^2 per group
    sizes: np.ndarray
    coupled: np.ndarray  # bool per group


def _group(a: ArrowheadMatrix, rtol: float) -> _Groups:
    order = np.argsort(a.shaft, kind="stable")
    d = a.shaft[order]
    w2 = np.abs(a.couplings[order]) ** 2
    atol = rtol * a.scale
    starts = np.concatenate([[0], np.flatnonzero(np.diff(d) > atol) + 1]).astype(int)
    if d.size == 0:
        starts = np.empty(0, dtype=int)
    sizes = np.diff(np.concatenate([starts, [d.size]])).astype(int)
    weights = np.add.reduceat(w2, starts) if d.size else np.empty(0)
    coupled = np.sqrt(weights) > atol
    return _Groups(order, starts, d[starts], weights, sizes, coupled)


def _solve_roots(head: float, poles: np.ndarray, z2: np.ndarray, scale: float):
    """Zeros of the secular function as (origin, offset) pairs, lambda = origin + offset."""
    k = poles.size
    if k == 0:
        return np.array([head]), np.zeros(1)
    radius = math.sqrt(float(np.sum(z2)))
    pad = 1e-14 * scale + radius
    lower = min(head, poles[0]) - pad
    upper = max(head, poles[-1]) + pad

    origin = np.empty(k + 1)
    t_lo = np.empty(k + 1)
    t_hi = np.empty(k + 1)
    origin[0], t_lo[0], t_hi[0] = poles[0], lower - poles[0], 0.0
    origin[k], t_lo[k], t_hi[k] = poles[-1], 0.0, upper - poles[-1]
    if k > 1:
        left, right = poles[:-1], poles[1:]
        mid = 0.5 * (left + right)
        fmid = np.empty(k - 1)
        step = max(1, _CHUNK_ELEMS // k)
        for s in range(0, k - 1, step):
            m = mid[s : s + step]
            with np.errstate(divide="ignore"):
                fmid[s : s + step] = (m - head) - np.sum(z2[None, :] / (m[:, None] - poles[None, :]), axis=1)
        near_left = fmid >= 0.0
        origin[1:k] = np.where(near_left, left, right)
        t_lo[1:k] = np.where(near_left, 0.0, mid - right)
        t_hi[1:k] = np.where(near_left, mid - left, 0.0)

    tau = np.empty(k + 1)
    chunk = max(1, _CHUNK_ELEMS // max(k, 1))
    for s in range(0, k + 1, chunk):
        sl = slice(s, min(s + chunk, k + 1))
        tau[sl] = _bracketed_newton(head, poles, z2, origin[sl], t_lo[sl], t_hi[sl], scale)
    return origin, tau


def _bracketed_newton(head, poles, z2, origin, lo, hi, scale):
    # distance from each origin to every pole, computed once
    delta = origin[:, None] - poles[None, :]
    shift = origin - head
    tau = 0.5 * (lo + hi)
    active = np.ones(origin.size, dtype=bool)
    for _ in range(MAX_ITER):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        t = tau[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = 1.0 / (delta[idx] + t[:, None])
            f = shift[idx] + t - r @ z2
            r *= r
            fp = 1.0 + r @ z2
            step = f / fp
        # f is increasing, so its sign tells which side of the root t is on
        neg = f < 0.0
        lo[idx] = np.where(neg, t, lo[idx])
        hi[idx] = np.where(neg, hi[idx], t)
        t_new = t - step
        ok = np.isfinite(t_new) & (t_new > lo[idx]) & (t_new < hi[idx])
        t_new = np.where(ok, t_new, 0.5 * (lo[idx] + hi[idx]))
        width = hi[idx] - lo[idx]
        done = (
            (f == 0.0)
            | (ok & (np.abs(step) <= ROOT_RTOL * np.abs(t_new)))
            | (width <= ROOT_RTOL * np.abs(t))
            | (t_new == t)
        )
        tau[idx] = np.where(f == 0.0, t, t_new)
        active[idx[done]] = False
    if np.any(active):
        raise ConvergenceFailure(
            f"{int(active.sum())} secular roots did not converge in {MAX_ITER} iterations"
        )
    return tau


def _loewner_weights(poles, origin, tau):
    """|w_i|^2 reconstructed from the computed roots so eigenvectors stay orthogonal."""
    k = poles.size
    # lambda_l - p_i computed as (origin_l - p_i) + tau_l
    num = (origin[:, None] - poles[None, :]) + tau[:, None]  # (k+1, k)
    den = poles[None, :] - poles[:, None]  # (k, k), den[i, j] = p_j - p_i
    np.fill_diagonal(den, 1.0)
    log_mag = np.sum(np.log(np.abs(num)), axis=0) - np.sum(np.log(np.abs(den)), axis=1)
    return np.exp(log_mag)


def _householder_complement(c: np.ndarray) -> np.ndarray:
    """Orthonormal columns spanning the complement of the unit vector c."""
    m = c.size
    e1 = np.zeros(m, dtype=complex)
    phase = c[0] / abs(c[0]) if abs(c[0]) > 0 else 1.0
    e1[0] = phase
    v = c + e1
    h = np.eye(m, dtype=complex) - 2.0 * np.outer(v, v.conj()) / np.vdot(v, v).real
    return h[:, 1:]


def eigensolve_arrowhead(
    a: ArrowheadMatrix, want_vectors: bool = False, deflation_rtol: float = DEFLATION_RTOL
) -> SecularSolution:
    """All eigenvalues (and optionally eigenvectors) of an arrowhead matrix.

    Cost is O(n log n) for the deflation plus O(k^2) for k distinct coupled
    shaft values, so ensembles of identical atoms solve in near-linear time.
    """
    grp = _group(a, deflation_rtol)
    poles = grp.values[grp.coupled]
    z2 = grp.weights[grp.coupled]
    origin, tau = _solve_roots(a.head, poles, z2, a.scale)
    roots = origin + tau

    dark_counts = grp.sizes - grp.coupled.astype(int)
    dark = {float(v): int(c) for v, c in zip(grp.values, dark_counts) if c > 0}
    dark_vals = np.repeat(grp.values, dark_counts)
    eigs = np.concatenate([roots, dark_vals])
    perm = np.argsort(eigs, kind="stable")
    eigs = eigs[perm]

    vectors = None
    if want_vectors:
        vectors = _vectors(a, grp, poles, z2, origin, tau, dark_counts)[:, perm]
    return SecularSolution(eigs, dark, vectors, np.sort(roots), poles)


def _vectors(a, grp, poles, z2, origin, tau, dark_counts):
    n = a.n
    dim = n + 1
    k = poles.size
    out = np.zeros((dim, k + 1 + int(dark_counts.sum())), dtype=complex)
    # group index of every sorted shaft entry, and of every coupled group
    gid = np.repeat(np.arange(grp.values.size), grp.sizes)
    coupled_ids = np.flatnonzero(grp.coupled)
    col_of_group = -np.ones(grp.values.size, dtype=int)
    col_of_group[coupled_ids] = np.arange(k)

    if k:
        fitted = _loewner_weights(poles, origin, tau)
        ratio = np.sqrt(fitted / z2)
        sorted_w = a.couplings[grp.order]
        sel = grp.coupled[gid]
        rows = 1 + grp.order[sel]
        pole_col = col_of_group[gid[sel]]
        wc = sorted_w[sel].conj() * ratio[pole_col]
        # lambda_l - p for each coupled entry, using the offset representation
        diff = (origin[:, None] - poles[None, pole_col]) + tau[:, None]
        block = wc[None, :] / diff
        out[0, : k + 1] = 1.0
        out[rows, : k + 1] = block.T
    else:
        out[0, 0] = 1.0
    out[:, : k + 1] /= np.linalg.norm(out[:, : k + 1], axis=0)

    col = k + 1
    for g in np.flatnonzero(dark_counts):
        members = grp.order[grp.starts[g] : grp.starts[g] + grp.sizes[g]]
        if grp.coupled[g]:
            c = a.couplings[members].conj()
            basis = _householder_complement(c / np.linalg.norm(c))
        else:
            basis = np.eye(members.size, dtype=complex)
        out[1 + members, col : col + basis.shape[1]] = basis
        col += basis.shape[1]
    return out


def random_arrowhead(n: int, rng: np.random.Generator, repeats: int = 1, complex_couplings: bool = True):
    """Random test instance; ``repeats`` > 1 makes each shaft value appear that many times."""
    base = rng.uniform(-1.0, 1.0, size=max(1, n // repeats))
    shaft = np.resize(np.repeat(base, repeats), n)
    w = rng.normal(size=n) * 0.3
    if complex_couplings:
        w = w + 1j * rng.normal(size=n) * 0.3
    return ArrowheadMatrix(rng.uniform(-1.0, 1.0), shaft, w)


def _ensemble_instance(n: int, rng: np.random.Generator) -> ArrowheadMatrix:
    from .atom_cavity import CavitySpec, EnsembleSpec, RotationSpec, build_ensemble

    axis = rng.normal(size=3)
    rot = RotationSpec(tuple(axis / np.linalg.norm(axis)), 0.3)
    return build_ensemble(CavitySpec(1.0, 0.2), rot, EnsembleSpec(max(1, n // 3)), case="general")


def benchmark_scaling(
    sizes: Sequence[int],
    seed: int = 0,
    make_instance: Optional[Callable[[int, np.random.Generator], ArrowheadMatrix]] = None,
    dense_limit: int = 2000,
    repeats: int = 3,
) -> list[dict]:
    """Time the arrowhead solver against dense diagonalisation.

    The default instance is a general-axis ensemble with n // 3 atoms (shaft
    length about n). Dense timings and the eigenvalue difference are only
    filled in for n <= ``dense_limit``.
    """
    if list(sizes) != sorted(sizes):
        raise ValueError("sizes must be sorted ascending")
    make = make_instance or _ensemble_instance
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        a = make(n, rng)
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            sol = eigensolve_arrowhead(a)
            best = min(best, time.perf_counter() - t0)
        t_dense = diff = math.nan
        if a.n <= dense_limit:
            t0 = time.perf_counter()
            ref = eigenvalues_dense(a.dense())
            t_dense = time.perf_counter() - t0
            diff = float(np.max(np.abs(ref - sol.eigenvalues)))
        rows.append({"n": a.n, "time_arrowhead_s": best, "time_dense_s": t_dense, "max_abs_eig_diff": diff})
    return rows


def scaling_exponent(rows: Sequence[dict], key: str = "time_arrowhead_s") -> float:
    """Slope of log(time) against log(n)."""
    n = np.array([r["n"] for r in rows], dtype=float)
    t = np.array([r[key] for r in rows], dtype=float)
    ok = np.isfinite(t) & (t > 0)
    return float(np.polyfit(np.log(n[ok]), np.log(t[ok]), 1)[0])


BENCH_COLUMNS = ("n", "time_arrowhead_s", "time_dense_s", "max_abs_eig_diff")


def write_benchmark_csv(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(BENCH_COLUMNS)
        for r in rows:
            writer.writerow([r["n"]] + [format(r[c], ".17g") for c in BENCH_COLUMNS[1:]])
