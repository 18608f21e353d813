"""Exact-diagonalisation oracle: full Hamiltonians, gaps and exact evolution.

Hamiltonians are stored sparse; they are densified only for full
eigendecompositions at small dimension.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numpy.typing import NDArray

from .hamiltonian import LocalTerm, path_hamiltonian
from .linalg import hermitian_expm
from .schedule import Schedule
from .states import StateFamily

__all__ = [
    "DEFAULT_MAX_DIM",
    "DENSE_EIG_MAX_DIM",
    "DEGENERACY_TOL",
    "DenseHamiltonian",
    "EdTrajectory",
    "GapProfile",
    "ResourceLimitError",
    "dense_hamiltonian",
    "ed_evolve",
    "gap_sweep",
    "ground_and_gap",
]

log = logging.getLogger(__name__)

DEFAULT_MAX_DIM = 2**20
DENSE_EIG_MAX_DIM = 4096
DEGENERACY_TOL = 1e-8


class ResourceLimitError(RuntimeError):
    """The Hilbert-space dimension exceeds the configured guard."""


@dataclass(frozen=True)
class DenseHamiltonian:
    n_sites: int
    total_dim: int
    matrix: sp.csr_matrix

    def to_dense(self) -> NDArray:
        return self.matrix.toarray()


def dense_hamiltonian(
    terms: list[LocalTerm], phys_dims: list[int], max_dim: int = DEFAULT_MAX_DIM
) -> DenseHamiltonian:
    """Embed each local term as ``1 x ... x h_e x ... x 1`` and sum."""
    total = math.prod(phys_dims)
    if total > max_dim:
        raise ResourceLimitError(f"Hilbert space dimension {total} exceeds the guard {max_dim}")
    n = len(phys_dims)
    dtype = np.float64
    if any(np.abs(t.matrix.imag).max() > 0 for t in terms if np.iscomplexobj(t.matrix)):
        dtype = np.complex128
    rows, cols, vals = [], [], []
    for t in terms:
        lo, hi = t.first_site, t.first_site + t.support
        if lo < 0 or hi > n:
            raise ValueError(f"term on sites {t.sites} does not fit {n} sites")
        loc = math.prod(phys_dims[lo:hi])
        if t.matrix.shape != (loc, loc):
            raise ValueError(f"term on sites {t.sites} has shape {t.matrix.shape}, expected {(loc, loc)}")
        m = t.matrix if dtype is np.complex128 else t.matrix.real
        a, b = np.nonzero(np.abs(m) > 0)
        left = np.arange(math.prod(phys_dims[:lo]))[:, None, None]
        n_right = math.prod(phys_dims[hi:])
        right = np.arange(n_right)[None, None, :]
        # flat index (l, a, r) -> (l * loc + a) * n_right + r
        rows.append(((left * loc + a[None, :, None]) * n_right + right).ravel())
        cols.append(((left * loc + b[None, :, None]) * n_right + right).ravel())
        vals.append(np.broadcast_to(m[a, b][None, :, None], (left.shape[0], a.size, n_right)).ravel())
    if rows:
        h = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(total, total)
        ).tocsr()
    else:
        h = sp.csr_matrix((total, total), dtype=dtype)
    return DenseHamiltonian(n, total, h)


def _lowest(h: DenseHamiltonian, k: int = 2) -> NDArray[np.float64]:
    if h.total_dim <= DENSE_EIG_MAX_DIM:
        return scipy.linalg.eigvalsh(h.to_dense(), subset_by_index=[0, min(k, h.total_dim) - 1])
    # fixed start vector keeps reruns bit-reproducible
    v0 = np.random.default_rng(0).standard_normal(h.total_dim)
    vals = spla.eigsh(h.matrix, k=k, which="SA", v0=v0, tol=1e-12, return_eigenvectors=False)
    return np.sort(vals)


def ground_and_gap(h: DenseHamiltonian) -> tuple[float, float, bool]:
    """Return ``(E0, E1 - E0, degenerate)``.

    ``degenerate`` is set when the gap is at most ``DEGENERACY_TOL``.
    """
    if h.total_dim < 2:
        raise ValueError("a gap needs at least two levels")
    e = _lowest(h, 2)
    gap = float(e[1] - e[0])
    return float(e[0]), gap, gap <= DEGENERACY_TOL


@dataclass
class GapProfile:
    family: str
    n: int
    s_grid: list[float]
    gaps: list[float]
    ground_energies: list[float]
    delta_min: float = field(init=False)
    argmin_s: float = field(init=False)

    def __post_init__(self) -> None:
        i = int(np.argmin(self.gaps))
        self.delta_min = float(self.gaps[i])
        self.argmin_s = float(self.s_grid[i])


def gap_sweep(family: StateFamily, s_grid, n: int, max_dim: int = DEFAULT_MAX_DIM) -> GapProfile:
    """Gap of ``H(s)`` at every grid point."""
    family.validate_for_path()
    dims = family.phys_dims(n)
    if math.prod(dims) > max_dim:
        raise ResourceLimitError(f"Hilbert space dimension {math.prod(dims)} exceeds the guard {max_dim}")
    gaps, e0s = [], []
    for s in s_grid:
        h = path_hamiltonian(family, float(s), n)
        e0, gap, degenerate = ground_and_gap(dense_hamiltonian(h.terms, dims, max_dim))
        if degenerate:
            log.warning("degenerate ground space at s=%g (gap %.3e)", s, gap)
        gaps.append(gap)
        e0s.append(e0)
    return GapProfile(str(family), n, [float(s) for s in s_grid], gaps, e0s)


@dataclass(frozen=True)
class EdSample:
    step: int
    t: float
    s: float
    fidelity: float


@dataclass
class EdTrajectory:
    config: dict
    samples: list[EdSample]
    final_fidelity: float
    n_steps: int
    tau_effective: float
    final_state: NDArray | None = field(default=None, repr=False)

    @property
    def infidelity(self) -> float:
        return 1.0 - self.final_fidelity


def _trotter_step(psi: NDArray, terms: list[LocalTerm], dims: list[int], tau: float) -> NDArray:
    """Dense application of the same symmetric gate sequence TEBD uses."""
    ordered = sorted(terms, key=lambda t: t.first_site)
    seq = [(t, 0.5 * tau) for t in ordered[:-1]] + [(ordered[-1], tau)]
    seq += [(t, 0.5 * tau) for t in reversed(ordered[:-1])]
    for t, dt in seq:
        i = t.first_site
        g = hermitian_expm(t.matrix, dt)
        left = math.prod(dims[:i])
        loc = dims[i] * dims[i + 1]
        v = psi.reshape(left, loc, -1)
        psi = np.einsum("ab,xby->xay", g, v).reshape(-1)
    return psi


def ed_evolve(
    family: StateFamily,
    n: int,
    total_time: float,
    tau: float = 0.02,
    schedule: Schedule = Schedule("sin2-1d"),
    method: str = "krylov",
    sample_stride: int = 50,
    max_dim: int = DEFAULT_MAX_DIM,
    keep_state: bool = False,
) -> EdTrajectory:
    """Exact evolution along the path with ``s`` frozen at each step midpoint.

    Args:
        method: ``"eigh"`` exponentiates through a full eigendecomposition,
            ``"krylov"`` applies ``exp(-i H tau)`` to the vector directly
            (same propagator, far cheaper), ``"trotter"`` applies the
            symmetric two-site gate sequence on the full vector.
    """
    family.validate_for_path()
    if method not in ("eigh", "krylov", "trotter"):
        raise ValueError(f"unknown propagation method {method!r}")
    if not (total_time > 0 and tau > 0 and tau <= total_time):
        raise ValueError(f"need 0 < tau <= T, got tau={tau}, T={total_time}")
    dims = family.phys_dims(n)
    if math.prod(dims) > max_dim:
        raise ResourceLimitError(f"Hilbert space dimension {math.prod(dims)} exceeds the guard {max_dim}")
    n_steps = max(1, int(round(total_time / tau)))
    dt = total_time / n_steps
    psi = family.path_state(0.0, n).to_dense().reshape(-1)
    psi = psi / np.linalg.norm(psi)
    target = family.path_state(1.0, n).to_dense().reshape(-1)
    target = target / np.linalg.norm(target)

    def fid(v: NDArray) -> float:
        return float(abs(np.vdot(target, v)) ** 2 / np.vdot(v, v).real)

    samples = [EdSample(0, 0.0, 0.0, fid(psi))]
    for step in range(n_steps):
        s = float(schedule((step + 0.5) / n_steps))
        h = path_hamiltonian(family, s, n)
        if method == "trotter":
            psi = _trotter_step(psi, h.terms, dims, dt)
        else:
            hm = dense_hamiltonian(h.terms, dims, max_dim)
            if method == "eigh":
                w, v = scipy.linalg.eigh(hm.to_dense())
                psi = v @ (np.exp(-1j * dt * w) * (v.conj().T @ psi))
            else:
                psi = spla.expm_multiply(-1j * dt * hm.matrix, psi)
        done = step + 1
        if done % sample_stride == 0 or done == n_steps:
            samples.append(EdSample(done, done * dt, s, fid(psi)))
    config = {
        "family": str(family),
        "n": n,
        "total_time": total_time,
        "tau": tau,
        "schedule": str(schedule),
        "method": method,
        "sample_stride": sample_stride,
    }
    return EdTrajectory(config, samples, samples[-1].fidelity, n_steps, dt, psi if keep_state else None)
