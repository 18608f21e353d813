"""Open-boundary matrix product states.

Site tensors are stored as ``(left_bond, physical, right_bond)`` arrays. The
state carries an optional orthogonality centre and a running ``log_norm``:
canonicalisation keeps the tensors at unit norm and moves the magnitude
into ``log_norm`` so that long chains neither overflow nor underflow.

Methods on :class:`MatrixProductState` mutate in place (TEBD relies on
this); the module-level functions of the same name work on copies.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from numpy.typing import NDArray

from . import _kernels

__all__ = [
    "CanonicalFormError",
    "MatrixProductState",
    "NOISE_CUTOFF",
    "TruncationPolicy",
    "apply_two_site_gate",
    "canonicalize",
    "correlation_length",
    "fidelity",
    "from_site_operator_chain",
    "log_fidelity",
    "log_overlap",
    "overlap",
    "product_state",
    "two_site_rdm",
]

SERIAL_FORMAT = "adiabatic_tn.mps/1"
NOISE_CUTOFF = 1e-22


class CanonicalFormError(RuntimeError):
    """Operation needs the orthogonality centre somewhere else."""


@dataclass(frozen=True)
class TruncationPolicy:
    """SVD truncation after a two-site gate.

    Attributes:
        cutoff: largest discarded fraction of squared weight per bond update.
        max_bond: hard cap on the bond dimension.
    """

    cutoff: float = 1e-10
    max_bond: int = 64

    def __post_init__(self) -> None:
        if not self.cutoff >= 0.0:
            raise ValueError(f"cutoff must be >= 0, got {self.cutoff}")
        if self.max_bond < 1:
            raise ValueError(f"max_bond must be >= 1, got {self.max_bond}")

    @classmethod
    def untruncated(cls, max_bond: int = 4096) -> TruncationPolicy:
        """Keep every singular value above double-precision noise.

        A cutoff of exactly zero also keeps the ~1e-16 round-off directions
        and lets bonds grow to their maximal size for no gain in accuracy.
        """
        return cls(cutoff=NOISE_CUTOFF, max_bond=max_bond)


class MatrixProductState:
    """Finite MPS with open boundaries (outer bonds of dimension 1)."""

    def __init__(
        self,
        tensors: list[NDArray],
        ortho_center: int | None = None,
        log_norm: float = 0.0,
    ) -> None:
        if not tensors:
            raise ValueError("an MPS needs at least one site")
        self.tensors = [np.asarray(t, dtype=np.complex128) for t in tensors]
        for i, t in enumerate(self.tensors):
            if t.ndim != 3:
                raise ValueError(f"site {i}: expected a rank-3 tensor, got shape {t.shape}")
        if self.tensors[0].shape[0] != 1 or self.tensors[-1].shape[2] != 1:
            raise ValueError("boundary bonds must have dimension 1")
        for i in range(len(self.tensors) - 1):
            if self.tensors[i].shape[2] != self.tensors[i + 1].shape[0]:
                raise ValueError(
                    f"bond mismatch between sites {i} and {i + 1}: "
                    f"{self.tensors[i].shape} vs {self.tensors[i + 1].shape}"
                )
        self.ortho_center = ortho_center
        self.log_norm = float(log_norm)
        self.discarded_weight = 0.0
        self.truncation_saturated = False

    # -- bookkeeping -----------------------------------------------------

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dims(self) -> list[int]:
        return [t.shape[1] for t in self.tensors]

    @property
    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    @property
    def max_bond_dim(self) -> int:
        return max(self.bond_dims, default=1)

    def copy(self) -> MatrixProductState:
        out = MatrixProductState([t.copy() for t in self.tensors], self.ortho_center, self.log_norm)
        out.discarded_weight = self.discarded_weight
        out.truncation_saturated = self.truncation_saturated
        return out

    def to_dense(self) -> NDArray[np.complex128]:
        """Full state vector (first site is the most significant index)."""
        v = self.tensors[0]
        for t in self.tensors[1:]:
            v = np.tensordot(v, t, axes=(-1, 0))
        return v.reshape(-1) * math.exp(self.log_norm)

    @classmethod
    def from_dense(cls, psi: NDArray, phys_dims: list[int]) -> MatrixProductState:
        """Exact (untruncated) MPS of a dense vector by successive SVDs."""
        psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
        if psi.size != int(np.prod(phys_dims)):
            raise ValueError("vector length does not match the physical dimensions")
        norm = np.linalg.norm(psi)
        if norm == 0.0:
            raise ValueError("cannot represent the zero vector")
        tensors = []
        rest = (psi / norm).reshape(1, -1)
        for d in phys_dims[:-1]:
            left = rest.shape[0]
            rest = rest.reshape(left * d, -1)
            u, s, vh = np.linalg.svd(rest, full_matrices=False)
            keep = max(1, int(np.sum(s > 1e-14 * s[0])))
            tensors.append(u[:, :keep].reshape(left, d, keep))
            rest = s[:keep, None] * vh[:keep]
        tensors.append(rest.reshape(rest.shape[0], phys_dims[-1], 1))
        return cls(tensors, ortho_center=len(phys_dims) - 1, log_norm=math.log(norm))

    # -- canonical form --------------------------------------------------

    def _absorb_norm(self, site: int) -> None:
        t = self.tensors[site]
        nrm = np.linalg.norm(t)
        if nrm == 0.0:
            raise ValueError("state has zero norm")
        self.tensors[site] = t / nrm
        self.log_norm += math.log(nrm)

    def _shift_right(self, i: int) -> None:
        """Left-orthonormalise site ``i`` and push the remainder to ``i + 1``."""
        t = self.tensors[i]
        l, d, r = t.shape
        q, rmat = np.linalg.qr(t.reshape(l * d, r))
        nrm = np.linalg.norm(rmat)
        if nrm == 0.0:
            raise ValueError("state has zero norm")
        self.log_norm += math.log(nrm)
        self.tensors[i] = q.reshape(l, d, q.shape[1])
        self.tensors[i + 1] = np.tensordot(rmat / nrm, self.tensors[i + 1], axes=(1, 0))

    def _shift_left(self, i: int) -> None:
        """Right-orthonormalise site ``i`` and push the remainder to ``i - 1``."""
        t = self.tensors[i]
        l, d, r = t.shape
        q, rmat = np.linalg.qr(t.reshape(l, d * r).T)
        nrm = np.linalg.norm(rmat)
        if nrm == 0.0:
            raise ValueError("state has zero norm")
        self.log_norm += math.log(nrm)
        self.tensors[i] = q.T.reshape(q.shape[1], d, r)
        self.tensors[i - 1] = np.tensordot(self.tensors[i - 1], (rmat / nrm).T, axes=(2, 0))

    def canonicalize(self, center: int) -> MatrixProductState:
        """Move the orthogonality centre to ``center`` (in place).

        A state without a known centre gets a full left and right sweep.
        The centre tensor is rescaled to unit norm.
        """
        n = self.n_sites
        if not 0 <= center < n:
            raise IndexError(f"site {center} outside chain of {n} sites")
        if self.ortho_center is None:
            for i in range(center):
                self._shift_right(i)
            for i in range(n - 1, center, -1):
                self._shift_left(i)
        else:
            for i in range(self.ortho_center, center):
                self._shift_right(i)
            for i in range(self.ortho_center, center, -1):
                self._shift_left(i)
        self._absorb_norm(center)
        self.ortho_center = center
        return self

    def normalize(self) -> MatrixProductState:
        """Scale to unit norm (canonicalising first if needed)."""
        if self.ortho_center is None:
            self.canonicalize(0)
        self._absorb_norm(self.ortho_center)
        self.log_norm = 0.0
        return self

    def is_canonical(self, tol: float = 1e-10) -> bool:
        """Check the isometry conditions around ``ortho_center``."""
        c = self.ortho_center
        if c is None:
            return False
        for i, t in enumerate(self.tensors):
            l, d, r = t.shape
            if i < c:
                m = t.reshape(l * d, r)
                if not np.allclose(m.conj().T @ m, np.eye(r), atol=tol):
                    return False
            elif i > c:
                m = t.reshape(l, d * r)
                if not np.allclose(m @ m.conj().T, np.eye(l), atol=tol):
                    return False
        return True

    # -- gates -----------------------------------------------------------

    def apply_two_site_gate(
        self,
        gate: NDArray,
        site: int,
        policy: TruncationPolicy = TruncationPolicy(),
        absorb_right: bool = True,
    ) -> float:
        """Apply ``gate`` to sites ``site, site + 1`` (in place).

        The centre must sit on one of the two sites. Afterwards it sits on
        ``site + 1`` if ``absorb_right`` else on ``site``, ready for the next
        gate of a left-to-right or right-to-left sweep. Returns the
        discarded weight of this update.
        """
        if self.ortho_center not in (site, site + 1):
            raise CanonicalFormError(
                f"gate on ({site}, {site + 1}) needs the centre there, found {self.ortho_center}"
            )
        a, b = self.tensors[site], self.tensors[site + 1]
        a, b, discarded, saturated = _kernels.two_site_update(
            a, b, gate, policy.cutoff, policy.max_bond, absorb_right
        )
        self.tensors[site], self.tensors[site + 1] = a, b
        self.ortho_center = site + 1 if absorb_right else site
        self.discarded_weight += discarded
        self.truncation_saturated |= saturated
        return discarded

    # -- serialisation ---------------------------------------------------

    def to_json_dict(self) -> dict[str, Any]:
        return {
            "format": SERIAL_FORMAT,
            "ortho_center": self.ortho_center,
            "log_norm": self.log_norm,
            "sites": [
                {
                    "shape": list(t.shape),
                    "real": t.real.reshape(-1).tolist(),
                    "imag": t.imag.reshape(-1).tolist(),
                }
                for t in self.tensors
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict[str, Any]) -> MatrixProductState:
        if data.get("format") != SERIAL_FORMAT:
            raise ValueError(f"unsupported MPS format {data.get('format')!r}")
        tensors = [
            (np.asarray(s["real"]) + 1j * np.asarray(s["imag"])).reshape(s["shape"])
            for s in data["sites"]
        ]
        return cls(tensors, data.get("ortho_center"), data.get("log_norm", 0.0))

    def dumps(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def loads(cls, text: str) -> MatrixProductState:
        return cls.from_json_dict(json.loads(text))


# -- constructors -----------------------------------------------------------


def product_state(local_states: list[NDArray]) -> MatrixProductState:
    """Bond-dimension-1 MPS from a list of local vectors."""
    tensors = [np.asarray(v, dtype=np.complex128).reshape(1, -1, 1) for v in local_states]
    return MatrixProductState(tensors).canonicalize(0)


def from_site_operator_chain(
    q_bulk: Any,
    s: float,
    n_sites: int,
    bond: NDArray | None = None,
) -> MatrixProductState:
    """Chain of entangled pairs with ``s * Q + (1 - s) * 1`` on every bulk site.

    ``q_bulk`` (a matrix or anything with a ``.matrix``) maps the two
    virtual qudits (left, right) of a site, ``D**2`` columns, to ``d`` rows;
    adding the identity requires ``d == D**2``. The dangling virtual qudits
    at both ends stay as physical boundary sites of dimension ``D`` with an
    identity operator, so the chain has ``n_sites + 2`` sites with physical
    dimensions ``[D, d, ..., d, D]``.

    ``bond`` is the ``D x D`` coefficient matrix ``B`` of the pair state
    ``sum_ab B[a, b] |a b>``; it defaults to the identity (``|Phi+>``).
    The result is normalised and canonical at site 0.
    """
    if n_sites < 2:
        raise ValueError(f"need at least 2 bulk sites, got {n_sites}")
    q = np.asarray(getattr(q_bulk, "matrix", q_bulk), dtype=np.complex128)
    d, dd = q.shape
    D = int(round(math.sqrt(dd)))
    if D * D != dd:
        raise ValueError(f"site operator has {dd} columns, not a square number of virtual states")
    if d != dd:
        raise ValueError(f"path interpolation needs a square site operator, got {q.shape}")
    b = np.eye(D, dtype=np.complex128) if bond is None else np.asarray(bond, dtype=np.complex128)
    qs = s * q + (1.0 - s) * np.eye(d)
    # Q[i, (alpha beta)] -> A[alpha, i, beta], then attach the bond to the right leg
    bulk = qs.reshape(d, D, D).transpose(1, 0, 2)
    bulk = np.tensordot(bulk, b, axes=(2, 0))
    left = b.reshape(1, D, D)
    right = np.eye(D, dtype=np.complex128).reshape(D, D, 1)
    state = MatrixProductState([left] + [bulk.copy() for _ in range(n_sites)] + [right])
    return state.canonicalize(0).normalize()


# -- functions on states ----------------------------------------------------


def canonicalize(state: MatrixProductState, center: int) -> MatrixProductState:
    return state.copy().canonicalize(center)


def apply_two_site_gate(
    state: MatrixProductState,
    gate: NDArray,
    site: int,
    policy: TruncationPolicy = TruncationPolicy(),
    absorb_right: bool = True,
) -> MatrixProductState:
    out = state.copy()
    out.apply_two_site_gate(gate, site, policy, absorb_right)
    return out


def _check_compatible(a: MatrixProductState, b: MatrixProductState) -> None:
    if a.phys_dims != b.phys_dims:
        raise ValueError(f"incompatible states: physical dims {a.phys_dims} vs {b.phys_dims}")


def log_overlap(a: MatrixProductState, b: MatrixProductState) -> complex:
    """Complex logarithm of ``<a|b>``; real part is ``-inf`` for orthogonal states."""
    _check_compatible(a, b)
    env = np.ones((1, 1), dtype=np.complex128)
    log_scale = a.log_norm + b.log_norm
    for ta, tb in zip(a.tensors, b.tensors):
        env = np.tensordot(env, tb, axes=(1, 0))
        env = np.tensordot(ta.conj(), env, axes=((0, 1), (0, 1)))
        m = np.max(np.abs(env))
        if m == 0.0:
            return complex(-math.inf, 0.0)
        env /= m
        log_scale += math.log(m)
    val = env[0, 0]
    return complex(log_scale + math.log(abs(val)), math.atan2(val.imag, val.real))


def overlap(a: MatrixProductState, b: MatrixProductState) -> complex:
    """``<a|b>`` including the stored norms."""
    lo = log_overlap(a, b)
    if lo.real == -math.inf:
        return 0j
    return complex(np.exp(lo))


def _log_norm(a: MatrixProductState) -> float:
    if a.ortho_center is not None:
        return a.log_norm + math.log(np.linalg.norm(a.tensors[a.ortho_center]))
    return 0.5 * log_overlap(a, a).real


def log_fidelity(a: MatrixProductState, b: MatrixProductState) -> float:
    """``ln |<a|b>|^2 / (<a|a><b|b>)``; use this for very small fidelities."""
    return 2.0 * (log_overlap(a, b).real - _log_norm(a) - _log_norm(b))


def fidelity(a: MatrixProductState, b: MatrixProductState) -> float:
    """Normalised fidelity ``|<a|b>|^2 / (<a|a><b|b>)``."""
    lf = log_fidelity(a, b)
    return 0.0 if lf == -math.inf else math.exp(lf)


def two_site_rdm(state: MatrixProductState, site: int) -> NDArray[np.complex128]:
    """Reduced density matrix of sites ``site, site + 1`` (unit trace)."""
    if not 0 <= site < state.n_sites - 1:
        raise IndexError(f"no edge ({site}, {site + 1}) in a chain of {state.n_sites} sites")
    work = state if state.ortho_center == site else canonicalize(state, site)
    return _rdm_at_center(work, site)


def _rdm_at_center(state: MatrixProductState, site: int) -> NDArray[np.complex128]:
    a, b = state.tensors[site], state.tensors[site + 1]
    theta = np.tensordot(a, b, axes=(2, 0))
    l, d1, d2, r = theta.shape
    theta = theta.reshape(l, d1 * d2, r)
    rho = np.tensordot(theta, theta.conj(), axes=((0, 2), (0, 2)))
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def two_site_rdms(state: MatrixProductState, edges: list[int] | None = None) -> dict[int, NDArray]:
    """Reduced density matrices for several edges with one centre sweep."""
    n = state.n_sites
    edges = sorted(set(range(n - 1) if edges is None else edges))
    work = state.copy()
    out = {}
    for e in edges:
        work.canonicalize(e)
        out[e] = _rdm_at_center(work, e)
    return out


def transfer_matrix(bulk_tensor: NDArray) -> NDArray[np.complex128]:
    """``sum_i A^i (x) conj(A^i)`` as a ``(D^2, D^2)`` matrix."""
    a = np.asarray(bulk_tensor, dtype=np.complex128)
    l, d, r = a.shape
    e = np.einsum("aib,cid->acbd", a, a.conj())
    return e.reshape(l * l, r * r)


def correlation_length(bulk_tensor: NDArray, sites_per_tensor: int = 1) -> float:
    """Correlation length from the two leading transfer-matrix eigenvalues.

    ``xi = -sites_per_tensor / ln |lambda_2 / lambda_1|``, in units of the
    elementary sites (a blocked tensor covering two qubits passes 2).
    Returns 0 for a product state and ``inf`` for a degenerate leading
    eigenvalue.
    """
    w = np.sort(np.abs(np.linalg.eigvals(transfer_matrix(bulk_tensor))))[::-1]
    if w[0] == 0.0:
        raise ValueError("transfer matrix vanishes")
    if len(w) < 2:
        return 0.0
    ratio = w[1] / w[0]
    if ratio < 1e-14:
        return 0.0
    if ratio >= 1.0 - 1e-12:
        return math.inf
    return -sites_per_tensor / math.log(ratio)
