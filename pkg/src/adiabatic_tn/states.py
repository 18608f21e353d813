"""Concrete state families and their site operators.

* ``mps-family:g=<g>`` -- the D = 2 family interpolating between the
  cluster state (g = -1) and the GHZ state (g = 0), in blocked form with
  two qubits per site (d = 4).
* ``aklt-1d`` -- spin-1 AKLT chain with the two virtual qubits of each
  site promoted to physical ones.
* ``aklt-2d-hex`` -- the spin-3/2 site projector of the hexagonal AKLT
  state (construction only; no 2D evolution is provided).

A site operator ``Q`` is stored as a ``d x D**n`` matrix whose column index
runs over the virtual qudits in row-major order (first virtual leg most
significant).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from itertools import product

import numpy as np
from numpy.typing import NDArray

from .linalg import eigh, polar_decompose
from .mps import MatrixProductState, correlation_length, from_site_operator_chain

__all__ = [
    "PathContractError",
    "SiteOperator",
    "StateFamily",
    "aklt1d_site_operator",
    "aklt2d_hex_site_operator",
    "mps_family_tensors",
    "pair_product_state",
    "path_operator",
    "psd_normal_form",
    "singlet_matrix",
    "site_operator_from_tensors",
    "spin1_basis",
    "spin32_basis",
    "tensors_from_site_operator",
]

PSD_TOL = 1e-12


class PathContractError(ValueError):
    """Site operator is unsuitable for the interpolation path."""


@dataclass(frozen=True)
class SiteOperator:
    """Dense map from ``valence`` virtual qudits of dimension ``bond_dim`` to a physical site."""

    matrix: NDArray[np.complex128]
    bond_dim: int
    valence: int
    psd_certified: bool = False

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=np.complex128)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[1] != self.bond_dim**self.valence:
            raise ValueError(
                f"matrix shape {m.shape} does not match {self.valence} virtual legs of dimension {self.bond_dim}"
            )
        if self.psd_certified and not is_psd(m):
            raise ValueError("operator marked PSD but it is not Hermitian positive semidefinite")

    @property
    def phys_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_square(self) -> bool:
        return self.matrix.shape[0] == self.matrix.shape[1]

    @classmethod
    def certify(cls, matrix: NDArray, bond_dim: int, valence: int) -> SiteOperator:
        """Build an operator flagged PSD, checking that it is."""
        return cls(matrix, bond_dim, valence, psd_certified=True)


def is_psd(m: NDArray, tol: float = PSD_TOL) -> bool:
    m = np.asarray(m)
    if m.shape[0] != m.shape[1]:
        return False
    if np.max(np.abs(m - m.conj().T)) > 1e-10 * max(1.0, np.max(np.abs(m))):
        return False
    return bool(eigh(m).eigenvalues[0] >= -tol)


# -- MPS family ---------------------------------------------------------------


def mps_family_tensors(g: float) -> NDArray[np.float64]:
    """The four 2 x 2 matrices ``A^0 .. A^3`` of the family, stacked as ``(4, 2, 2)``."""
    if not -1.0 <= g <= 0.0:
        raise ValueError(f"g must lie in [-1, 0], got {g}")
    return np.array(
        [
            [[0.0, 0.0], [1.0, 1.0]],
            [[0.0, 0.0], [1.0, g]],
            [[g, g], [0.0, 0.0]],
            [[1.0, g], [0.0, 0.0]],
        ]
    )


def site_operator_from_tensors(tensors: NDArray) -> SiteOperator:
    """``Q = sum_{i, a, b} A^i_{ab} |i><a b|`` from tensors of shape ``(d, D, D)``."""
    t = np.asarray(tensors)
    if t.ndim != 3 or t.shape[1] != t.shape[2]:
        raise ValueError(f"expected tensors of shape (d, D, D), got {t.shape}")
    d, D, _ = t.shape
    return SiteOperator(t.reshape(d, D * D), bond_dim=D, valence=2)


def tensors_from_site_operator(q: SiteOperator) -> NDArray[np.complex128]:
    if q.valence != 2:
        raise ValueError("only two-leg (chain) site operators map to MPS tensors")
    return q.matrix.reshape(q.phys_dim, q.bond_dim, q.bond_dim)


def psd_normal_form(q: SiteOperator) -> tuple[NDArray, SiteOperator]:
    """Split ``Q = iso @ Q'`` with ``Q'`` positive semidefinite.

    Preparing the state with ``Q'`` and applying ``iso`` on every site
    afterwards gives the state built from ``Q``.
    """
    if q.phys_dim < q.matrix.shape[1]:
        raise PathContractError(
            f"physical dimension {q.phys_dim} below virtual dimension {q.matrix.shape[1]}; block sites first"
        )
    iso, p = polar_decompose(q.matrix)
    return iso, SiteOperator.certify(p, q.bond_dim, q.valence)


# -- AKLT -------------------------------------------------------------------


def singlet_matrix() -> NDArray[np.float64]:
    return np.array([[0.0, -1.0], [1.0, 0.0]])


def _symmetric_projector(n_qubits: int) -> NDArray[np.float64]:
    """Projector onto the symmetric subspace of ``n_qubits`` qubits."""
    dim = 2**n_qubits
    p = np.zeros((dim, dim))
    by_weight: dict[int, list[int]] = {}
    for bits in product((0, 1), repeat=n_qubits):
        idx = int("".join(map(str, bits)), 2)
        by_weight.setdefault(sum(bits), []).append(idx)
    for members in by_weight.values():
        v = np.zeros(dim)
        v[members] = 1.0
        p += np.outer(v, v) / len(members)
    return p


def aklt1d_site_operator() -> SiteOperator:
    """Spin-1 projector on two promoted virtual qubits (rank 3, d = 4)."""
    return SiteOperator.certify(_symmetric_projector(2), bond_dim=2, valence=2)


def aklt2d_hex_site_operator() -> SiteOperator:
    """Spin-3/2 projector on three promoted virtual qubits (rank 4, d = 8)."""
    return SiteOperator.certify(_symmetric_projector(3), bond_dim=2, valence=3)


def spin1_basis() -> NDArray[np.float64]:
    """Columns ``|S_z = 1>, |0>, |-1>`` in the two-qubit basis."""
    r = 1.0 / math.sqrt(2.0)
    return np.array([[1, 0, 0, 0], [0, r, r, 0], [0, 0, 0, 1]], dtype=float).T


def spin32_basis() -> NDArray[np.float64]:
    """Columns ``|S_z = 3/2>, |1/2>, |-1/2>, |-3/2>`` in the three-qubit basis."""
    r = 1.0 / math.sqrt(3.0)
    b = np.zeros((8, 4))
    b[0b000, 0] = 1.0
    b[[0b001, 0b010, 0b100], 1] = r
    b[[0b011, 0b101, 0b110], 2] = r
    b[0b111, 3] = 1.0
    return b


# -- path ---------------------------------------------------------------------


def path_operator(q: SiteOperator, s: float) -> SiteOperator:
    """``Q(s) = s Q + (1 - s) 1`` for a PSD-certified square operator."""
    if not q.psd_certified:
        raise PathContractError("the interpolation path requires a PSD-certified site operator")
    if not q.is_square:
        raise PathContractError(f"site operator of shape {q.matrix.shape} is not square")
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    m = s * q.matrix + (1.0 - s) * np.eye(q.phys_dim)
    return SiteOperator(m, q.bond_dim, q.valence, psd_certified=True)


def _bond_matrix(bond_kind: str) -> NDArray:
    if bond_kind == "plus-pair":
        return np.eye(2)
    if bond_kind == "singlet":
        # (1 (x) Y)|Phi+> = sum_ab Y[b, a] |a b>
        return singlet_matrix().T
    raise ValueError(f"unknown bond kind {bond_kind!r}")


def pair_product_state(n_pairs: int, bond_kind: str = "plus-pair", blocked: bool = False) -> MatrixProductState:
    """Product of two-qubit entangled pairs along a chain.

    With ``blocked=False`` the chain holds ``2 * n_pairs`` qubit sites. With
    ``blocked=True`` the qubits are grouped the way the path states are: one
    boundary qubit, ``n_pairs - 1`` sites of two qubits (each holding the
    right half of one pair and the left half of the next), and a final
    boundary qubit.
    """
    if n_pairs < 1:
        raise ValueError(f"need at least one pair, got {n_pairs}")
    b = _bond_matrix(bond_kind).astype(np.complex128) / math.sqrt(2.0)
    if not blocked:
        tensors = []
        for _ in range(n_pairs):
            tensors.append(np.eye(2, dtype=np.complex128).reshape(1, 2, 2))
            tensors.append(b.reshape(2, 2, 1))
        return MatrixProductState(tensors).canonicalize(0).normalize()
    if n_pairs < 2:
        raise ValueError("the blocked layout needs at least two pairs")
    eye = np.eye(4, dtype=np.complex128)
    state = from_site_operator_chain(eye, 1.0, n_pairs - 1, bond=_bond_matrix(bond_kind))
    return state


_FAMILY_RE = re.compile(r"^mps-family:g=(?P<g>[-+0-9.eE]+)$")


@dataclass(frozen=True)
class StateFamily:
    """A target state family selectable by name.

    ``n`` in the methods below is the user-facing system size: the number
    of qubits for ``mps-family`` (two per blocked site, so ``n`` must be
    even) and the number of spin-1 sites for ``aklt-1d``.
    """

    tag: str
    g: float | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.tag == "mps-family":
            if self.g is None or not -1.0 <= self.g <= 0.0:
                raise ValueError(f"mps-family needs g in [-1, 0], got {self.g}")
        elif self.tag in ("aklt-1d", "aklt-2d-hex"):
            if self.g is not None:
                raise ValueError(f"{self.tag} takes no parameter")
        else:
            raise ValueError(f"unknown state family {self.tag!r}")

    @classmethod
    def parse(cls, spec: str) -> StateFamily:
        spec = spec.strip()
        m = _FAMILY_RE.match(spec)
        if m:
            return cls("mps-family", float(m.group("g")))
        if spec in ("aklt-1d", "aklt-2d-hex"):
            return cls(spec)
        raise ValueError(
            f"cannot parse family {spec!r}; expected 'mps-family:g=<value>', 'aklt-1d' or 'aklt-2d-hex'"
        )

    def __str__(self) -> str:
        return f"mps-family:g={self.g!r}" if self.tag == "mps-family" else self.tag

    @property
    def bond_kind(self) -> str:
        return "singlet" if self.tag.startswith("aklt") else "plus-pair"

    @property
    def qubits_per_site(self) -> int:
        return 3 if self.tag == "aklt-2d-hex" else 2

    @property
    def sites_per_tensor(self) -> int:
        """User-facing sites carried by one bulk tensor."""
        return 2 if self.tag == "mps-family" else 1

    def correlation_length(self, s: float = 1.0) -> float:
        """Correlation length of ``|psi(s)>`` in user-facing sites."""
        return correlation_length(self.bulk_tensor(s), self.sites_per_tensor)

    def target_operator(self) -> SiteOperator:
        """The site operator that defines the target state (possibly not PSD)."""
        if self.tag == "mps-family":
            return site_operator_from_tensors(mps_family_tensors(self.g))
        if self.tag == "aklt-1d":
            return aklt1d_site_operator()
        return aklt2d_hex_site_operator()

    def path_site_operator(self) -> SiteOperator:
        """PSD operator used along the path (isometry of the polar split dropped)."""
        if "q" not in self._cache:
            q = self.target_operator()
            self._cache["q"] = q if q.psd_certified else psd_normal_form(q)[1]
        return self._cache["q"]

    def site_isometry(self) -> NDArray:
        """Isometry applied after the path to recover the original operator."""
        q = self.target_operator()
        return np.eye(q.phys_dim) if q.psd_certified else psd_normal_form(q)[0]

    def validate_for_path(self) -> None:
        """Reject families whose path is not covered by the 1D machinery."""
        if self.tag == "aklt-2d-hex":
            raise PathContractError("aklt-2d-hex is available for construction only; no 1D path")
        if self.tag == "mps-family" and self.g == 0.0:
            raise PathContractError("g = 0 (GHZ) is not the unique ground state of a local parent Hamiltonian")

    def n_bulk(self, n: int) -> int:
        """Number of bulk chain sites for system size ``n``."""
        if self.tag == "mps-family":
            if n % 2 or n < 4:
                raise ValueError(f"mps-family size counts qubits and must be even and >= 4, got {n}")
            return n // 2
        if n < 2:
            raise ValueError(f"need at least 2 sites, got {n}")
        return n

    def size_for_bulk(self, n_bulk: int) -> int:
        """Inverse of :meth:`n_bulk`."""
        return 2 * n_bulk if self.tag == "mps-family" else n_bulk

    def phys_dims(self, n: int) -> list[int]:
        q = self.path_site_operator()
        return [q.bond_dim] + [q.phys_dim] * self.n_bulk(n) + [q.bond_dim]

    def path_state(self, s: float, n: int) -> MatrixProductState:
        """Normalised instantaneous ground state ``|psi(s)>`` for size ``n``."""
        self.validate_for_path()
        if not 0.0 <= s <= 1.0:
            raise ValueError(f"s must lie in [0, 1], got {s}")
        q = self.path_site_operator()
        return from_site_operator_chain(q, s, self.n_bulk(n), bond=_bond_matrix(self.bond_kind))

    def bulk_tensor(self, s: float = 1.0) -> NDArray:
        """Bulk MPS tensor ``(left, phys, right)`` of ``|psi(s)>`` including the bond matrix."""
        q = path_operator(self.path_site_operator(), s)
        D = q.bond_dim
        a = q.matrix.reshape(q.phys_dim, D, D).transpose(1, 0, 2)
        return np.tensordot(a, _bond_matrix(self.bond_kind), axes=(2, 0))
