"""Frustration-free parent Hamiltonians built from two-site kernels.

Each nearest-neighbour edge contributes the projector onto the kernel of
the state's two-site reduced density matrix, so the generating state has
exactly zero energy and every term has operator norm one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .linalg import KERNEL_REL_TOL, kernel_projector
from .mps import MatrixProductState, two_site_rdms

__all__ = ["LocalTerm", "ParentHamiltonian", "energy", "parent_hamiltonian", "path_hamiltonian"]


@dataclass(frozen=True)
class LocalTerm:
    """Projector acting on sites ``first_site .. first_site + support - 1``."""

    first_site: int
    matrix: NDArray[np.complex128]
    support: int = 2

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(range(self.first_site, self.first_site + self.support))

    def to_json_dict(self) -> dict:
        return {
            "first_site": self.first_site,
            "support": self.support,
            "shape": list(self.matrix.shape),
            "real": self.matrix.real.reshape(-1).tolist(),
            "imag": self.matrix.imag.reshape(-1).tolist(),
        }


@dataclass(frozen=True)
class ParentHamiltonian:
    terms: list[LocalTerm]
    phys_dims: list[int]

    @property
    def n_sites(self) -> int:
        return len(self.phys_dims)

    def to_json_dict(self) -> dict:
        return {"phys_dims": list(self.phys_dims), "terms": [t.to_json_dict() for t in self.terms]}


def parent_hamiltonian(
    state: MatrixProductState,
    rel_tol: float = KERNEL_REL_TOL,
    translation_invariant: bool = False,
) -> ParentHamiltonian:
    """One kernel projector per nearest-neighbour edge of ``state``.

    With ``translation_invariant`` only the two boundary edges and one
    central bulk edge are diagonalised; the bulk projector object is then
    shared by every bulk edge. This is exact for the path states, whose
    bulk two-site supports coincide.
    """
    n = state.n_sites
    if n < 2:
        raise ValueError("a parent Hamiltonian needs at least two sites")
    edges = list(range(n - 1))
    bulk = edges[1:-1]
    if translation_invariant and len(bulk) > 1:
        mid = bulk[len(bulk) // 2]
        rdms = two_site_rdms(state, [0, mid, n - 2])
        p_mid = kernel_projector(rdms[mid], rel_tol)
        mats = {e: p_mid for e in bulk}
        mats[0] = kernel_projector(rdms[0], rel_tol)
        mats[n - 2] = kernel_projector(rdms[n - 2], rel_tol)
    else:
        rdms = two_site_rdms(state, edges)
        mats = {e: kernel_projector(rdms[e], rel_tol) for e in edges}
    terms = [LocalTerm(e, mats[e]) for e in edges]
    return ParentHamiltonian(terms, state.phys_dims)


def path_hamiltonian(family, s: float, n: int, rel_tol: float = KERNEL_REL_TOL) -> ParentHamiltonian:
    """``H(s)`` for ``family`` at system size ``n``.

    The projectors are computed on a short chain (at most three bulk sites)
    and tiled: the boundary edges take the boundary projectors and every
    bulk edge the central one. The supports of the two-site density
    matrices do not depend on the chain length, so this matches
    :func:`parent_hamiltonian` on the full state.
    """
    n_bulk = family.n_bulk(n)
    short_n = family.size_for_bulk(min(n_bulk, 3))
    short = parent_hamiltonian(family.path_state(s, short_n), rel_tol, translation_invariant=True)
    n_edges = n_bulk + 1
    if n_edges == len(short.terms):
        return ParentHamiltonian(short.terms, family.phys_dims(n))
    left, mid, right = short.terms[0].matrix, short.terms[1].matrix, short.terms[-1].matrix
    terms = [LocalTerm(0, left)]
    terms += [LocalTerm(e, mid) for e in range(1, n_edges - 1)]
    terms.append(LocalTerm(n_edges - 1, right))
    return ParentHamiltonian(terms, family.phys_dims(n))


def energy(state: MatrixProductState, h: ParentHamiltonian) -> float:
    """``<psi|H|psi> / <psi|psi>`` as a sum of two-site expectation values."""
    if state.phys_dims != list(h.phys_dims):
        raise ValueError(f"state dims {state.phys_dims} do not match Hamiltonian dims {h.phys_dims}")
    rdms = two_site_rdms(state, [t.first_site for t in h.terms])
    total = 0j
    for t in h.terms:
        total += np.trace(rdms[t.first_site] @ t.matrix)
    if abs(total.imag) > 1e-10 * max(1.0, abs(total.real)):
        raise ValueError(f"energy has imaginary part {total.imag:.3e}")
    return float(total.real)
