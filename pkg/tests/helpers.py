"""Dense reference helpers shared by the tests."""

from __future__ import annotations

import math

import numpy as np


def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng: np.random.Generator, n: int) -> np.ndarray:
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (z + z.conj().T)


def random_state(rng: np.random.Generator, dims: list[int]) -> np.ndarray:
    v = rng.standard_normal(math.prod(dims)) + 1j * rng.standard_normal(math.prod(dims))
    return v / np.linalg.norm(v)


def apply_dense(psi: np.ndarray, gate: np.ndarray, site: int, dims: list[int]) -> np.ndarray:
    """Apply a two-site gate to a dense vector, first site most significant."""
    left = math.prod(dims[:site])
    loc = dims[site] * dims[site + 1]
    v = psi.reshape(left, loc, -1)
    return np.einsum("ab,xby->xay", gate, v).reshape(-1)


def dense_fidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real))
