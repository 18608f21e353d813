from __future__ import annotations

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from adiabatic_tn.linalg import (
    NotHermitianError,
    eigh,
    hermitian_expm,
    kernel_projector,
    polar_decompose,
    svd,
)
from adiabatic_tn.states import StateFamily

from helpers import random_hermitian, random_unitary

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_svd_identity():
    u, s, vh = svd(np.eye(2))
    np.testing.assert_allclose(s, [1.0, 1.0])
    np.testing.assert_allclose(u @ vh, np.eye(2), atol=1e-14)


def test_svd_diagonal():
    _, s, _ = svd(np.diag([3.0, 0.0]))
    np.testing.assert_allclose(s, [3.0, 0.0], atol=1e-15)


@given(
    rows=st.integers(1, 64),
    cols=st.integers(1, 64),
    seed=st.integers(0, 2**31 - 1),
)
@settings(max_examples=40, deadline=None)
def test_svd_reconstruction_property(rows, cols, seed):
    r = np.random.default_rng(seed)
    m = r.standard_normal((rows, cols)) + 1j * r.standard_normal((rows, cols))
    u, s, vh = svd(m)
    assert np.all(np.diff(s) <= 1e-12) and np.all(s >= 0)
    err = np.linalg.norm(u @ np.diag(s) @ vh - m) / np.linalg.norm(m)
    assert err < 1e-10
    k = len(s)
    np.testing.assert_allclose(u.conj().T @ u, np.eye(k), atol=1e-10)
    np.testing.assert_allclose(vh @ vh.conj().T, np.eye(k), atol=1e-10)


def test_svd_rejects_nonfinite():
    with pytest.raises(ValueError):
        svd(np.array([[np.nan, 0.0], [0.0, 1.0]]))


@pytest.mark.parametrize(
    "m, expected",
    [(np.diag([2.0, 1.0]), [1.0, 2.0]), (PAULI_X, [-1.0, 1.0])],
)
def test_eigh_small(m, expected):
    np.testing.assert_allclose(eigh(m).eigenvalues, expected, atol=1e-14)


def test_eigh_random_residual(rng):
    h = random_hermitian(rng, 8)
    res = eigh(h)
    assert np.all(np.diff(res.eigenvalues) >= 0)
    assert res.residual(h) < 1e-10


def test_eigh_rejects_non_hermitian():
    with pytest.raises(NotHermitianError):
        eigh(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_polar_unitary(rng):
    q = random_unitary(rng, 4)
    iso, psd = polar_decompose(q)
    np.testing.assert_allclose(iso, q, atol=1e-10)
    np.testing.assert_allclose(psd, np.eye(4), atol=1e-10)


def test_polar_psd_input():
    q = np.diag([2.0, 0.0, 1.0])
    iso, psd = polar_decompose(q)
    np.testing.assert_allclose(iso, np.eye(3))
    np.testing.assert_allclose(psd, q)


@pytest.mark.parametrize("shape", [(4, 4), (6, 4), (8, 2)])
def test_polar_properties(rng, shape):
    q = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    iso, psd = polar_decompose(q)
    np.testing.assert_allclose(iso.conj().T @ iso, np.eye(shape[1]), atol=1e-10)
    np.testing.assert_allclose(iso @ psd, q, atol=1e-10)
    np.testing.assert_allclose(psd, scipy.linalg.sqrtm(q.conj().T @ q), atol=1e-10)
    assert np.linalg.eigvalsh(psd).min() > -1e-12


def test_polar_family_operator():
    q = StateFamily.parse("mps-family:g=-0.3").target_operator().matrix
    iso, psd = polar_decompose(q)
    np.testing.assert_allclose(iso.conj().T @ iso, np.eye(4), atol=1e-10)
    assert np.linalg.eigvalsh(psd).min() >= -1e-12
    np.testing.assert_allclose(iso @ psd, q, atol=1e-10)


def test_polar_rejects_wide():
    with pytest.raises(ValueError):
        polar_decompose(np.ones((2, 3)))


def test_kernel_projector_diagonal():
    p = kernel_projector(np.diag([0.5, 0.5, 0.0, 0.0]))
    np.testing.assert_allclose(p, np.diag([0.0, 0.0, 1.0, 1.0]), atol=1e-14)


def test_kernel_projector_full_rank(rng):
    a = rng.standard_normal((4, 4))
    rho = a @ a.T + np.eye(4)
    np.testing.assert_allclose(kernel_projector(rho / np.trace(rho)), 0.0, atol=1e-14)


def test_kernel_projector_zero_matrix():
    np.testing.assert_allclose(kernel_projector(np.zeros((3, 3))), np.eye(3))


def test_kernel_projector_properties(rng):
    v = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
    rho = v @ v.conj().T
    p = kernel_projector(rho)
    np.testing.assert_allclose(p @ p, p, atol=1e-10)
    np.testing.assert_allclose(p @ rho, rho @ p, atol=1e-10)
    assert np.linalg.matrix_rank(p) == 4
    assert np.linalg.norm(p, 2) == pytest.approx(1.0, abs=1e-12)


def test_kernel_projector_rejects_negative():
    with pytest.raises(ValueError):
        kernel_projector(np.diag([1.0, -0.5]))


def test_hermitian_expm_zero():
    np.testing.assert_allclose(hermitian_expm(np.zeros((3, 3)), 0.7), np.eye(3))


def test_hermitian_expm_pi():
    np.testing.assert_allclose(hermitian_expm(np.diag([np.pi]), 1.0), [[-1.0]], atol=1e-14)


def test_hermitian_expm_pauli_x():
    np.testing.assert_allclose(hermitian_expm(PAULI_X, np.pi / 2), -1j * PAULI_X, atol=1e-14)


def test_hermitian_expm_matches_scipy(rng):
    h = random_hermitian(rng, 8)
    g = hermitian_expm(h, 0.3)
    np.testing.assert_allclose(g, scipy.linalg.expm(-0.3j * h), atol=1e-12)
    np.testing.assert_allclose(g.conj().T @ g, np.eye(8), atol=1e-10)
