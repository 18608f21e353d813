from __future__ import annotations

import math

import numpy as np
import pytest

from adiabatic_tn import ed
from adiabatic_tn.ed import (
    ResourceLimitError,
    dense_hamiltonian,
    ed_evolve,
    gap_sweep,
    ground_and_gap,
)
from adiabatic_tn.hamiltonian import LocalTerm, path_hamiltonian
from adiabatic_tn.linalg import kernel_projector
from adiabatic_tn.mps import TruncationPolicy
from adiabatic_tn.states import StateFamily, mps_family_tensors, psd_normal_form, site_operator_from_tensors
from adiabatic_tn.tebd import TebdConfig, run_adiabatic

G03 = StateFamily.parse("mps-family:g=-0.3")


def embed(terms, dims):
    total = np.zeros((math.prod(dims),) * 2, dtype=complex)
    for t in terms:
        i = t.first_site
        total += np.kron(np.kron(np.eye(math.prod(dims[:i])), t.matrix), np.eye(math.prod(dims[i + 2 :])))
    return total


def test_single_term_full_chain(rng):
    m = rng.standard_normal((6, 6))
    m = m + m.T
    h = dense_hamiltonian([LocalTerm(0, m)], [2, 3])
    np.testing.assert_allclose(h.to_dense(), m)
    assert (h.n_sites, h.total_dim) == (2, 6)


def test_commuting_diagonal_terms():
    a, b = np.array([0.0, 1, 2, 3]), np.array([0.0, 10, 20, 30])
    h = dense_hamiltonian([LocalTerm(0, np.diag(a)), LocalTerm(1, np.diag(b))], [2, 2, 2])
    expected = sorted(a[x >> 1] + b[x & 3] for x in range(8))
    np.testing.assert_allclose(np.linalg.eigvalsh(h.to_dense()), expected, atol=1e-12)


def test_embedding_matches_kron():
    h = path_hamiltonian(G03, 0.4, 8)
    np.testing.assert_allclose(dense_hamiltonian(h.terms, h.phys_dims).to_dense(), embed(h.terms, h.phys_dims), atol=1e-14)


def test_hermitian_and_psd():
    h = path_hamiltonian(StateFamily.parse("aklt-1d"), 0.7, 4)
    m = dense_hamiltonian(h.terms, h.phys_dims).to_dense()
    np.testing.assert_allclose(m, m.conj().T, atol=1e-12)
    assert np.linalg.eigvalsh(m).min() > -1e-12


def test_dimension_guard():
    h = path_hamiltonian(G03, 0.4, 8)
    with pytest.raises(ResourceLimitError):
        dense_hamiltonian(h.terms, h.phys_dims, max_dim=100)
    with pytest.raises(ResourceLimitError):
        gap_sweep(G03, [0.5], 22)


def test_term_shape_checked():
    with pytest.raises(ValueError):
        dense_hamiltonian([LocalTerm(0, np.eye(3))], [2, 2])
    with pytest.raises(ValueError):
        dense_hamiltonian([LocalTerm(1, np.eye(4))], [2, 2])


def test_target_energy_dense_contraction():
    # target built directly from the family tensors and the polar split, no MPS code path
    q = site_operator_from_tensors(mps_family_tensors(-0.3))
    _, p = psd_normal_form(q)
    phi = np.eye(2).reshape(-1)
    v = phi
    for _ in range(2):
        v = np.kron(v, phi)
    dims = [2, 4, 4, 2]
    v = v.reshape(dims)
    for k in (1, 2):
        v = np.moveaxis(np.tensordot(p.matrix, v, axes=(1, k)), 0, k)
    v = v.reshape(-1) / np.linalg.norm(v)
    h = path_hamiltonian(G03, 1.0, 4)
    m = dense_hamiltonian(h.terms, h.phys_dims).matrix
    assert abs(np.vdot(v, m @ v)) < 1e-10


def test_gap_of_simple_projector():
    p = np.eye(4)
    p[0, 0] = 0.0
    e0, gap, degenerate = ground_and_gap(dense_hamiltonian([LocalTerm(0, p)], [2, 2]))
    assert e0 == pytest.approx(0.0, abs=1e-14) and gap == pytest.approx(1.0) and not degenerate


def test_degenerate_flag():
    e0, gap, degenerate = ground_and_gap(dense_hamiltonian([LocalTerm(0, np.zeros((4, 4)))], [2, 2]))
    assert degenerate and gap == pytest.approx(0.0, abs=1e-14)


def test_aklt_n6_unique():
    h = path_hamiltonian(StateFamily.parse("aklt-1d"), 1.0, 6)
    e0, gap, degenerate = ground_and_gap(dense_hamiltonian(h.terms, h.phys_dims))
    assert e0 < 1e-10 and gap > 1e-8 and not degenerate


def test_iterative_matches_dense(monkeypatch):
    h = path_hamiltonian(G03, 0.8, 8)
    hm = dense_hamiltonian(h.terms, h.phys_dims)
    dense = ground_and_gap(hm)
    monkeypatch.setattr(ed, "DENSE_EIG_MAX_DIM", 16)
    iterative = ground_and_gap(hm)
    assert iterative[0] == pytest.approx(dense[0], abs=1e-10)
    assert iterative[1] == pytest.approx(dense[1], abs=1e-9)


def test_pair_chain_gap_independent():
    # parent of the s = 0 pair chain from a dense partial trace, at N = 4
    fam = G03
    dims = fam.phys_dims(4)
    psi = fam.path_state(0.0, 4).to_dense()
    terms = []
    for i in range(len(dims) - 1):
        t = psi.reshape(math.prod(dims[:i]), dims[i] * dims[i + 1], -1)
        rho = np.einsum("xay,xby->ab", t, t.conj())
        terms.append(LocalTerm(i, kernel_projector(rho)))
    w = np.linalg.eigvalsh(embed(terms, dims))
    assert gap_sweep(fam, [0.0], 4).gaps[0] == pytest.approx(w[1] - w[0], abs=1e-10)


def test_gap_profile_fields():
    prof = gap_sweep(G03, [0.0, 0.5, 1.0], 4)
    assert prof.delta_min == min(prof.gaps)
    assert prof.argmin_s in prof.s_grid
    assert all(abs(e) < 1e-10 for e in prof.ground_energies)


def test_ed_methods_agree():
    a = ed_evolve(G03, 4, 2.0, 0.05, method="eigh", keep_state=True)
    b = ed_evolve(G03, 4, 2.0, 0.05, method="krylov", keep_state=True)
    np.testing.assert_allclose(a.final_state, b.final_state, atol=1e-10)
    assert a.final_fidelity == pytest.approx(b.final_fidelity, abs=1e-12)


def test_ed_trotter_mode_matches_tebd():
    tr = run_adiabatic(TebdConfig(G03, 8, 4.0, 0.04, truncation=TruncationPolicy(0.0, 10_000), sample_stride=10))
    e = ed_evolve(G03, 8, 4.0, 0.04, method="trotter", sample_stride=10)
    assert [s.step for s in e.samples] == [s.step for s in tr.samples]
    for a, b in zip(tr.samples, e.samples):
        assert a.fidelity == pytest.approx(b.fidelity, abs=1e-12)


def test_ed_step_halving():
    a = ed_evolve(G03, 8, 8.0, 0.02, keep_state=True)
    b = ed_evolve(G03, 8, 8.0, 0.01, keep_state=True)
    assert 1.0 - abs(np.vdot(a.final_state, b.final_state)) ** 2 < 1e-8


def test_ed_validation():
    with pytest.raises(ValueError):
        ed_evolve(G03, 4, 1.0, 2.0)
    with pytest.raises(ValueError):
        ed_evolve(G03, 4, 1.0, 0.1, method="magic")
