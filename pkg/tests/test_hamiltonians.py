import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nvzeno.hamiltonians import (
    SystemParams, ZenoRegimeWarning, build_effective, build_full, build_zeno_reduced, cavity_coupling,
    eliminate_numerically, embed_effective, frequency_audit, intermediate_picture, laser_drive, zeno_basis,
    zeno_eigensystem,
)
from nvzeno.qcore import NVLevel, basis_index, basis_state, dag, is_hermitian

G, F, E, I = NVLevel.G, NVLevel.F, NVLevel.E, NVLevel.I

params_st = st.builds(
    SystemParams,
    g1=st.floats(0.5, 2.0), g2=st.floats(0.5, 2.0),
    omega1=st.floats(0.0, 0.2), omega2=st.floats(0.0, 0.2),
    phi1=st.floats(-np.pi, np.pi), phi2=st.floats(-np.pi, np.pi),
    delta=st.floats(-1.0, 1.0), kappa=st.floats(0, 0.3), gamma=st.floats(0, 0.03),
    n_max=st.integers(1, 3),
)


@given(params_st)
def test_full_hamiltonian_hermitian_and_sized(p):
    H = build_full(p)
    assert H.shape == (p.space.dim, p.space.dim)
    assert is_hermitian(H)


@given(params_st)
def test_excitation_number_conserved(p):
    # N = n_photon + #e + #f counts excitations; the drive swaps e <-> f and the
    # coupling swaps e <-> photon, so N is conserved
    space = p.space
    N = np.zeros(space.dim)
    for a in NVLevel:
        for b in NVLevel:
            for n in range(space.n_fock):
                N[basis_index(a, b, n, space)] = n + (a in (E, F)) + (b in (E, F))
    H = build_full(p)
    assert np.allclose(N[:, None] * H - H * N[None, :], 0)


def test_ancilla_level_is_dark():
    p = SystemParams.symmetric()
    H = build_full(p)
    ii = basis_state(I, I, 0, p.space)
    assert np.allclose(H @ ii, 0)


def test_negative_rate_rejected():
    with pytest.raises(ValueError):
        SystemParams(kappa=-0.1)
    with pytest.raises(ValueError):
        SystemParams(delta=np.inf)


def test_with_sets_both_sites():
    p = SystemParams().with_(omega=0.02, g=1.5)
    assert (p.omega1, p.omega2, p.g1, p.g2) == (0.02, 0.02, 1.5, 1.5)


def test_flip_rate_and_transfer_time(op_point):
    assert np.isclose(op_point.flip_rate, 0.005)
    assert np.isclose(op_point.transfer_time, np.pi * 0.5 / 0.05 ** 2)


def test_zeno_eigenvectors_and_values(op_point):
    zs = zeno_eigensystem(op_point)
    V = cavity_coupling(op_point)
    for psi, lam in zip(zs.vectors, zs.energies):
        assert np.allclose(V @ psi, lam * psi, atol=1e-14)
    assert np.allclose(sorted(zs.energies), [-np.sqrt(2), 0, np.sqrt(2)])
    B = np.column_stack(zs.vectors)
    assert np.allclose(dag(B) @ B, np.eye(3))


@given(st.floats(0.3, 3.0))
def test_eigenvalues_scale_with_g(g):
    p = SystemParams.symmetric(g=g)
    zs = zeno_eigensystem(p)
    assert np.isclose(zs.lambda3, np.sqrt(2) * g)


def test_dark_state_couples_with_full_rabi_frequency(op_point):
    zs = zeno_eigensystem(op_point)
    gf0 = basis_state(G, F, 0, op_point.space)
    # <psi1|H_laser|gf0> has magnitude Omega / sqrt(2)
    assert np.isclose(abs(np.vdot(zs.psi1, laser_drive(op_point) @ gf0)), 0.05 / np.sqrt(2))


def test_asymmetric_coupling_rejected_by_reductions():
    p = SystemParams(g1=1.0, g2=1.2)
    with pytest.raises(ValueError):
        zeno_eigensystem(p)
    q = SystemParams(omega1=0.05, omega2=0.03)
    build_full(q)
    with pytest.raises(ValueError):
        build_zeno_reduced(q)


def test_intermediate_picture_is_hermitian(op_point):
    Hi = intermediate_picture(op_point, 3.7)
    assert is_hermitian(Hi, 1e-12)


def test_frequency_audit_classifies_terms(op_point):
    terms = {t.name: t for t in frequency_audit(op_point)}
    for name in ("psi1-gf0", "psi1-fg0", "psi1-psi1"):
        assert terms[name].frequency < 1e-9
        assert not terms[name].discarded
    for name in ("psi2-gf0", "psi3-gf0", "psi2-fg0", "psi3-fg0"):
        assert np.isclose(terms[name].frequency, np.sqrt(2), rtol=0.01)
        assert terms[name].discarded
    assert np.isclose(terms["psi2-psi3"].frequency, 2 * np.sqrt(2), rtol=0.01)


def test_zeno_reduced_structure(op_point):
    H3 = build_zeno_reduced(op_point)
    assert is_hermitian(H3)
    assert np.isclose(H3[2, 2].real, op_point.delta)
    assert np.isclose(abs(H3[0, 2]), 0.05 / np.sqrt(2))
    assert np.isclose(H3[0, 1], 0)
    assert zeno_basis(op_point).shape == (32, 3)


def test_effective_entries(op_point):
    H2 = build_effective(op_point.with_(phi1=0.4, phi2=-0.2))
    assert np.isclose(H2[0, 1], 0.05 ** 2 / (2 * 0.5) * np.exp(0.6j))
    assert np.isclose(H2[0, 0], -0.05 ** 2 / 1.0)
    assert is_hermitian(H2)


def test_effective_rejects_zero_detuning():
    with pytest.raises(ValueError):
        build_effective(SystemParams(delta=0.0))


def test_embedding_freezes_other_states(op_point):
    H = embed_effective(op_point)
    idx = [basis_index(G, F, 0, op_point.space), basis_index(F, G, 0, op_point.space)]
    mask = np.ones_like(H, bool)
    mask[np.ix_(idx, idx)] = False
    assert np.all(H[mask] == 0)


def test_zeno_warning_outside_regime():
    with pytest.warns(ZenoRegimeWarning):
        build_effective(SystemParams.symmetric(omega=0.3, delta=0.5))
    with warnings.catch_warnings():
        warnings.simplefilter("error", ZenoRegimeWarning)
        build_effective(SystemParams.symmetric(omega=0.01, delta=0.2))


@given(st.floats(0.005, 0.06), st.floats(0.2, 0.6))
def test_effective_matches_exact_elimination(omega, delta):
    p = SystemParams.symmetric(omega=omega, delta=delta)
    dev = np.max(np.abs(build_effective(p) - eliminate_numerically(build_zeno_reduced(p), keep=2)))
    assert dev <= 5 * omega ** 3 / delta ** 2


def test_elimination_of_block_diagonal_is_identity():
    H = np.diag([0.1, -0.2, 3.0]).astype(complex)
    assert np.allclose(eliminate_numerically(H, 2), np.diag([0.1, -0.2]))
