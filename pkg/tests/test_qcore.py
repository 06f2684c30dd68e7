import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from nvzeno.qcore import (
    NVLevel, Propagator, Space, basis_index, basis_state, check_density, check_state, dag, is_hermitian,
    lift_nv_operator, partial_trace_to_qubits, photon_annihilator, projector, state_to_qubits, unindex,
)

from conftest import random_density, random_state

levels = st.sampled_from(list(NVLevel))


def test_default_space_dimension():
    assert Space().dim == 32
    assert Space(2).dim == 48
    assert Space.from_dim(48) == Space(2)


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_space_rejects_bad_cutoff(bad):
    with pytest.raises(ValueError):
        Space(bad)


def test_from_dim_rejects_non_multiple():
    with pytest.raises(ValueError):
        Space.from_dim(33)


@given(levels, levels, st.integers(0, 2))
def test_index_roundtrip(a, b, n):
    space = Space(2)
    assert unindex(basis_index(a, b, n, space), space) == (a, b, n)


def test_index_layout_matches_formula():
    space = Space(1)
    # (code1 * 4 + code2) * (n_max + 1) + n with g=0, f=1, e=2, i=3
    assert basis_index(NVLevel.F, NVLevel.G, 0, space) == 8
    assert basis_index(NVLevel.G, NVLevel.F, 1, space) == 3
    assert basis_index(NVLevel.I, NVLevel.I, 1, space) == 31


def test_basis_index_rejects_photon_overflow():
    with pytest.raises(ValueError):
        basis_index(NVLevel.G, NVLevel.G, 2, Space(1))


def test_lifted_operator_acts_on_one_site():
    space = Space(1)
    op = lift_nv_operator(2, NVLevel.E, NVLevel.F, space)
    out = op @ basis_state(NVLevel.I, NVLevel.F, 1, space)
    assert np.array_equal(out, basis_state(NVLevel.I, NVLevel.E, 1, space))
    assert not op.flags.writeable


def test_annihilator_matrix_elements():
    space = Space(2)
    a = photon_annihilator(space)
    psi = basis_state(NVLevel.G, NVLevel.F, 2, space)
    assert np.allclose(a @ psi, np.sqrt(2) * basis_state(NVLevel.G, NVLevel.F, 1, space))
    assert np.allclose(a @ basis_state(NVLevel.G, NVLevel.F, 0, space), 0)


def test_number_operator_commutator():
    space = Space(3)
    a = photon_annihilator(space)
    comm = a @ dag(a) - dag(a) @ a
    # [a, a^dag] = 1 except on the truncated top level
    top = [basis_index(x, y, 3, space) for x in NVLevel for y in NVLevel]
    diag = np.real(np.diag(comm))
    mask = np.ones(space.dim, bool)
    mask[top] = False
    assert np.allclose(diag[mask], 1.0)


@given(st.integers(0, 2 ** 32 - 1), st.floats(0.0, 50.0))
def test_propagator_matches_expm_and_keeps_norm(seed, t):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
    H = 0.05 * (A + dag(A))
    psi = random_state(rng, 32)
    out = Propagator(H).apply(psi, t)
    assert np.allclose(out, expm(-1j * H * t) @ psi, atol=1e-10)
    assert abs(np.linalg.norm(out) - 1) < 1e-9


def test_propagator_vectorized_times():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(32, 32))
    H = A + A.T
    psi = random_state(rng, 32)
    prop = Propagator(H)
    ts = np.array([0.0, 0.3, 1.7])
    rows = prop.apply(psi, ts)
    assert rows.shape == (3, 32)
    for t, row in zip(ts, rows):
        assert np.allclose(row, prop.unitary(t) @ psi)


def test_propagator_rejects_non_hermitian():
    H = np.zeros((32, 32), complex)
    H[0, 1] = 1.0
    with pytest.raises(np.linalg.LinAlgError):
        Propagator(H)


def test_check_state_and_density():
    rng = np.random.default_rng(2)
    psi = random_state(rng, 32)
    check_state(psi)
    with pytest.raises(ValueError):
        check_state(2 * psi)
    rho = random_density(rng, 32)
    check_density(rho)
    with pytest.raises(ValueError):
        check_density(rho + 0.1 * np.eye(32))
    bad = rho.copy()
    bad[0, 1] += 0.1
    with pytest.raises(ValueError):
        check_density(bad)
    assert is_hermitian(projector(psi))


def test_partial_trace_keeps_qubit_block_and_reports_leakage():
    space = Space(1)
    psi = (basis_state(NVLevel.G, NVLevel.F, 1, space) + basis_state(NVLevel.E, NVLevel.G, 0, space)) / np.sqrt(2)
    m = state_to_qubits(psi)
    assert np.isclose(np.trace(m).real, 0.5)
    assert np.isclose(m[1, 1].real, 0.5)


@given(st.integers(0, 2 ** 32 - 1))
def test_partial_trace_is_psd_and_trace_bounded(seed):
    rho = random_density(np.random.default_rng(seed), 32)
    m = partial_trace_to_qubits(rho)
    assert is_hermitian(m, 1e-12)
    assert np.linalg.eigvalsh(m)[0] > -1e-12
    assert np.trace(m).real <= 1 + 1e-12
