"""Composite Hilbert space for two four-level NV centers and one cavity mode.

Basis ordering is fixed: the state |nv1, nv2, n> sits at index

    (code(nv1) * 4 + code(nv2)) * (n_max + 1) + n

States and operators are plain complex numpy arrays; their dimension
identifies the :class:`Space` they belong to.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

N_LEVELS = 4


class NVLevel(enum.IntEnum):
    G = 0
    F = 1
    E = 2
    I = 3  # noqa: E741


QUBIT_LEVELS = (NVLevel.G, NVLevel.F)


@dataclass(frozen=True)
class Space:
    n_max: int = 1

    def __post_init__(self):
        if int(self.n_max) != self.n_max or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def n_fock(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        return N_LEVELS * N_LEVELS * self.n_fock

    @classmethod
    def from_dim(cls, dim: int) -> "Space":
        n_fock, rem = divmod(dim, N_LEVELS * N_LEVELS)
        if rem or n_fock < 2:
            raise ValueError(f"dimension {dim} is not 16*(n_max+1) for n_max >= 1")
        return cls(n_fock - 1)


def basis_index(nv1, nv2, n: int, space: Space) -> int:
    if not 0 <= n <= space.n_max:
        raise ValueError(f"photon number {n} outside [0, {space.n_max}]")
    return (int(NVLevel(nv1)) * N_LEVELS + int(NVLevel(nv2))) * space.n_fock + n


def unindex(idx: int, space: Space) -> tuple[NVLevel, NVLevel, int]:
    if not 0 <= idx < space.dim:
        raise ValueError(f"index {idx} outside [0, {space.dim})")
    pair, n = divmod(idx, space.n_fock)
    a, b = divmod(pair, N_LEVELS)
    return NVLevel(a), NVLevel(b), n


def basis_state(nv1, nv2, n: int, space: Space) -> np.ndarray:
    psi = np.zeros(space.dim, dtype=complex)
    psi[basis_index(nv1, nv2, n, space)] = 1.0
    return psi


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=None)
def _lift(site: int, bra: int, ket: int, n_max: int) -> np.ndarray:
    space = Space(n_max)
    op = np.zeros((space.dim, space.dim), dtype=complex)
    for other in NVLevel:
        for n in range(space.n_fock):
            if site == 1:
                op[basis_index(bra, other, n, space), basis_index(ket, other, n, space)] = 1.0
            else:
                op[basis_index(other, bra, n, space), basis_index(other, ket, n, space)] = 1.0
    return _frozen(op)


def lift_nv_operator(site: int, bra, ket, space: Space) -> np.ndarray:
    """Single-site transition |bra><ket| on NV ``site`` (1 or 2), identity elsewhere.

    The returned array is read-only and shared between callers.
    """
    if site not in (1, 2):
        raise ValueError(f"site must be 1 or 2, got {site!r}")
    return _lift(site, int(NVLevel(bra)), int(NVLevel(ket)), space.n_max)


@lru_cache(maxsize=None)
def _annihilator(n_max: int) -> np.ndarray:
    space = Space(n_max)
    op = np.zeros((space.dim, space.dim), dtype=complex)
    for a in NVLevel:
        for b in NVLevel:
            for n in range(1, space.n_fock):
                op[basis_index(a, b, n - 1, space), basis_index(a, b, n, space)] = np.sqrt(n)
    return _frozen(op)


def photon_annihilator(space: Space) -> np.ndarray:
    return _annihilator(space.n_max)


def dag(op: np.ndarray) -> np.ndarray:
    return op.conj().T


def is_hermitian(op: np.ndarray, atol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(op - dag(op)), initial=0.0) <= atol)


def projector(psi: np.ndarray) -> np.ndarray:
    return np.outer(psi, psi.conj())


def check_state(psi: np.ndarray, atol: float = 1e-9) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise ValueError("state vector must be one-dimensional")
    Space.from_dim(psi.shape[0])
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > atol:
        raise ValueError(f"state vector not normalized (norm={norm:.12g})")
    return psi


def check_density(rho: np.ndarray, herm_tol: float = 1e-9, trace_tol: float = 1e-8,
                  psd_tol: float = 1e-8) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    Space.from_dim(rho.shape[0])
    if np.max(np.abs(rho - dag(rho))) > herm_tol:
        raise ValueError("density matrix is not Hermitian")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr:.12g} != 1")
    if np.linalg.eigvalsh(0.5 * (rho + dag(rho)))[0] < -psd_tol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


class Propagator:
    """exp(-i H t) for a fixed Hermitian H via one eigendecomposition."""

    def __init__(self, H: np.ndarray):
        H = np.asarray(H, dtype=complex)
        if not is_hermitian(H, atol=1e-10):
            raise np.linalg.LinAlgError("Hamiltonian is not Hermitian")
        self.energies, self.vectors = np.linalg.eigh(H)

    def apply(self, psi: np.ndarray, t) -> np.ndarray:
        """Evolve ``psi`` by time ``t``; an array of times returns one row per time."""
        coeffs = self.vectors.conj().T @ psi
        t = np.asarray(t, dtype=float)
        phases = np.exp(-1j * np.multiply.outer(t, self.energies))
        return (phases * coeffs) @ self.vectors.T

    def unitary(self, t: float) -> np.ndarray:
        return (self.vectors * np.exp(-1j * self.energies * t)) @ self.vectors.conj().T


def propagate_exact(H: np.ndarray, psi0: np.ndarray, t: float) -> np.ndarray:
    return Propagator(H).apply(np.asarray(psi0, dtype=complex), float(t))


def partial_trace_to_qubits(rho: np.ndarray) -> np.ndarray:
    """Trace out the cavity and keep only the {g, f} x {g, f} block.

    Output basis is (gg, gf, fg, ff). Population in levels e or i is dropped,
    so the trace falls short of one by exactly the leaked amount.
    """
    rho = np.asarray(rho, dtype=complex)
    space = Space.from_dim(rho.shape[0])
    rows = [[basis_index(a, b, n, space) for n in range(space.n_fock)]
            for a in QUBIT_LEVELS for b in QUBIT_LEVELS]
    rows = np.array(rows)
    out = np.zeros((4, 4), dtype=complex)
    for n in range(space.n_fock):
        idx = rows[:, n]
        out += rho[np.ix_(idx, idx)]
    return out


def state_to_qubits(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return partial_trace_to_qubits(np.outer(psi, psi.conj()))
