"""Fidelity, reduced two-qubit states and concurrence."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .qcore import partial_trace_to_qubits

LEAKAGE_LIMIT = 1e-3

_SYSY = np.kron(np.array([[0, -1j], [1j, 0]]), np.array([[0, -1j], [1j, 0]]))


class LeakageError(ValueError):
    """Too much population outside the {g, f} qubit space to define concurrence."""


def fidelity(target, state) -> float:
    """<target|rho|target>; a state vector in place of rho gives |<target|psi>|^2."""
    target = np.asarray(target, dtype=complex)
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != target.shape[0]:
        raise ValueError(f"dimension mismatch: target {target.shape[0]} vs state {state.shape[0]}")
    if state.ndim == 1:
        return float(abs(np.vdot(target, state)) ** 2)
    return float(np.real(target.conj() @ state @ target))


@dataclass(frozen=True)
class QubitRho:
    """Two-qubit block over (gg, gf, fg, ff) plus the population that left it."""
    matrix: np.ndarray
    trace_deficit: float

    @classmethod
    def from_full(cls, rho) -> "QubitRho":
        rho = np.asarray(rho, dtype=complex)
        if rho.ndim == 1:
            rho = np.outer(rho, rho.conj())
        m = partial_trace_to_qubits(rho)
        deficit = float(np.trace(rho).real - np.trace(m).real)
        return cls(m, max(deficit, 0.0))

    @classmethod
    def from_pure(cls, amplitudes) -> "QubitRho":
        v = np.asarray(amplitudes, dtype=complex)
        return cls(np.outer(v, v.conj()), 0.0)

    def normalized(self) -> np.ndarray:
        return self.matrix / np.trace(self.matrix).real


@dataclass(frozen=True)
class EntanglementParams:
    alpha: complex
    beta: complex
    lam: float

    def __post_init__(self):
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1) > 1e-12:
            raise ValueError(f"|alpha|^2 + |beta|^2 = {norm:.15g}, expected 1")

    @classmethod
    def from_ratio(cls, r: float, lam: float) -> "EntanglementParams":
        """Real weights with alpha/beta = r."""
        beta = 1.0 / np.sqrt(1.0 + r * r)
        return cls(r * beta, beta, lam)

    @property
    def r(self) -> complex:
        return self.alpha / self.beta if self.beta != 0 else np.inf


def eq14_state(p: EntanglementParams, t):
    """Closed-form (gf, fg) amplitudes of the exchange dynamics as printed.

    This is the complex conjugate of forward evolution under the two-state
    exchange Hamiltonian for real weights; populations and concurrence agree.
    Accepts an array of times and returns one row per time.
    """
    t = np.asarray(t, dtype=float)
    half = 0.5 * p.lam * t
    c, s = np.cos(half), np.sin(half)
    phase = np.exp(-1j * half)
    amp_gf = phase * (p.alpha * c + 1j * p.beta * s)
    amp_fg = phase * (1j * p.alpha * s + p.beta * c)
    return np.stack([amp_gf, amp_fg], axis=-1)


def qubit_rho_from_pair(amps) -> QubitRho:
    """Embed (gf, fg) amplitudes into the (gg, gf, fg, ff) basis."""
    v = np.zeros(4, dtype=complex)
    v[1], v[2] = amps
    return QubitRho.from_pure(v)


def eq15_entries(p: EntanglementParams, t, printed: bool = False):
    """Entries (a, b, c, d) with rho_qubits = (1/4) [[a, b], [c, d]] on (gf, fg).

    By default they are computed from the closed-form state, which gives
    b = 4 alpha beta - 2i (alpha^2 - beta^2) sin(lam t).  ``printed=True`` returns the
    published variant with the opposite sign on the sine term.
    """
    if np.imag(p.alpha) != 0 or np.imag(p.beta) != 0:
        raise ValueError("entry formulas assume real weights")
    al, be = float(np.real(p.alpha)), float(np.real(p.beta))
    lt = p.lam * np.asarray(t, dtype=float)
    a = 2 * (al ** 2 + be ** 2) + 2 * (al ** 2 - be ** 2) * np.cos(lt)
    d = 2 * (al ** 2 + be ** 2) - 2 * (al ** 2 - be ** 2) * np.cos(lt)
    sign = 1.0 if printed else -1.0
    b = 4 * al * be + sign * 2j * (al ** 2 - be ** 2) * np.sin(lt)
    c = np.conj(b)
    return a + 0j, b, c, d + 0j


def _concurrence_matrix(m: np.ndarray) -> float:
    # singular values of sqrt(rho) Y sqrt(rho)^*; numerically zero eigenvalues
    # of rho then enter at second order instead of through a square root
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    d = np.sqrt(np.clip(w, 0.0, None))
    core = v.conj().T @ _SYSY @ v.conj()
    lam = np.linalg.svd(d[:, None] * core * d[None, :], compute_uv=False)
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def concurrence_wootters(rho) -> float:
    """Wootters concurrence of a two-qubit state.

    Accepts a :class:`QubitRho`, a 4x4 matrix or a length-4 pure state.
    Leakage up to ``LEAKAGE_LIMIT`` is renormalized away; more raises
    :class:`LeakageError`.
    """
    if isinstance(rho, QubitRho):
        if rho.trace_deficit > LEAKAGE_LIMIT:
            raise LeakageError(f"trace deficit {rho.trace_deficit:.3g} exceeds {LEAKAGE_LIMIT:g}")
        return min(1.0, _concurrence_matrix(rho.normalized()))
    m = np.asarray(rho, dtype=complex)
    if m.ndim == 1:
        m = np.outer(m, m.conj())
    if m.shape != (4, 4):
        raise ValueError("concurrence needs a two-qubit state")
    return min(1.0, _concurrence_matrix(m / np.trace(m).real))


def concurrence_eq17(a, b, c, d):
    """sqrt((a c* + a* b)(c d* + b* d)) / 8, the published closed form.

    On the exchange-dynamics family this equals the squared Wootters
    concurrence (the tangle).
    """
    a, b, c, d = (np.asarray(x, dtype=complex) for x in (a, b, c, d))
    val = np.sqrt((a * c.conj() + a.conj() * b) * (c * d.conj() + b.conj() * d)) / 8
    return np.real_if_close(val, tol=1e6)
