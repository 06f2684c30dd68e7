"""Hamiltonians for two NV centers sharing one cavity mode.

All rates are in units of the NV-cavity coupling g (hbar = 1), so times are
in units of 1/g.  Laser phases enter the drive as exp(i*phi) |e><f| + h.c.
"""
from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .qcore import NVLevel, Propagator, Space, basis_index, basis_state, dag, lift_nv_operator, photon_annihilator

G, F, E, I = NVLevel.G, NVLevel.F, NVLevel.E, NVLevel.I
SQRT2 = np.sqrt(2.0)


class ZenoRegimeWarning(UserWarning):
    """Parameters sit outside the regime where the reduced models are accurate."""


@dataclass(frozen=True)
class SystemParams:
    g1: float = 1.0
    g2: float = 1.0
    omega1: float = 0.05
    omega2: float = 0.05
    phi1: float = 0.0
    phi2: float = 0.0
    delta: float = 0.5
    kappa: float = 0.0
    gamma: float = 0.0
    n_max: int = 1

    def __post_init__(self):
        for name in ("g1", "g2", "omega1", "omega2", "kappa", "gamma"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        for name in ("phi1", "phi2", "delta"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        Space(self.n_max)

    @classmethod
    def symmetric(cls, omega=0.05, delta=0.5, g=1.0, **kw) -> "SystemParams":
        return cls(g1=g, g2=g, omega1=omega, omega2=omega, delta=delta, **kw)

    def with_(self, **changes) -> "SystemParams":
        """Copy with changes; ``omega`` and ``g`` set both sites at once."""
        if "omega" in changes:
            om = changes.pop("omega")
            changes.setdefault("omega1", om)
            changes.setdefault("omega2", om)
        if "g" in changes:
            g = changes.pop("g")
            changes.setdefault("g1", g)
            changes.setdefault("g2", g)
        if "n_max" in changes:
            changes["n_max"] = int(changes["n_max"])
        return dataclasses.replace(self, **changes)

    @property
    def space(self) -> Space:
        return Space(self.n_max)

    @property
    def omega(self) -> float:
        self._require_symmetric_drive()
        return self.omega1

    @property
    def g(self) -> float:
        self._require_symmetric_coupling()
        return self.g1

    @property
    def flip_rate(self) -> float:
        """lambda = Omega^2 / Delta, the effective exchange frequency."""
        if self.delta == 0:
            raise ValueError("effective exchange rate undefined at zero detuning")
        return self.omega1 * self.omega2 / self.delta

    @property
    def transfer_time(self) -> float:
        """t' with lambda * t' = pi."""
        return np.pi / abs(self.flip_rate)

    def zeno_warnings(self) -> list[str]:
        out = []
        g_min = min(self.g1, self.g2)
        om_max = max(self.omega1, self.omega2)
        if g_min == 0 or om_max > 0.1 * g_min:
            out.append(f"Omega/g = {om_max / g_min if g_min else np.inf:.3g} is not << 1")
        if g_min == 0 or abs(self.delta) > 0.25 * 2 * SQRT2 * g_min:
            out.append(f"|Delta| = {abs(self.delta):.3g} is not << 2*sqrt(2)*g")
        if self.delta == 0 or om_max > 0.2 * abs(self.delta):
            out.append(f"|Delta|/Omega = {abs(self.delta) / om_max if om_max else np.inf:.3g} is not >> 1")
        return out

    def warn_if_outside_zeno(self, stacklevel: int = 3) -> None:
        for msg in self.zeno_warnings():
            warnings.warn(msg, ZenoRegimeWarning, stacklevel=stacklevel)

    def _require_symmetric_coupling(self):
        if self.g1 != self.g2:
            raise ValueError("reduction requires g1 == g2")

    def _require_symmetric_drive(self):
        if self.omega1 != self.omega2:
            raise ValueError("reduction requires omega1 == omega2")


def cavity_coupling(params: SystemParams) -> np.ndarray:
    space = params.space
    a = photon_annihilator(space)
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for site, g in ((1, params.g1), (2, params.g2)):
        out += g * (lift_nv_operator(site, E, G, space) @ a)
    return out + dag(out)


def laser_drive(params: SystemParams) -> np.ndarray:
    space = params.space
    out = np.zeros((space.dim, space.dim), dtype=complex)
    for site, om, phi in ((1, params.omega1, params.phi1), (2, params.omega2, params.phi2)):
        out += om * np.exp(1j * phi) * lift_nv_operator(site, E, F, space)
    return out + dag(out)


def detuning_term(params: SystemParams) -> np.ndarray:
    space = params.space
    return params.delta * (lift_nv_operator(1, E, E, space) + lift_nv_operator(2, E, E, space))


def build_full(params: SystemParams) -> np.ndarray:
    """Full rotating-frame Hamiltonian; level i is left uncoupled."""
    return cavity_coupling(params) + laser_drive(params) + detuning_term(params)


def ancilla_projector(space: Space) -> np.ndarray:
    """Projector onto states where at least one NV sits in level i."""
    p1 = lift_nv_operator(1, I, I, space)
    p2 = lift_nv_operator(2, I, I, space)
    return p1 + p2 - p1 @ p2


@dataclass(frozen=True)
class ZenoEigensystem:
    psi1: np.ndarray
    psi2: np.ndarray
    psi3: np.ndarray
    lambda1: float
    lambda2: float
    lambda3: float

    @property
    def vectors(self):
        return self.psi1, self.psi2, self.psi3

    @property
    def energies(self):
        return self.lambda1, self.lambda2, self.lambda3


def zeno_eigensystem(params: SystemParams) -> ZenoEigensystem:
    """Eigenvectors of the cavity coupling in the single-excitation sector of |g f 0>."""
    params._require_symmetric_coupling()
    space = params.space
    ge0 = basis_state(G, E, 0, space)
    eg0 = basis_state(E, G, 0, space)
    gg1 = basis_state(G, G, 1, space)
    g = params.g1
    return ZenoEigensystem(
        psi1=(ge0 - eg0) / SQRT2,
        psi2=(ge0 - SQRT2 * gg1 + eg0) / 2,
        psi3=(ge0 + SQRT2 * gg1 + eg0) / 2,
        lambda1=0.0,
        lambda2=-SQRT2 * g,
        lambda3=SQRT2 * g,
    )


def intermediate_picture(params: SystemParams, t: float) -> np.ndarray:
    """Drive plus detuning in the interaction picture of the cavity coupling."""
    U = Propagator(cavity_coupling(params)).unitary(t)
    return dag(U) @ (laser_drive(params) + detuning_term(params)) @ U


@dataclass(frozen=True)
class AuditTerm:
    name: str
    frequency: float
    amplitude: float
    discarded: bool


def frequency_audit(params: SystemParams, n_periods: int = 32, n_samples: int = 1024) -> list[AuditTerm]:
    """Locate the rotation frequency of every term of the interaction-picture drive.

    Samples <bra|H_I(t)|ket> over ``n_periods`` periods of sqrt(2)*g and reads
    the angular frequency of the dominant Fourier peak.  Terms touching psi2
    or psi3 are the ones the Zeno reduction drops.
    """
    params._require_symmetric_coupling()
    params._require_symmetric_drive()
    space = params.space
    zs = zeno_eigensystem(params)
    gf0 = basis_state(G, F, 0, space)
    fg0 = basis_state(F, G, 0, space)
    terms = [
        ("psi1-gf0", zs.psi1, gf0, False),
        ("psi1-fg0", zs.psi1, fg0, False),
        ("psi1-psi1", zs.psi1, zs.psi1, False),
        ("psi2-gf0", zs.psi2, gf0, True),
        ("psi3-gf0", zs.psi3, gf0, True),
        ("psi2-fg0", zs.psi2, fg0, True),
        ("psi3-fg0", zs.psi3, fg0, True),
        ("psi2-psi3", zs.psi2, zs.psi3, True),
    ]
    base = SQRT2 * params.g1
    window = n_periods * 2 * np.pi / base
    times = np.arange(n_samples) * (window / n_samples)
    prop = Propagator(cavity_coupling(params))
    V = laser_drive(params) + detuning_term(params)
    # <bra|U^dag V U|ket> for all t at once
    bras = np.array([b for _, b, _, _ in terms])
    kets = np.array([k for _, _, k, _ in terms])
    bra_t = np.array([prop.apply(b, times) for b in bras])  # U(t)|bra>
    ket_t = np.array([prop.apply(k, times) for k in kets])
    samples = np.einsum("kti,ij,ktj->kt", bra_t.conj(), V, ket_t)
    freqs = 2 * np.pi * np.fft.fftfreq(n_samples, d=window / n_samples)
    out = []
    for (name, _, _, discarded), series in zip(terms, samples):
        spectrum = np.abs(np.fft.fft(series)) / n_samples
        k = int(np.argmax(spectrum))
        out.append(AuditTerm(name, abs(float(freqs[k])), float(spectrum[k]), discarded))
    return out


def zeno_basis(params: SystemParams) -> np.ndarray:
    """Columns |g f 0>, |f g 0>, psi1 spanning the Zeno subspace."""
    space = params.space
    return np.column_stack([basis_state(G, F, 0, space), basis_state(F, G, 0, space),
                            zeno_eigensystem(params).psi1])


def build_zeno_reduced(params: SystemParams) -> np.ndarray:
    """Three-state model on (|gf0>, |fg0>, psi1) with the fast psi2/psi3 terms dropped."""
    params._require_symmetric_coupling()
    params._require_symmetric_drive()
    params.warn_if_outside_zeno()
    B = zeno_basis(params)
    return dag(B) @ (laser_drive(params) + detuning_term(params)) @ B


def build_effective(params: SystemParams) -> np.ndarray:
    """Two-state exchange Hamiltonian on (|gf0>, |fg0>) after eliminating psi1."""
    if params.delta == 0:
        raise ValueError("effective Hamiltonian requires nonzero detuning")
    params.warn_if_outside_zeno()
    d2 = 2 * params.delta
    flip = params.omega1 * params.omega2 * np.exp(1j * (params.phi1 - params.phi2)) / d2
    return np.array([[-params.omega2 ** 2 / d2, flip],
                     [np.conj(flip), -params.omega1 ** 2 / d2]], dtype=complex)


def embed_effective(params: SystemParams) -> np.ndarray:
    """The two-state model placed on the full space; every other state is frozen."""
    space = params.space
    out = np.zeros((space.dim, space.dim), dtype=complex)
    idx = [basis_index(G, F, 0, space), basis_index(F, G, 0, space)]
    out[np.ix_(idx, idx)] = build_effective(params)
    return out


def eliminate_numerically(H: np.ndarray, keep: int = 2) -> np.ndarray:
    """Effective Hamiltonian on the first ``keep`` states by exact block diagonalization.

    Picks the eigenvectors with the largest weight in the kept block and
    builds the des Cloizeaux Hamiltonian from their symmetrically
    orthonormalized projections.
    """
    energies, vecs = np.linalg.eigh(H)
    weight = np.sum(np.abs(vecs[:keep, :]) ** 2, axis=0)
    chosen = np.sort(np.argsort(weight)[::-1][:keep])
    X = vecs[:keep, chosen]
    s, U = np.linalg.eigh(dag(X) @ X)
    X = X @ (U / np.sqrt(s)) @ dag(U)
    return X @ np.diag(energies[chosen]) @ dag(X)
