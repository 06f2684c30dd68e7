"""Closed and open evolution over piecewise-constant Hamiltonian schedules."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _lindblad_py
from ._lindblad_py import IntegrationError
from .hamiltonians import SystemParams
from .qcore import NVLevel, Propagator, check_density, check_state, dag, lift_nv_operator, photon_annihilator

try:
    from . import _lindblad_ext
except ImportError:  # extension not built
    _lindblad_ext = None

__all__ = [
    "BACKEND", "CollapseSet", "IntegrationError", "Schedule", "Trajectory",
    "available_backends", "build_collapse_set", "evolve_schedule", "lindblad_evolve",
]

DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10
DEFAULT_SAMPLES = 400


def available_backends() -> list[str]:
    return ["compiled", "python"] if _lindblad_ext is not None else ["python"]


def _default_backend() -> str:
    if os.environ.get("NVZENO_BACKEND", "").lower() == "python" or _lindblad_ext is None:
        return "python"
    return "compiled"


BACKEND = _default_backend()


def _kernel(backend: str | None):
    backend = backend or BACKEND
    if backend == "compiled":
        if _lindblad_ext is None:
            raise RuntimeError("compiled Lindblad kernel is not available; reinstall with Cython present")
        return _lindblad_ext.integrate
    if backend == "python":
        return _lindblad_py.integrate
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class Schedule:
    segments: tuple
    sample_dt: float | None = None

    def __post_init__(self):
        segs = tuple((np.asarray(H, dtype=complex), float(d)) for H, d in self.segments)
        if not segs:
            raise ValueError("schedule needs at least one segment")
        dim = segs[0][0].shape[0]
        for H, d in segs:
            if H.shape != (dim, dim):
                raise ValueError("all segment operators must share one space")
            if not d > 0:
                raise ValueError(f"segment durations must be > 0, got {d}")
        if self.sample_dt is not None and not self.sample_dt > 0:
            raise ValueError("sample_dt must be > 0")
        object.__setattr__(self, "segments", segs)

    @classmethod
    def single(cls, H, duration: float, sample_dt: float | None = None) -> "Schedule":
        return cls(((H, duration),), sample_dt)

    @property
    def dim(self) -> int:
        return self.segments[0][0].shape[0]

    @property
    def duration(self) -> float:
        return sum(d for _, d in self.segments)

    @property
    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum([d for _, d in self.segments])])

    def sample_times(self) -> np.ndarray:
        """Sampling grid k*dt plus every segment boundary, strictly increasing."""
        total = self.duration
        dt = self.sample_dt if self.sample_dt is not None else total / DEFAULT_SAMPLES
        bounds = self.boundaries
        grid = np.arange(int(np.floor(total / dt)) + 1) * dt
        tol = 1e-9 * max(dt, 1e-300)
        near = np.min(np.abs(grid[:, None] - bounds[None, :]), axis=1) <= tol
        return np.union1d(grid[~near], bounds)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    observables: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def is_density(self) -> bool:
        return self.states.ndim == 3


def _expectations(states: np.ndarray, observables: Mapping[str, np.ndarray] | None) -> dict:
    out = {}
    if states.ndim == 2:
        out["norm"] = np.linalg.norm(states, axis=1)
        for name, op in (observables or {}).items():
            out[name] = np.einsum("ti,ij,tj->t", states.conj(), op, states).real
    else:
        out["trace"] = np.einsum("tii->t", states).real
        for name, op in (observables or {}).items():
            out[name] = np.einsum("ij,tji->t", op, states).real
    return out


def evolve_schedule(schedule: Schedule, psi0, observables: Mapping[str, np.ndarray] | None = None) -> Trajectory:
    """Exact spectral propagation segment by segment, sampled on the schedule grid."""
    psi = check_state(psi0)
    if psi.shape[0] != schedule.dim:
        raise ValueError(f"state dimension {psi.shape[0]} does not match schedule dimension {schedule.dim}")
    times = schedule.sample_times()
    bounds = schedule.boundaries
    states = np.empty((len(times), schedule.dim), dtype=complex)
    states[0] = psi
    for k, (H, d) in enumerate(schedule.segments):
        t0, t1 = bounds[k], bounds[k + 1]
        sel = np.nonzero((times > t0) & (times < t1))[0]
        prop = Propagator(H)
        if len(sel):
            states[sel] = prop.apply(psi, times[sel] - t0)
        psi = prop.apply(psi, d)
        states[times == t1] = psi
    return Trajectory(times, states, _expectations(states, observables))


@dataclass(frozen=True)
class CollapseSet:
    operators: tuple = ()
    rates: tuple = ()
    labels: tuple = ()

    def __post_init__(self):
        if not len(self.operators) == len(self.rates) == len(self.labels):
            raise ValueError("operators, rates and labels must align")
        if any(r < 0 for r in self.rates):
            raise ValueError("collapse rates must be >= 0")

    def __len__(self):
        return len(self.operators)

    def jump_operators(self) -> list[np.ndarray]:
        return [np.sqrt(r) * np.asarray(L) for L, r in zip(self.operators, self.rates)]

    def effective_hamiltonian(self, H: np.ndarray) -> np.ndarray:
        out = np.array(H, dtype=complex)
        for L, r in zip(self.operators, self.rates):
            out -= 0.5j * r * (dag(L) @ L)
        return out


def build_collapse_set(params: SystemParams) -> CollapseSet:
    """One cavity channel at rate kappa and e->f, e->g on each NV at rate gamma.

    Channels with zero rate are omitted.
    """
    space = params.space
    ops, rates, labels = [], [], []
    if params.kappa > 0:
        ops.append(photon_annihilator(space))
        rates.append(params.kappa)
        labels.append("cavity")
    if params.gamma > 0:
        for site in (1, 2):
            for lower in (NVLevel.F, NVLevel.G):
                ops.append(lift_nv_operator(site, lower, NVLevel.E, space))
                rates.append(params.gamma)
                labels.append(f"nv{site}_e_to_{lower.name.lower()}")
    return CollapseSet(tuple(ops), tuple(rates), tuple(labels))


def lindblad_evolve(schedule: Schedule, collapse: CollapseSet, rho0,
                    observables: Mapping[str, np.ndarray] | None = None,
                    rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                    backend: str | None = None, sample_times: Sequence[float] | None = None) -> Trajectory:
    """Adaptive Dormand-Prince integration of the master equation.

    The dissipator for each channel is rate * (L rho L^dag - {L^dag L, rho}/2).
    Step sizes are clipped to land exactly on sample times and segment
    boundaries.  ``sample_times`` overrides the schedule grid (boundaries
    and the end point are always added).
    """
    rho = check_density(rho0)
    if rho.shape[0] != schedule.dim:
        raise ValueError(f"density dimension {rho.shape[0]} does not match schedule dimension {schedule.dim}")
    integrate = _kernel(backend)
    bounds = schedule.boundaries
    if sample_times is None:
        times = schedule.sample_times()
    else:
        times = np.unique(np.concatenate([np.asarray(sample_times, float), bounds]))
        times = times[(times >= 0) & (times <= bounds[-1])]
    jumps = collapse.jump_operators()
    states = np.empty((len(times), schedule.dim, schedule.dim), dtype=complex)
    states[0] = rho
    stats = {"accepted": 0, "rejected": 0, "rhs_evals": 0}
    for k, (H, d) in enumerate(schedule.segments):
        t0, t1 = bounds[k], bounds[k + 1]
        sel = np.nonzero((times > t0) & (times < t1))[0]
        local = np.concatenate([[0.0], times[sel] - t0, [d]])
        seg_states, seg_stats = integrate(collapse.effective_hamiltonian(H), jumps, rho, local,
                                          rtol=rtol, atol=atol)
        states[sel] = seg_states[1:-1]
        rho = seg_states[-1]
        end = np.nonzero(times == t1)[0]
        states[end] = rho
        for key in stats:
            stats[key] += seg_stats[key]
    return Trajectory(times, states, _expectations(states, observables), stats)
