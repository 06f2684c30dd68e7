"""Compiled vs pure-numpy Lindblad kernel on the open-system scenarios.

    python3 benchmarks/bench_lindblad.py [--repeat N]

Reports wall time per run, steps, and the largest difference between the
two backends' final states.
"""
import argparse
import time

import numpy as np

from nvzeno.dynamics import Schedule, available_backends, build_collapse_set, lindblad_evolve
from nvzeno.hamiltonians import SystemParams, build_full
from nvzeno.protocols import ModelChoice, QstSpec, cpg_segments, logical_states, qst_states
from nvzeno.qcore import projector


def scenarios():
    p = SystemParams.symmetric(omega=0.05, delta=0.5, kappa=0.2, gamma=0.01)
    psi, _ = qst_states(QstSpec(p))
    yield "qst open (kappa=0.2, gamma=0.01)", Schedule.single(build_full(p), p.transfer_time), p, psi
    yield "cpg open (kappa=0.2, gamma=0.01)", Schedule(tuple(cpg_segments(p, ModelChoice.FULL_CLOSED))), p, \
        sum(logical_states(p.space)) / 2
    weak = p.with_(kappa=0.02, gamma=0.001)
    yield "qst weak decay (kappa=0.02, gamma=0.001)", Schedule.single(build_full(weak), weak.transfer_time), weak, psi


def timed(sched, params, psi, backend, repeat):
    best, traj = np.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        traj = lindblad_evolve(sched, build_collapse_set(params), projector(psi), backend=backend,
                               sample_times=[0.0])
        best = min(best, time.perf_counter() - t0)
    return best, traj


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = available_backends()
    if "compiled" not in backends:
        print("compiled kernel not built; only the python backend is available")
    print(f"{'scenario':44s} {'backend':9s} {'time [s]':>9s} {'steps':>7s} {'speedup':>8s}")
    for name, sched, params, psi in scenarios():
        results = {b: timed(sched, params, psi, b, args.repeat) for b in backends}
        base = results["python"][0]
        for b, (t, traj) in results.items():
            print(f"{name:44s} {b:9s} {t:9.3f} {traj.stats['accepted']:7d} {base / t:8.1f}x")
        if len(results) == 2:
            diff = np.max(np.abs(results["compiled"][1].final - results["python"][1].final))
            print(f"{'':44s} max |rho_compiled - rho_python| = {diff:.1e}")


if __name__ == "__main__":
    main()
