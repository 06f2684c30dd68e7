"""Pure numpy Dormand-Prince 5(4) integrator for the Lindblad equation.

Reference implementation of the compiled kernel in ``_lindblad_ext.pyx``;
both use the same tableau, error norm and step-size controller.
"""
from __future__ import annotations

import numpy as np

# Dormand-Prince 5(4) tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# fifth minus embedded fourth order weights
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40

SAFETY, FAC_MIN, FAC_MAX = 0.9, 0.2, 10.0


class IntegrationError(RuntimeError):
    pass


def _rhs_factory(heff, jumps):
    def rhs(rho):
        x = heff @ rho
        out = -1j * (x - x.conj().T)
        for L in jumps:
            out += L @ rho @ L.conj().T
        return out
    return rhs


def _err_norm(err, y, y_new, rtol, atol):
    # max norm: rho is mostly zeros, and an RMS over all D^2 entries would
    # let the few occupied ones carry errors far above the tolerance
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
    return np.max(np.abs(err) / scale)


def integrate(heff, jumps, rho0, t_out, rtol=1e-8, atol=1e-10, max_steps=10_000_000, h_init=0.0):
    """Integrate d(rho)/dt = -i(Heff rho - rho Heff^dag) + sum L rho L^dag.

    ``jumps`` carry their rates already (L = sqrt(rate) * op).  Returns the
    states at each time of ``t_out`` (the first entry is the start time)
    and a dict of step statistics.
    """
    heff = np.ascontiguousarray(heff, dtype=complex)
    jumps = [np.ascontiguousarray(L, dtype=complex) for L in jumps]
    t_out = np.asarray(t_out, dtype=float)
    rhs = _rhs_factory(heff, jumps)
    y = np.array(rho0, dtype=complex)
    out = np.empty((len(t_out),) + y.shape, dtype=complex)
    out[0] = y
    t = float(t_out[0])
    k1 = rhs(y)
    n_rhs, n_acc, n_rej = 1, 0, 0
    span = float(t_out[-1] - t_out[0])
    if h_init > 0:
        h = h_init
    else:
        d0 = np.sqrt(np.mean(np.abs(y) ** 2))
        d1 = np.sqrt(np.mean(np.abs(k1) ** 2))
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    if span > 0:
        h = min(h, span)

    for i in range(1, len(t_out)):
        t_target = float(t_out[i])
        while t < t_target:
            if n_acc + n_rej >= max_steps:
                raise IntegrationError(f"step budget of {max_steps} exhausted at t={t:.6g}")
            remaining = t_target - t
            clipped = h >= remaining
            h_step = remaining if clipped else h
            if h_step <= 1e-14 * max(1.0, abs(t)):
                raise IntegrationError(f"step size underflow at t={t:.6g}")
            k2 = rhs(y + h_step * (A21 * k1))
            k3 = rhs(y + h_step * (A31 * k1 + A32 * k2))
            k4 = rhs(y + h_step * (A41 * k1 + A42 * k2 + A43 * k3))
            k5 = rhs(y + h_step * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
            k6 = rhs(y + h_step * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
            y_new = y + h_step * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
            k7 = rhs(y_new)
            n_rhs += 6
            err = h_step * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            en = _err_norm(err, y, y_new, rtol, atol)
            if en <= 1.0:
                fac = FAC_MAX if en == 0 else min(FAC_MAX, max(FAC_MIN, SAFETY * en ** -0.2))
                t = t_target if clipped else t + h_step
                y, k1 = y_new, k7
                n_acc += 1
                h = max(h, h_step * fac) if clipped else h_step * fac
            else:
                fac = max(FAC_MIN, SAFETY * en ** -0.2)
                h = h_step * fac
                n_rej += 1
        out[i] = y
    return out, {"accepted": n_acc, "rejected": n_rej, "rhs_evals": n_rhs}
