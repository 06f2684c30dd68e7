# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) Lindblad integrator.

Same tableau, error norm and controller as ``_lindblad_py``.  Operators are
converted to coordinate triplets once; the right-hand side then costs
O(nnz(Heff) * D + sum nnz(L)^2) instead of dense matrix products.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow

from ._lindblad_py import IntegrationError

cnp.import_array()

ctypedef double complex cplx

cdef double C_A21 = 1.0 / 5
cdef double C_A31 = 3.0 / 40, C_A32 = 9.0 / 40
cdef double C_A41 = 44.0 / 45, C_A42 = -56.0 / 15, C_A43 = 32.0 / 9
cdef double C_A51 = 19372.0 / 6561, C_A52 = -25360.0 / 2187, C_A53 = 64448.0 / 6561, C_A54 = -212.0 / 729
cdef double C_A61 = 9017.0 / 3168, C_A62 = -355.0 / 33, C_A63 = 46732.0 / 5247, C_A64 = 49.0 / 176
cdef double C_A65 = -5103.0 / 18656
cdef double C_B1 = 35.0 / 384, C_B3 = 500.0 / 1113, C_B4 = 125.0 / 192, C_B5 = -2187.0 / 6784, C_B6 = 11.0 / 84
cdef double C_E1 = 71.0 / 57600, C_E3 = -71.0 / 16695, C_E4 = 71.0 / 1920, C_E5 = -17253.0 / 339200
cdef double C_E6 = 22.0 / 525, C_E7 = -1.0 / 40
cdef double SAFETY = 0.9, FAC_MIN = 0.2, FAC_MAX = 10.0


cdef inline double cabs2(cplx z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


cdef inline cplx conj(cplx z) noexcept nogil:
    return z.real - 1j * z.imag


cdef class _Liouvillian:
    cdef int dim
    cdef cnp.intp_t[::1] h_row, h_col
    cdef cplx[::1] h_val
    cdef cnp.intp_t[::1] j_row, j_col, j_start
    cdef cplx[::1] j_val
    cdef cplx[::1] work

    def __init__(self, heff, jumps):
        heff = np.ascontiguousarray(heff, dtype=np.complex128)
        self.dim = heff.shape[0]
        r, c = np.nonzero(heff)
        self.h_row = r.astype(np.intp)
        self.h_col = c.astype(np.intp)
        self.h_val = np.ascontiguousarray(heff[r, c])
        rows, cols, vals, counts = [], [], [], [0]
        for L in jumps:
            L = np.asarray(L, dtype=np.complex128)
            lr, lc = np.nonzero(L)
            rows.append(lr)
            cols.append(lc)
            vals.append(L[lr, lc])
            counts.append(len(lr))
        starts = np.cumsum(counts)
        self.j_row = np.concatenate(rows).astype(np.intp) if rows else np.zeros(0, np.intp)
        self.j_col = np.concatenate(cols).astype(np.intp) if cols else np.zeros(0, np.intp)
        self.j_val = np.ascontiguousarray(np.concatenate(vals)) if vals else np.zeros(0, np.complex128)
        self.j_start = np.asarray(starts, dtype=np.intp)
        self.work = np.zeros(self.dim * self.dim, dtype=np.complex128)

    cdef void apply(self, cplx[::1] rho, cplx[::1] out) noexcept nogil:
        cdef int D = self.dim
        cdef Py_ssize_t t, j, k, p, q, i
        cdef Py_ssize_t r, c, rq, cq
        cdef cplx v, w
        cdef cplx[::1] x = self.work
        for i in range(D * D):
            x[i] = 0
        # x = Heff rho
        for t in range(self.h_row.shape[0]):
            r = self.h_row[t] * D
            c = self.h_col[t] * D
            v = self.h_val[t]
            for j in range(D):
                x[r + j] = x[r + j] + v * rho[c + j]
        # out = -i (x - x^dag)
        for i in range(D):
            for j in range(D):
                w = x[i * D + j] - conj(x[j * D + i])
                out[i * D + j] = w.imag - 1j * w.real
        # out += L rho L^dag
        for k in range(self.j_start.shape[0] - 1):
            for p in range(self.j_start[k], self.j_start[k + 1]):
                r = self.j_row[p] * D
                c = self.j_col[p] * D
                v = self.j_val[p]
                for q in range(self.j_start[k], self.j_start[k + 1]):
                    rq = self.j_row[q]
                    cq = self.j_col[q]
                    out[r + rq] = out[r + rq] + v * conj(self.j_val[q]) * rho[c + cq]


cdef double _err_norm(cplx[::1] err, cplx[::1] y, cplx[::1] y_new, double rtol, double atol) noexcept nogil:
    cdef Py_ssize_t i, n = err.shape[0]
    cdef double acc = 0.0, a, b, s, e
    for i in range(n):
        a = sqrt(cabs2(y[i]))
        b = sqrt(cabs2(y_new[i]))
        s = atol + rtol * (a if a > b else b)
        e = sqrt(cabs2(err[i])) / s
        if e > acc:
            acc = e
    return acc


def integrate(heff, jumps, rho0, t_out, double rtol=1e-8, double atol=1e-10,
              long max_steps=10_000_000, double h_init=0.0):
    """Compiled twin of ``_lindblad_py.integrate`` with the same signature."""
    cdef _Liouvillian liou = _Liouvillian(heff, list(jumps))
    rho0 = np.asarray(rho0, dtype=np.complex128)
    cdef int D = rho0.shape[0]
    cdef Py_ssize_t n = D * D, i, m
    cdef cnp.ndarray[double, ndim=1] times = np.ascontiguousarray(t_out, dtype=np.float64)
    out_arr = np.empty((times.shape[0], D, D), dtype=np.complex128)
    cdef cplx[:, ::1] out = out_arr.reshape(times.shape[0], n)

    cdef cplx[::1] y = np.ascontiguousarray(rho0.ravel()).copy()
    cdef cplx[::1] y_new = np.empty(n, np.complex128)
    cdef cplx[::1] tmp = np.empty(n, np.complex128)
    cdef cplx[::1] err = np.empty(n, np.complex128)
    cdef cplx[::1] k1 = np.empty(n, np.complex128)
    cdef cplx[::1] k2 = np.empty(n, np.complex128)
    cdef cplx[::1] k3 = np.empty(n, np.complex128)
    cdef cplx[::1] k4 = np.empty(n, np.complex128)
    cdef cplx[::1] k5 = np.empty(n, np.complex128)
    cdef cplx[::1] k6 = np.empty(n, np.complex128)
    cdef cplx[::1] k7 = np.empty(n, np.complex128)
    cdef cplx[::1] swap

    out[0, :] = y
    cdef double t = times[0], t_target, remaining, h, h_step, en, fac, d0 = 0.0, d1 = 0.0, span
    cdef bint clipped
    cdef long n_acc = 0, n_rej = 0, n_rhs = 1
    liou.apply(y, k1)
    span = times[times.shape[0] - 1] - times[0]
    if h_init > 0:
        h = h_init
    else:
        for i in range(n):
            d0 += cabs2(y[i])
            d1 += cabs2(k1[i])
        d0 = sqrt(d0 / n)
        d1 = sqrt(d1 / n)
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    if span > 0 and h > span:
        h = span

    for m in range(1, times.shape[0]):
        t_target = times[m]
        while t < t_target:
            if n_acc + n_rej >= max_steps:
                raise IntegrationError(f"step budget of {max_steps} exhausted at t={t:.6g}")
            remaining = t_target - t
            clipped = h >= remaining
            h_step = remaining if clipped else h
            if h_step <= 1e-14 * max(1.0, fabs(t)):
                raise IntegrationError(f"step size underflow at t={t:.6g}")
            with nogil:
                for i in range(n):
                    tmp[i] = y[i] + h_step * (C_A21 * k1[i])
                liou.apply(tmp, k2)
                for i in range(n):
                    tmp[i] = y[i] + h_step * (C_A31 * k1[i] + C_A32 * k2[i])
                liou.apply(tmp, k3)
                for i in range(n):
                    tmp[i] = y[i] + h_step * (C_A41 * k1[i] + C_A42 * k2[i] + C_A43 * k3[i])
                liou.apply(tmp, k4)
                for i in range(n):
                    tmp[i] = y[i] + h_step * (C_A51 * k1[i] + C_A52 * k2[i] + C_A53 * k3[i] + C_A54 * k4[i])
                liou.apply(tmp, k5)
                for i in range(n):
                    tmp[i] = y[i] + h_step * (C_A61 * k1[i] + C_A62 * k2[i] + C_A63 * k3[i]
                                              + C_A64 * k4[i] + C_A65 * k5[i])
                liou.apply(tmp, k6)
                for i in range(n):
                    y_new[i] = y[i] + h_step * (C_B1 * k1[i] + C_B3 * k3[i] + C_B4 * k4[i]
                                                + C_B5 * k5[i] + C_B6 * k6[i])
                liou.apply(y_new, k7)
                for i in range(n):
                    err[i] = h_step * (C_E1 * k1[i] + C_E3 * k3[i] + C_E4 * k4[i] + C_E5 * k5[i]
                                       + C_E6 * k6[i] + C_E7 * k7[i])
                en = _err_norm(err, y, y_new, rtol, atol)
            n_rhs += 6
            if en <= 1.0:
                if en == 0:
                    fac = FAC_MAX
                else:
                    fac = min(FAC_MAX, max(FAC_MIN, SAFETY * pow(en, -0.2)))
                t = t_target if clipped else t + h_step
                swap = y
                y = y_new
                y_new = swap
                swap = k1
                k1 = k7
                k7 = swap
                n_acc += 1
                if clipped:
                    h = max(h, h_step * fac)
                else:
                    h = h_step * fac
            else:
                fac = max(FAC_MIN, SAFETY * pow(en, -0.2))
                h = h_step * fac
                n_rej += 1
        out[m, :] = y
    return out_arr, {"accepted": n_acc, "rejected": n_rej, "rhs_evals": n_rhs}
