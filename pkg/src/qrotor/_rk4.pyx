# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled fixed-step RK4 for the reduced rotor equations (power-series law)."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef inline void _rhs(double* y, double* d, double c1, double c2, double kin) noexcept nogil:
    d[0] = kin * y[2]
    d[1] = kin * y[3]
    d[2] = -y[0] - c1 * y[4]
    d[3] = -y[1] - c1 * y[5]
    # f' = c2 (r x f) with r = (x, y, 0)
    d[4] = c2 * (y[1] * y[6])
    d[5] = c2 * (-y[0] * y[6])
    d[6] = c2 * (y[0] * y[5] - y[1] * y[4])


def rk4_run(double[::1] y0, long n_steps, double dt, double c1, double c2,
            double kin, long stride):
    """Integrate ``n_steps`` RK4 steps.

    Returns
    -------
    samples : ndarray, shape (n_rows, 8)
        Rows ``(t, x, y, px, py, fx, fy, fz)`` every ``stride`` steps; the
        final step is always included.
    stats : ndarray, shape (5,)
        ``(r_min, r_max, fpar_min, fpar_max, max | |f| - 1 |)`` over every step.
    """
    cdef double y[7]
    cdef double k1[7]
    cdef double k2[7]
    cdef double k3[7]
    cdef double k4[7]
    cdef double tmp[7]
    cdef long i, j, row = 0
    cdef long n_rows = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    cdef double r, fp, fn, h2 = 0.5 * dt, h6 = dt / 6.0
    samples = np.empty((n_rows, 8))
    cdef double[:, ::1] s = samples
    stats = np.empty(5)
    cdef double[::1] st = stats
    for j in range(7):
        y[j] = y0[j]
    r = sqrt(y[0] * y[0] + y[1] * y[1])
    fp = sqrt(y[4] * y[4] + y[5] * y[5])
    fn = sqrt(fp * fp + y[6] * y[6])
    st[0] = r; st[1] = r; st[2] = fp; st[3] = fp; st[4] = abs(fn - 1.0)
    s[0, 0] = 0.0
    for j in range(7):
        s[0, j + 1] = y[j]
    with nogil:
        for i in range(1, n_steps + 1):
            _rhs(y, k1, c1, c2, kin)
            for j in range(7):
                tmp[j] = y[j] + h2 * k1[j]
            _rhs(tmp, k2, c1, c2, kin)
            for j in range(7):
                tmp[j] = y[j] + h2 * k2[j]
            _rhs(tmp, k3, c1, c2, kin)
            for j in range(7):
                tmp[j] = y[j] + dt * k3[j]
            _rhs(tmp, k4, c1, c2, kin)
            for j in range(7):
                y[j] += h6 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            r = sqrt(y[0] * y[0] + y[1] * y[1])
            fp = sqrt(y[4] * y[4] + y[5] * y[5])
            fn = sqrt(fp * fp + y[6] * y[6])
            if r < st[0]: st[0] = r
            if r > st[1]: st[1] = r
            if fp < st[2]: st[2] = fp
            if fp > st[3]: st[3] = fp
            if abs(fn - 1.0) > st[4]: st[4] = abs(fn - 1.0)
            if i % stride == 0 or i == n_steps:
                row += 1
                s[row, 0] = i * dt
                for j in range(7):
                    s[row, j + 1] = y[j]
    return samples, stats
