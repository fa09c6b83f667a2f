"""Pure-Python twin of the compiled RK4 kernel (same signature and output)."""
import math

import numpy as np


def _rhs(y, c1, c2, kin):
    x, yy, px, py, fx, fy, fz = y
    return (
        kin * px,
        kin * py,
        -x - c1 * fx,
        -yy - c1 * fy,
        c2 * (yy * fz),
        c2 * (-x * fz),
        c2 * (x * fy - yy * fx),
    )


def rk4_run(y0, n_steps, dt, c1, c2, kin, stride):
    y = [float(v) for v in y0]
    n_rows = n_steps // stride + 1 + (1 if n_steps % stride else 0)
    samples = np.empty((n_rows, 8))
    samples[0, 0] = 0.0
    samples[0, 1:] = y
    r = math.hypot(y[0], y[1])
    fp = math.hypot(y[4], y[5])
    stats = [r, r, fp, fp, abs(math.sqrt(fp * fp + y[6] ** 2) - 1.0)]
    h2, h6 = 0.5 * dt, dt / 6.0
    row = 0
    for i in range(1, n_steps + 1):
        k1 = _rhs(y, c1, c2, kin)
        k2 = _rhs([a + h2 * b for a, b in zip(y, k1)], c1, c2, kin)
        k3 = _rhs([a + h2 * b for a, b in zip(y, k2)], c1, c2, kin)
        k4 = _rhs([a + dt * b for a, b in zip(y, k3)], c1, c2, kin)
        y = [a + h6 * (b + 2.0 * c + 2.0 * d + e) for a, b, c, d, e in zip(y, k1, k2, k3, k4)]
        r = math.hypot(y[0], y[1])
        fp = math.hypot(y[4], y[5])
        fn = math.sqrt(fp * fp + y[6] * y[6])
        stats[0] = min(stats[0], r)
        stats[1] = max(stats[1], r)
        stats[2] = min(stats[2], fp)
        stats[3] = max(stats[3], fp)
        stats[4] = max(stats[4], abs(fn - 1.0))
        if i % stride == 0 or i == n_steps:
            row += 1
            samples[row, 0] = i * dt
            samples[row, 1:] = y
    return samples, np.array(stats)
