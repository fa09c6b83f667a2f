"""Compare the compiled and pure-Python RK4 trajectory kernels.

Usage: python3 benchmarks/bench_rk4.py [t_end]
"""
import sys
import timeit

import numpy as np

from qrotor import semiclassical as sc
from qrotor.sdolp_field import LatticeSpec
from qrotor.units import ATOMS


def main(t_end=100.0, dt=0.005, repeat=3):
    spec = LatticeSpec(V0=100.0, B0=180.0, nuclear_spin_I=4.0, lambda0=766.5e-9)
    model = sc.ClassicalModel.build(spec, ATOMS["K40"])
    s0 = sc.ring_initial_state()
    n = int(round(t_end / dt))
    print(f"RK4, {n} steps of dt={dt} (K-40 ring trajectory)")
    results = {}
    for backend in ("python", "compiled"):
        if backend == "compiled" and sc._kernel_compiled is None:
            print("compiled: extension not built, skipped")
            continue
        run = lambda: sc.integrate(s0, model, t_end, dt, stride=100, backend=backend)
        best = min(timeit.repeat(run, number=1, repeat=repeat))
        tr = run()
        results[backend] = tr
        print(f"{backend:>9}: {best * 1e3:9.2f} ms  ({best / n * 1e9:7.1f} ns/step)  "
              f"r in [{tr.r_min:.6f}, {tr.r_max:.6f}]")
    if len(results) == 2:
        a, b = results["python"].samples, results["compiled"].samples
        print(f"max |difference| between kernels: {np.max(np.abs(a - b)):.3e}")


if __name__ == "__main__":
    main(float(sys.argv[1]) if len(sys.argv) > 1 else 100.0)
