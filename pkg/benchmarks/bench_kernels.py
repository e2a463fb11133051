"""Compare the numba and numpy kernels on workloads the harness actually runs.

    python benchmarks/bench_kernels.py [--repeat 5]

Workloads:
  reflectance  one calibration-fit residual evaluation scaled up, a dense
               (angle, index) grid of 200 000 points
  inversion    one concentration-scan grid point, 1000 repetitions inverted
               by bisection, repeated for 9 concentrations and 2 probes
"""
import argparse
import time

import numpy as np

from qplasmon import _accel, kernels

EPS_PRISM = 1.5106 ** 2
EPS_GOLD = complex(-18.2484, 0.8096)
D, WL = 57.41, 799.0


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    th, n = np.meshgrid(np.radians(np.linspace(60, 75, 500)), np.linspace(1.32, 1.34, 400))
    theta = th.ravel()
    eps = (n.ravel() ** 2).astype(complex)
    ref = kernels.reflectance_numpy(np.array([np.radians(67.5)]), np.array([1.0 + 0j]),
                                    EPS_PRISM, EPS_GOLD, D, WL)[0]
    rng = np.random.default_rng(0)
    targets = rng.uniform(0.25, 0.45, 18_000)

    workloads = {
        "reflectance": {
            path: (lambda f=f: f(theta, eps, EPS_PRISM, EPS_GOLD, D, WL))
            for path, f in (("numba", kernels.reflectance_numba),
                            ("numpy", kernels.reflectance_numpy))
        },
        "inversion": {
            path: (lambda f=f: f(targets, np.radians(67.5), 1.3275, 1.3375, EPS_PRISM, EPS_GOLD,
                                 D, WL, ref=ref, increasing=True, tol=1e-10))
            for path, f in (("numba", kernels.invert_bisect_numba),
                            ("numpy", kernels.invert_bisect_numpy))
        },
    }

    if not _accel.HAVE_NUMBA:
        print("numba is not installed; the numba column runs the plain python loop")
    print(f"{'workload':<12} {'numba [ms]':>11} {'numpy [ms]':>11} {'speedup':>8}  max |diff|")
    for name, paths in workloads.items():
        a, b = paths["numba"](), paths["numpy"]()  # warm up, compile and check agreement
        t_jit = best_of(paths["numba"], args.repeat)
        t_np = best_of(paths["numpy"], args.repeat)
        diff = float(np.max(np.abs(a - b)))
        print(f"{name:<12} {1e3 * t_jit:>11.2f} {1e3 * t_np:>11.2f} {t_np / t_jit:>7.1f}x  {diff:.1e}")


if __name__ == "__main__":
    main()
