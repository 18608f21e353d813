"""Compare the compiled and numpy two-site update kernels.

Usage: python3 benchmarks/bench_kernels.py [--repeat 200]

Reports the per-call time of ``two_site_update`` for each backend at a few
bond dimensions, plus the wall time of one full TEBD run.
"""

from __future__ import annotations

import argparse
import time
import timeit

import numpy as np

from adiabatic_tn import _kernels
from adiabatic_tn.linalg import hermitian_expm
from adiabatic_tn.states import StateFamily
from adiabatic_tn.tebd import TebdConfig, run_adiabatic


def _case(chi: int, d: int, rng: np.random.Generator):
    a = rng.standard_normal((chi, d, chi)) + 1j * rng.standard_normal((chi, d, chi))
    b = rng.standard_normal((chi, d, chi)) + 1j * rng.standard_normal((chi, d, chi))
    h = rng.standard_normal((d * d, d * d))
    return a, b, hermitian_expm(h + h.T, 0.02)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    backends = _kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the numpy kernel is available")
    rng = np.random.default_rng(1)
    print(f"{'chi':>4} " + " ".join(f"{b:>12}" for b in backends) + "   (us per call)")
    for chi in (2, 4, 8, 16, 32):
        a, b, g = _case(chi, 4, rng)
        cols = []
        for name in backends:
            _kernels.use_backend(name)
            t = timeit.timeit(lambda: _kernels.two_site_update(a, b, g, 1e-10, 64, True), number=args.repeat)
            cols.append(1e6 * t / args.repeat)
        print(f"{chi:>4} " + " ".join(f"{c:>12.1f}" for c in cols))
    cfg = TebdConfig(StateFamily.parse("mps-family:g=-0.6"), 64, 10.0)
    for name in backends:
        _kernels.use_backend(name)
        t0 = time.perf_counter()
        traj = run_adiabatic(cfg)
        print(f"TEBD N=64 T=10 [{name}]: {time.perf_counter() - t0:.2f} s, F={traj.final_fidelity:.12f}")


if __name__ == "__main__":
    main()
