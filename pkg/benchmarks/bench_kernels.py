"""Compare the compiled and numpy coherence-sum kernels.

    python benchmarks/bench_kernels.py [--repeat N]

Times both kernels on the grid sizes of the reference scenarios (a 0-340 ps
N2 trace at 10 fs and a 0-150 ps Cl2 trace) and reports the largest
difference between their outputs.
"""
import argparse
import timeit

import numpy as np

from rotkick import _kernels_py, kernels
from rotkick.dynamics import PulseSequence
from rotkick.ensemble import boltzmann_weights, choose_jmax, evolve_ensemble, time_grid
from rotkick.rotor_core import default_species

try:
    from rotkick import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def scenario(name, t_end, strength):
    spec = default_species(name)
    pulses = PulseSequence(((0.0, strength),))
    ens = boltzmann_weights(spec, 295.0, choose_jmax(spec, 295.0, strength))
    seg = evolve_ensemble(ens, pulses).segments[1]
    return seg, time_grid(0.0, t_end, 0.01)


def bench(label, fn, repeat):
    best = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<28s} {best * 1e3:9.2f} ms")
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    impls = [("numpy", _kernels_py)]
    if _kernels_c is not None:
        impls.insert(0, ("cython", _kernels_c))
    else:
        print("compiled extension not built; timing numpy only")
    print(f"default backend: {kernels.BACKEND}")

    for name, t_end, strength in (("N2-14", 340.0, 3.0), ("Cl2-35", 150.0, 0.5)):
        seg, grid = scenario(name, t_end, strength)
        print(f"{name}: {len(grid)} samples x {len(seg.coeffs)} coherences")
        outs = {}
        times = {}
        for label, impl in impls:
            times[label, "uniform"] = bench(
                f"{label} uniform",
                lambda: kernels.coherence_sum_uniform(0.0, 0.01, len(grid), seg.coeffs, seg.omega, seg.offset, impl=impl),
                args.repeat,
            )
            times[label, "points"] = bench(
                f"{label} arbitrary grid",
                lambda: kernels.coherence_sum(grid, seg.coeffs, seg.omega, seg.offset, impl=impl),
                args.repeat,
            )
            outs[label] = kernels.coherence_sum_uniform(0.0, 0.01, len(grid), seg.coeffs, seg.omega, seg.offset, impl=impl)
        if len(outs) == 2:
            diff = np.max(np.abs(outs["cython"] - outs["numpy"]))
            print(f"  max |cython - numpy| = {diff:.2e}")
            for kind in ("uniform", "points"):
                print(f"  speedup ({kind}): {times['numpy', kind] / times['cython', kind]:.1f}x")


if __name__ == "__main__":
    main()
