"""Timing comparison of the two kernel backends.

Times the hot entry points (loss, shift-rule gradient, double-shift
Hessian, and the fused descent loop) on a small and a medium ansatz, once
per backend.  The compiled backend pays its JIT cost in an untimed warmup
call, so the numbers reflect steady-state use.  Both backends are checked
against each other on the loss before timing.

Usage::

    python3 benchmarks/benchmark_kernels.py [--scale X]
"""

import argparse
import time

import numpy as np

import vqa_lab as v
from vqa_lab.backend import get_kernels
from vqa_lab.gradient import _kernel_args


def build_workloads(scale):
    small = v.strongly_entangling_layout(4, 2)
    medium = v.strongly_entangling_layout(8, 3)
    h4, h8 = v.sum_z(4), v.sum_z(8)
    rng = np.random.default_rng(7)
    theta_s = rng.uniform(-np.pi, np.pi, small.n_params)
    theta_m = rng.uniform(-np.pi, np.pi, medium.n_params)
    args_s = _kernel_args(small, h4)
    args_m = _kernel_args(medium, h8)

    p = small.n_params
    n_steps = 200
    noise = np.random.default_rng(3).normal(0.0, 0.1, size=(n_steps, p))
    losses = np.empty(n_steps + 1)
    gnorms = np.empty(n_steps + 1)
    grad_s = np.empty(small.n_params)
    grad_m = np.empty(medium.n_params)
    hess_s = np.empty((small.n_params, small.n_params))

    def reps(n):
        return max(1, int(round(n * scale)))

    return [
        ("loss, 4 qubits x 2 layers", reps(2000),
         lambda k: k.loss_eval(theta_s, *args_s)),
        ("loss, 8 qubits x 3 layers", reps(200),
         lambda k: k.loss_eval(theta_m, *args_m)),
        ("gradient, 4 qubits x 2 layers", reps(200),
         lambda k: k.grad_eval(theta_s, *args_s, grad_s)),
        ("gradient, 8 qubits x 3 layers", reps(20),
         lambda k: k.grad_eval(theta_m, *args_m, grad_m)),
        ("Hessian, 4 qubits x 2 layers", reps(10),
         lambda k: k.hess_eval(theta_s, *args_s, hess_s)),
        ("noisy descent, 200 steps", reps(3),
         lambda k: k.run_gd(theta_s.copy(), n_steps, 0.05, noise, 0.0,
                            *args_s, losses, gnorms)),
    ], (theta_s, args_s)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scale", type=float, default=1.0,
                        help="multiply every repetition count by this factor")
    opts = parser.parse_args()

    backends = {name: get_kernels(name) for name in ("numba", "numpy")}
    workloads, (theta_s, args_s) = build_workloads(opts.scale)

    ref = {name: k.loss_eval(theta_s, *args_s)
           for name, k in backends.items()}
    if abs(ref["numba"] - ref["numpy"]) > 1e-12:
        raise SystemExit("backends disagree on the loss; not timing them")

    per_call = {}
    for b_name, k in backends.items():
        for w_name, n, fn in workloads:
            fn(k)  # warmup; compiles on the JIT backend
            t0 = time.perf_counter()
            for _ in range(n):
                fn(k)
            per_call[b_name, w_name] = (time.perf_counter() - t0) / n

    width = max(len(w) for w, _, _ in workloads)
    print("%-*s %12s %12s %9s" % (width, "workload", "numba", "numpy",
                                  "speedup"))
    for w_name, n, _ in workloads:
        tn = per_call["numba", w_name]
        tp = per_call["numpy", w_name]
        print("%-*s %10.4f ms %10.4f ms %8.1fx"
              % (width, w_name, tn * 1e3, tp * 1e3, tp / tn))


if __name__ == "__main__":
    main()
