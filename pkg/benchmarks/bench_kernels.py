"""Benchmark the compiled kernels against the pure-numpy fallback.

Two views:
  * micro: time per barrier gradient/Hessian call on the block set of a
    representative controller-step program;
  * macro: wall time of a short closed-loop run under each backend,
    executed in subprocesses so the import-time backend selection applies.

Run from the repository root:  python benchmarks/bench_kernels.py
"""

import os
import subprocess
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

import numpy as np  # noqa: E402

from qmmpc import controller, observer, plant  # noqa: E402
from qmmpc._kernels import _py  # noqa: E402

try:
    from qmmpc._kernels import _native
except ImportError:
    _native = None


def step_blocks():
    model = plant.example_model()
    spec = observer.ObserverSpec(rho=np.sqrt(0.7), W=np.eye(2))
    design = observer.synthesize(model, spec)
    cfg = controller.ControllerConfig(Q=np.eye(2), R=np.array([[1.0]]), u_max=np.array([1.0]))
    x0 = np.array([-1.5, -0.2])
    xhat0 = np.array([0.5, 1.0])
    _, y0 = plant.step(model, 1, x0, np.zeros(1))
    inp = controller.StepInput(xhat=xhat0, y=y0, s=1, u_prev=np.zeros(1), k=1)
    prog = controller.build_step_lmis(model, design, cfg, inp)
    return prog


def bench_micro(repeats: int = 20000):
    prog = step_blocks()
    blocks = prog.all_blocks()
    n = prog.var_count
    z = np.zeros(n)
    z[-1] = 50.0  # keep the cost-bound rows PD so the kernels factorize
    z[3] = z[5] = 5.0
    z[6] = 0.5
    rows = []
    backends = [("numpy", _py)] + ([("native", _native)] if _native else [])
    for name, mod in backends:
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        works = [(np.empty((b.order, b.order)), np.empty((b.ids.size, b.order, b.order)))
                 for b in blocks]
        t0 = time.perf_counter()
        for _ in range(repeats):
            grad[:] = 0.0
            hess[:] = 0.0
            for blk, (fw, gw) in zip(blocks, works):
                mod.block_grad_hess(blk.f0, blk.coeffs, blk.ids, z, grad, hess, fw, gw)
        dt = time.perf_counter() - t0
        rows.append((name, dt / repeats * 1e6))
    print(f"micro: barrier gradient/Hessian over all {len(blocks)} blocks of one step program")
    for name, us in rows:
        print(f"  {name:7s} {us:8.1f} us/pass")
    if len(rows) == 2:
        print(f"  speedup {rows[0][1] / rows[1][1]:.1f}x")


_MACRO_SNIPPET = r"""
import time
import numpy as np
from qmmpc import controller, harness, observer, plant
from qmmpc._kernels import BACKEND

model = plant.example_model()
design = observer.synthesize(model, observer.ObserverSpec(rho=np.sqrt(0.7), W=np.eye(2)))
cfg = controller.ControllerConfig(Q=np.eye(2), R=np.array([[1.0]]), u_max=np.array([1.0]))
sig = plant.dsws(30)
t0 = time.perf_counter()
trace = harness.run_closed_loop(model, design, cfg, sig, np.array([-1.5, -0.2]), np.array([0.5, 1.0]))
dt = time.perf_counter() - t0
print(f"{BACKEND} {dt:.3f} {trace.horizon / dt:.1f}")
"""


def bench_macro():
    print("macro: 30-step closed-loop run per backend (subprocess, fresh import)")
    env_base = dict(os.environ)
    env_base["PYTHONPATH"] = os.pathsep.join(
        [os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "src"),
         env_base.get("PYTHONPATH", "")]
    )
    configs = [("native", {})] if _native else []
    configs.append(("numpy", {"QMMPC_PURE_PYTHON": "1"}))
    for label, extra in configs:
        env = dict(env_base)
        env.update(extra)
        out = subprocess.run(
            [sys.executable, "-c", _MACRO_SNIPPET],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"  {out[0]:7s} {float(out[1]):7.2f} s  ({float(out[2]):6.1f} steps/s)")


if __name__ == "__main__":
    bench_micro()
    bench_macro()
