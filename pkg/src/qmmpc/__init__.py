"""Output-feedback MPC for switched polytopic systems.

An offline LMI-synthesized state observer, a per-step semidefinite program
minimizing a worst-case cost bound with an input-increment objective, a
small dense interior-point LMI solver (compiled kernels with a pure-numpy
fallback), and a closed-loop simulation harness with CSV traces.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .controller import (
    BASELINE,
    PROPOSED,
    ControllerConfig,
    ControllerStep,
    StepInput,
    build_step_lmis,
    mpc_step,
    predict_next,
)
from .harness import SimTrace, compare_runs, export_csv, rms, run_closed_loop
from .observer import ObserverDesign, ObserverSpec, synthesize, verify_gain
from .plant import PolytopicModel, SwitchSignal, dsws, example_model, rsws
from .sdp import Solution, SolveOptions, solve_feasible, solve_min

__version__ = "0.1.0"

__all__ = [
    "BASELINE",
    "PROPOSED",
    "ControllerConfig",
    "ControllerStep",
    "KERNEL_BACKEND",
    "ObserverDesign",
    "ObserverSpec",
    "PolytopicModel",
    "SimTrace",
    "Solution",
    "SolveOptions",
    "StepInput",
    "SwitchSignal",
    "build_step_lmis",
    "compare_runs",
    "dsws",
    "example_model",
    "export_csv",
    "mpc_step",
    "predict_next",
    "rms",
    "rsws",
    "run_closed_loop",
    "solve_feasible",
    "solve_min",
    "synthesize",
    "verify_gain",
]
