"""Closed-loop simulation: plant -> output -> observer -> controller -> plant.

Runs record everything needed to reproduce and audit an experiment, enforce
the per-step invariant battery (on by default), and export to CSV.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import controller, observer, sdp
from .errors import (
    DimensionMismatch,
    EmptySeries,
    InvariantViolation,
    MismatchedRuns,
    NumericalFailure,
)

# Quadratic estimation-error levels below this floor are float noise; the
# decay check is not armed there.
_DECAY_FLOOR = 1e-24


@dataclass
class SimTrace:
    """Time-indexed record of one closed-loop run (one row per step)."""

    x: np.ndarray        # (T, n_x) true state
    xhat: np.ndarray     # (T, n_x) estimate
    x_p: np.ndarray      # (T, n_x) one-step prediction at the applied input
    y: np.ndarray        # (T, n_y)
    u: np.ndarray        # (T, n_u) applied input
    du: np.ndarray       # (T, n_u) applied increment
    delta: np.ndarray    # (T,) solved cost bound
    margin: np.ndarray   # (T,) certified feasibility margin
    cond_phi: np.ndarray  # (T,) condition number of Phi
    s: np.ndarray        # (T,) mode index
    feasible: np.ndarray  # (T,) bool
    x_final: np.ndarray  # state after the last applied input
    xhat_final: np.ndarray
    mode: str
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return int(self.s.size)

    @property
    def infeasible_steps(self) -> int:
        return int(np.count_nonzero(~self.feasible))


def run_closed_loop(model, design, cfg, signal, x0, xhat0,
                    opts: sdp.SolveOptions | None = None,
                    runtime_checks: bool = True) -> SimTrace:
    """Execute the receding-horizon loop over the whole switching signal.

    Per step: read the mode, measure y, solve the controller step, apply the
    input to plant and estimator, and record everything. With
    ``runtime_checks`` the battery below runs every step and any failure
    aborts with the step index:

      (i)   ellipsoid membership of the step's certified prediction,
      (ii)  vertexwise future-loop contraction,
      (iii) strict input bound,
      (iv)  estimation-error decay at rate rho^2 in the P_o norm.
    """
    x = np.asarray(x0, dtype=float).copy()
    xhat = np.asarray(xhat0, dtype=float).copy()
    if x.shape != (model.n_x,) or xhat.shape != (model.n_x,):
        raise DimensionMismatch(f"x0/xhat0 must have shape ({model.n_x},)")
    T = signal.horizon
    n_x, n_u, n_y = model.n_x, model.n_u, model.n_y
    tr = SimTrace(
        x=np.empty((T, n_x)), xhat=np.empty((T, n_x)), x_p=np.empty((T, n_x)),
        y=np.empty((T, n_y)), u=np.empty((T, n_u)), du=np.empty((T, n_u)),
        delta=np.empty(T), margin=np.empty(T), cond_phi=np.empty(T),
        s=np.asarray(signal.modes, dtype=np.int64).copy(),
        feasible=np.empty(T, dtype=bool),
        x_final=np.empty(n_x), xhat_final=np.empty(n_x),
        mode=cfg.mode,
        meta={
            "signal_kind": signal.kind,
            "seed": signal.seed,
            "u_max": cfg.u_max.tolist(),
            "eps": cfg.eps,
            "rho": design.spec.rho,
            "horizon": T,
        },
    )
    u_prev = np.zeros(n_u)
    psi_prev = None
    for k in range(T):
        s = int(signal.modes[k])
        a_s, b_s, c_s = model.vertex(s)
        y = c_s @ x
        inp = controller.StepInput(xhat=xhat, y=y, s=s, u_prev=u_prev, k=k, psi_prev=psi_prev)
        try:
            step = controller.mpc_step(model, design, cfg, inp, opts)
        except NumericalFailure as exc:
            raise NumericalFailure(f"step {k}: {exc}") from exc
        x_p = controller.predict_next(model, design, inp, step.du)

        if runtime_checks and step.solved:
            cert = controller.certified_prediction(model, design, cfg, inp, step.du)
            level = float(cert @ step.Gamma @ cert)
            if not level < step.delta:
                raise InvariantViolation(
                    f"step {k}: prediction left the invariant ellipsoid "
                    f"({level:.6e} >= {step.delta:.6e})"
                )
            cm = controller.contraction_margin(model, cfg, step)
            if not cm > 0.0:
                raise InvariantViolation(f"step {k}: future-loop contraction margin {cm:.3e}")
            if not np.all(np.abs(step.u) < cfg.u_max):
                raise InvariantViolation(f"step {k}: input bound violated, u={step.u}")

        x_next = a_s @ x + b_s @ step.u
        xhat_next = observer.step(design, model, s, xhat, step.u, y)
        if runtime_checks:
            e = x - xhat
            e_next = x_next - xhat_next
            lvl = float(e @ design.P_o @ e)
            lvl_next = float(e_next @ design.P_o @ e_next)
            if lvl > _DECAY_FLOOR and not lvl_next <= design.spec.rho**2 * lvl:
                raise InvariantViolation(
                    f"step {k}: estimation error decay failed "
                    f"({lvl_next:.6e} > rho^2 * {lvl:.6e})"
                )

        tr.x[k], tr.xhat[k], tr.x_p[k] = x, xhat, x_p
        tr.y[k], tr.u[k], tr.du[k] = y, step.u, step.du
        tr.delta[k], tr.margin[k], tr.cond_phi[k] = step.delta, step.margin, step.cond_phi
        tr.feasible[k] = step.solved
        x, xhat, u_prev = x_next, xhat_next, step.u
        if step.solved:
            psi_prev = step.Psi
    tr.x_final[:] = x
    tr.xhat_final[:] = xhat
    return tr


def rms(series) -> float:
    """Root mean square of a non-empty 1-D series."""
    arr = np.asarray(series, dtype=float).ravel()
    if arr.size == 0:
        raise EmptySeries("rms of an empty series")
    return float(np.sqrt(np.mean(arr**2)))


def switch_instants(signal_modes) -> np.ndarray:
    modes = np.asarray(signal_modes)
    return np.flatnonzero(modes[1:] != modes[:-1]) + 1


@dataclass
class ComparisonReport:
    """Side-by-side metrics of two runs on the same signal."""

    rms_y_a: float
    rms_y_b: float
    max_switch_jump_a: float
    max_switch_jump_b: float
    near_bound_steps_a: int
    near_bound_steps_b: int
    u0_a: np.ndarray
    u0_b: np.ndarray
    mode_a: str
    mode_b: str

    @property
    def rms_y_delta(self) -> float:
        return self.rms_y_b - self.rms_y_a

    @property
    def max_switch_jump_delta(self) -> float:
        return self.max_switch_jump_b - self.max_switch_jump_a

    def as_kv(self) -> str:
        items = [
            ("mode_a", self.mode_a), ("mode_b", self.mode_b),
            ("rms_y_a", f"{self.rms_y_a:.17g}"), ("rms_y_b", f"{self.rms_y_b:.17g}"),
            ("rms_y_delta", f"{self.rms_y_delta:.17g}"),
            ("max_switch_jump_a", f"{self.max_switch_jump_a:.17g}"),
            ("max_switch_jump_b", f"{self.max_switch_jump_b:.17g}"),
            ("max_switch_jump_delta", f"{self.max_switch_jump_delta:.17g}"),
            ("near_bound_steps_a", str(self.near_bound_steps_a)),
            ("near_bound_steps_b", str(self.near_bound_steps_b)),
            ("u0_a", " ".join(f"{v:.17g}" for v in self.u0_a)),
            ("u0_b", " ".join(f"{v:.17g}" for v in self.u0_b)),
        ]
        return "\n".join(f"{k} = {v}" for k, v in items) + "\n"

    def as_text(self) -> str:
        return (
            f"run A ({self.mode_a}) vs run B ({self.mode_b})\n"
            f"  rms(y):             {self.rms_y_a:.6f} vs {self.rms_y_b:.6f}\n"
            f"  max switch jump:    {self.max_switch_jump_a:.6f} vs {self.max_switch_jump_b:.6f}\n"
            f"  steps near |u| cap: {self.near_bound_steps_a} vs {self.near_bound_steps_b}\n"
            f"  u(0):               {np.array2string(self.u0_a)} vs {np.array2string(self.u0_b)}\n"
        )


def compare_runs(a: SimTrace, b: SimTrace) -> ComparisonReport:
    """Metrics the A/B comparison cares about; runs must share the signal."""
    if a.horizon != b.horizon:
        raise MismatchedRuns(f"horizons differ: {a.horizon} vs {b.horizon}")
    if not np.array_equal(a.s, b.s):
        raise MismatchedRuns("switching signals differ")

    def max_jump(tr):
        ks = switch_instants(tr.s)
        if ks.size == 0:
            return 0.0
        return float(max(np.abs(tr.u[k] - tr.u[k - 1]).max() for k in ks))

    def near_bound(tr):
        u_max = np.asarray(tr.meta["u_max"])
        return int(np.count_nonzero(np.any(u_max - np.abs(tr.u) <= 1e-6, axis=1)))

    return ComparisonReport(
        rms_y_a=rms(a.y), rms_y_b=rms(b.y),
        max_switch_jump_a=max_jump(a), max_switch_jump_b=max_jump(b),
        near_bound_steps_a=near_bound(a), near_bound_steps_b=near_bound(b),
        u0_a=a.u[0].copy(), u0_b=b.u[0].copy(),
        mode_a=a.mode, mode_b=b.mode,
    )


def csv_header(n_x: int, n_u: int, n_y: int) -> list:
    cols = ["k", "s"]
    cols += [f"x{i + 1}" for i in range(n_x)]
    cols += [f"xhat{i + 1}" for i in range(n_x)]
    cols += [f"y{i + 1}" for i in range(n_y)]
    cols += [f"u{i + 1}" for i in range(n_u)]
    cols += [f"du{i + 1}" for i in range(n_u)]
    cols += ["delta", "feasible", "margin"]
    return cols


def export_csv(trace: SimTrace, destination) -> None:
    """Write header plus one row per step, 17 significant digits, locale-free."""
    n_x = trace.x.shape[1]
    n_u = trace.u.shape[1]
    n_y = trace.y.shape[1]

    def fmt(v: float) -> str:
        return f"{v:.17g}"

    def write(fh):
        fh.write(",".join(csv_header(n_x, n_u, n_y)) + "\n")
        for k in range(trace.horizon):
            row = [str(k), str(int(trace.s[k]))]
            row += [fmt(v) for v in trace.x[k]]
            row += [fmt(v) for v in trace.xhat[k]]
            row += [fmt(v) for v in trace.y[k]]
            row += [fmt(v) for v in trace.u[k]]
            row += [fmt(v) for v in trace.du[k]]
            row += [fmt(trace.delta[k]), str(int(trace.feasible[k])), fmt(trace.margin[k])]
            fh.write(",".join(row) + "\n")

    if hasattr(destination, "write"):
        write(destination)
    else:
        with open(destination, "w", encoding="ascii", newline="\n") as fh:
            write(fh)


def read_csv(path) -> dict:
    """Parse an exported trace back into column arrays (floats, exact)."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    cols = {}
    for i, name in enumerate(header):
        vals = [row[i] for row in rows]
        if name in ("k", "s", "feasible"):
            cols[name] = np.array([int(v) for v in vals], dtype=np.int64)
        else:
            cols[name] = np.array([float(v) for v in vals])
    return cols
