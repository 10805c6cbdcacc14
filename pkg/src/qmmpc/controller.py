"""Online output-feedback MPC step.

At each step the current measurement, mode, estimate and previous input are
assembled into one semidefinite program: minimize the worst-case cost bound
delta subject to

  "Eq45"     cost-bound block (order 1 + 2 n_x + n_u) coupling the one-step
             prediction x_p(k+1|k) = A_s xhat + B_s (u_prev + du) + L (y -
             C_s xhat), the current estimate through theta^(1/2) xhat with
             theta = (I+A_s)' Q (I+A_s), the increment through beta^(1/2) du
             with beta = B_s' Q B_s + R, and the drift energy in the corner
             eta = 1 + d' Q d;
  "Eq46-j"   one future-contraction block per vertex (order 3 n_x + n_u);
  "Eq47"     delta*I - eps*Phi > 0;
  "Eq48-j"   [[u_max_j, u_j], [u_j, u_max_j]] > 0 per input;
  "Eq49"     [[S_u, Y], [Y^T, Phi]] > 0 plus (S_u)_jj < u_max_j^2;
  "Eq52"     [[1, x_p'], [x_p, Phi]] > 0, the invariant-ellipsoid
             membership of the prediction. The cost-bound block alone only
             confines the prediction to the eta-scaled ellipsoid, so the
             membership at level one is imposed explicitly; every solved
             step then certifies x_p' Gamma x_p < delta.

Decision variables: du (or u in baseline mode), Y, Phi (symmetric), S_u
(symmetric), delta. The applied input is u = u_prev + du; the future
feedback law is Psi = Y Phi^-1 with Lyapunov weight Gamma = delta Phi^-1.
The prediction in the first row of the cost-bound block is what couples the
applied input to the bound being minimized.

The baseline mode penalizes the total input u instead of the increment and
drops the previous-input drift, isolating exactly the two differences the
proposed scheme introduces; it is an approximation for A/B comparison, not
a reproduction of any particular external controller.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lmi, linalg, sdp
from .errors import DimensionMismatch, NumericalFailure, UnboundedProblem

PROPOSED = "proposed"
BASELINE = "baseline"

ZERO_INIT = "zero-init"
FALLBACK = "fallback"

# Condition-number threshold above which a step's Phi inverse is flagged.
COND_PHI_FLAG = 1e10


@dataclass(frozen=True)
class ControllerConfig:
    """Cost weights, input bounds, and the ellipsoid floor eps."""

    Q: np.ndarray
    R: np.ndarray
    u_max: np.ndarray
    eps: float = 1e-3
    mode: str = PROPOSED
    # Include B_s u_prev in the drift term of the cost-bound block. Off only
    # for sensitivity comparison; baseline mode ignores it.
    drift_includes_u_prev: bool = True

    def __post_init__(self):
        q = linalg.require_symmetric(self.Q, "Q")
        r = linalg.require_symmetric(self.R, "R")
        if not linalg.is_positive_definite(q):
            raise ValueError("Q must be positive definite")
        if not linalg.is_positive_definite(r):
            raise ValueError("R must be positive definite")
        u_max = np.atleast_1d(np.asarray(self.u_max, dtype=float))
        if np.any(u_max <= 0):
            raise ValueError("u_max must be positive componentwise")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.mode not in (PROPOSED, BASELINE):
            raise ValueError(f"unknown controller mode {self.mode!r}")
        object.__setattr__(self, "Q", q)
        object.__setattr__(self, "R", r)
        object.__setattr__(self, "u_max", u_max)


@dataclass(frozen=True)
class StepInput:
    """Measurement/mode/estimate context of one controller step."""

    xhat: np.ndarray
    y: np.ndarray
    s: int
    u_prev: np.ndarray
    k: int
    psi_prev: np.ndarray | None = None  # fallback gain when a step is infeasible

    def __post_init__(self):
        object.__setattr__(self, "xhat", np.asarray(self.xhat, dtype=float))
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))
        object.__setattr__(self, "u_prev", np.atleast_1d(np.asarray(self.u_prev, dtype=float)))


@dataclass(frozen=True)
class ControllerStep:
    """Solved step: applied increment/input, future law, and certificates."""

    du: np.ndarray
    u: np.ndarray
    Y: np.ndarray
    Phi: np.ndarray
    delta: float
    Psi: np.ndarray
    Gamma: np.ndarray | None
    margin: float
    status: str
    cond_phi: float
    Su: np.ndarray | None = None
    violated: tuple = field(default=())

    @property
    def solved(self) -> bool:
        return self.status in (sdp.OPTIMAL, sdp.FEASIBLE)


def _validate(model, inp: StepInput, cfg: ControllerConfig):
    if inp.xhat.shape != (model.n_x,):
        raise DimensionMismatch(f"xhat must have shape ({model.n_x},), got {inp.xhat.shape}")
    if inp.y.shape != (model.n_y,):
        raise DimensionMismatch(f"y must have shape ({model.n_y},), got {inp.y.shape}")
    if inp.u_prev.shape != (model.n_u,):
        raise DimensionMismatch(f"u_prev must have shape ({model.n_u},), got {inp.u_prev.shape}")
    if cfg.Q.shape != (model.n_x, model.n_x) or cfg.R.shape != (model.n_u, model.n_u):
        raise DimensionMismatch("Q/R dimensions do not match the model")
    if cfg.u_max.shape != (model.n_u,):
        raise DimensionMismatch(f"u_max must have shape ({model.n_u},), got {cfg.u_max.shape}")


def drift_term(model, design, cfg: ControllerConfig, inp: StepInput) -> np.ndarray:
    """Constant part of the one-step prediction: L(y - C xhat) [+ B u_prev]."""
    a, b, c = model.vertex(inp.s)
    d = design.L_obs @ (inp.y - c @ inp.xhat)
    if cfg.mode == PROPOSED and cfg.drift_includes_u_prev:
        d = d + b @ inp.u_prev
    return d


def _build(model, design, cfg: ControllerConfig, inp: StepInput, pin_du: bool = False):
    """Assemble the per-step program.

    With ``pin_du`` the input increment is fixed at zero instead of being a
    decision variable (the zero-initialization convention of the very first
    proposed-mode step), so the returned certificates hold at the input
    actually applied.
    """
    _validate(model, inp, cfg)
    n_x, n_u = model.n_x, model.n_u
    a_s, b_s, c_s = model.vertex(inp.s)
    q_half = linalg.sym_sqrt(cfg.Q)
    r_half = linalg.sym_sqrt(cfg.R)
    theta = linalg.symmetrize((np.eye(n_x) + a_s).T @ cfg.Q @ (np.eye(n_x) + a_s))
    beta = linalg.symmetrize(b_s.T @ cfg.Q @ b_s + cfg.R)
    theta_half = linalg.sym_sqrt(theta)
    beta_half = linalg.sym_sqrt(beta)
    drift = drift_term(model, design, cfg, inp)
    eta = 1.0 + float(drift @ cfg.Q @ drift)
    innovation = design.L_obs @ (inp.y - c_s @ inp.xhat)
    # Input-independent part of the prediction the program certifies. The
    # proposed mode folds the innovation into the prediction (uncertainty
    # reduction); the baseline treats the next state as plain model
    # propagation and only hedges the innovation energy inside eta.
    if cfg.mode == PROPOSED:
        pred_const = a_s @ inp.xhat + b_s @ inp.u_prev + innovation
    else:
        pred_const = a_s @ inp.xhat

    b = lmi.LmiProgramBuilder()
    du_ids = None if pin_du else b.scalars("du" if cfg.mode == PROPOSED else "u", n_u)
    y_ids = b.rect("Y", n_u, n_x)
    phi_ids = b.symmetric("Phi", n_x)
    su_ids = b.symmetric("Su", n_u)
    delta_id = b.scalar("delta")

    def phi_basis(i, j):
        e = np.zeros((n_x, n_x))
        e[i, j] = 1.0
        if i != j:
            e[j, i] = 1.0
        return e

    col = inp.xhat.reshape(n_x, 1)

    # Cost-bound block.
    blk = lmi.BlockBuilder("Eq45", [1, n_x, n_x, n_u])
    blk.const(0, 0, [[eta]])
    blk.const(1, 0, pred_const.reshape(n_x, 1))
    blk.const(2, 0, theta_half @ col)
    if du_ids is not None:
        for j in range(n_u):
            # du (u in baseline) moves the prediction and pays beta^(1/2) du.
            blk.coeff(du_ids[j], 1, 0, b_s[:, [j]])
            blk.coeff(du_ids[j], 3, 0, beta_half[:, [j]])
    for i in range(n_x):
        for j in range(i, n_x):
            blk.coeff(phi_ids[i, j], 1, 1, phi_basis(i, j))
    blk.coeff(delta_id, 2, 2, np.eye(n_x))
    blk.coeff(delta_id, 3, 3, np.eye(n_u))
    b.constraint(blk.build())

    # Future-contraction block per vertex.
    for v, (a_j, b_j, _) in enumerate(model.vertices, start=1):
        blk = lmi.BlockBuilder(f"Eq46-vertex{v}", [n_x, n_x, n_x, n_u])
        for i in range(n_x):
            for j in range(i, n_x):
                e = phi_basis(i, j)
                blk.coeff(phi_ids[i, j], 0, 0, e)
                blk.coeff(phi_ids[i, j], 1, 1, e)
                blk.coeff(phi_ids[i, j], 1, 0, a_j @ e)
                blk.coeff(phi_ids[i, j], 2, 0, q_half @ e)
        for p in range(n_u):
            for q in range(n_x):
                basis = np.zeros((n_u, n_x))
                basis[p, q] = 1.0
                blk.coeff(y_ids[p, q], 1, 0, b_j @ basis)
                blk.coeff(y_ids[p, q], 3, 0, r_half @ basis)
        blk.coeff(delta_id, 2, 2, np.eye(n_x))
        blk.coeff(delta_id, 3, 3, np.eye(n_u))
        b.constraint(blk.build())

    # Ellipsoid floor.
    blk = lmi.BlockBuilder("Eq47", [n_x])
    blk.coeff(delta_id, 0, 0, np.eye(n_x))
    for i in range(n_x):
        for j in range(i, n_x):
            blk.coeff(phi_ids[i, j], 0, 0, -cfg.eps * phi_basis(i, j))
    b.constraint(blk.build())

    # Applied-input bound per input.
    for j in range(n_u):
        blk = lmi.BlockBuilder(f"Eq48-input{j + 1}", [1, 1])
        blk.const(0, 0, [[cfg.u_max[j]]])
        blk.const(1, 1, [[cfg.u_max[j]]])
        if cfg.mode == PROPOSED:
            blk.const(1, 0, [[inp.u_prev[j]]])
        if du_ids is not None:
            blk.coeff(du_ids[j], 1, 0, [[1.0]])
        b.constraint(blk.build())

    # Future-law bound.
    blk = lmi.BlockBuilder("Eq49", [n_u, n_x])
    for i in range(n_u):
        for j in range(i, n_u):
            e = np.zeros((n_u, n_u))
            e[i, j] = 1.0
            if i != j:
                e[j, i] = 1.0
            blk.coeff(su_ids[i, j], 0, 0, e)
    for p in range(n_u):
        for q in range(n_x):
            basis = np.zeros((n_x, n_u))
            basis[q, p] = 1.0
            blk.coeff(y_ids[p, q], 1, 0, basis)
    for i in range(n_x):
        for j in range(i, n_x):
            blk.coeff(phi_ids[i, j], 1, 1, phi_basis(i, j))
    b.constraint(blk.build())

    # Invariant-ellipsoid membership of the prediction.
    blk = lmi.BlockBuilder("Eq52", [1, n_x])
    blk.const(0, 0, [[1.0]])
    blk.const(1, 0, pred_const.reshape(n_x, 1))
    if du_ids is not None:
        for j in range(n_u):
            blk.coeff(du_ids[j], 1, 0, b_s[:, [j]])
    for i in range(n_x):
        for j in range(i, n_x):
            blk.coeff(phi_ids[i, j], 1, 1, phi_basis(i, j))
    b.constraint(blk.build())

    for j in range(n_u):
        b.bound(su_ids[j, j], hi=float(cfg.u_max[j] ** 2))

    b.objective_coeff(delta_id, 1.0)
    layout = {"du": du_ids, "Y": y_ids, "Phi": phi_ids, "Su": su_ids, "delta": delta_id}
    return b.build(), layout


def step_program(model, design, cfg: ControllerConfig, inp: StepInput):
    """The per-step program plus the variable layout (id arrays per owner)."""
    return _build(model, design, cfg, inp)


def build_step_lmis(model, design, cfg: ControllerConfig, inp: StepInput) -> lmi.LmiProgram:
    """The per-step program: objective delta, blocks labeled by family."""
    prog, _ = _build(model, design, cfg, inp)
    return prog


def _fallback_step(model, cfg, inp, sol, program, feas_margin: float) -> ControllerStep:
    """Infeasible step: reuse the previous future law, clamped to the box."""
    n_x, n_u = model.n_x, model.n_u
    if inp.psi_prev is not None:
        du = np.asarray(inp.psi_prev, dtype=float) @ inp.xhat
    else:
        du = np.zeros(n_u)
    u = np.clip(inp.u_prev + du, -cfg.u_max, cfg.u_max)
    violated = tuple(
        label for label, m in lmi.block_margins(program, sol.z) if m < feas_margin
    )
    return ControllerStep(
        du=u - inp.u_prev,
        u=u,
        Y=np.zeros((n_u, n_x)),
        Phi=np.eye(n_x),
        delta=float("nan"),
        Psi=np.asarray(inp.psi_prev, dtype=float) if inp.psi_prev is not None else np.zeros((n_u, n_x)),
        Gamma=None,
        margin=sol.margin,
        status=FALLBACK,
        cond_phi=float("nan"),
        violated=violated,
    )


def mpc_step(model, design, cfg: ControllerConfig, inp: StepInput,
             opts: sdp.SolveOptions | None = None) -> ControllerStep:
    """Solve the per-step program and extract the applied input and future law.

    In proposed mode the very first step (k = 0, u_prev = 0) applies no
    input: the program is solved with the increment pinned at zero, so the
    reported u(0) = 0 exactly and the certificates hold at the applied
    input; the first solved input takes effect from step 1.

    An infeasible program produces a flagged fallback step instead of
    aborting; numerical failures raise.
    """
    opts = opts or sdp.SolveOptions()
    pin_du = cfg.mode == PROPOSED and inp.k == 0
    program, layout = _build(model, design, cfg, inp, pin_du=pin_du)
    sol = sdp.solve_min(program, opts)
    if sol.status == sdp.NUMERICAL_FAILURE:
        raise NumericalFailure(f"controller step k={inp.k}: solver stalled")
    if sol.status == sdp.UNBOUNDED:
        raise UnboundedProblem(f"controller step k={inp.k}: cost bound unbounded below")
    if sol.status == sdp.INFEASIBLE:
        return _fallback_step(model, cfg, inp, sol, program, opts.feas_margin)

    z = sol.z
    phi = linalg.symmetrize(z[layout["Phi"]])
    phi_inv, cond_phi = linalg.inv_sym(phi)
    y_mat = z[layout["Y"]]
    delta = float(z[layout["delta"]])
    psi = y_mat @ phi_inv
    gamma = linalg.symmetrize(delta * phi_inv)
    if pin_du:
        du = np.zeros(model.n_u)
        u = np.zeros(model.n_u)
    elif cfg.mode == PROPOSED:
        du = z[layout["du"]]
        u = inp.u_prev + du
    else:
        u = z[layout["du"]]
        du = u - inp.u_prev
    return ControllerStep(
        du=du,
        u=u,
        Y=y_mat,
        Phi=phi,
        delta=delta,
        Psi=psi,
        Gamma=gamma,
        margin=sol.margin,
        status=sol.status,
        cond_phi=cond_phi,
        Su=linalg.symmetrize(z[layout["Su"]]),
    )


def predict_next(model, design, inp: StepInput, du) -> np.ndarray:
    """One-step prediction at the applied input u_prev + du.

    Coincides with the estimator update driven by the same input.
    """
    a, b, c = model.vertex(inp.s)
    du = np.atleast_1d(np.asarray(du, dtype=float))
    if du.shape != (model.n_u,):
        raise DimensionMismatch(f"du must have shape ({model.n_u},), got {du.shape}")
    innovation = design.L_obs @ (inp.y - c @ inp.xhat)
    return a @ inp.xhat + b @ (inp.u_prev + du) + innovation


def future_input(step_result: ControllerStep, x_p) -> np.ndarray:
    """Hypothetical future control law u = Psi x_p (invariant testing only)."""
    return step_result.Psi @ np.asarray(x_p, dtype=float)


def certified_prediction(model, design, cfg: ControllerConfig, inp: StepInput, du) -> np.ndarray:
    """The prediction the step's own program certifies inside the ellipsoid.

    Equal to predict_next in proposed mode; the baseline certifies the plain
    model propagation A_s xhat + B_s u without the innovation correction.
    """
    if cfg.mode == PROPOSED:
        return predict_next(model, design, inp, du)
    a, b, _ = model.vertex(inp.s)
    du = np.atleast_1d(np.asarray(du, dtype=float))
    return a @ inp.xhat + b @ (inp.u_prev + du)


def contraction_margin(model, cfg: ControllerConfig, step_result: ControllerStep) -> float:
    """min over vertices of lambda_min(Gamma - Q - Psi'R Psi - w_j' Gamma w_j).

    Positive at every solved step: the future closed loop contracts the
    Lyapunov weight faster than the stage cost accrues.
    """
    psi, gamma = step_result.Psi, step_result.Gamma
    worst = np.inf
    base = gamma - cfg.Q - psi.T @ cfg.R @ psi
    for a_j, b_j, _ in model.vertices:
        omega = a_j + b_j @ psi
        mat = linalg.symmetrize(base - omega.T @ gamma @ omega)
        worst = min(worst, linalg.min_eigenvalue(mat))
    return float(worst)
