"""Offline robust observer synthesis and the per-step estimator update.

For a polytopic model the error dynamics e(k+1) = (A_j - L C_j) e(k) must
contract at rate rho in a common quadratic norm: for every vertex j

    [[rho^2 P - W,  (P A_j - Y C_j)^T],
     [P A_j - Y C_j,        P       ]]  > 0,       Y = P L.

Synthesis maximizes the common feasibility margin of these blocks (subject
to a fixed normalization P <= P_CAP * I, without which the margin grows
without bound), which makes the returned design deterministic. The gain is
recovered as L = P^-1 Y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lmi, linalg, sdp
from .errors import DimensionMismatch, InfeasibleProblem, NumericalFailure

# Normalization cap for the Lyapunov matrix during synthesis.
P_CAP = 100.0


@dataclass(frozen=True)
class ObserverSpec:
    """Decay rate rho in (0, 1] and PD weighting matrix W."""

    rho: float
    W: np.ndarray

    def __post_init__(self):
        if not 0.0 < self.rho <= 1.0:
            raise ValueError(f"rho must lie in (0, 1], got {self.rho}")
        w = linalg.require_symmetric(self.W, "W")
        if not linalg.is_positive_definite(w):
            raise ValueError("W must be positive definite")
        object.__setattr__(self, "W", w)


@dataclass(frozen=True)
class ObserverDesign:
    """Observer gain, its Lyapunov certificate, and the generating spec."""

    L_obs: np.ndarray
    P_o: np.ndarray
    spec: ObserverSpec

    def __post_init__(self):
        object.__setattr__(self, "L_obs", np.asarray(self.L_obs, dtype=float))
        object.__setattr__(self, "P_o", linalg.require_symmetric(self.P_o, "P_o"))


def decay_blocks(model, spec: ObserverSpec, L, P) -> list:
    """The per-vertex certificate blocks evaluated at (L, P), assembled."""
    out = []
    y0 = P @ L
    for a, _, c in model.vertices:
        lower = P @ a - y0 @ c
        top = linalg.symmetrize(spec.rho**2 * P - spec.W)
        out.append(linalg.BlockSym2x2(A=top, B=lower, C=P).assembled())
    return out


def _entry_basis(n, i, j):
    e = np.zeros((n, n))
    e[i, j] = 1.0
    if i != j:
        e[j, i] = 1.0
    return e


def _common_p_program(model, spec: ObserverSpec, L=None, with_slack=False):
    """Program in (P[, Y][, s]): decay block per vertex plus P <= P_CAP*I.

    With L fixed the gain enters through Lambda_j = A_j - L C_j; otherwise
    Y = P L is a free rectangular variable. ``with_slack`` subtracts s*I
    from every decay block (not the cap) and sets the objective to -s.
    """
    n_x, n_y = model.n_x, model.n_y
    b = lmi.LmiProgramBuilder()
    p_ids = b.symmetric("P", n_x)
    y_ids = None if L is not None else b.rect("Y", n_x, n_y)
    s_id = b.scalar("slack") if with_slack else None

    for j, (a, _, c) in enumerate(model.vertices, start=1):
        blk = lmi.BlockBuilder(f"decay-vertex{j}", [n_x, n_x])
        blk.const(0, 0, -spec.W)
        lam = a if L is None else a - L @ c
        for i in range(n_x):
            for k in range(i, n_x):
                e = _entry_basis(n_x, i, k)
                blk.coeff(p_ids[i, k], 0, 0, spec.rho**2 * e)
                blk.coeff(p_ids[i, k], 1, 1, e)
                blk.coeff(p_ids[i, k], 1, 0, e @ lam)
        if y_ids is not None:
            for p in range(n_x):
                for q in range(n_y):
                    basis = np.zeros((n_x, n_y))
                    basis[p, q] = 1.0
                    blk.coeff(y_ids[p, q], 1, 0, -basis @ c)
        if s_id is not None:
            blk.coeff(s_id, 0, 0, -np.eye(n_x))
            blk.coeff(s_id, 1, 1, -np.eye(n_x))
        b.constraint(blk.build())

    cap = lmi.BlockBuilder("p-cap", [n_x])
    cap.const(0, 0, P_CAP * np.eye(n_x))
    for i in range(n_x):
        for k in range(i, n_x):
            cap.coeff(p_ids[i, k], 0, 0, -_entry_basis(n_x, i, k))
    b.constraint(cap.build())
    if s_id is not None:
        b.objective_coeff(s_id, -1.0)
    return b, p_ids, y_ids, s_id


def synthesize(model, spec: ObserverSpec, opts: sdp.SolveOptions | None = None) -> ObserverDesign:
    """Find (L_obs, P_o) certifying the decay rate at every vertex.

    Maximizes the common margin of the certificate blocks so the result is
    deterministic; raises InfeasibleProblem when no common P exists.
    """
    opts = opts or sdp.SolveOptions()
    b, p_ids, y_ids, s_id = _common_p_program(model, spec, L=None, with_slack=True)
    sol = sdp.solve_min(b.build(), opts)
    if sol.status == sdp.INFEASIBLE:
        raise InfeasibleProblem(
            f"no common Lyapunov matrix for rho={spec.rho:g} (best margin {sol.margin:.3e})"
        )
    if sol.status not in (sdp.OPTIMAL, sdp.FEASIBLE):
        raise NumericalFailure(f"observer synthesis failed: {sol.status}")
    p_mat = linalg.symmetrize(sol.z[p_ids])
    slack_val = float(sol.z[s_id])
    if slack_val < opts.feas_margin or not linalg.is_positive_definite(p_mat):
        raise InfeasibleProblem(
            f"no common Lyapunov matrix for rho={spec.rho:g} (best margin {slack_val:.3e})"
        )
    gain = np.linalg.solve(p_mat, sol.z[y_ids])
    design = ObserverDesign(L_obs=gain, P_o=p_mat, spec=spec)
    worst = min(linalg.min_eigenvalue(blk) for blk in decay_blocks(model, spec, gain, p_mat))
    if worst < opts.feas_margin:
        raise NumericalFailure(f"synthesized design re-certifies at margin {worst:.3e}")
    return design


def verify_gain(model, L, spec: ObserverSpec, opts: sdp.SolveOptions | None = None) -> sdp.Solution:
    """Feasibility in P alone with the gain fixed; certifies a given L."""
    L = np.asarray(L, dtype=float)
    if L.shape != (model.n_x, model.n_y):
        raise DimensionMismatch(f"gain must have shape ({model.n_x}, {model.n_y}), got {L.shape}")
    opts = opts or sdp.SolveOptions()
    b, _, _, _ = _common_p_program(model, spec, L=L)
    return sdp.solve_feasible(b.build(), opts)


def step(design: ObserverDesign, model, s: int, xhat, u, y) -> np.ndarray:
    """Estimator update: A_s xhat + B_s u + L (y - C_s xhat)."""
    a, bm, c = model.vertex(s)
    xhat = np.asarray(xhat, dtype=float)
    u = np.asarray(u, dtype=float)
    y = np.asarray(y, dtype=float)
    if xhat.shape != (model.n_x,) or u.shape != (model.n_u,) or y.shape != (model.n_y,):
        raise DimensionMismatch(
            f"expected shapes ({model.n_x},), ({model.n_u},), ({model.n_y},); "
            f"got {xhat.shape}, {u.shape}, {y.shape}"
        )
    return a @ xhat + bm @ u + design.L_obs @ (y - c @ xhat)
