"""Interior-point solver for small dense LMI programs.

Log-det barrier with damped Newton centering and a fixed barrier-shrink
schedule. Phase 1 finds a strictly interior point by maximizing a slack s
with F_b(z) - s*I >= 0 over every block; phase 2 follows the central path
of t * c'z + phi(z) with t growing by 1/barrier_shrink per outer step. The
duality-gap bound nu/t is only trusted at Newton-centered iterates.

Everything is deterministic: no restarts, no randomness; identical inputs
produce identical outputs within one build. Returned solutions are
re-certified through lmi.feasibility_margin, which uses the eigenvalue
path rather than the solver's internal Cholesky tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import lmi as lmi_mod
from ._kernels import block_grad_hess, block_logdet

OPTIMAL = "optimal"
FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
NUMERICAL_FAILURE = "numerical_failure"

_STALL_LIMIT = 20
_INNER_TOL = 1e-9  # Newton decrement^2 threshold for a centered point
_UNBOUNDED_FACTOR = 1e6
# Synthetic box around the phase-1 search region. The barrier alone is
# unbounded below along directions where every block grows, so the slack
# maximization needs a compact domain; desk-scale programs live well
# inside this.
_PHASE1_BOX = 1e6


@dataclass(frozen=True)
class SolveOptions:
    feas_margin: float = 1e-9
    obj_tol: float = 1e-6
    max_iters: int = 200
    barrier_shrink: float = 0.5

    def __post_init__(self):
        if self.feas_margin <= 0 or self.obj_tol <= 0 or self.max_iters <= 0:
            raise ValueError("feas_margin, obj_tol and max_iters must be positive")
        if not 0.0 < self.barrier_shrink < 1.0:
            raise ValueError("barrier_shrink must lie strictly inside (0, 1)")


@dataclass
class Solution:
    status: str
    z: np.ndarray
    objective: float
    margin: float
    iterations: int


class _Blocks:
    """Compiled constraint set with per-block kernel workspaces."""

    def __init__(self, blocks):
        self.blocks = list(blocks)
        self.nu = sum(b.order for b in self.blocks)
        self._fwork = [np.empty((b.order, b.order)) for b in self.blocks]
        self._gwork = [np.empty((b.ids.size, b.order, b.order)) for b in self.blocks]

    def neg_logdet(self, z) -> float:
        """Barrier value phi(z); +inf outside the domain."""
        total = 0.0
        for blk, fw in zip(self.blocks, self._fwork):
            ld = block_logdet(blk.f0, blk.coeffs, blk.ids, z, fw)
            if math.isnan(ld):
                return math.inf
            total -= ld
        return total

    def grad_hess(self, z, n):
        """(phi, grad, hess) of the barrier, or None outside the domain."""
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        total = 0.0
        for blk, fw, gw in zip(self.blocks, self._fwork, self._gwork):
            ld = block_grad_hess(blk.f0, blk.coeffs, blk.ids, z, grad, hess, fw, gw)
            if math.isnan(ld):
                return None
            total -= ld
        return total, grad, hess

    def eig_margin(self, z) -> float:
        """min lambda_min over blocks, via the eigenvalue path."""
        worst = math.inf
        for blk in self.blocks:
            worst = min(worst, np.linalg.eigvalsh(lmi_mod.eval_constraint(blk, z))[0])
        return float(worst)


@dataclass
class _RunState:
    newton_steps: int = 0
    stalled: bool = False
    no_progress: int = 0
    outer_iterates: list = field(default_factory=list)  # (t, z copy, obj, centered)


def _center(bl: _Blocks, c, t, z, phi, opts: SolveOptions, state: _RunState, log, stop=None):
    """Damped Newton on f(z) = t * c'z + phi(z) from a strictly feasible z.

    Returns (z, phi, centered). ``stop`` interrupts as soon as an accepted
    iterate satisfies it; an interrupted centering is not 'centered'.
    """
    n = z.size
    while state.newton_steps < opts.max_iters:
        res = bl.grad_hess(z, n)
        if res is None:  # cannot happen from a feasible iterate; defensive
            state.stalled = True
            return z, phi, False
        phi, gphi, hess = res
        grad = t * c + gphi
        try:
            dz = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            dz = None
        if dz is None or not float(-grad @ dz) > 0.0:
            reg = 1e-10 * (1.0 + abs(np.trace(hess)) / n)
            dz = np.linalg.solve(hess + reg * np.eye(n), -grad)
        lam2 = float(-grad @ dz)
        if lam2 <= 2.0 * _INNER_TOL:
            return z, phi, True
        f0 = t * float(c @ z) + phi
        alpha = 1.0
        accepted = False
        while alpha > 1e-14:
            zt = z + alpha * dz
            phit = bl.neg_logdet(zt)
            if math.isfinite(phit):
                ft = t * float(c @ zt) + phit
                if ft <= f0 - 0.25 * alpha * lam2:
                    accepted = True
                    break
            alpha *= 0.5
        state.newton_steps += 1
        if not accepted:
            if lam2 <= 1e-6 * (1.0 + abs(f0)):
                # Progress below float resolution of f: numerically centered.
                return z, phi, True
            state.no_progress += 1
            if state.no_progress >= _STALL_LIMIT:
                state.stalled = True
            return z, phi, False
        state.no_progress = 0
        z, phi = zt, phit
        if log is not None:
            log(
                f"newton={state.newton_steps} barrier={1.0 / t:.6e} "
                f"margin={bl.eig_margin(z):.6e} objective={float(c @ z):.9e}"
            )
        if stop is not None and stop(z):
            return z, phi, False
    return z, phi, False


def _barrier_minimize(bl: _Blocks, c, z0, opts: SolveOptions, log, stop=None):
    """Path-following minimize c'z over the strict feasible set from z0.

    Returns (z, converged, unbounded, state). ``stop`` ends the run early
    once an acceptable iterate is reached (phase-1 usage)."""
    state = _RunState()
    z = np.array(z0, dtype=float)
    phi = bl.neg_logdet(z)
    if not math.isfinite(phi):
        raise ValueError("starting point is not strictly feasible")
    t = 1.0
    obj_ref = float(c @ z)
    converged = False
    unbounded = False

    def _runaway(zc):
        return obj_ref - float(c @ zc) > _UNBOUNDED_FACTOR * max(1.0, abs(obj_ref))

    def _interrupt(zc):
        return _runaway(zc) or (stop is not None and stop(zc))

    while True:
        z, phi, centered = _center(bl, c, t, z, phi, opts, state, log, _interrupt)
        obj = float(c @ z)
        state.outer_iterates.append((t, z.copy(), obj, centered))
        if stop is not None and stop(z):
            converged = True
            break
        if state.stalled:
            break
        if _runaway(z):
            unbounded = True
            break
        if centered and bl.nu / t <= opts.obj_tol * max(1.0, abs(obj)):
            converged = True
            break
        if state.newton_steps >= opts.max_iters:
            break
        if centered:
            t /= opts.barrier_shrink
    return z, converged, unbounded, state


def _phase1(blocks, z0, opts: SolveOptions, log, target):
    """Maximize slack s subject to F_b(z) - s*I > 0 for every block.

    A synthetic box |z_i| <= _PHASE1_BOX (slack-free) keeps the barrier
    bounded below; it is discarded with the slack. Stops early once
    s >= target. Returns (z, s, state)."""
    n = z0.size
    aug_blocks = []
    for blk in blocks:
        coeffs = {int(i): blk.coeffs[pos] for pos, i in enumerate(blk.ids)}
        coeffs[n] = -np.eye(blk.order)
        aug_blocks.append(lmi_mod.AffineLmi(blk.f0, coeffs, blk.label + "+slack"))
    box = np.array([[_PHASE1_BOX]])
    for i in range(n):
        aug_blocks.append(lmi_mod.AffineLmi(box, {i: np.array([[-1.0]])}, f"phase1-box-hi{i}"))
        aug_blocks.append(lmi_mod.AffineLmi(box, {i: np.array([[1.0]])}, f"phase1-box-lo{i}"))
    bl = _Blocks(aug_blocks)
    margin0 = _Blocks(blocks).eig_margin(z0)
    s0 = margin0 - max(1.0, 0.01 * abs(margin0))
    z_aug = np.concatenate([z0, [s0]])
    c = np.zeros(n + 1)
    c[n] = -1.0
    z_aug, _, _, state = _barrier_minimize(
        bl, c, z_aug, opts, log, stop=lambda za: za[n] >= target
    )
    return z_aug[:n], float(z_aug[n]), state


def _certify(program, z) -> float:
    return lmi_mod.feasibility_margin(program, z)


def solve_feasible(program, opts: SolveOptions | None = None, log=None) -> Solution:
    """Find a strictly feasible point, or report infeasibility.

    Internally maximizes the common slack margin and stops early once the
    margin comfortably exceeds opts.feas_margin, so programs whose margin is
    unbounded above still terminate quickly.
    """
    opts = opts or SolveOptions()
    blocks = program.all_blocks()
    z0 = np.zeros(program.var_count)
    target = max(1e3 * opts.feas_margin, 1e-3)
    z, s, state = _phase1(blocks, z0, opts, log, target)
    if state.stalled and s < opts.feas_margin:
        return Solution(NUMERICAL_FAILURE, z, float(program.objective @ z), s, state.newton_steps)
    margin = _certify(program, z)
    if margin >= opts.feas_margin:
        return Solution(FEASIBLE, z, float(program.objective @ z), margin, state.newton_steps)
    return Solution(INFEASIBLE, z, float(program.objective @ z), margin, state.newton_steps)


def solve_min(program, opts: SolveOptions | None = None, log=None) -> Solution:
    """Minimize the program's linear objective over its strict feasible set."""
    opts = opts or SolveOptions()
    c = program.objective
    if not np.any(c):
        raise ValueError("solve_min requires a non-zero objective; use solve_feasible")
    blocks = program.all_blocks()
    bl = _Blocks(blocks)
    n = program.var_count

    z0 = np.zeros(n)
    target = max(1e3 * opts.feas_margin, 1e-3)
    if bl.eig_margin(z0) >= target:
        z_start = z0
        p1_steps = 0
    else:
        z_start, s, p1 = _phase1(blocks, z0, opts, log, target)
        p1_steps = p1.newton_steps
        if p1.stalled and s < opts.feas_margin:
            return Solution(NUMERICAL_FAILURE, z_start, float(c @ z_start), s, p1_steps)
        if s < opts.feas_margin:
            margin = _certify(program, z_start)
            return Solution(INFEASIBLE, z_start, float(c @ z_start), margin, p1_steps)

    sub_opts = SolveOptions(
        feas_margin=opts.feas_margin,
        obj_tol=opts.obj_tol,
        max_iters=max(1, opts.max_iters - p1_steps),
        barrier_shrink=opts.barrier_shrink,
    )
    z, converged, unbounded, state = _barrier_minimize(bl, c, z_start, sub_opts, log)
    iters = p1_steps + state.newton_steps

    if unbounded:
        return Solution(UNBOUNDED, z, float(c @ z), _certify(program, z), iters)

    # Walk back to the most advanced outer iterate that still certifies.
    for t_i, z_i, obj_i, centered_i in reversed(state.outer_iterates):
        margin = _certify(program, z_i)
        if margin >= opts.feas_margin:
            gap_ok = centered_i and bl.nu / t_i <= opts.obj_tol * max(1.0, abs(obj_i))
            if gap_ok:
                return Solution(OPTIMAL, z_i, obj_i, margin, iters)
            if state.stalled:
                return Solution(NUMERICAL_FAILURE, z_i, obj_i, margin, iters)
            return Solution(FEASIBLE, z_i, obj_i, margin, iters)
    return Solution(NUMERICAL_FAILURE, z, float(c @ z), _certify(program, z), iters)
