"""Built-in verification batteries, runnable from the CLI and the test suite.

The solver battery pits solve_min against a brute-force oracle on randomized
small programs; the Schur battery cross-checks the block reduction against
the full-matrix eigenvalue test. Both are deterministic (fixed seeds).
"""

from __future__ import annotations

import numpy as np

from . import linalg, lmi, sdp

SDP_SEED = 20240613
SCHUR_SEED = 911


def random_program(rng, n_vars: int, order: int, box: float = 3.0):
    """Bounded, strictly feasible at z = 0: F0 = R R' + 0.4 I."""
    b = lmi.LmiProgramBuilder()
    ids = b.scalars("z", n_vars)
    blk = lmi.BlockBuilder("rand", [order])
    r = rng.uniform(-1.0, 1.0, (order, order))
    blk.const(0, 0, r @ r.T + 0.4 * np.eye(order))
    for i in range(n_vars):
        c = rng.uniform(-1.0, 1.0, (order, order))
        blk.coeff(ids[i], 0, 0, (c + c.T) / 2.0)
    b.constraint(blk.build())
    cvec = rng.uniform(-1.0, 1.0, n_vars)
    cvec[np.argmax(np.abs(cvec))] = np.sign(cvec[np.argmax(np.abs(cvec))]) or 1.0
    for i in range(n_vars):
        b.objective_coeff(ids[i], float(cvec[i]))
        b.bound(ids[i], lo=-box, hi=box)
    return b.build()


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def grid_oracle(program, lo: float = -3.0, hi: float = 3.0,
                scan: int = 9, line: int = 401, golden_iters: int = 18) -> float | None:
    """Brute-force minimum of c'z over the strict feasible set.

    Exploits convexity: minimizing out trailing variables leaves a convex
    (hence unimodal) function of the leading one, so each level runs a
    coarse grid scan to bracket the minimum and golden-section inside the
    bracket. The innermost level scans a whole line in one batched
    eigenvalue sweep and sharpens the useful feasible endpoint by
    bisection. Entirely independent of the solver's Cholesky/barrier path.
    """
    n = program.var_count
    blocks = program.all_blocks()
    c = program.objective

    def batch_margins(pts):
        margins = np.full(len(pts), np.inf)
        for blk in blocks:
            if blk.ids.size:
                evals = blk.f0[None] + np.tensordot(pts[:, blk.ids], blk.coeffs, axes=1)
            else:
                evals = np.broadcast_to(blk.f0, (len(pts),) + blk.f0.shape)
            margins = np.minimum(margins, np.linalg.eigvalsh(evals)[:, 0])
        return margins

    # Feasible slivers can hug the box faces more tightly than any uniform
    # grid resolves; every level therefore samples geometrically clustered
    # points next to both faces as well.
    edge_offsets = np.geomspace(1e-7, (hi - lo) / 16.0, 10)

    def with_edges(zs):
        return np.unique(np.concatenate([zs, lo + edge_offsets, hi - edge_offsets]))

    def line_best(prefix) -> float:
        """Min of obj over the last coordinate on a scan line, prefix fixed.

        One coarse batched sweep, then one batched refinement inside the
        grid cell adjoining the winning feasible endpoint."""

        def sweep(zs):
            pts_local = np.empty((zs.size, n))
            pts_local[:, : n - 1] = prefix
            pts_local[:, n - 1] = zs
            feas = batch_margins(pts_local) > 0.0
            if not np.any(feas):
                return None, None
            objs = pts_local @ c
            objs[~feas] = np.inf
            k = int(np.argmin(objs))
            return float(objs[k]), zs[k]

        zs = with_edges(np.linspace(lo, hi, line))
        best, z_best = sweep(zs)
        if best is None:
            return np.inf
        h = (hi - lo) / (line - 1)
        refined, _ = sweep(np.linspace(max(lo, z_best - h), min(hi, z_best + h), 129))
        return best if refined is None else min(best, refined)

    def level_min(prefix, depth) -> float:
        """Bracket by coarse scan, then golden-section: the value function of
        a partially minimized convex program is convex, hence unimodal."""
        if depth == n - 1:
            return line_best(np.asarray(prefix))

        def value(v):
            return level_min(list(prefix) + [v], depth + 1)

        grid = with_edges(np.linspace(lo, hi, scan))
        vals = [value(v) for v in grid]
        k = int(np.argmin(vals))
        if not np.isfinite(vals[k]):
            return np.inf
        m = grid.size
        a = grid[max(0, k - 1)]
        b = grid[min(m - 1, k + 1)]
        x1 = b - _GOLDEN * (b - a)
        x2 = a + _GOLDEN * (b - a)
        f1, f2 = value(x1), value(x2)
        best = min(vals[k], f1, f2)
        for _ in range(golden_iters):
            if f1 <= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - _GOLDEN * (b - a)
                f1 = value(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + _GOLDEN * (b - a)
                f2 = value(x2)
            best = min(best, f1, f2)
        return best

    if n == 1:
        result = line_best(np.empty(0))
    else:
        result = level_min([], 0)
    return None if not np.isfinite(result) else float(result)


def sdp_battery(opts: sdp.SolveOptions | None = None, n_programs: int = 50) -> list:
    """Randomized oracle-equivalence battery plus the two analytic cases.

    Returns a list of failure descriptions (empty = all pass)."""
    opts = opts or sdp.SolveOptions()
    failures = []
    rng = np.random.default_rng(SDP_SEED)
    for trial in range(n_programs):
        n_vars = int(rng.integers(1, 4))
        order = int(rng.integers(1, 4))
        prog = random_program(rng, n_vars, order)
        sol = sdp.solve_min(prog, opts)
        oracle = grid_oracle(prog)
        if sol.status not in (sdp.OPTIMAL, sdp.FEASIBLE):
            failures.append(f"random[{trial}]: solver status {sol.status}")
            continue
        if oracle is None:
            failures.append(f"random[{trial}]: oracle found no feasible point")
            continue
        if abs(sol.objective - oracle) > 1e-3:
            failures.append(
                f"random[{trial}]: objective {sol.objective:.6f} vs oracle {oracle:.6f}"
            )

    # min t s.t. [[t, 1], [1, t]] > 0  -> 1
    b = lmi.LmiProgramBuilder()
    t = b.scalar("t")
    blk = lmi.BlockBuilder("edge", [1, 1])
    blk.const(1, 0, [[1.0]])
    blk.coeff(t, 0, 0, [[1.0]]).coeff(t, 1, 1, [[1.0]])
    b.constraint(blk.build())
    b.objective_coeff(t, 1.0)
    sol = sdp.solve_min(b.build(), opts)
    if sol.status != sdp.OPTIMAL or abs(sol.objective - 1.0) > 1e-4:
        failures.append(f"analytic[t->1]: status {sol.status}, objective {sol.objective:.8f}")

    # min t s.t. t I - M > 0  -> lambda_max(M) = 3
    b = lmi.LmiProgramBuilder()
    t = b.scalar("t")
    m = np.array([[2.0, 1.0], [1.0, 2.0]])
    blk = lmi.BlockBuilder("lmax", [2])
    blk.const(0, 0, -m)
    blk.coeff(t, 0, 0, np.eye(2))
    b.constraint(blk.build())
    b.objective_coeff(t, 1.0)
    sol = sdp.solve_min(b.build(), opts)
    if sol.status != sdp.OPTIMAL or abs(sol.objective - 3.0) > 1e-4:
        failures.append(f"analytic[lmax]: status {sol.status}, objective {sol.objective:.8f}")
    return failures


def schur_battery(n_cases: int = 200) -> list:
    """Randomized agreement between schur_psd and the full-matrix test."""
    failures = []
    rng = np.random.default_rng(SCHUR_SEED)
    for trial in range(n_cases):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        a = linalg.symmetrize(rng.uniform(-2.0, 2.0, (n, n)))
        cmat = linalg.symmetrize(rng.uniform(-2.0, 2.0, (m, m)))
        bmat = rng.uniform(-2.0, 2.0, (m, n))
        blk = linalg.BlockSym2x2(A=a, B=bmat, C=cmat)
        via_schur = linalg.schur_psd(blk, 0.0)
        via_full = linalg.is_positive_definite(blk.assembled(), 0.0)
        if via_schur != via_full:
            failures.append(f"schur[{trial}]: reduction {via_schur} vs full {via_full}")
    return failures


def run_all(opts: sdp.SolveOptions | None = None) -> list:
    return sdp_battery(opts) + schur_battery()
