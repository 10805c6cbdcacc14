import numpy as np
import pytest

from qmmpc import lmi, sdp, selftest


def schur_edge_program():
    """min t s.t. [[t, 1], [1, t]] > 0; optimum t = 1."""
    b = lmi.LmiProgramBuilder()
    t = b.scalar("t")
    blk = lmi.BlockBuilder("edge", [1, 1])
    blk.const(1, 0, [[1.0]])
    blk.coeff(t, 0, 0, [[1.0]]).coeff(t, 1, 1, [[1.0]])
    b.constraint(blk.build())
    b.objective_coeff(t, 1.0)
    return b.build()


def assert_certified(sol, prog, opts=None):
    opts = opts or sdp.SolveOptions()
    recomputed = lmi.feasibility_margin(prog, sol.z)
    assert recomputed >= opts.feas_margin
    assert abs(recomputed - sol.margin) <= 1e-9 * (1.0 + abs(recomputed))


class TestSolveFeasible:
    def test_constant_identity(self):
        b = lmi.LmiProgramBuilder()
        z = b.scalar("z")
        blk = lmi.BlockBuilder("id", [2])
        blk.const(0, 0, np.eye(2))
        blk.coeff(z, 0, 0, np.zeros((2, 2)))
        b.constraint(blk.build())
        prog = b.build()
        sol = sdp.solve_feasible(prog)
        assert sol.status == sdp.FEASIBLE
        assert_certified(sol, prog)

    def test_threshold_variable(self):
        # [[z, 1], [1, z]] > 0 iff z > 1
        b = lmi.LmiProgramBuilder()
        z = b.scalar("z")
        blk = lmi.BlockBuilder("thr", [1, 1])
        blk.const(1, 0, [[1.0]])
        blk.coeff(z, 0, 0, [[1.0]]).coeff(z, 1, 1, [[1.0]])
        b.constraint(blk.build())
        prog = b.build()
        sol = sdp.solve_feasible(prog)
        assert sol.status == sdp.FEASIBLE
        assert sol.z[0] > 1.0
        assert_certified(sol, prog)

    def test_constant_negative_definite(self):
        b = lmi.LmiProgramBuilder()
        z = b.scalar("z")
        blk = lmi.BlockBuilder("neg", [2])
        blk.const(0, 0, -np.eye(2))
        blk.coeff(z, 0, 0, np.zeros((2, 2)))
        b.constraint(blk.build())
        sol = sdp.solve_feasible(b.build())
        assert sol.status == sdp.INFEASIBLE
        assert sol.margin <= 0.0


class TestSolveMin:
    def test_schur_edge(self):
        prog = schur_edge_program()
        sol = sdp.solve_min(prog)
        assert sol.status == sdp.OPTIMAL
        assert 1.0 < sol.objective <= 1.0 + 1e-4
        assert_certified(sol, prog)

    def test_max_eigenvalue(self):
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        b = lmi.LmiProgramBuilder()
        t = b.scalar("t")
        blk = lmi.BlockBuilder("lmax", [2])
        blk.const(0, 0, -m)
        blk.coeff(t, 0, 0, np.eye(2))
        b.constraint(blk.build())
        b.objective_coeff(t, 1.0)
        prog = b.build()
        sol = sdp.solve_min(prog)
        oracle = float(np.linalg.eigvalsh(m)[-1])
        assert sol.status == sdp.OPTIMAL
        assert abs(sol.objective - oracle) <= 1e-4
        assert_certified(sol, prog)

    def test_requires_objective(self):
        b = lmi.LmiProgramBuilder()
        b.scalar("z")
        blk = lmi.BlockBuilder("c", [1])
        blk.const(0, 0, [[1.0]])
        b.constraint(blk.build())
        with pytest.raises(ValueError):
            sdp.solve_min(b.build())

    def test_infeasible_program(self):
        b = lmi.LmiProgramBuilder()
        z = b.scalar("z")
        blk = lmi.BlockBuilder("neg", [1])
        blk.const(0, 0, [[-1.0]])
        blk.coeff(z, 0, 0, [[0.0]])
        b.constraint(blk.build())
        b.objective_coeff(z, 1.0)
        sol = sdp.solve_min(b.build())
        assert sol.status == sdp.INFEASIBLE

    def test_unbounded(self):
        b = lmi.LmiProgramBuilder()
        t = b.scalar("t")
        blk = lmi.BlockBuilder("pos", [1])
        blk.coeff(t, 0, 0, [[1.0]])
        b.constraint(blk.build())
        b.objective_coeff(t, -1.0)
        sol = sdp.solve_min(b.build())
        assert sol.status == sdp.UNBOUNDED

    def test_box_bound_optimum(self):
        b = lmi.LmiProgramBuilder()
        z = b.scalar("z")
        blk = lmi.BlockBuilder("free", [1])
        blk.const(0, 0, [[1.0]])
        blk.coeff(z, 0, 0, [[0.0]])
        b.constraint(blk.build())
        b.objective_coeff(z, 1.0)
        b.bound(z, lo=-2.0, hi=5.0)
        sol = sdp.solve_min(b.build())
        assert sol.status == sdp.OPTIMAL
        assert abs(sol.objective - (-2.0)) <= 1e-4

    def test_deterministic(self):
        s1 = sdp.solve_min(schur_edge_program())
        s2 = sdp.solve_min(schur_edge_program())
        assert s1.status == s2.status
        assert np.array_equal(s1.z, s2.z)
        assert s1.objective == s2.objective
        assert s1.iterations == s2.iterations

    def test_redundant_constraint_does_not_move_optimum(self):
        opts = sdp.SolveOptions(obj_tol=1e-7)
        base = schur_edge_program()
        b = lmi.LmiProgramBuilder()
        t = b.scalar("t")
        for label in ("edge", "edge-copy"):
            blk = lmi.BlockBuilder(label, [1, 1])
            blk.const(1, 0, [[1.0]])
            blk.coeff(t, 0, 0, [[1.0]]).coeff(t, 1, 1, [[1.0]])
            b.constraint(blk.build())
        b.objective_coeff(t, 1.0)
        doubled = b.build()
        o1 = sdp.solve_min(base, opts).objective
        o2 = sdp.solve_min(doubled, opts).objective
        assert abs(o1 - o2) <= sdp.SolveOptions().obj_tol

    def test_iteration_log(self):
        lines = []
        sdp.solve_min(schur_edge_program(), log=lines.append)
        assert lines
        for token in ("newton=", "barrier=", "margin=", "objective="):
            assert token in lines[0]

    def test_options_validation(self):
        with pytest.raises(ValueError):
            sdp.SolveOptions(barrier_shrink=1.0)
        with pytest.raises(ValueError):
            sdp.SolveOptions(obj_tol=0.0)


class TestOracleEquivalence:
    def test_randomized_battery(self, sdp_battery_result):
        failures, _ = sdp_battery_result
        assert failures == []

    def test_battery_detects_loose_solver(self):
        failures = selftest.sdp_battery(sdp.SolveOptions(obj_tol=10.0), n_programs=6)
        assert failures
