import numpy as np
import pytest

from qmmpc import linalg, observer, plant, sdp
from qmmpc.errors import DimensionMismatch, InfeasibleProblem

TABLE_GAIN = np.array([[0.4631], [-1.4336]])


def design_margin(model, spec, gain, p_mat):
    return min(
        linalg.min_eigenvalue(blk)
        for blk in observer.decay_blocks(model, spec, gain, p_mat)
    )


class TestSpecValidation:
    def test_rho_range(self):
        with pytest.raises(ValueError):
            observer.ObserverSpec(rho=0.0, W=np.eye(2))
        with pytest.raises(ValueError):
            observer.ObserverSpec(rho=1.5, W=np.eye(2))

    def test_weight_must_be_pd(self):
        with pytest.raises(ValueError):
            observer.ObserverSpec(rho=0.9, W=np.zeros((2, 2)))


class TestSynthesize:
    def test_scalar_model_direct_substitution(self):
        # one vertex, scalar: rho^2 p - w - (a - l c)^2 p > 0 must hold
        model = plant.PolytopicModel(((np.array([[0.5]]), np.array([[0.1]]), np.array([[1.0]])),))
        spec = observer.ObserverSpec(rho=1.0, W=np.array([[1.0]]))
        design = observer.synthesize(model, spec)
        p = float(design.P_o[0, 0])
        l_gain = float(design.L_obs[0, 0])
        assert p > 0
        assert 1.0 * p - 1.0 - (0.5 - l_gain) ** 2 * p > 0

    def test_flagship_design_certifies(self, model, obs_spec, design):
        assert design_margin(model, obs_spec, design.L_obs, design.P_o) > 1e-9
        assert linalg.is_positive_definite(design.P_o)

    def test_round_trip_verify(self, model, obs_spec, design):
        sol = observer.verify_gain(model, design.L_obs, obs_spec)
        assert sol.status == sdp.FEASIBLE

    def test_deterministic(self, model, obs_spec, design):
        again = observer.synthesize(model, obs_spec)
        np.testing.assert_array_equal(again.L_obs, design.L_obs)
        np.testing.assert_array_equal(again.P_o, design.P_o)

    def test_excessive_decay_rate_infeasible(self, model):
        spec = observer.ObserverSpec(rho=0.01, W=np.eye(2))
        with pytest.raises(InfeasibleProblem):
            observer.synthesize(model, spec)

    def test_excessive_decay_rate_grid_oracle(self, model):
        # Independent necessary condition: a feasible gain needs
        # max_j spectral_radius(A_j - L C_j) < rho at some L; a coarse grid
        # of gains stays far above rho = 0.01.
        best = np.inf
        for l1 in np.linspace(-3, 3, 13):
            for l2 in np.linspace(-3, 3, 13):
                gain = np.array([[l1], [l2]])
                worst = max(
                    np.abs(np.linalg.eigvals(a - gain @ c)).max()
                    for a, _, c in model.vertices
                )
                best = min(best, worst)
        assert best > 0.01


class TestVerifyGain:
    def test_published_gain_certifies(self, model, obs_spec):
        sol = observer.verify_gain(model, TABLE_GAIN, obs_spec)
        assert sol.status == sdp.FEASIBLE
        assert sol.margin > 0

    def test_zero_gain_on_unstable_vertex_infeasible(self, model):
        a1 = np.array([[1.2, -0.0743], [0.0811, 1.2]])
        # spectral radius > 1, so no Lyapunov matrix exists for L = 0
        assert np.abs(np.linalg.eigvals(a1)).max() > 1.0
        _, b1, c1 = model.vertex(1)
        vertices = ((a1, b1, c1),) + model.vertices[1:]
        unstable = plant.PolytopicModel(vertices)
        spec = observer.ObserverSpec(rho=1.0, W=0.1 * np.eye(2))
        sol = observer.verify_gain(unstable, np.zeros((2, 1)), spec)
        assert sol.status == sdp.INFEASIBLE

    def test_exact_cancellation_model(self):
        # A_j = L C_j makes the error map vanish for every vertex.
        gain = np.array([[1.0], [2.0]])
        c1 = np.array([[1.0, 0.0]])
        c2 = np.array([[0.0, 1.0]])
        b = np.zeros((2, 1))
        vertices = ((gain @ c1, b, c1), (gain @ c2, b, c2))
        model = plant.PolytopicModel(vertices)
        spec = observer.ObserverSpec(rho=1.0, W=0.5 * np.eye(2))
        sol = observer.verify_gain(model, gain, spec)
        assert sol.status == sdp.FEASIBLE
        # P = I is itself a certificate: blocks are [[I - W, 0], [0, I]]
        assert design_margin(model, spec, gain, np.eye(2)) > 0

    def test_shape_validation(self, model, obs_spec):
        with pytest.raises(DimensionMismatch):
            observer.verify_gain(model, np.zeros((1, 2)), obs_spec)


class TestStep:
    def test_equilibrium(self, model, design):
        out = observer.step(design, model, 1, np.zeros(2), np.zeros(1), np.zeros(1))
        np.testing.assert_array_equal(out, np.zeros(2))

    def test_zero_innovation_matches_plant(self, model, design):
        rng = np.random.default_rng(4)
        for _ in range(10):
            s = int(rng.integers(1, 4))
            x = rng.uniform(-2, 2, 2)
            u = rng.uniform(-1, 1, 1)
            x_next, y = plant.step(model, s, x, u)
            est = observer.step(design, model, s, x, u, y)
            np.testing.assert_allclose(est, x_next, atol=1e-14)

    def test_flagship_initial_update_matches_matvec(self, model, design):
        xhat = np.array([0.5, 1.0])
        _, y = plant.step(model, 1, np.array([-1.5, -0.2]), np.zeros(1))
        a, _, c = model.vertex(1)
        # hand-rolled dense mat-vec oracle
        innovation = y - np.array([c[0, 0] * xhat[0] + c[0, 1] * xhat[1]])
        expected = np.array(
            [
                a[0, 0] * xhat[0] + a[0, 1] * xhat[1] + design.L_obs[0, 0] * innovation[0],
                a[1, 0] * xhat[0] + a[1, 1] * xhat[1] + design.L_obs[1, 0] * innovation[0],
            ]
        )
        got = observer.step(design, model, 1, xhat, np.zeros(1), y)
        np.testing.assert_allclose(got, expected, atol=1e-14)

    def test_dimension_validation(self, model, design):
        with pytest.raises(DimensionMismatch):
            observer.step(design, model, 1, np.zeros(3), np.zeros(1), np.zeros(1))


class TestErrorDecay:
    def test_contraction_along_random_modes(self, model, obs_spec, design):
        rng = np.random.default_rng(0)
        e = np.array([-2.0, -1.2])
        p = design.P_o
        rho2 = obs_spec.rho**2
        for _ in range(60):
            s = int(rng.integers(1, 4))
            a, _, c = model.vertex(s)
            e_next = (a - design.L_obs @ c) @ e
            if e @ p @ e > 0:
                assert e_next @ p @ e_next <= rho2 * (e @ p @ e)
            e = e_next
        assert np.abs(e).max() < 1e-3
