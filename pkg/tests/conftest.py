import time

import numpy as np
import pytest

from qmmpc import controller, harness, observer, plant, selftest

X0 = np.array([-1.5, -0.2])
XHAT0 = np.array([0.5, 1.0])


@pytest.fixture(scope="session")
def model():
    return plant.example_model()


@pytest.fixture(scope="session")
def obs_spec():
    return observer.ObserverSpec(rho=np.sqrt(0.7), W=np.eye(2))


@pytest.fixture(scope="session")
def design(model, obs_spec):
    return observer.synthesize(model, obs_spec)


@pytest.fixture(scope="session")
def cfg_proposed():
    return controller.ControllerConfig(Q=np.eye(2), R=np.array([[1.0]]), u_max=np.array([1.0]))


@pytest.fixture(scope="session")
def cfg_baseline():
    return controller.ControllerConfig(
        Q=np.eye(2), R=np.array([[1.0]]), u_max=np.array([1.0]), mode=controller.BASELINE
    )


@pytest.fixture(scope="session")
def sdp_battery_result():
    """Full oracle-equivalence battery, timed, computed once per session."""
    t0 = time.perf_counter()
    failures = selftest.sdp_battery()
    return failures, time.perf_counter() - t0


@pytest.fixture(scope="session")
def flagship_runs(model, design, cfg_proposed, cfg_baseline):
    """The standard experiment set, computed once: flagship DSWS run in both
    modes plus three RSWS seeds in proposed mode. Values are (trace, secs)."""
    runs = {}
    sig = plant.dsws(100)
    for key, cfg in (("dsws-proposed", cfg_proposed), ("dsws-baseline", cfg_baseline)):
        t0 = time.perf_counter()
        trace = harness.run_closed_loop(model, design, cfg, sig, X0, XHAT0)
        runs[key] = (trace, time.perf_counter() - t0)
    for seed in (1, 2, 3):
        t0 = time.perf_counter()
        trace = harness.run_closed_loop(
            model, design, cfg_proposed, plant.rsws(100, seed), X0, XHAT0
        )
        runs[f"rsws-{seed}"] = (trace, time.perf_counter() - t0)
    return runs
