import warnings

import pytest

import pcnflow as pf


@pytest.fixture(scope="session")
def triangle():
    return pf.NetworkTopology(
        ("A", "B", "C"),
        (("A", "B", 100.0), ("B", "C", 100.0), ("A", "C", 100.0)),
    )


@pytest.fixture(scope="session")
def line3():
    return pf.NetworkTopology(("A", "B", "C"), (("A", "B", 100.0), ("B", "C", 100.0)))


@pytest.fixture(scope="session")
def ring3_model():
    return pf.builtin_scenario("ring3").model()


@pytest.fixture(scope="session")
def line3_eta0_model():
    return pf.builtin_scenario("line3-deadlock").model()


@pytest.fixture(scope="session")
def line3_eta01_model():
    scenario = pf.apply_overrides(pf.builtin_scenario("line3-deadlock"), eta=0.1)
    return scenario.model()


@pytest.fixture(scope="session")
def ring5_model():
    return pf.builtin_scenario("ring5").model()


@pytest.fixture(scope="session")
def line3_eta01_oracle(line3_eta01_model):
    return pf.brute_force_primal(line3_eta01_model)


@pytest.fixture(scope="session")
def ring3_oracle(ring3_model):
    return pf.brute_force_primal(ring3_model)


@pytest.fixture(scope="session")
def ring5_oracle(ring5_model):
    return pf.brute_force_primal(ring5_model)


@pytest.fixture(autouse=True)
def _quiet_stepsize_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        yield
