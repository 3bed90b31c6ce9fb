import pytest

from marsquad import linmodel, mpc, params


@pytest.fixture(scope="session")
def env():
    return params.MARS


@pytest.fixture(scope="session")
def veh():
    return params.VehicleParams.default()


@pytest.fixture(scope="session")
def cont_model(veh, env):
    return linmodel.linearize_hover(veh, env)


@pytest.fixture(scope="session")
def disc_model(cont_model):
    return linmodel.discretize(cont_model, 0.02)


@pytest.fixture(scope="session")
def mpc_cfg(veh):
    return mpc.MpcConfig.default(veh)
