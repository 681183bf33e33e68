from pathlib import Path

import pytest

from app import create_app
from services.hermite_service import gauss_rule, trapezoid_rule
from services.semigroup_service import time_grid

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def app():
    app = create_app({"TESTING": True, "GAUSSBESOV_WORKERS": 1})
    yield app


@pytest.fixture
def client(app):
    return app.test_client()


@pytest.fixture
def runner(app):
    return app.test_cli_runner()


@pytest.fixture(scope="session")
def rule1():
    return gauss_rule(1, 60)


@pytest.fixture(scope="session")
def rule2():
    return gauss_rule(2, 20)


@pytest.fixture(scope="session")
def flat_rule():
    return trapezoid_rule(1, 2001)


@pytest.fixture(scope="session")
def grid():
    return time_grid()


@pytest.fixture(scope="session")
def coarse_grid():
    return time_grid(1e-6, 60.0, 301)


@pytest.fixture
def config_dir():
    return CONFIG_DIR
