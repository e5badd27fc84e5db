import pytest

from renflow.surface_models import make_model


@pytest.fixture(scope="session")
def disk():
    return make_model("disk")


@pytest.fixture(scope="session")
def half_plane():
    return make_model("half_plane")


@pytest.fixture(scope="session")
def cylinder():
    return make_model("cylinder", {"neck_length": 1.0})


@pytest.fixture(scope="session")
def perturbed():
    return make_model("perturbed_disk")
