import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("suite")

from mccsod.config import RunConfig
from mccsod.synthetic import make_toy_dataset


@pytest.fixture(scope="session")
def toy_root(tmp_path_factory):
    """Small on-disk dataset shared by data/trainer/CLI tests."""
    root = tmp_path_factory.mktemp("toy")
    return make_toy_dataset(root, n_train=6, n_test=3, size=64, seed=7)


@pytest.fixture()
def tiny_config():
    """Config scaled down far enough that training steps take well under a second."""
    config = RunConfig()
    config.network.input_size = 32
    config.data.input_size = 32
    config.train.batch_size = 2
    config.train.epochs = 1
    config.train.seed = 3
    return config
