import pytest

from dicke_spectra.hamiltonian.overlap import kernel_table
from dicke_spectra.model import ModelParams


def pytest_addoption(parser):
    parser.addoption(
        "--runslow",
        action="store_true",
        default=False,
        help="run the minutes-long parameter studies",
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: minutes-long parameter study")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def clear_kernel_cache():
    yield
    kernel_table.cache_clear()


@pytest.fixture
def make_params():
    """ModelParams at resonance (ω = ω0 = 1) unless told otherwise."""

    def inner(gamma=0.5, j=5, **kwargs):
        kwargs.setdefault("omega", 1.0)
        kwargs.setdefault("omega0", 1.0)
        return ModelParams(gamma=gamma, j=j, **kwargs)

    return inner
