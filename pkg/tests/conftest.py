"""
Pytest configuration and fixtures
Small networks keep the cubature-heavy tests fast; long runs are marked slow
"""

import pytest

from models import ChannelConfig, RunConfig, SliceCombination
from utils.storage import ResultCache


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run tests marked slow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def temp_data_dir(tmp_path):
    """Create a temporary data directory for testing"""
    data_dir = tmp_path / "test_data"
    data_dir.mkdir()
    return str(data_dir)


@pytest.fixture
def test_cache(temp_data_dir):
    """Create a result cache in a temporary directory"""
    return ResultCache(cache_dir=temp_data_dir)


@pytest.fixture
def two_user_cfg():
    """Two users on a single beam splitter, M=4, 10 dB per user"""
    return ChannelConfig.uniform(10.0, n_users=2, s=1, u_max=0.01, slices=4, p_dark=1e-6)


@pytest.fixture
def four_user_cfg():
    """The four-user comparison network at 10 dB"""
    return ChannelConfig.uniform(10.0, n_users=4, s=2, u_max=0.002, slices=8, p_dark=1e-8)


@pytest.fixture
def canonical_two():
    return SliceCombination.canonical(2)


@pytest.fixture
def small_run_config(tmp_path):
    """Run configuration small enough for end-to-end CLI tests"""
    return RunConfig(
        users=2,
        layers=1,
        u_max=0.01,
        slices=4,
        cut_x=1,
        cut_y=1,
        p_dark=1e-6,
        n_bar=2,
        loss_start_db=0.0,
        loss_stop_db=10.0,
        loss_step_db=5.0,
        mc_trials=20_000,
        output_path=str(tmp_path / "results" / "sweep.csv"),
        cache_dir=str(tmp_path / "cache"),
        record_timing=False,
    )


@pytest.fixture
def config_file(tmp_path):
    """Write configuration text to a file and return its path"""

    def _write(text: str) -> str:
        path = tmp_path / "run.cfg"
        path.write_text(text, encoding="utf-8")
        return str(path)

    return _write
