import os

from click.testing import CliRunner
import numpy as np
import pytest

#: Small, fast geometry with a fixed weight scale (no calibration).
SMALL = {'M': 400, 'N': 40, 'weight_scale': 1.5}


@pytest.fixture(autouse=True)
def restore_loglevel():
    from cyclicstdp.logger import logger

    level = logger.level
    yield
    logger.setLevel(level)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def devnull():
    with open(os.devnull) as f:
        yield f


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_cfg():
    from cyclicstdp.config import RunConfig

    return RunConfig(**SMALL)


@pytest.fixture
def small_args():
    """Global CLI options selecting the small geometry."""
    args = []
    for key, value in sorted(SMALL.items()):
        args.extend(['--set', '%s=%s' % (key, value)])
    return args


@pytest.fixture
def deterministic_params():
    """Learning rules with waiting lifetimes of exactly tau."""
    from cyclicstdp.plasticity import LearningParams

    return LearningParams(stochastic_decay=False)
