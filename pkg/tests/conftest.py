import numpy as np
import pytest

from flagsim import (SimSettings, coordinate_dimension, default_robot_config,
                     simulate)
from flagsim.actuation import GaitSchedule


@pytest.fixture(scope="session")
def cfg():
    return default_robot_config()


@pytest.fixture(scope="session")
def dim(cfg):
    return coordinate_dimension(cfg)


@pytest.fixture(scope="session")
def coarse():
    """Fast settings for tests that only need qualitative trajectories."""
    return SimSettings(dt=0.05)


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels(cfg):
    # jit compilation happens once here so timed tests measure physics,
    # not compiler startup
    simulate(cfg, GaitSchedule(), n_cycles=1, settings=SimSettings(dt=2.5))


def random_states(config, count, seed=0, body_scale=0.2, joint_scale=1.0):
    rng = np.random.default_rng(seed)
    d = coordinate_dimension(config)
    q = rng.uniform(-1.0, 1.0, size=(count, d))
    q[:, 0:2] *= body_scale
    q[:, 2] *= np.pi
    q[:, 3:] *= joint_scale
    return q
