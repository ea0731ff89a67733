import numpy as np
import pytest


@pytest.fixture(scope="session", autouse=True)
def _isolated_cache(tmp_path_factory):
    # keep table files out of the user's cache directory
    mp = pytest.MonkeyPatch()
    mp.setenv("GTP_CACHE_DIR", str(tmp_path_factory.mktemp("gtp-cache")))
    yield
    mp.undo()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rel_err(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def random_unit(rng):
    r = rng.standard_normal(3)
    return r / np.linalg.norm(r)


def random_euler(rng):
    from gtp.verify import random_rotation

    return random_rotation(rng)
