import pathlib

import numpy as np
import pytest

from sea.data import load_cora

ROOT = pathlib.Path(__file__).resolve().parent.parent
DATA = ROOT / "data"


@pytest.fixture(scope="session")
def cora():
    return load_cora(str(DATA / "cora.content"), str(DATA / "cora.cites"))


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
