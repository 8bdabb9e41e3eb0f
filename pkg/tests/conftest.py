from pathlib import Path

import numpy as np
import pytest

from eotk.api.schemas import load_run_config, read_config_file
from eotk.core.quantities import aluminum_film, measured_device

DATA_DIR=Path(__file__).resolve().parents[1]/"eotk"/"data"


@pytest.fixture
def device():
    return measured_device()


@pytest.fixture
def film():
    return aluminum_film()


@pytest.fixture
def config_path()->Path:
    return DATA_DIR/"measured_device.json"


@pytest.fixture
def config_data(config_path):
    return read_config_file(config_path)


@pytest.fixture
def scenario(config_data):
    return load_run_config(config_data).to_domain()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def data_dir()->Path:
    return DATA_DIR
