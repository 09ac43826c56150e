import os
import sys

import pytest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(ROOT, 'src'))
sys.path.insert(0, ROOT)

from core.constant_ledger import ConstantLedger  # noqa: E402
from core.torus_field import GridSpec  # noqa: E402
from utils.config_manager import OUTPUT_DIR_ENV, ConfigManager  # noqa: E402


@pytest.fixture(scope='session')
def ledger():
    return ConstantLedger()


@pytest.fixture
def grid():
    return GridSpec(16)


@pytest.fixture
def config_manager(tmp_path, monkeypatch):
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    manager = ConfigManager(str(tmp_path / 'config' / 'settings.ini'))
    manager.set_output_dir(str(tmp_path / 'results'))
    manager.set_grid_size(16)
    manager.set_n_cases(6)
    return manager
