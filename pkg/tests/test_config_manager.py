import configparser

from utils.config_manager import OUTPUT_DIR_ENV, ConfigManager


def test_defaults_are_written_when_missing(tmp_path):
    path = tmp_path / 'nested' / 'settings.ini'
    manager = ConfigManager(str(path))
    assert path.exists()
    assert manager.get_precision_bits() == 128
    assert manager.get_inverse_bound() == 'stated'
    assert manager.get_christoffel_bound() == 'paper'
    assert manager.get_grid_size() == 32
    assert manager.get_n_cases() == 100
    assert manager.get_sup_norm_inflation() == 1.05
    assert manager.get_solver_tol() == 1e-10
    assert manager.get_family_kind() == 'conformal'
    assert manager.get_export_deltas() == [0.0, 1e-15]


def test_missing_keys_are_filled_in(tmp_path):
    path = tmp_path / 'settings.ini'
    path.write_text('[grid]\nn_per_axis = 24\n')
    manager = ConfigManager(str(path))
    assert manager.get_grid_size() == 24
    assert manager.get_seed() == 0
    parser = configparser.ConfigParser()
    parser.read(path)
    assert parser.get('solver', 'max_iter') == '200'


def test_setters_and_round_trip(tmp_path):
    manager = ConfigManager(str(tmp_path / 'settings.ini'))
    manager.set_christoffel_bound('derived')
    manager.set_seed(7)
    manager.set_family_kind('offdiag')
    manager.save_config()
    reloaded = ConfigManager(str(tmp_path / 'settings.ini'))
    assert reloaded.get_christoffel_bound() == 'derived'
    assert reloaded.get_seed() == 7
    assert reloaded.get_family_kind() == 'offdiag'


def test_bad_values_fall_back(tmp_path):
    path = tmp_path / 'settings.ini'
    path.write_text('[grid]\nn_per_axis = many\n[ledger]\nexport_deltas = 0, tiny\n')
    manager = ConfigManager(str(path))
    assert manager.get_grid_size() == 32
    assert manager.get_export_deltas() == [0.0, 1e-15]


def test_output_dir_environment_override(tmp_path, monkeypatch):
    manager = ConfigManager(str(tmp_path / 'settings.ini'))
    monkeypatch.delenv(OUTPUT_DIR_ENV, raising=False)
    assert manager.get_output_dir() == 'results'
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / 'elsewhere'))
    assert manager.get_output_dir() == str(tmp_path / 'elsewhere')


def test_export_import_and_reset(tmp_path):
    manager = ConfigManager(str(tmp_path / 'settings.ini'))
    manager.set_grid_size(64)
    exported = tmp_path / 'exported.ini'
    assert manager.export_config(str(exported))
    other = ConfigManager(str(tmp_path / 'other.ini'))
    assert other.import_config(str(exported))
    assert other.get_grid_size() == 64
    assert not other.import_config(str(tmp_path / 'missing.ini'))
    other.reset_to_defaults()
    assert other.get_grid_size() == 32
    assert set(other.get_all_settings()) >= {'ledger', 'grid', 'verification', 'solver', 'output'}
