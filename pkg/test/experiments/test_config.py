from pathlib import Path

import pytest

from semiflex.errors import IOFailure, UsageError
from semiflex.experiments import ExperimentConfig, load_config, parse_float_list, parse_int_list


def test_parse_int_list():
    assert parse_int_list("64,128,256") == (64, 128, 256)
    assert parse_int_list("16..256") == (16, 32, 64, 128, 256)
    assert parse_int_list("16..100") == (16, 32, 64)
    assert parse_int_list(12) == (12,)
    with pytest.raises(UsageError):
        parse_int_list("16..8")
    with pytest.raises(UsageError):
        parse_int_list("a,b")
    assert parse_float_list("0,2e2,2e4") == (0.0, 200.0, 20000.0)
    with pytest.raises(UsageError):
        parse_float_list("1,x")


def test_defaults():
    config = ExperimentConfig(command="converge")
    assert config.d == 1
    assert config.format == "csv+svg"
    assert config.svg and config.suffix == ".csv"
    assert config.kappa()(10) == 0.0
    assert "out" not in config.echo()
    assert config.echo()["kappa_rule"] == "0.0"


def test_from_sources_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# phase scan\nd = 2\nN = 8,16\nkappa-rule = 2*N^2\n\nseed=3  # fixed\n")
    file_values = load_config(path)
    assert file_values == {"d": "2", "N": "8,16", "kappa-rule": "2*N^2", "seed": "3"}

    config = ExperimentConfig.from_sources(
        "phase-scan", {"seed": "5", "f": None, "format": "parquet"}, file_values
    )
    assert config.d == 2
    assert config.N == (8, 16)
    assert config.seed == 5
    assert config.f == "sin"
    assert config.suffix == ".parquet" and not config.svg
    assert config.kappa()(4) == 32.0
    assert config.echo()["kappa_rule"] == "2.0*N^2.0"


@pytest.mark.parametrize(
    "flags",
    [
        {"paths": "0"},
        {"seed": "-1"},
        {"format": "json"},
        {"kappa_rule": "N^x"},
        {"kappas": "1,-2"},
        {"d": "two"},
        {"colour": "red"},
        {"verbose": "maybe"},
    ],
)
def test_invalid_flags(flags):
    with pytest.raises(UsageError):
        ExperimentConfig.from_sources("trajectories", flags)


def test_load_config_errors(tmp_path):
    with pytest.raises(IOFailure):
        load_config(tmp_path / "missing.cfg")
    path = tmp_path / "bad.cfg"
    path.write_text("d 2\n")
    with pytest.raises(UsageError):
        load_config(path)
    assert ExperimentConfig.from_sources("green", {"out": str(tmp_path)}).out == Path(tmp_path)
