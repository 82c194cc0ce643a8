import numpy as np
import pandas as pd
import pytest

from semiflex.data import Table
from semiflex.errors import IOFailure


def test_table():
    table = Table(df=pd.DataFrame())
    assert len(table) == 0
    assert table.metadata == {}


def test_table_csv_header(tmp_path):
    df = pd.DataFrame({"h": [0.5, 0.25], "error": [1 / 3, 2 / 3]})
    table = Table(df=df, metadata={"regime": "super", "kappa": 4096.0, "seed": 7})
    path = tmp_path / "report.csv"
    table.save(path)

    lines = path.read_text().splitlines()
    assert lines[:3] == ["# regime: super", "# kappa: 4096.0", "# seed: 7"]
    assert lines[3] == "h,error"

    loaded = Table.load(path)
    assert loaded.metadata == {"regime": "super", "kappa": 4096.0, "seed": 7}
    assert loaded.columns == ["h", "error"]
    assert np.array_equal(loaded.df["error"].to_numpy(), df["error"].to_numpy())


def test_table_csv_deterministic(tmp_path):
    rng = np.random.default_rng(0)
    table = Table(df=pd.DataFrame({"x": rng.random(10)}), metadata={"seed": 0})
    table.save(tmp_path / "a.csv")
    table.save(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_table_parquet(tmp_path):
    df = pd.DataFrame({"j": [1, 2, 3], "eigenvalue": [1.0, 4.0, 9.0]})
    table = Table(df=df, metadata={"operator": "neg-laplacian", "d": 1})
    path = tmp_path / "spectrum.parquet"
    table.save(path)
    loaded = Table.load(path)
    assert loaded.metadata == {"operator": "neg-laplacian", "d": 1}
    pd.testing.assert_frame_equal(loaded.df, df)


def test_table_save_errors(tmp_path):
    table = Table(df=pd.DataFrame({"x": [1]}))
    with pytest.raises(ValueError):
        table.save(tmp_path / "table.txt")

    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(IOFailure):
        table.save(blocker / "table.csv")
