import io
import json
import os

import numpy as np
import pandas as pd
import pytest

from bimetro import _config
from bimetro.tables import dumps, frame, output_path, read_csv, write_csv, write_parquet


def test_frame_keeps_column_order():
    df = frame([{"b": 1, "a": 2.5}, {"a": 3.0, "b": 4}], columns=["a", "b", "c"])
    assert list(df.columns) == ["a", "b", "c"]
    assert df["c"].isna().all()


def test_csv_floats_round_trip():
    values = [0.1 + 0.2, 1.0 / 3.0, 8.0 * 100 * 101, 1e-17]
    df = frame([{"N": i, "value": v} for i, v in enumerate(values)])
    text = write_csv(df)
    assert text.splitlines()[0] == "N,value"
    back = read_csv(io.StringIO(text))
    assert back["value"].tolist() == values
    assert write_csv(back) == text


def test_csv_and_parquet_files(tmp_path):
    df = frame([{"N": 1, "case": "antisymmetric", "gap": 0.25}])
    csv_path = tmp_path / "nested" / "table.csv"
    parquet_path = tmp_path / "nested" / "table.parquet"
    write_csv(df, csv_path)
    write_parquet(df, parquet_path)
    assert csv_path.read_text() == "N,case,gap\n1,antisymmetric,0.25\n"
    pd.testing.assert_frame_equal(pd.read_parquet(parquet_path), df)


def test_output_path_follows_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert output_path("x.csv") == os.path.join("bimetro-out", "x.csv")
    (tmp_path / "config").mkdir()
    (tmp_path / "config" / "bimetro_config.yaml").write_text("bimetro:\n  output_directory: elsewhere\n")
    _config.reset()
    assert output_path("x.csv").startswith("elsewhere")


def test_dumps_handles_numpy_and_complex():
    text = dumps({"b": np.float64(0.1), "a": np.arange(3), "c": 1 + 2j, "d": np.bool_(True), "e": np.int64(4)})
    assert json.loads(text) == {"a": [0, 1, 2], "b": 0.1, "c": [1.0, 2.0], "d": True, "e": 4}
    assert text.index('"a"') < text.index('"b"')
    with pytest.raises(TypeError):
        dumps({"x": object()})
