import numpy as np
import pandas as pd
import pytest

from models.errors import GflameError
from models.grid import Grid2
from services.snapshot import read_snapshot, write_snapshot, write_value_snapshot


def _grid() -> Grid2:
    return Grid2(np.arange(16 * 20, dtype=float).reshape(16, 20) / 7.0)


def test_snapshot_layout(tmp_path):
    path = write_snapshot(str(tmp_path / "nested" / "w.gflm"), _grid())

    data = path.read_bytes()
    assert data[:4] == b"GFLM"
    assert int.from_bytes(data[4:8], "little") == 1
    assert int.from_bytes(data[8:12], "little") == 16
    assert int.from_bytes(data[12:16], "little") == 20
    assert len(data) == 16 + 8 * 16 * 20

    np.testing.assert_array_equal(read_snapshot(str(path)).values, _grid().values)


def test_rejects_foreign_file(tmp_path):
    path = tmp_path / "bad.gflm"
    path.write_bytes(b"NOPE" + bytes(12))
    with pytest.raises(GflameError, match="not a GFLM file"):
        read_snapshot(str(path))


def test_rejects_truncated_payload(tmp_path):
    path = write_snapshot(str(tmp_path / "w.gflm"), _grid())
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(GflameError, match="expected 320 values"):
        read_snapshot(str(path))


def test_value_snapshot_sidecar(tmp_path):
    path = write_value_snapshot(str(tmp_path / "u.gflm"), _grid(), (1.0, 0.5), 250)

    sidecar = pd.read_csv(str(path) + ".p.csv")
    assert sidecar.to_dict("records") == [{"p1": 1.0, "p2": 0.5, "k": 250}]
    assert read_snapshot(str(path)).shape == (16, 20)
