import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nlg.fieldio import (FieldFormatError, read_field, read_meta, read_report, read_tensor,
                         write_field, write_meta, write_report, write_tensor)
from nlg.grid import BoundaryTrace, Grid, ScalarField, VectorField

finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=30, deadline=None)
@given(nx=st.integers(2, 6), ny=st.integers(2, 6), data=st.data())
def test_round_trip_is_bit_exact(tmp_path_factory, nx, ny, data):
    d = tmp_path_factory.mktemp("rt")
    grid = Grid(nx, ny, data.draw(st.floats(1e-3, 1e3)), data.draw(st.floats(1e-3, 1e3)))
    fields = [
        ScalarField(grid, data.draw(arrays(float, (ny, nx), elements=finite))),
        VectorField(grid, data.draw(arrays(float, (ny, nx + 1), elements=finite)),
                    data.draw(arrays(float, (ny + 1, nx), elements=finite))),
        BoundaryTrace(grid, data.draw(arrays(float, (grid.n_boundary,), elements=finite))),
    ]
    for k, f in enumerate(fields):
        write_field(d / f"{k}.fld", f)
        back = read_field(d / f"{k}.fld")
        assert back.grid == grid
        for x, y in zip(f._arrays(), back._arrays()):
            assert x.tobytes() == y.tobytes()


def test_header_and_layout(tmp_path):
    grid = Grid(2, 2, 0.5, 0.25)
    write_field(tmp_path / "v.fld", VectorField(grid, np.arange(6.0).reshape(2, 3),
                                                 -np.arange(6.0).reshape(3, 2)))
    lines = (tmp_path / "v.fld").read_text().splitlines()
    assert lines[0] == "NLG-FIELD v1 vector 2 2 0.5 0.25"
    assert lines[1].split() == ["0", "1", "2"]
    assert lines[3].split() == ["-0", "-1"]


def test_tensor_round_trip(tmp_path, rng):
    grid = Grid(3, 4, 1.0, 2.0)
    S = rng.normal(size=(4, 3, 3))
    write_tensor(tmp_path / "s.fld", grid, S)
    g2, S2 = read_tensor(tmp_path / "s.fld")
    assert g2 == grid and S2.tobytes() == S.tobytes()


def test_malformed_files(tmp_path):
    p = tmp_path / "bad.fld"
    p.write_text("HELLO\n1 2 3\n")
    with pytest.raises(FieldFormatError):
        read_field(p)
    p.write_text("NLG-FIELD v1 scalar 2 2 1 1\n1 2 3\n")
    with pytest.raises(FieldFormatError):
        read_field(p)
    p.write_text("NLG-FIELD v2 scalar 2 2 1 1\n1 2 3 4\n")
    with pytest.raises(FieldFormatError):
        read_field(p)
    p.write_text("NLG-FIELD v1 scalar 2 2 1 1\n1 2 3 4\n")
    with pytest.raises(FieldFormatError):
        read_field(p, "vector")
    with pytest.raises(FileNotFoundError, match="nope.fld"):
        read_field(tmp_path / "nope.fld")


def test_meta_and_report(tmp_path):
    meta = {"phantom": "disk", "noise_level": 0.1 + 0.2, "seed": 7, "flag": True}
    write_meta(tmp_path / "m.txt", meta)
    assert read_meta(tmp_path / "m.txt") == meta
    rep = {"lambda_hat": 1 / 3, "history": {"gap": [np.float64(1e-300), 2.5]}, "nan": float("nan")}
    write_report(tmp_path / "r.json", rep)
    back = read_report(tmp_path / "r.json")
    assert back["schema_version"] == 1
    assert back["lambda_hat"] == 1 / 3 and back["history"]["gap"] == [1e-300, 2.5]
    assert back["nan"] == "nan"
