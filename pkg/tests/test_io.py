import numpy as np
import pytest

from schmid_lab.io import format_table, parse_table, read_pgm, read_table, write_pgm, write_table


def test_table_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(3)
    rows = [(i, float(x), float(y), "a,b") for i, (x, y) in enumerate(rng.normal(size=(20, 2)) * 1e-7)]
    path = write_table(tmp_path / "t.csv", ("i", "x", "y", "label"), rows, {"z": 0.1, "n": 3})
    table = read_table(path)
    assert table.columns == ["i", "x", "y", "label"]
    assert table.rows == rows
    assert table.meta == {"z": "0.1", "n": "3"}
    assert np.array_equal(table.column("x"), [r[1] for r in rows])


def test_header_precedes_columns():
    text = format_table(("a",), [(1.5,)], {"key": "v"})
    assert text.splitlines() == ["# key=v", "a", "1.5"]


def test_bad_rows_and_meta():
    with pytest.raises(ValueError):
        format_table(("a", "b"), [(1,)])
    with pytest.raises(ValueError):
        format_table(("a",), [], {"k": "two\nlines"})
    with pytest.raises(ValueError):
        parse_table("# only=meta\n")


def test_pgm_round_trip(tmp_path):
    values = np.array([[0.0, 1.0, 2.0], [4.0, 3.0, 0.5]])
    img = read_pgm(write_pgm(tmp_path / "h.pgm", values))
    assert img.shape == (2, 3)
    assert img[1, 0] == 255 and img[0, 0] == 0
    assert img[0, 2] == round(255 * 0.5)


def test_pgm_constant_and_invalid(tmp_path):
    assert np.all(read_pgm(write_pgm(tmp_path / "c.pgm", np.ones((2, 2)))) == 0)
    with pytest.raises(ValueError):
        write_pgm(tmp_path / "x.pgm", np.ones(4))
    (tmp_path / "bad.pgm").write_bytes(b"P2\n1 1\n255\n0")
    with pytest.raises(ValueError):
        read_pgm(tmp_path / "bad.pgm")
