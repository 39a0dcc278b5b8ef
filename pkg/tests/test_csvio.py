import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from liouvex.csvio import (
    format_number,
    parse_number,
    read_csv,
    read_csv_columns,
    render_csv,
    sha256_file,
    write_csv,
)


def test_shortest_forms():
    assert format_number(4.0) == "4"
    assert format_number(-0.5) == "-0.5"
    assert format_number(1e-20) == "1e-20"
    assert format_number(7) == "7"
    assert format_number(float("nan")) == ""
    third = format_number(1 / 3)
    assert float(third) == 1 / 3 and len(third.replace("0.", "")) <= 17


@given(st.floats(allow_nan=False))
def test_float_round_trip(v):
    assert parse_number(format_number(v)) == v


def test_nan_round_trip():
    assert math.isnan(parse_number(format_number(float("nan"))))


def test_metadata_and_columns(tmp_path):
    p = write_csv(tmp_path / "a.csv", ("t", "v"), [(0.1, 4.0), (0.2, float("nan"))],
                  {"config_sha256": "abc"})
    meta, header, rows = read_csv(p)
    assert meta == {"config_sha256": "abc"}
    assert header == ["t", "v"] and rows[0] == ["0.1", "4"]
    cols = read_csv_columns(p)
    assert np.isnan(cols["v"][1])


def test_rewrite_is_byte_identical(tmp_path):
    rows = [(i * 0.1, np.sqrt(i)) for i in range(20)]
    a = write_csv(tmp_path / "a.csv", ("x", "y"), rows)
    h = sha256_file(a)
    write_csv(tmp_path / "a.csv", ("x", "y"), rows)
    assert sha256_file(a) == h


def test_row_width_checked():
    import pytest
    with pytest.raises(ValueError):
        render_csv(("a", "b"), [(1,)])
