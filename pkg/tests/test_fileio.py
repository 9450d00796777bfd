from __future__ import annotations

import numpy as np
import pytest

from carleman_workbench import fileio
from carleman_workbench.errors import ConfigError

SCHEMA = {
    "n": (int, 4),
    "tau": (float, 0.8),
    "re_list": (fileio.floats, [10.0]),
    "center": (fileio.boolean, True),
}


def test_defaults_and_overrides():
    assert fileio.parse_config("", SCHEMA) == {"n": 4, "tau": 0.8, "re_list": [10.0], "center": True}
    cfg = fileio.parse_config("# comment\nn = 8  # trailing\n\nre_list = 1, 2.5\ncenter=no\n", SCHEMA)
    assert cfg == {"n": 8, "tau": 0.8, "re_list": [1.0, 2.5], "center": False}
    assert fileio.parse_config("re_list =\n", SCHEMA)["re_list"] == []


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ("n = 4\nbogus = 1\n", 2, "unknown key"),
        ("n = 4\n\nn = 5\n", 3, "duplicate"),
        ("tau = fast\n", 1, "bad value"),
        ("# ok\njust words\n", 2, "key=value"),
        ("center = maybe\n", 1, "bad value"),
    ],
)
def test_config_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        fileio.parse_config(text, SCHEMA)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}: ")
    assert fragment in str(info.value)


def test_field_csv_round_trip(tmp_path):
    f = np.random.default_rng(0).random((9, 3, 2))
    fileio.write_field(tmp_path / "f.csv", f)
    np.testing.assert_array_equal(fileio.read_field(tmp_path / "f.csv"), f)


def test_floats_written_exactly(tmp_path):
    fileio.write_csv(tmp_path / "a.csv", ["x"], [(0.1 + 0.2,), (np.float64(1 / 3),), (7,)])
    assert (tmp_path / "a.csv").read_text() == "x\n0.30000000000000004\n0.3333333333333333\n7\n"


def test_svg_is_reproducible_and_carries_data(tmp_path):
    series = {"eps": ([1, 2, 3], [0.1, 0.2, 0.4])}
    for name in ("a.svg", "b.svg"):
        fileio.line_plot_svg(tmp_path / name, series, "Re", "eps", title="t", logy=True)
    a = (tmp_path / "a.svg").read_bytes()
    assert a == (tmp_path / "b.svg").read_bytes()
    text = a.decode()
    assert text.startswith("<?xml")
    assert "eps: (1,0.1) (2,0.2) (3,0.4)" in text
