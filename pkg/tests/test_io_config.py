import struct

import numpy as np
import pytest
import yaml
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from sasakigraph import io_formats as io
from sasakigraph.config import ConfigError, dump_config, echo_config, load_config, parse_config
from sasakigraph.grid import SigmaGrid


@settings(max_examples=25, deadline=None)
@given(hnp.arrays(np.float64, hnp.array_shapes(min_dims=1, max_dims=3, max_side=6),
                  elements=st.floats(allow_nan=False, width=64)))
def test_binary_round_trip(tmp_path_factory, values):
    path = tmp_path_factory.mktemp("bin") / "f.bin"
    io.write_field_binary(path, values)
    back = io.read_field_binary(path)
    assert back.shape == values.shape
    assert np.array_equal(back.view(np.uint64), np.ascontiguousarray(values).view(np.uint64))


def test_binary_layout(tmp_path):
    a = np.arange(6, dtype=float).reshape(2, 3)
    p = tmp_path / "a.bin"
    io.write_field_binary(p, a)
    data = p.read_bytes()
    assert data[:4] == b"SGF1"
    assert struct.unpack_from("<II", data, 4) == (1, 2)
    assert struct.unpack_from("<2Q", data, 12) == (2, 3)
    assert np.array_equal(np.frombuffer(data[28:], "<f8"), a.ravel())


def test_binary_rejects_unknown_version(tmp_path):
    p = tmp_path / "a.bin"
    io.write_field_binary(p, np.zeros(3))
    data = bytearray(p.read_bytes())
    data[4:8] = struct.pack("<I", 99)
    p.write_bytes(bytes(data))
    with pytest.raises(io.FormatVersionError):
        io.read_field_binary(p)


def test_binary_rejects_bad_magic_and_truncation(tmp_path):
    p = tmp_path / "a.bin"
    p.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(ValueError):
        io.read_field_binary(p)
    io.write_field_binary(p, np.zeros(4))
    p.write_bytes(p.read_bytes()[:-8])
    with pytest.raises(ValueError):
        io.read_field_binary(p)


@pytest.mark.parametrize("m", [2, 3])
def test_csv_round_trip(tmp_path, rng, m):
    grid = SigmaGrid.make(1, m, 16, 32)
    v = rng.normal(size=grid.shape)
    p = tmp_path / "f.csv"
    io.write_field_csv(p, v, grid, "u")
    back, header = io.read_field_csv(p)
    assert np.array_equal(back, v)
    assert header[-1] == "u" and "x1" in header


def test_csv_version_rejected(tmp_path):
    p = tmp_path / "f.csv"
    p.write_text("# sasakigraph field csv version 7\n# shape 1\ni,v\n0,1.0\n")
    with pytest.raises(io.FormatVersionError):
        io.read_field_csv(p)


def test_json_round_trip_and_version(tmp_path):
    p = tmp_path / "r.json"
    io.write_json(p, "solver_report", {"a": np.arange(3), "b": np.float64(1.5), "flag": np.bool_(True)})
    doc = io.read_json(p, "solver_report")
    assert doc["a"] == [0, 1, 2] and doc["b"] == 1.5 and doc["flag"] is True
    with pytest.raises(ValueError):
        io.read_json(p, "other")
    doc["format_version"] = 2
    p.write_text(__import__("json").dumps(doc))
    with pytest.raises(io.FormatVersionError):
        io.read_json(p)


def test_config_defaults():
    cfg = load_config({})
    assert (cfg.n, cfg.m) == (1, 2)
    assert cfg.grid.N_x == 64 and cfg.grid.N_theta == 128
    assert cfg.prescription.r1 == 1.0 and cfg.prescription.r2 == 1.0
    assert cfg.solver.target_tol == 1e-8
    assert cfg.build_grid().shape == (64, 128)


def test_config_rejects_r1_above_one():
    with pytest.raises(ConfigError, match="r1 <= 1"):
        load_config({"prescription": {"r1": 1.2, "r2": 1.5}})


def test_config_rejects_unknown_key():
    with pytest.raises(ConfigError, match="bogus"):
        load_config({"bogus": 1})
    with pytest.raises(ConfigError):
        load_config({"grid": {"N_x": 64, "extra": 2}})


@pytest.mark.parametrize("bad", [
    {"grid": {"N_theta": 33}},
    {"grid": {"N_x": 4}},
    {"scenario": "nope"},
    {"prescription": {"kind": "expression"}},
    {"m": 4},
    {"bundle": {"connection": [[{}]] * 2}},
])
def test_config_rejections(bad):
    with pytest.raises(ConfigError):
        load_config(bad)


def test_config_round_trip(tmp_path):
    data = {
        "n": 1, "m": 3,
        "grid": {"N_x": 16, "N_theta": 32},
        "prescription": {"kind": "expression", "expr": "2/rho", "r1": 0.9, "r2": 1.1},
        "bundle": {"connection": [[{"const": 0.5}, {}, {"terms": [{"k": [1], "a": 0.1, "b": 0.0}]}]]},
        "solver": {"seed": 3},
    }
    cfg = load_config(data)
    p = tmp_path / "c.yaml"
    p.write_text(dump_config(cfg))
    again = parse_config(p)
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)
    spec = again.build_spec()
    assert spec.m == 3 and not spec.is_flat_connection


def test_effective_config_echo(tmp_path):
    cfg = load_config({"grid": {"N_x": 32}})
    path = echo_config(cfg, tmp_path / "out")
    text = path.read_text()
    assert text.startswith("# sasakigraph effective config version 1")
    echoed = yaml.safe_load(text)
    assert echoed["grid"]["N_x"] == 32 and echoed["grid"]["N_theta"] == 128


def test_config_top_level_must_be_mapping(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        parse_config(p)
