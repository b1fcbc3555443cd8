import json
import math

import numpy as np
import pytest

from droplet.config import DEFAULT_OUTPUTS, load_config, parse_config, random_shape
from droplet.coords import decompose
from droplet.errors import ConfigError


def test_empty_config_uses_defaults():
    cfg = parse_config({})
    assert cfg.r_e == pytest.approx(1.0, rel=1e-15)
    assert cfg.dynamics.n == 256
    assert cfg.dynamics.law.slope_at_one == 3.0
    assert cfg.outputs == DEFAULT_OUTPUTS
    assert np.all(cfg.initial_shape().samples == 0.0)


@pytest.mark.parametrize(
    "data,where",
    [
        ({"format_version": 2}, "format_version"),
        ({"model": {"V0": -1.0}}, "model/V0"),
        ({"discretization": {"N": 33}}, "discretization/N"),
        ({"discretization": {"N": 8}}, "discretization/N"),
        ({"model": {"metric_mode": "flat"}}, "model/metric_mode"),
        ({"bogus": 1}, "<root>"),
        ({"initial_shape": {"coefficients": {}, "random": {"max_mode": 2, "amplitude": 0.1, "seed": 1}}},
         "initial_shape"),
        ({"initial_shape": {"coefficients": {"cos": {"two": 0.1}}}}, "initial_shape/coefficients/cos"),
    ],
)
def test_schema_errors_name_the_field(data, where):
    with pytest.raises(ConfigError, match=where):
        parse_config(data)


def test_semantic_errors_become_config_errors():
    with pytest.raises(ConfigError):
        parse_config({"model": {"contact_law": {"type": "spline", "s": [0.1, 1, 2, 6], "F": [1, 0, -1, -2]}}})
    with pytest.raises(ConfigError):
        parse_config({"model": {"contact_law": {"type": "spline", "s": [0.1, 1, 2, 6], "F": [-1, 0, 1]}}})
    with pytest.raises(ConfigError, match="out of range"):
        parse_config({"discretization": {"N": 16}, "initial_shape": {"coefficients": {"sin": {"8": 0.01}}}}
                     ).initial_shape()


def test_load_config_reports_bad_files(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(bad)


def test_full_config_round_trip(tmp_path):
    doc = {
        "format_version": 1,
        "model": {"V0": 2.0, "contact_law": {"type": "power", "p": 2}, "metric_mode": "paper"},
        "discretization": {"N": 64, "cfl_c": 0.5, "T": 1.5, "snapshot_stride": 3, "dealias": False},
        "initial_shape": {"coefficients": {"mean": 0.01, "cos": {"2": 0.02}, "sin": {"3": 0.01}}},
        "outputs": {"summary_json": "s.json"},
        "spectrum": {"max_mode": 8, "richardson": False},
    }
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    cfg = load_config(path)
    d = cfg.dynamics
    assert d.r_e == pytest.approx((8 / math.pi) ** (1 / 3))
    assert (d.n, d.cfl, d.T, d.snapshot_stride, d.dealias, d.metric) == (64, 0.5, 1.5, 3, False, "paper")
    assert d.law.slope_at_one == 2.0
    assert cfg.outputs["summary_json"] == "s.json" and cfg.outputs["trajectory_csv"] == "trajectory.csv"
    a, b = cfg.initial_shape().coeffs
    assert a[0] == pytest.approx(0.01) and a[2] == pytest.approx(0.02) and b[3] == pytest.approx(0.01)


def test_spline_law_from_config():
    s = np.union1d(np.linspace(0.1, 6.0, 59), [1.0]).tolist()
    cfg = parse_config({"model": {"contact_law": {"type": "spline", "s": s, "F": [x**3 - 1 for x in s]}}})
    assert cfg.dynamics.law.slope_at_one == pytest.approx(3.0, rel=0.05)


def test_translate_moves_the_centre():
    cfg = parse_config({"discretization": {"N": 64},
                        "initial_shape": {"coefficients": {"cos": {"2": 0.02}, "translate": [0.05, -0.03]}}})
    np.testing.assert_allclose(decompose(cfg.initial_shape()).v, [0.05, -0.03], atol=1e-12)


def test_random_shape_is_reproducible_and_normalised():
    a = random_shape(1.0, 64, 4, 0.03, seed=11)
    b = random_shape(1.0, 64, 4, 0.03, seed=11)
    c = random_shape(1.0, 64, 4, 0.03, seed=12)
    np.testing.assert_array_equal(a.samples, b.samples)
    assert not np.array_equal(a.samples, c.samples)
    assert np.max(np.abs(a.samples)) == pytest.approx(0.03, rel=1e-14)
    ca, cb = a.coeffs
    assert np.max(np.abs(ca[5:])) < 1e-15 and np.max(np.abs(cb[5:])) < 1e-15


def test_random_shape_limits():
    assert np.all(random_shape(1.0, 32, 3, 0.0, seed=0).samples == 0.0)
    with pytest.raises(ConfigError):
        random_shape(1.0, 32, 16, 0.01, seed=0)
