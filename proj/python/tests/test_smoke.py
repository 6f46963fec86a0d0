import math
from pathlib import Path

import numpy as np
import pytest

nadac = pytest.importorskip("nadac")

PRESETS = Path(__file__).resolve().parents[2] / "presets"


def test_version():
    assert nadac.version()


def test_opinion_run_shapes():
    out = nadac.run(PRESETS / "opinion.json", horizon=200)
    assert out["x"].shape == (200, 4)
    assert out["u"].shape == (200, 1)
    assert out["summary"]["steps"] == 200
    assert np.all(np.isfinite(out["param_err"]))
    # J is a running mean of nonnegative terms
    assert np.all(out["J"] >= 0)


def test_same_seed_same_series():
    a = nadac.run(PRESETS / "epidemic_sigma5.json", horizon=300)
    b = nadac.run(PRESETS / "epidemic_sigma5.json", horizon=300)
    np.testing.assert_array_equal(a["x"], b["x"])


def test_open_loop_reference_is_nan():
    out = nadac.run(PRESETS / "tanh_zero_input.json", horizon=50)
    assert np.all(np.isnan(out["xstar"]))


def test_validation_error_names_field():
    cfg = nadac.load_config(PRESETS / "opinion.json")
    cfg["noise"] = {"kind": "uniform_cube", "half_width": -1}
    with pytest.raises(nadac.ValidationError, match="noise.half_width"):
        nadac.validate(cfg)


def test_scalar_dare_matches_root():
    a, q, r = 1.3, 2.0, 0.5
    p, residual, _ = nadac.solve_dare([[a]], [[q]], [[r]])
    b = r - a * a * r - q
    root = 0.5 * (-b + math.sqrt(b * b + 4 * q * r))
    assert abs(p[0, 0] - root) < 1e-10
    assert residual < 1e-10


def test_clamp_midpoint():
    assert nadac.smoothed_clamp_value(10.0, 5.0, 5.0) == pytest.approx(5.0, abs=1e-13)


def test_presets_match_schema():
    jsonschema = pytest.importorskip("jsonschema")
    import json

    schema = json.loads((PRESETS.parent / "schema" / "run_config.schema.json").read_text())
    for path in sorted(PRESETS.glob("*.json")):
        jsonschema.validate(json.loads(path.read_text()), schema)
        nadac.validate(path)
