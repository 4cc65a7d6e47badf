import math

import orjson
import pytest

from sketchridge.errors import ConfigError
from sketchridge.estimator import RiskKind
from sketchridge.utils.output import format_value, read_json, write_csv, write_manifest


def test_format_value():
    assert format_value(None) == ""
    assert format_value(True) == "1"
    assert format_value(3) == "3"
    assert format_value(0.1) == "0.1"
    assert float(format_value(math.pi)) == math.pi
    assert format_value(RiskKind.CONDITIONAL) == "ConditionalOnBeta"


def test_write_csv(tmp_path):
    path = write_csv(tmp_path / "deep" / "rows.csv", ("a", "b"), [{"a": 1, "b": 0.5}, {"a": 2}])
    assert path.read_text() == "a,b\n1,0.5\n2,\n"


def test_manifest_lists_file_names(tmp_path):
    data = tmp_path / "rows.csv"
    path = write_manifest(
        tmp_path / "m.json", command="simulate", config={"n": 4}, seeds={"base_seed": 1}, files=[data]
    )
    manifest = orjson.loads(path.read_bytes())
    assert manifest["files"] == ["rows.csv"]
    assert manifest["versions"]["sketchridge"] == "0.1.0"


def test_read_json_errors(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        read_json(bad)
    with pytest.raises(ConfigError):
        read_json(tmp_path / "missing.json")
