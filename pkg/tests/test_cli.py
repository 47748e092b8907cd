import json
from pathlib import Path

import numpy as np
import pytest

from sspc import __version__, exports
from sspc.cli import UsageError, load_config, main, resolve_out, run, validate_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL_MAP = {
    "kind": "pseudospectrum",
    "model": {"id": "circle-advection"},
    "h": [0.125],
    "N": 32,
    "options": {"zrect": [-1.0, 1.0, -1.0, 1.0], "nx": 5, "ny": 4, "eigenvalues": True},
}

SPECIAL = {"kind": "special", "options": {"k": [2], "s": {"start": -10, "stop": 10, "num": 21}}}


def write(tmp_path, config, name="c.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return str(path)


def tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(Path(root).rglob("*")) if p.is_file()}


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    assert main(["validate", str(path)]) == 0


def test_version(capsys):
    assert main(["version"]) == 0
    assert __version__ in capsys.readouterr().out


def test_list_models(capsys):
    assert main(["list-models"]) == 0
    out = capsys.readouterr().out
    for name in ("circle-advection", "nsa-harmonic", "torus-schrodinger", "kfp"):
        assert name in out


def test_empty_h_list_is_usage_error(tmp_path, capsys):
    bad = dict(SMALL_MAP, h=[])
    assert main(["validate", write(tmp_path, bad)]) == 1
    assert "h" in capsys.readouterr().err


def test_unknown_key_is_rejected():
    with pytest.raises(UsageError):
        validate_config(dict(SMALL_MAP, colour="red"))


def test_unknown_option_is_rejected():
    with pytest.raises(UsageError):
        validate_config({**SMALL_MAP, "options": {**SMALL_MAP["options"], "bogus": 1}})


def test_missing_file_is_exit_1(tmp_path):
    assert main(["validate", str(tmp_path / "nope.json")]) == 1


def test_load_config_roundtrip(tmp_path):
    assert load_config(write(tmp_path, SPECIAL)) == SPECIAL


def test_kfp_operator_is_unsupported(tmp_path):
    config = {**SMALL_MAP, "model": {"id": "kfp"}}
    assert main(["run", write(tmp_path, config), "--out", str(tmp_path / "o"), "--quiet"]) == 1


def test_special_budget_violation_exits_2(tmp_path):
    config = {**SPECIAL, "options": {**SPECIAL["options"], "budget": 0.5}}
    out = tmp_path / "o"
    assert main(["run", write(tmp_path, config), "--out", str(out), "--quiet"]) == 2
    report = json.loads((out / "report.json").read_text())
    assert report["status"] == "assumption-violation"
    assert "violation" in report


def test_quasimode_negative_bracket_exits_2(tmp_path):
    config = {"kind": "quasimode", "model": {"id": "circle-advection"}, "h": [0.03125, 0.015625],
              "options": {"rho": [-1.0471975511965976, 0.0]}}
    out = tmp_path / "o"
    assert main(["run", write(tmp_path, config), "--out", str(out), "--quiet"]) == 2
    assert "ConstructionError" in json.loads((out / "report.json").read_text())["violation"]


def test_pseudospectrum_run(tmp_path):
    code, report = run(SMALL_MAP, tmp_path)
    assert code == 0 and report["status"] == "ok"
    names = {f["name"] for f in report["files"]}
    assert names == {"map_h0.125.csv", "spectrum_h0.125.csv"}
    for f in report["files"]:
        assert exports.sha256(tmp_path / f["name"]) == f["sha256"]
    maps = [n for n in names if n.startswith("map")]
    lines = (tmp_path / maps[0]).read_text().splitlines()
    assert lines[0] == "re_z,im_z,log10_norm"
    assert len(lines) == 1 + 5 * 4
    assert "elapsed" not in json.dumps(report)


def test_runs_are_byte_identical(tmp_path):
    path = write(tmp_path, SMALL_MAP)
    assert main(["run", path, "--out", str(tmp_path / "a"), "--quiet"]) == 0
    assert main(["run", path, "--out", str(tmp_path / "b"), "--quiet", "--workers", "1"]) == 0
    assert tree(tmp_path / "a") == tree(tmp_path / "b")


def test_brackets_seeded_runs_match(tmp_path):
    config = json.loads((CONFIGS / "brackets.json").read_text())
    config.pop("output")
    run(config, tmp_path / "a")
    run(config, tmp_path / "b")
    assert tree(tmp_path / "a") == tree(tmp_path / "b")
    rows = (tmp_path / "a" / "brackets.csv").read_text().splitlines()
    assert len(rows) == 1 + 1 + 3


def test_out_precedence(tmp_path, monkeypatch):
    config = {"output": "from-config"}
    monkeypatch.delenv("SSPC_OUT", raising=False)
    assert resolve_out(None, config) == Path("from-config")
    assert resolve_out(None, {}) == Path("sspc-out")
    monkeypatch.setenv("SSPC_OUT", str(tmp_path / "env"))
    assert resolve_out(None, config) == tmp_path / "env"
    assert resolve_out(str(tmp_path / "flag"), config) == tmp_path / "flag"


def test_env_out_used_by_main(tmp_path, monkeypatch):
    monkeypatch.setenv("SSPC_OUT", str(tmp_path / "env"))
    assert main(["run", write(tmp_path, SPECIAL), "--quiet"]) == 0
    assert (tmp_path / "env" / "report.json").exists()


def test_bad_workers(tmp_path):
    assert main(["run", write(tmp_path, SPECIAL), "--workers", "0", "--out", str(tmp_path)]) == 1


def test_fmt_and_plain_json(tmp_path):
    assert exports.fmt(0.1) == "0.10000000000000001"
    assert exports.fmt(np.int64(3)) == "3"
    assert exports.fmt(True) == "true"
    path = exports.write_json(tmp_path / "x.json", {"z": 1 + 2j, "a": np.arange(2), "bad": np.inf})
    text = path.read_text()
    assert text.endswith("\n") and "\r" not in text
    assert json.loads(text) == {"z": [1.0, 2.0], "a": [0, 1], "bad": "inf"}
