import hashlib
import json
from pathlib import Path

import pytest

from quenchscape.cli import main
from quenchscape.harness import SUBCOMMANDS, load_config
from quenchscape.output import Table, format_value, render_csv

SMOKE = Path(__file__).resolve().parents[1] / "configs" / "smoke.toml"


def run_cli(tmp_path, sub, *extra, config=SMOKE, name="out"):
    out = tmp_path / name
    assert main([sub, "--config", str(config), "--out", str(out), *extra]) == 0
    return out


def data_files(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.name != "manifest.json"}


def test_format_value_digits():
    assert format_value(1 / 3) == "0.333333333333"
    assert format_value(3) == "3"
    assert format_value(True) == "true"
    assert format_value(float("nan")) == "nan"


def test_csv_header_is_self_describing():
    t = Table("demo", ("a", "b"))
    t.add(1, 0.5)
    text = render_csv(t, "abc", 9)
    assert text.splitlines()[:5] == [
        "# tool: quenchscape",
        f"# version: {__import__('quenchscape').__version__}",
        "# schema: demo/v1",
        "# config_hash: abc",
        "# seed: 9",
    ]
    assert text.splitlines()[5:] == ["a,b", "1,0.5"]


@pytest.mark.parametrize("sub", ["level-stats", "frame-potential", "bp-scan", "regimes", "maxcut"])
def test_rerun_and_worker_count_are_byte_identical(tmp_path, sub):
    a = data_files(run_cli(tmp_path, sub, "--workers", "1", name="a"))
    b = data_files(run_cli(tmp_path, sub, "--workers", "1", name="b"))
    c = data_files(run_cli(tmp_path, sub, "--workers", "2", name="c"))
    assert a and a == b == c


def test_seed_changes_output(tmp_path):
    a = data_files(run_cli(tmp_path, "frame-potential", "--seed", "1", name="a"))
    b = data_files(run_cli(tmp_path, "frame-potential", "--seed", "2", name="b"))
    assert a != b


def test_manifest_lists_checksums(tmp_path):
    out = run_cli(tmp_path, "level-stats")
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "level-stats" and manifest["seed"] == 7
    listed = {f["file"]: f["sha256"] for f in manifest["files"]}
    assert set(listed) == set(data_files(out))
    for name, digest in listed.items():
        assert hashlib.sha256((out / name).read_bytes()).hexdigest() == digest
    assert manifest["wall_clock_seconds"] >= 0


def test_json_output(tmp_path):
    out = run_cli(tmp_path, "frame-potential", "--format", "json")
    doc = json.loads((out / "frame_potential.json").read_text())
    assert set(doc) == {"rows", "manifest"}
    assert doc["manifest"]["schema"] == "frame_potential/v1"
    m0 = [r for r in doc["rows"] if r["M"] == 0 and r["t"] == 2]
    assert m0 and all(r["estimate"] == 1.0 for r in m0)


def test_level_stats_labels(tmp_path):
    out = run_cli(tmp_path, "level-stats")
    lines = (out / "level_stats_summary.csv").read_text().splitlines()
    rows = [l.split(",") for l in lines if not l.startswith("#")]
    header, body = rows[0], rows[1:]
    labels = {float(r[header.index("W")]): r[header.index("label")] for r in body}
    assert labels[0.0] == "Indeterminate"


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[frame-potential]\nN = 1\n")
    assert main(["frame-potential", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    bad.write_text("[level-stats]\nW = []\n")
    assert main(["level-stats", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    bad.write_text("[vqe]\nlearning_rate = 0.1\n")
    assert main(["vqe", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "unknown keys" in capsys.readouterr().err


def test_every_subcommand_has_a_smoke_section():
    for sub in SUBCOMMANDS:
        run_cfg, section = load_config(SMOKE, sub)
        assert run_cfg.seed == 7 and section is not None
