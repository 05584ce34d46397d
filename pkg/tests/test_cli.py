import json
import subprocess
import sys

import pytest

from soibelman import cli, report
from soibelman.config import ConfigError, RunConfig, load_config


@pytest.fixture(autouse=True)
def _cache(tmp_path, monkeypatch):
    monkeypatch.setenv("ARTIFACT_CACHE_DIR", str(tmp_path / "cache"))


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr()


def test_weyl_tables(capsys):
    code, out = run(capsys, "weyl", "--group", "A1")
    data = json.loads(out.out)
    assert code == 0
    assert len(data["elements"]) == 2 and len(data["covers"]) == 1
    code, out = run(capsys, "weyl", "--group", "B2")
    data = json.loads(out.out)
    assert len(data["elements"]) == 8
    assert max(e["length"] for e in data["elements"]) == 4


def test_weyl_csv_and_unknown_group(capsys):
    code, out = run(capsys, "weyl", "--group", "A2", "--format", "csv")
    assert code == 0 and out.out.splitlines()[0].startswith("v\\w,e,")
    code, out = run(capsys, "weyl", "--group", "Q7")
    assert code == 64 and "Q7" in out.err


def test_module_and_rep(capsys):
    code, out = run(capsys, "module", "--group", "A2", "--weight", "1,1", "--q", "0.3,0.8")
    data = json.loads(out.out)
    assert code == 0 and [d["dimension"] for d in data] == [8, 8]
    assert max(max(d["relation_residuals"].values()) for d in data) < 1e-10
    code, out = run(capsys, "rep", "--group", "A2", "--word", "1,2", "--cutoff", "10")
    data = json.loads(out.out)
    assert code == 0 and data[0]["element"] == "s1s2"
    code, out = run(capsys, "rep", "--group", "A2", "--word", "1,1", "--cutoff", "10")
    assert code == 64


def test_verify_exit_codes_and_reports(capsys, tmp_path):
    out_dir = tmp_path / "r"
    code, out = run(capsys, "verify", "torus", "--group", "A2", "--output", str(out_dir))
    assert code == 0
    recs = report.read_jsonl(out_dir / "verify.jsonl")
    assert {r["check_id"] for r in recs} == {"torus", "tau"}
    assert all(r["schema"] == report.SCHEMA_VERSION for r in recs)
    assert (out_dir / "verify.csv").read_text().startswith("schema,check_id")
    code, _ = run(capsys, "verify", "su2", "--output", str(out_dir))
    assert code == 0
    code, _ = run(capsys, "verify", "su2", "--q", "", "--output", str(out_dir))
    assert code == 64
    code, _ = run(capsys, "verify", "su2", "--q", "1.5", "--output", str(out_dir))
    assert code == 64
    code, _ = run(capsys, "verify", "su2", "--tolerance", "su2_relations=1e-30", "--output", str(out_dir))
    assert code == 1


def test_verify_inconclusive_exit(capsys, tmp_path):
    code, _ = run(capsys, "verify", "upsilon", "--group", "A2", "--output", str(tmp_path),
                  "--tolerance", "nonzero=0.999999", "--tolerance", "zero=1e-6")
    assert code == 2


def test_scan_q(capsys, tmp_path):
    code, out = run(capsys, "scan-q", "--group", "A1", "--grid", "0.2:0.8:0.1", "--cutoff", "32",
                    "--format", "csv", "--output", str(tmp_path))
    lines = out.out.strip().splitlines()
    assert code == 0 and len(lines) == 1 + 6
    code, out = run(capsys, "scan-q", "--group", "A1", "--grid", "0.2:0.8:0.1", "--cutoff", "32",
                    "--refine", "--output", str(tmp_path))
    rec = json.loads(out.out)
    assert "refinement_ratio" in rec["residuals"]
    assert len(rec["details"]["fine_step_differences"]) == 12
    code, _ = run(capsys, "scan-q", "--group", "A1", "--grid", "0.5")
    assert code == 64


def test_report_command(capsys, tmp_path):
    run(capsys, "verify", "torus", "--group", "A2", "--output", str(tmp_path))
    code, out = run(capsys, "report", str(tmp_path / "verify.jsonl"))
    assert code == 0 and "torus" in out.out
    code, out = run(capsys, "report", str(tmp_path / "verify.jsonl"), "--format", "csv")
    assert out.out.startswith("check_id,verdict")
    code, _ = run(capsys, "report", str(tmp_path / "missing.jsonl"))
    assert code == 64


def test_usage_errors_exit_64():
    proc = subprocess.run([sys.executable, "-m", "soibelman.cli", "verify", "nonsense"], capture_output=True)
    assert proc.returncode == 64
    proc = subprocess.run([sys.executable, "-m", "soibelman.cli"], capture_output=True)
    assert proc.returncode == 64


def test_help_lists_defaults():
    proc = subprocess.run([sys.executable, "-m", "soibelman.cli", "verify", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "untwist=0.05" in proc.stdout and "cutoff: 24" in proc.stdout


def test_config_file(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text("group: B2\nq_values: [0.3, 0.5]\ncutoff: 12\ntolerances: {untwist: 0.1}\n")
    cfg = load_config(p)
    assert cfg.group == "B2" and cfg.q_values == (0.3, 0.5) and cfg.cutoff == 12
    assert cfg.tolerances["untwist"] == 0.1 and cfg.tolerances["zero"] == 1e-6
    p.write_text("group: [[2, -1], [-1, 2]]\n")
    assert load_config(p).group_spec == [[2, -1], [-1, 2]]
    for bad in ("q_values: []\n", "cutoff: 4\n", "q_values: [1.0]\n", "colour: red\n", "tolerances: {nope: 1}\n"):
        p.write_text(bad)
        with pytest.raises(ConfigError):
            load_config(p)
    assert RunConfig().cutoff == 24


def test_cache_hit_matches_cold_build(tmp_path):
    import numpy as np

    from soibelman import cache, qmodule
    from soibelman.weyl import load_group

    rs = load_group("A2").rs
    c = cache.enable(tmp_path / "c")
    try:
        cold = qmodule.build_module(rs, 0.5, (2, 1))
        qmodule._MEMO.clear()
        warm = qmodule.build_module(rs, 0.5, (2, 1))
        assert c.hits == 1
        assert all(np.array_equal(a, b) for a, b in zip(cold.E + cold.F, warm.E + warm.F))
        # a corrupted entry is rebuilt with a warning
        path = c.path(rs, 0.5, (2, 1))
        path.write_text("{not json")
        qmodule._MEMO.clear()
        again = qmodule.build_module(rs, 0.5, (2, 1))
        assert all(np.array_equal(a, b) for a, b in zip(cold.E, again.E))
        assert json.loads(path.read_text())["format_version"] == cache.FORMAT_VERSION
    finally:
        cache.disable()


def test_reports_byte_identical_modulo_meta(capsys, tmp_path):
    for d in ("a", "b"):
        run(capsys, "verify", "torus", "--group", "B2", "--output", str(tmp_path / d), "--seed", "5")
    a = report.strip_meta(report.read_jsonl(tmp_path / "a" / "verify.jsonl"))
    b = report.strip_meta(report.read_jsonl(tmp_path / "b" / "verify.jsonl"))
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert (tmp_path / "a" / "verify.csv").read_bytes() == (tmp_path / "b" / "verify.csv").read_bytes()
