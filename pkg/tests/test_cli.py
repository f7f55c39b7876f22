import json
import subprocess
import sys

import pytest

from biharm4 import classify as cl
from biharm4 import cli

SMALL = ["--n-radial", "16", "--r-max", "8"]


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def pot_file(tmp_path):
    def write(defn):
        p = tmp_path / "pot.json"
        p.write_text(json.dumps(defn))
        return str(p)

    return write


def test_no_command_is_usage_error(capsys):
    assert run([], capsys)[0] == cli.EXIT_USAGE
    assert run(["classify", "--n-radial", "many"], capsys)[0] == cli.EXIT_USAGE


def test_classify_regular(capsys, pot_file):
    code, out, _ = run(["classify", *SMALL, "--potential", pot_file({"type": "gaussian", "depth": 0.01})],
                       capsys)
    doc = json.loads(out)
    assert code == cli.EXIT_OK
    assert doc["version"] == cli.SCHEMA_VERSION
    assert doc["report"]["kind"] == "Regular"


def test_classify_engineered_first_kind(capsys, pot_file):
    code, out, _ = run(["resonance", "--n-radial", "24", "--r-max", "8",
                        "--potential", pot_file({"type": "engineered_s"})], capsys)
    assert code == cli.EXIT_OK
    assert '"First"' in out and '"s"' in out


def test_missing_and_invalid_potential(capsys, pot_file, tmp_path):
    assert run(["classify", *SMALL, "--potential", str(tmp_path / "nope.json")], capsys)[0] == cli.EXIT_ERROR
    bad = pot_file({"type": "table", "indices": [0], "values": [float("nan")]})
    assert run(["classify", *SMALL, "--potential", bad], capsys)[0] == cli.EXIT_ERROR


def test_output_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert run(["classify", *SMALL, "--out", str(d)], capsys)[0] == cli.EXIT_OK
    assert (a / "classify.json").read_bytes() == (b / "classify.json").read_bytes()


def test_config_file_validation(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"version": "other/9"}))
    assert run(["classify", "--config", str(cfg)], capsys)[0] == cli.EXIT_USAGE
    cfg.write_text(json.dumps({"n_radial": 16, "mystery": 1}))
    assert run(["classify", "--config", str(cfg)], capsys)[0] == cli.EXIT_USAGE
    cfg.write_text(json.dumps({"n_radial": 16, "r_max": 8.0, "potential": {"type": "gaussian", "depth": 0.01}}))
    code, out, _ = run(["classify", "--config", str(cfg)], capsys)
    assert code == cli.EXIT_OK
    assert json.loads(out)["config"]["n_radial"] == 16


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n_radial": 16}))
    ns = cli.build_parser().parse_args(["classify", "--config", str(cfg), "--n-radial", "20"])
    assert cli.config_from_args(ns).n_radial == 20


def test_threads_env(monkeypatch):
    monkeypatch.setenv("THREADS", "2")
    ns = cli.build_parser().parse_args(["bounds"])
    assert cli.config_from_args(ns).threads == 2
    monkeypatch.setenv("THREADS", "two")
    with pytest.raises(cli.UsageError):
        cli.config_from_args(ns)


def test_gap_exit_code(monkeypatch, capsys):
    report = cl.SingularityReport(kind="First", ranks=(1, 0, 0, 0), smallest_singular_values={},
                                  resonance_counts={}, interval="(1,inf)", t3_zero=None, tol=1e-7,
                                  gap_ok=False, gap_stages=("QT0Q",),
                                  candidate_kinds=("Regular", "First"))
    monkeypatch.setattr(cli, "_classify", lambda cfg: (None, report))
    code, out, _ = run(["classify", *SMALL], capsys)
    assert code == cli.EXIT_GAP
    assert "candidate_kinds" in out


def test_bounds_command(tmp_path, capsys):
    assert run(["bounds", "--out", str(tmp_path)], capsys)[0] == cli.EXIT_OK
    doc = json.loads((tmp_path / "bounds.json").read_text())
    certs = doc["certificates"]
    assert all(c["passed"] for c in certs)
    assert all(c["samples"] for c in certs)


def test_selftest_quick_and_mutation(tmp_path, capsys):
    code, _, err = run(["kernels", "selftest", "--quick", "--out", str(tmp_path / "ok")], capsys)
    assert code == cli.EXIT_OK
    assert "FAIL" not in err
    code, _, err = run(["kernels", "selftest", "--quick", "--inject-g2-error", "0.01",
                        "--out", str(tmp_path / "bad")], capsys)
    assert code == cli.EXIT_ERROR
    assert any("descent_consistency" in line and "FAIL" in line for line in err.splitlines())


def test_waveop_writes_tables(tmp_path, capsys):
    code, _, _ = run(["waveop", *SMALL, "--out", str(tmp_path), "--probe-p", "2,6"], capsys)
    assert code == cli.EXIT_OK
    doc = json.loads((tmp_path / "waveop.json").read_text())
    summary = doc["summary"]
    assert len(summary["born_norms"]) == 3
    assert {row["p"] for row in summary["lp_probe"]} == {2.0, 6.0}
    assert (tmp_path / "waveop_nodes.csv").exists()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "biharm4", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "classify" in proc.stdout
