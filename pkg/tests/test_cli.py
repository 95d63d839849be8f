import json
import subprocess
import sys

import pytest

from zsmsim import bundled_scenario
from zsmsim.cli import EXIT_INVARIANT, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, main
from zsmsim.errors import InvariantViolation
from zsmsim.world import World


@pytest.fixture
def scenario(tmp_path):
    path = tmp_path / "s.scn"
    path.write_text(bundled_scenario("option_1a"))
    return path


def _run(tmp_path, scenario, *extra):
    trace, metrics = tmp_path / "t.tsv", tmp_path / "m.json"
    code = main(["run", "--scenario", str(scenario), "--trace-out", str(trace),
                 "--metrics-out", str(metrics), *extra])
    return code, trace, metrics


def test_run_verify_explain(tmp_path, scenario, capsys):
    code, trace, metrics = _run(tmp_path, scenario)
    assert code == EXIT_OK
    summary = json.loads(metrics.read_text())
    assert summary["decisions"]["ScaleVnf"] == 1 and summary["ticks"] == 120
    assert main(["verify", "--trace", str(trace), "--option", "1A"]) == EXIT_OK
    assert "PASS" in capsys.readouterr().out
    assert main(["verify", "--trace", str(trace), "--option", "2"]) == EXIT_VERIFY
    assert "FAIL" in capsys.readouterr().out
    assert main(["explain", "--trace", str(trace), "--correlation", "s00032-smf-a"]) == EXIT_OK
    assert "VIM modifies the VNF resources" in capsys.readouterr().out


def test_overrides(tmp_path, scenario):
    code, trace, metrics = _run(tmp_path, scenario, "--option", "1B", "--seed", "7", "--max-ticks", "40")
    summary = json.loads(metrics.read_text())
    assert code == EXIT_OK and (summary["option"], summary["seed"], summary["ticks"]) == ("1B", 7, 40)
    assert main(["verify", "--trace", str(trace), "--option", "1B"]) == EXIT_OK


def test_syntax_error_reports_line(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("option = 1A\n\nseed = x\n")
    code, _, _ = _run(tmp_path, bad)
    assert code == EXIT_USAGE
    assert f"{bad}:3:" in capsys.readouterr().err


def test_dangling_reference_is_usage_error(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("[[load]]\nnf = smf-9\nbase = 1\n")
    assert _run(tmp_path, bad)[0] == EXIT_USAGE
    assert "smf-9" in capsys.readouterr().err


def test_missing_files_and_bad_args(tmp_path):
    assert _run(tmp_path, tmp_path / "absent.scn")[0] == EXIT_USAGE
    assert main(["verify", "--trace", str(tmp_path / "absent.tsv"), "--option", "1A"]) == EXIT_USAGE
    assert main(["verify", "--trace", "x", "--option", "9"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_unknown_correlation(tmp_path, scenario):
    _, trace, _ = _run(tmp_path, scenario)
    assert main(["explain", "--trace", str(trace), "--correlation", "nope"]) == EXIT_USAGE


def test_invariant_violation_exit_code(tmp_path, scenario, monkeypatch):
    def broken(self):
        raise InvariantViolation("forced")
    monkeypatch.setattr(World, "check_invariants", broken)
    assert _run(tmp_path, scenario)[0] == EXIT_INVARIANT


def test_module_entry_point(tmp_path, scenario):
    trace, metrics = tmp_path / "t.tsv", tmp_path / "m.json"
    proc = subprocess.run([sys.executable, "-m", "zsmsim", "run", "--scenario", str(scenario),
                           "--trace-out", str(trace), "--metrics-out", str(metrics), "--max-ticks", "10"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "10 ticks" in proc.stdout
