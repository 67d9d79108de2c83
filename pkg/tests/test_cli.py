import io
import json

import pytest

from finslerlab import cli
from finslerlab.cli import ConfigError, VerificationReport, emit_report, main, parse_config, run_experiment

MINIMAL = "task = quotient-sweep\ndim = 3\nmetric = funk-ball\nkind = hardy\np = 2\n"


def test_minimal_config_is_valid():
    cfg = parse_config(MINIMAL)
    assert cfg.task == "quotient-sweep" and cfg.dim == 3
    assert cfg["quotient.p"] == 2.0
    assert cfg["sampling.seed"] == 0


def test_sections_and_comments():
    text = "# sweep\ntask = quotient-sweep\ndim = 3\n[metric]\nkind = funk-ball\n[quotient]\nkind = ckn\np = 2.5\nq = 1\n"
    cfg = parse_config(text)
    assert cfg["quotient.kind"] == "ckn" and cfg["quotient.q"] == 1.0


def test_json_config_is_equivalent():
    doc = {"task": "quotient-sweep", "dim": 3, "metric": {"kind": "funk-ball"},
           "quotient": {"kind": "hardy", "p": 2}}
    assert parse_config(json.dumps(doc)).values == parse_config(MINIMAL).values
    assert parse_config(doc).values == parse_config(MINIMAL).values


def test_hardy_above_dimension_points_to_divergence_demo():
    with pytest.raises(ConfigError) as ei:
        parse_config(MINIMAL.replace("p = 2", "p = 3"))
    assert any("divergence-demo" in v for v in ei.value.violations)


def test_ckn_window_message():
    with pytest.raises(ConfigError) as ei:
        parse_config("task = quotient-sweep\ndim = 7\nmetric = funk-ball\nkind = ckn\np = 2.5\nq = 1\n")
    assert any("2(p-q)/(p-2)" in v for v in ei.value.violations)


def test_unknown_key_is_named():
    with pytest.raises(ConfigError) as ei:
        parse_config(MINIMAL + "colour = blue\n")
    assert ei.value.violations == ["unknown key 'colour'"]


def test_all_violations_reported_together():
    with pytest.raises(ConfigError) as ei:
        parse_config(MINIMAL + "tolerance.scale = -1\noutput.format = xml\nsampling.flags = 0\n")
    assert len(ei.value.violations) == 3


def test_missing_required_key():
    with pytest.raises(ConfigError, match="missing required key 'dim'"):
        parse_config("task = quotient-sweep\nmetric = funk-ball\n")


def test_powersum_funk_domain_excluded():
    with pytest.raises(ConfigError, match="flat boundary"):
        parse_config("task = curvature-scan\ndim = 2\nmetric = funk\nnorm = powersum\nmetric.m = 2\n")


def test_empty_report():
    rep = VerificationReport("empty")
    buf = io.StringIO()
    assert emit_report(rep, "text", buf) == 0
    assert "0 checks" in buf.getvalue()
    assert rep.to_csv() == "name,expected,observed,tol,status\n"


def test_failing_check_sets_exit_code():
    rep = VerificationReport("t")
    rep.add("x", 1.0, 2.0, 1e-3, "fail")
    assert emit_report(rep, "csv", io.StringIO()) == 1


def test_run_writes_sorted_artifacts(tmp_path):
    rep = run_experiment(parse_config(MINIMAL), tmp_path)
    assert rep.ok
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["report.csv", "report.json", "sweep.csv", "sweep.json"]
    assert (tmp_path / "report.csv").read_text().splitlines()[0] == "name,expected,observed,tol,status"
    doc = json.loads((tmp_path / "report.json").read_text())
    assert doc["summary"]["fail"] == 0


def test_same_seed_is_byte_identical(tmp_path):
    text = "task = distance-audit\ndim = 3\nmetric = funk-ball\nsampling.pairs = 10\nseed = 5\n"
    a, b = tmp_path / "a", tmp_path / "b"
    run_experiment(parse_config(text), a)
    run_experiment(parse_config(text), b)
    for f in sorted(a.iterdir()):
        assert f.read_bytes() == (b / f.name).read_bytes()


def test_main_exit_codes(tmp_path, capsys):
    cfg = tmp_path / "c.conf"
    cfg.write_text(MINIMAL)
    assert main(["--config", str(cfg), "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("name,expected,observed,tol,status\n")
    assert main(["--config", str(cfg), "--set", "p=3"]) == 2
    assert "divergence-demo" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.conf")]) == 2


@pytest.mark.parametrize("task,extra", [
    ("divergence-demo", "p = 3\n"),
    ("comparison-check", "comparison.points = 20\n"),
    ("reversible-contrast", ""),
])
def test_tasks_pass(task, extra):
    metric = "klein" if task == "reversible-contrast" else "funk-ball"
    cfg = parse_config(f"task = {task}\ndim = 3\nmetric = {metric}\n" + extra)
    rep = run_experiment(cfg)
    assert rep.ok, rep.to_text()


def test_threads_env(monkeypatch):
    monkeypatch.setenv(cli.THREADS_ENV, "1")
    assert cli._threads() == 1


def test_range_judgement():
    assert cli._judge_range(0.5, 0.0, 1.0, 1e-4) == "pass"
    assert cli._judge_range(1.00005, 0.0, 1.0, 1e-4) == "warn"
    assert cli._judge_range(1.1, 0.0, 1.0, 1e-4) == "fail"
    assert cli._judge_range(float("nan"), 0.0, 1.0, 1e-4) == "fail"


def test_interpolated_curvature_scan_checks_ranges():
    cfg = parse_config("task = curvature-scan\ndim = 3\nmetric = interpolated\na = 0.5\nsampling.flags = 3\n")
    rep = run_experiment(cfg)
    assert rep.ok and len(rep.checks) == 9
    assert rep.checks[0].expected == "(-4.0, -0.4444444444444444)"
