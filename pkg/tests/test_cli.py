import json

import pytest

from rllcap.cli import EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr().out
    return code, out


def test_noiseless_golden(capsys):
    code, out = run(["noiseless", "--d", "1", "--k", "inf"], capsys)
    assert code == EXIT_OK
    assert out.strip() == "0.694242"


def test_noiseless_unconstrained(capsys):
    code, out = run(["noiseless", "--d", "0", "--k", "inf"], capsys)
    assert out.strip() == "1.000000"


def test_noiseless_bisection_case(capsys):
    code, out = run(["noiseless", "--d", "1", "--k", "2"], capsys)
    assert out.strip() == "0.405685"


def test_noiseless_json(capsys):
    code, out = run(["noiseless", "--d", "1", "--k", "inf",
                     "--format", "json-lines"], capsys)
    payload = json.loads(out)
    assert payload["k"] == "inf"
    assert abs(payload["capacity_bits"] - 0.6942419) < 1e-6


def test_bound_text_output(capsys):
    code, out = run(["bound", "--which", "thm2.1", "--param", "0.2"], capsys)
    assert code == EXIT_OK
    lines = dict(l.split("=", 1) for l in out.strip().splitlines())
    assert lines["solver"] == "closed-form"
    assert abs(float(lines["bound_bits"]) - 0.582516636) < 1e-8
    assert float(lines["kkt_residual"]) <= 1e-8


def test_sweep_endpoints(tmp_path, capsys):
    out_file = tmp_path / "sweep.csv"
    code, _ = run(["sweep", "--which", "thm2.1", "--start", "0", "--stop",
                   "1", "--points", "2", "--out", str(out_file)], capsys)
    assert code == EXIT_OK
    lines = out_file.read_text().splitlines()
    assert lines[0] == "# schema=1"
    assert lines[1] == "param,bound_bits,kkt_residual,solver,wallclock_ms"
    first = lines[2].split(",")
    last = lines[3].split(",")
    assert abs(float(first[1]) - 0.694242) < 1e-6
    assert float(last[1]) == 0.0


def test_sweep_deterministic_bytes(tmp_path, capsys):
    args = ["sweep", "--which", "achievable", "--channel", "bec",
            "--start", "0.1", "--stop", "0.5", "--points", "3",
            "--n", "5000", "--runs", "2", "--seed", "11"]
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["--out", str(f1)], capsys)[0] == EXIT_OK
    assert run(args + ["--out", str(f2)], capsys)[0] == EXIT_OK
    assert f1.read_bytes() == f2.read_bytes()


def test_sweep_achievable_has_stderr_column(tmp_path, capsys):
    out_file = tmp_path / "ach.csv"
    run(["sweep", "--which", "achievable", "--start", "0.2", "--stop", "0.4",
         "--points", "2", "--n", "4000", "--runs", "2",
         "--out", str(out_file)], capsys)
    lines = out_file.read_text().splitlines()
    assert lines[1].endswith(",stderr")
    assert len(lines[2].split(",")) == 6


def test_sweep_json_lines(capsys):
    code, out = run(["sweep", "--which", "thm5", "--start", "0", "--stop",
                     "0.5", "--points", "3", "--format", "json-lines"],
                    capsys)
    lines = out.strip().splitlines()
    assert lines[0] == "# schema=1"
    rows = [json.loads(l) for l in lines[1:]]
    assert len(rows) == 3
    assert rows[0]["solver"] == "closed-form"


def test_sweep_too_few_points(capsys):
    code = main(["sweep", "--which", "thm2.1", "--start", "0", "--stop", "1",
                 "--points", "1"])
    capsys.readouterr()
    assert code == EXIT_USAGE


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["bound", "--which", "not-a-thing", "--param", "0.1"])
    assert exc.value.code == EXIT_USAGE


def test_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("param=0.3\nformat=json-lines\n")
    code, out = run(["--config", str(cfg), "bound", "--which", "thm2.1",
                     "--param", "0.2"], capsys)
    # --param on the command line wins; format comes from the config
    payload = json.loads(out)
    assert payload["param"] == 0.2


def test_config_file_supplies_defaults(tmp_path, capsys):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("format=json-lines\n")
    code, out = run(["--config", str(cfg), "noiseless", "--d", "1",
                     "--k", "inf"], capsys)
    assert json.loads(out)["d"] == 1


def test_validate_quadrature(capsys):
    code, out = run(["validate", "--suite", "quadrature"], capsys)
    assert code == EXIT_OK
    assert all(l.startswith("PASS") for l in out.strip().splitlines())


def test_validate_oracle(capsys):
    code, out = run(["validate", "--suite", "oracle"], capsys)
    assert code == EXIT_OK
    assert "oracle.monotone" in out
