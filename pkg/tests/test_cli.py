import csv
import io
import subprocess
import sys

import numpy as np

from rairy.cli import main


def _table(text):
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(rows))))


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_tw_table(capsys):
    code, out, _ = run(capsys, "tw", "--x-min", "-6", "--x-max", "4", "--step", "0.1")
    assert code == 0
    rows = _table(out)
    assert len(rows) == 101
    F = np.array([float(r["F"]) for r in rows])
    assert np.all((F >= 0) & (F <= 1))
    assert np.all(np.diff(F) >= 0)
    assert max(float(r["abs_diff"]) for r in rows) < 1e-8


def test_geometry_row(capsys):
    code, out, _ = run(capsys, "geometry", "--rho0", "1", "--n", "100")
    assert code == 0
    vals = {r["quantity"]: float(r["value"]) for r in _table(out)}
    assert vals["tangency_t0"] == 0.5


def test_geometry_cusp(capsys):
    code, out, _ = run(capsys, "geometry", "--a", "1", "--p", "0.5")
    assert code == 0
    vals = {r["quantity"]: float(r["value"]) for r in _table(out)}
    assert any(k.startswith("cusp") or k in ("x0", "t0") for k in vals)


def test_metadata_header(capsys):
    _, out, _ = run(capsys, "rairy", "--r", "1", "--tau", "-1", "--x-min", "0", "--x-max", "1",
                    "--step", "0.5")
    head = [ln for ln in out.splitlines() if ln.startswith("#")]
    assert "# command: rairy" in head
    assert "# r=1" in head
    assert len(_table(out)) == 3


def test_out_file_and_env(tmp_path, capsys, monkeypatch):
    target = tmp_path / "tw.csv"
    code, out, _ = run(capsys, "tw", "--x-min", "0", "--x-max", "1", "--step", "0.5", "--out", str(target))
    assert code == 0 and out == ""
    assert len(_table(target.read_text())) == 3
    monkeypatch.setenv("RAIRY_OUTPUT_DIR", str(tmp_path / "env"))
    code, out, _ = run(capsys, "tw", "--x-min", "0", "--x-max", "1", "--step", "0.5", "--out", "b.csv")
    assert code == 0
    assert (tmp_path / "env" / "b.csv").exists()


def test_config_file_overridden_by_flag(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("x_min = 0\nx_max = 2\nstep = 1\n")
    _, out, _ = run(capsys, "tw", "--config", str(cfg))
    assert len(_table(out)) == 3
    _, out, _ = run(capsys, "tw", "--config", str(cfg), "--x-max", "1")
    assert len(_table(out)) == 2


def test_domain_error_exit_code(capsys):
    code, _, err = run(capsys, "tw", "--x-min", "-20", "--x-max", "0", "--step", "1")
    assert code == 2
    assert "error" in err


def test_usage_error_exit_code(capsys):
    assert main(["no-such-command"]) == 2
    assert main(["mc", "--n", "10"]) == 2   # seed is mandatory


def test_mc_deterministic(capsys):
    args = ("mc", "--n", "30", "--samples", "40", "--seed", "9", "--rho", "0")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a == b
    assert len(_table(a)) > 0


def test_kp_and_pde_checks(capsys):
    code, out, _ = run(capsys, "kp-check", "--whole-line")
    assert code == 0 and _table(out)
    code, out, _ = run(capsys, "pde-check", "--which", "finite-n")
    assert code == 0 and _table(out)


def test_verify_all_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    c1, _, err = run(capsys, "verify-all", "--fast", "--only", "1,8,11", "--out", str(a))
    c2, _, _ = run(capsys, "verify-all", "--fast", "--only", "1,8,11", "--out", str(b))
    assert c1 == c2 == 0
    assert a.read_bytes() == b.read_bytes()
    assert err.count("[PASS]") == 3


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "rairy", "geometry", "--rho0", "1", "--n", "4"],
                       capture_output=True, text=True, timeout=120)
    assert p.returncode == 0
    assert "tangency_t0,0.5" in p.stdout
