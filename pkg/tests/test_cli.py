import subprocess
import sys

import numpy as np
import pytest

from crnentropy.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_validate_ok(capsys):
    assert run(capsys, "validate", "builtin:cycle3")[0] == 0


def test_validate_trivial_reaction(tmp_path, capsys):
    p = tmp_path / "bad.crn"
    p.write_text("species A B\nreaction A -> A @ 1\nreaction A -> B @ 1\n")
    code, _, err = run(capsys, "validate", str(p))
    assert code == 1
    assert "requirement" in err


def test_validate_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "validate", str(tmp_path / "nope.crn"))
    assert code == 2
    assert "nope.crn" in err


def test_conserved(capsys):
    code, out, _ = run(capsys, "conserved", "builtin:3x3")
    assert code == 0
    assert "2" in out and "1" in out


def test_equilibrium_rows(capsys):
    code, out, _ = run(capsys, "equilibrium", "builtin:3x3", "--mass", "4")
    assert code == 0
    lines = out.splitlines()
    assert "1,1,1,complex_balance,interior" in lines
    assert "0,0,4,complex_balance,boundary" in lines
    code, out, _ = run(capsys, "equilibrium", "builtin:2x2", "--mass", "2")
    assert "1,1,detailed_balance,interior" in out.splitlines()


def test_equilibrium_needs_mass(capsys):
    assert run(capsys, "equilibrium", "builtin:2x2")[0] == 1


def test_ode_trace_and_determinism(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for dest in (a, b):
        code, _, _ = run(capsys, "ode", "builtin:2x2", "--c0", "1.5,0.5", "--t-end", "20", "--out", str(dest))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    last = a.read_text().splitlines()[-1].split(",")
    np.testing.assert_allclose([float(last[4]), float(last[5])], [1.0, 1.0], atol=1e-6)


def test_ode_wrong_length(capsys):
    assert run(capsys, "ode", "builtin:2x2", "--c0", "1,2,3")[0] == 1


def test_pde_and_snapshots(tmp_path, capsys):
    out = tmp_path / "pde.csv"
    code, _, _ = run(capsys, "pde", "builtin:2x2", "--init", "A=1+0.4*sin(2*pi*x)", "--init", "B=1-0.4*sin(2*pi*x)",
                     "--J", "16", "--t-end", "0.05", "--dt", "1e-2", "--snapshot-times", "0,0.05",
                     "--snapshot-dir", str(tmp_path), "--out", str(out))
    assert code == 0
    assert out.read_text().startswith("t,E,D,mass_residual,c_1,c_2,min_1,max_1,min_2,max_2\n")
    assert (tmp_path / "snapshot_t1.csv").exists()


def test_pde_rejects_unsafe_expression(capsys):
    code, _, err = run(capsys, "pde", "builtin:2x2", "--init", "A=__import__('os')", "--init", "B=1")
    assert code == 1
    assert "bad profile expression" in err


def test_eed_finite_cycle(capsys):
    code, out, _ = run(capsys, "eed", "finite-cycle", "--n", "3", "--samples", "20000", "--seed", "7")
    assert code == 0
    assert "violations: 0" in out


def test_eed_csv_is_deterministic(tmp_path, capsys):
    paths = [tmp_path / "x.csv", tmp_path / "y.csv"]
    for p in paths:
        run(capsys, "eed", "g6", "--samples", "5000", "--seed", "3", "--out", str(p))
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_eed_quadratic(capsys):
    code, out, _ = run(capsys, "eed", "quadratic", "--network", "builtin:2x2", "--mass", "2")
    assert code == 0
    assert "4" in out


def test_experiment_degeneracy(capsys):
    assert run(capsys, "experiment", "boundary-degeneracy")[0] == 0


def test_bad_option_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["ode", "builtin:2x2", "--c0", "1,1", "--t-end", "-1"])
    assert exc.value.code == 2


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "crnentropy.cli", "validate", "builtin:2x2"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
