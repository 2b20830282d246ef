import numpy as np
import pytest

from quasimin.cli import main
from quasimin.fieldio import read_field, write_field
from quasimin import DomainSpec, Field, build_grid

SOLVE_SPEC = """
mode = solve

[domain]
kind = box
extents = 0 1 ; 0 1
resolution = 17 17

[weight]
kind = gaussian
alpha = 1.0

[boundary]
values = x1 * x2
"""

SPHERE_SPEC = """
mode = sphere

[domain]
kind = box
extents = 0 1
resolution = 51

[boundary]
values = min(1, max(0, 1 - 2*x1)), min(1, max(0, 2*x1 - 1)), 0
"""

ORACLE_SPEC = """
mode = oracle

[domain]
kind = box
extents = 0 1
resolution = 33

[weight]
kind = gaussian
alpha = 1.0

[boundary]
values = x1
"""

GRADCHECK_SPEC = """
mode = gradcheck

[domain]
kind = box
extents = 0 1 ; 0 1
resolution = 8 8

[weight]
kind = gaussian
alpha = 1.0

[gradcheck]
components = 2
"""

HALFSPACE_SPEC = """
mode = halfspace

[weight]
kind = gaussian
alpha = 1.0

[halfspace]
radii = 1 2
spacing = 0.25
window = 0 0.5 ; 0 0.5
function = exp(-(x1^2 + x2^2))
"""


def run(tmp_path, name, text, mode, sub=None, seed=None):
    spec = tmp_path / name
    spec.write_text(text)
    out = tmp_path / (sub or "out")
    argv = [mode, "--spec", str(spec), "--out-dir", str(out)]
    if seed is not None:
        argv += ["--seed", str(seed)]
    return main(argv), out


def read_summary(path):
    items = {}
    for line in path.read_text().splitlines():
        key, val = line.split(" = ", 1)
        items[key] = val
    return items


def test_solve_run_and_outputs(tmp_path):
    code, out = run(tmp_path, "p.cfg", SOLVE_SPEC, "solve")
    assert code == 0
    summary = read_summary(out / "summary.txt")
    assert summary["converged"] == "true"
    assert float(summary["pg_norm"]) <= float(summary["tol_pg"])
    hist = (out / "history.csv").read_text().splitlines()
    assert len(hist) == int(summary["iterations"]) + 1
    field, grid = read_field(out / "solution.field")
    assert grid.dims == (17, 17)
    # header dims product equals row count
    lines = (out / "solution.field").read_text().splitlines()
    assert len(lines) - 4 == 17 * 17


def test_field_round_trip_bit_exact(tmp_path):
    g = build_grid(DomainSpec.box([(0, 1), (0, 1)]), (7, 7))
    rng = np.random.default_rng(0)
    f = Field(g, 2, np.where(g.in_mask[..., None], rng.standard_normal(g.dims + (2,)), 0.0))
    path = tmp_path / "f.field"
    write_field(f, path)
    back, grid2 = read_field(path)
    assert np.array_equal(back.values, f.values)
    assert np.array_equal(grid2.node_class, g.node_class)


def test_constant_field_dump_columns(tmp_path):
    g = build_grid(DomainSpec.box([(0, 1)]), (5,))
    f = Field(g, 1, np.full(g.dims + (1,), 0.3))
    path = tmp_path / "c.field"
    write_field(f, path)
    rows = path.read_text().splitlines()[4:]
    vals = {row.split()[-1] for row in rows}
    assert len(vals) == 1


def test_determinism_two_runs(tmp_path):
    code1, out1 = run(tmp_path, "p.cfg", SOLVE_SPEC, "solve", sub="a")
    code2, out2 = run(tmp_path, "p.cfg", SOLVE_SPEC, "solve", sub="b")
    assert code1 == code2 == 0
    for name in ("solution.field", "summary.txt", "history.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_spec_error_exit_code(tmp_path, capsys):
    bad = SOLVE_SPEC.replace("[weight]", "[wieght]")
    code, _ = run(tmp_path, "bad.cfg", bad, "solve")
    assert code == 3
    err = capsys.readouterr().err
    assert "wieght" in err and "weight" in err


def test_boundary_evaluation_error_refuses(tmp_path, capsys):
    with np.errstate(divide="ignore", invalid="ignore"):
        bad = SOLVE_SPEC.replace("values = x1 * x2", "values = 1 / (x1 - x1)")
        code, _ = run(tmp_path, "bad.cfg", bad, "solve")
    assert code == 3
    assert "boundary" in capsys.readouterr().err


def test_mode_mismatch(tmp_path, capsys):
    code, _ = run(tmp_path, "p.cfg", SOLVE_SPEC, "oracle")
    assert code == 3
    assert "mode" in capsys.readouterr().err


def test_oracle_mode(tmp_path):
    code, out = run(tmp_path, "o.cfg", ORACLE_SPEC, "oracle")
    assert code == 0
    summary = read_summary(out / "summary.txt")
    assert summary["mode"] == "oracle"
    field, _ = read_field(out / "solution.field")
    assert field.values[16, 0] == pytest.approx(0.4418, abs=1e-3)


def test_sphere_mode_summary(tmp_path):
    code, out = run(tmp_path, "s.cfg", SPHERE_SPEC, "sphere")
    assert code == 0
    summary = read_summary(out / "summary.txt")
    assert {"energy_a", "energy_b", "sup_distance"} <= set(summary)
    e = sorted([float(summary["energy_a"]), float(summary["energy_b"])])
    assert e[0] == pytest.approx(np.pi**2 / 4, rel=0.05)
    assert e[1] == pytest.approx(9 * np.pi**2 / 4, rel=0.05)
    assert float(summary["sup_distance"]) >= 1.0
    assert (out / "solution_a.field").exists()
    assert (out / "solution_b.field").exists()


def test_gradcheck_mode(tmp_path, capsys):
    code, out = run(tmp_path, "g.cfg", GRADCHECK_SPEC, "gradcheck", seed=7)
    assert code == 0
    assert "max relative error" in capsys.readouterr().out
    summary = read_summary(out / "summary.txt")
    assert float(summary["max_rel_error"]) <= 1e-6


def test_halfspace_mode(tmp_path):
    code, out = run(tmp_path, "h.cfg", HALFSPACE_SPEC, "halfspace")
    assert code == 0
    summary = read_summary(out / "summary.txt")
    assert summary["uniform_bound_ok"] == "true"
    assert "window_diff_1" in summary


def test_nonconvergence_still_writes_summary(tmp_path):
    capped = SOLVE_SPEC + "\n[solver]\nmax_iters = 2\n"
    code, out = run(tmp_path, "capped.cfg", capped, "solve")
    assert code == 2
    summary = read_summary(out / "summary.txt")
    assert summary["converged"] == "false"
    assert int(summary["iterations"]) == 2
    assert (out / "solution.field").exists()


def test_io_failure_exit_code(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    spec = tmp_path / "p.cfg"
    spec.write_text(SOLVE_SPEC)
    code = main(["solve", "--spec", str(spec), "--out-dir", str(blocker / "sub")])
    assert code == 4
    assert "out dir" in capsys.readouterr().err


def test_missing_spec_file(tmp_path, capsys):
    code = main(["solve", "--spec", str(tmp_path / "absent.cfg")])
    assert code == 4
    assert "cannot read spec" in capsys.readouterr().err
