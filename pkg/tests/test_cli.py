import csv
import json

import numpy as np
import pytest

from fraclame import acceptance, cli, fieldio
from fraclame import fields as fl
from fraclame.symbol import ElasticModuli


def run(tmp_path, *args, out="out"):
    code = cli.main([*args, f"--out={tmp_path / out}"])
    return code, tmp_path / out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_both_routes_agree_on_bundled_packet(tmp_path):
    code, out = run(tmp_path, "apply", "--routes=both", "--s=0.5")
    assert code == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary["discrepancy"] <= 1e-3
    assert set(summary["norms"]) == {"spectral", "quadrature"}
    assert fieldio.read_field(out / "lame_s_quadrature.field").values.shape == (64, 64, 2)


def test_order_one_is_classical_operator(tmp_path):
    code, out = run(tmp_path, "apply", "--s=1", "--lambda=0.3")
    assert code == 0
    got = fieldio.read_field(out / "lame_s_spectral.field")
    u = fl.gaussian_wave_packet(got.grid)
    ref = fl.lame_apply(u, ElasticModuli(1.0, 0.3)).values
    assert np.abs(got.values - ref).max() <= 1e-12 * np.abs(ref).max()


@pytest.mark.parametrize("operator", ["frac_laplacian", "grad_s", "div_s", "f_op", "riesz", "state_based"])
def test_every_operator_has_a_spectral_route(tmp_path, operator):
    code, out = run(tmp_path, "apply", f"--operator={operator}", "--n=32", "--L=8")
    assert code == 0
    assert (out / f"{operator}_spectral.field").exists()


def test_config_file_and_input_field_file(tmp_path):
    grid = fl.PeriodicGrid(2, 32, 8.0)
    fieldio.write_field(tmp_path / "u.field", fl.random_smooth_field(grid, 3))
    cfg = {"n": 32, "L": 8.0, "s": 0.3, "operator": "frac_laplacian",
           "field": {"type": "file", "params": {"path": str(tmp_path / "u.field")}}}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    code, out = run(tmp_path, "apply", "--config", str(tmp_path / "cfg.json"))
    assert code == 0
    got = fieldio.read_field(out / "frac_laplacian_spectral.field").values
    np.testing.assert_array_equal(got, fl.frac_laplacian(fieldio.read_field(tmp_path / "u.field"), 0.3).values)


@pytest.mark.parametrize(
    "args",
    [
        ["apply", "--bogus=1"],
        ["apply", "--operator=curl"],
        ["apply", "--routes=sideways"],
        ["apply", "--n=thirty"],
        ["apply", "--mu=-1"],
        ["apply", "--n=48"],
        ["apply", "--operator=riesz", "--routes=quadrature"],
        ["apply", "positional"],
        ["dirichlet", "--mask.params.radius=1.5"],
        ["kernels", "--kernel=green"],
        ["verify", "--suite=everything"],
        ["transmogrify"],
    ],
)
def test_usage_errors_exit_two(tmp_path, args):
    assert run(tmp_path, *args)[0] == 2


def test_malformed_config_exits_two(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    assert run(tmp_path, "apply", "--config", str(tmp_path / "bad.json"))[0] == 2
    (tmp_path / "list.json").write_text("[1, 2]")
    assert run(tmp_path, "apply", "--config", str(tmp_path / "list.json"))[0] == 2


def test_accuracy_failure_exits_three(tmp_path):
    # a periodic random field has no compact support, so the quadrature tail check trips
    code, _ = run(tmp_path, "apply", "--routes=quadrature", '--field={"type": "random", "params": {}}', "--n=16")
    assert code == 3


def test_verify_symbols_passes(tmp_path):
    code, out = run(tmp_path, "verify", "--suite=symbols")
    assert code == 0
    report = json.loads((out / "verify_symbols.json").read_text())
    assert report["failed"] == 0 and report["passed"] == len(report["results"]) > 0
    assert all(set(r) >= {"test", "status", "measured", "tolerance"} for r in report["results"])


def test_verify_constants_reports_half_order_value(tmp_path):
    code, out = run(tmp_path, "verify", "--suite=constants")
    assert code == 0
    report = json.loads((out / "verify_constants.json").read_text())
    row = next(r for r in report["results"] if r["test"] == "c_2_half_is_inverse_two_pi")
    assert row["measured"] <= row["tolerance"] == 1e-12


def test_verify_failure_exits_nonzero(tmp_path, monkeypatch):
    monkeypatch.setitem(acceptance.CRITERIA, 1, lambda ctx: [acceptance.record(1, "broken", 1.0, 0.5)])
    code, out = run(tmp_path, "verify", "--suite=symbols")
    assert code == 3
    assert json.loads((out / "verify_symbols.json").read_text())["failed"] == 1


def test_kernel_rows_decay_along_ray(tmp_path):
    code, out = run(tmp_path, "kernels", "--s=0.4", "--direction=[0.6, 0.8]", "--count=12")
    assert code == 0
    rows = read_csv(out / "fundamental.csv")
    assert len(rows) == 12
    norms = [np.linalg.norm([float(row[k]) for k in ("k11", "k12", "k21", "k22")]) for row in rows]
    assert all(a > b for a, b in zip(norms, norms[1:]))


def test_extend_error_column_decreases(tmp_path):
    code, out = run(tmp_path, "extend", "--n=32", "--L=12", "--levels=30", "--s=0.4")
    assert code == 0
    rows = read_csv(out / "extension.csv")
    ts = [float(r["t"]) for r in rows]
    errs = [float(r["neumann_error"]) for r in rows]
    assert all(a > b for a, b in zip(ts, ts[1:]))
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert sum(1 for r in rows if r["residual"] == "") == 6
    assert len(list(out.glob("level_*.field"))) == 30
    assert json.loads((out / "summary.json").read_text())["neumann_limit_error"] <= 1e-3


def test_dirichlet_convergence_report(tmp_path):
    code, out = run(tmp_path, "dirichlet", "--lambda=-1.0", "--s=0.25")
    assert code == 0
    rows = read_csv(out / "convergence.csv")
    assert [int(r["n"]) for r in rows] == [32, 64]
    errs = [float(r["exact_l2_error"]) for r in rows]
    assert errs[1] < errs[0] and errs[1] <= 5e-2
    energies = [float(r["energy"]) for r in rows]
    assert energies[0] > 0 and energies[1] > 0
    u = fieldio.read_field(out / "solution.field")
    pts = u.grid.points()
    assert not np.any(u.values[np.linalg.norm(pts, axis=-1) >= 1.0])
    assert json.loads((out / "summary.json").read_text())["energy_identity_gap"] <= 1e-9


def test_dirichlet_without_closed_form_leaves_error_blank(tmp_path):
    force = '{"type": "gaussian", "params": {"width": 0.4}}'
    code, out = run(tmp_path, "dirichlet", "--n=16", "--convergence=[16]", f"--f={force}",
                    '--mask={"type": "box", "params": {"half_widths": 0.8}}')
    assert code == 0
    assert read_csv(out / "convergence.csv")[0]["exact_l2_error"] == ""


@pytest.mark.parametrize(
    "args",
    [
        ["kernels", "--kernel=poisson", "--s=0.3"],
        ["extend", "--n=16", "--L=8", "--levels=12"],
        ["dirichlet", "--n=32", "--convergence=[16, 32]"],
    ],
)
def test_outputs_do_not_depend_on_workers(tmp_path, args):
    code1, one = run(tmp_path, *args, "--workers=1", out="one")
    code3, three = run(tmp_path, *args, "--workers=3", out="three")
    assert code1 == code3 == 0
    files = sorted(p.name for p in one.iterdir())
    assert files == sorted(p.name for p in three.iterdir())
    for name in files:
        assert (one / name).read_bytes() == (three / name).read_bytes()
