import filecmp

import numpy as np
import pytest

from nlgriffith.energy import BallStrategy, GridCapabilityError
from nlgriffith.harness import (
    ExtrapolationResult,
    SweepSpec,
    audit_inequalities,
    griffith_target,
    richardson,
    run_sweep,
    write_csv,
)
from nlgriffith.domain import load_problem
from nlgriffith.quad import build_direction_rule

SQRT_PI = np.sqrt(np.pi)


def affine_config(a=1.0):
    return {
        "domain": {"lower": [0.0], "upper": [1.0]},
        "field": {"kind": "affine", "matrix": [[a]], "offset": [0.0]},
    }


def jump_config(s=10.0):
    return {
        "domain": {"lower": [0.0], "upper": [1.0]},
        "field": {
            "kind": "plane_jump",
            "normal": [1.0],
            "offset": 0.5,
            "value_minus": [0.0],
            "value_plus": [s],
        },
    }


def test_richardson_removes_linear_term():
    eps = [0.04, 0.02, 0.01]
    vals = [3.0 + 5 * e for e in eps]
    assert richardson(eps, vals) == pytest.approx(3.0, rel=1e-12)


def test_griffith_target_affine():
    dom, fld, _ = load_problem(affine_config(2.0))
    rule = build_direction_rule(1)
    assert griffith_target(fld, dom, 1.0, rule) == pytest.approx(
        4.0 * 0.75 * SQRT_PI, rel=1e-12
    )


def test_griffith_target_jump():
    dom, fld, _ = load_problem(jump_config())
    rule = build_direction_rule(1)
    assert griffith_target(fld, dom, 1.0, rule) == pytest.approx(np.pi / 2, rel=1e-12)


def test_run_sweep_affine_within_two_percent(tmp_path):
    spec = SweepSpec(
        field_config=affine_config(1.0),
        eps_list=[0.04, 0.02, 0.01],
        h_over=8,
        out_path=str(tmp_path / "sweep.csv"),
    )
    res = run_sweep(spec)
    assert abs(res.extrapolated - res.target) / res.target <= 0.02
    assert (tmp_path / "sweep.csv").exists()


def test_run_sweep_jump_within_two_percent():
    spec = SweepSpec(field_config=jump_config(), eps_list=[0.04, 0.02, 0.01])
    res = run_sweep(spec)
    assert abs(res.extrapolated - res.target) / res.target <= 0.02


def test_run_sweep_constant_field_zero():
    cfg = {
        "domain": {"lower": [0.0], "upper": [1.0]},
        "field": {"kind": "affine", "matrix": [[0.0]], "offset": [1.0]},
    }
    res = run_sweep(SweepSpec(field_config=cfg, eps_list=[0.04, 0.02]))
    assert res.values == [0.0, 0.0]
    assert res.extrapolated == 0.0
    assert res.relative_error == 0.0


def test_run_sweep_with_ball_strategy():
    spec = SweepSpec(
        field_config=affine_config(1.0),
        eps_list=[0.04, 0.02],
        strategy=BallStrategy("dyadic", 1),
    )
    res = run_sweep(spec)
    assert 0 < res.values[-1] < res.target


def test_run_sweep_refuses_untileable_grid():
    cfg = affine_config()
    cfg["domain"]["upper"] = [0.997]  # not an integer multiple of eps/8
    with pytest.raises(GridCapabilityError):
        run_sweep(SweepSpec(field_config=cfg, eps_list=[0.04, 0.02]))


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        SweepSpec(field_config=affine_config(), eps_list=[0.01, 0.02])
    with pytest.raises(ValueError):
        SweepSpec(field_config=affine_config(), eps_list=[0.04, 0.02], h_over=2)


def test_relative_error_normalization():
    res = ExtrapolationResult([0.1], [1.0], extrapolated=1.5, target=1.0)
    assert res.relative_error == pytest.approx(0.5 / 2.0)


def test_multi_step_inequality_on_smooth_field():
    # jump-free case of the multi-step comparison, checked directly
    from nlgriffith.domain import Affine, BoxDomain, Grid
    from nlgriffith.harness import _weighted_direction_sum

    u = Affine(np.array([[1.5]]), np.zeros(1))
    box = BoxDomain(np.zeros(1), np.ones(1))
    E = BoxDomain(np.array([0.3]), np.array([0.7]))
    eps = 0.01
    grid = Grid(box, eps / 8)
    rule = build_direction_rule(1, radial_order=6)
    rhs = _weighted_direction_sum(u, box, eps, rule, grid, radius_cap=2.0)
    for m in (2, 3, 5):
        lhs = _weighted_direction_sum(u, E, m * eps, rule, grid, radius_cap=2.0)
        assert lhs <= rhs * 1.01


def test_sweep_monotonicity_diagnostic():
    res = run_sweep(
        SweepSpec(field_config=affine_config(1.0), eps_list=[0.08, 0.04, 0.02])
    )
    assert res.values_monotone


def test_audit_all_margins_nonnegative():
    report = audit_inequalities(seed=0, n_fields=10)
    assert len(report.checks) > 40
    for c in report.checks:
        assert c.passed, f"{c.name} on {c.field_id} ({c.params}): margin {c.margin}"
    names = {c.name for c in report.checks}
    assert names == {
        "endpoint-lower-bound",
        "saturation-upper-bound",
        "translation-estimate",
        "m-step-monotonicity",
    }


def test_audit_writes_csv(tmp_path):
    out = tmp_path / "audit.csv"
    report = audit_inequalities(seed=3, n_fields=3, out_path=str(out))
    assert out.exists()
    text = out.read_text()
    assert "m-step-monotonicity" in text
    assert report.passed


def test_csv_bit_identical_for_identical_runs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        run_sweep(
            SweepSpec(
                field_config=affine_config(1.0),
                eps_list=[0.04, 0.02],
                out_path=str(path),
            )
        )
    assert filecmp.cmp(a, b, shallow=False)


def test_write_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        write_csv(str(tmp_path / "x.csv"), [])
