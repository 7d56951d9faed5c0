import numpy as np
import pytest
from scipy.special import erf

from nlgriffith.domain import BoxDomain
from nlgriffith.quad import (
    NodeEvaluationError,
    RuleQualityError,
    build_direction_rule,
    build_sphere_rule,
    gaussian_moment,
    integrate,
)

SQRT_PI = np.sqrt(np.pi)


@pytest.fixture(scope="module")
def rule1():
    return build_direction_rule(1)


@pytest.fixture(scope="module")
def rule2():
    return build_direction_rule(2)


@pytest.fixture(scope="module")
def rule3():
    return build_direction_rule(3, radial_order=8, angular_order=12)


# ---------------------------------------------------------------------------
# moment oracle
# ---------------------------------------------------------------------------


def test_radial_moment_normalizations():
    assert gaussian_moment(1, 0) == pytest.approx(SQRT_PI, rel=1e-14)
    assert gaussian_moment(2, 0) == pytest.approx(np.pi, rel=1e-14)
    assert gaussian_moment(3, 0) == pytest.approx(np.pi**1.5, rel=1e-14)


def test_radial_moment_k2_matches_brute_force():
    # independent check: plain trapezoid integration of |xi|^2 exp(-xi^2)
    from scipy.integrate import trapezoid

    t = np.linspace(-10, 10, 400001)
    brute = trapezoid(t**2 * np.exp(-(t**2)), t)
    assert gaussian_moment(1, 2) == pytest.approx(brute, rel=1e-10)
    assert gaussian_moment(1, 2) == pytest.approx(SQRT_PI / 2, rel=1e-14)


def test_odd_tensor_moment_is_zero():
    assert gaussian_moment(1, (3,)) == 0.0
    assert gaussian_moment(2, (1, 2)) == 0.0


def test_tensor_moment_factorizes():
    # int xi1^2 xi2^4 = (sqrt(pi)/2) * (3 sqrt(pi)/4)
    assert gaussian_moment(2, (2, 4)) == pytest.approx((SQRT_PI / 2) * (0.75 * SQRT_PI), rel=1e-14)


def test_radial_moment_fractional_exponent():
    # dimension 1, k=1: int |xi| exp(-xi^2) = 1
    assert gaussian_moment(1, 1) == pytest.approx(1.0, rel=1e-14)


# ---------------------------------------------------------------------------
# rule construction
# ---------------------------------------------------------------------------


def test_rule_normalization_1d(rule1):
    assert rule1.total_weight == pytest.approx(SQRT_PI, rel=1e-9)


def test_rule_normalization_2d(rule2):
    assert rule2.total_weight == pytest.approx(np.pi, rel=1e-9)


def test_rule_fourth_moment_1d(rule1):
    val = integrate(rule1, lambda xi: xi[0] ** 4)
    assert val == pytest.approx(0.75 * SQRT_PI, rel=1e-9)


def test_rule_rejects_bad_parameters():
    with pytest.raises(ValueError):
        build_direction_rule(4)
    with pytest.raises(ValueError):
        build_direction_rule(1, radial_order=1)
    with pytest.raises(ValueError):
        build_direction_rule(1, r_max=2.0)


def test_polynomial_moments_match_oracle(rule2):
    rng = np.random.default_rng(7)
    for _ in range(10):
        a = rng.integers(0, rule2.radial_order // 2, size=2)
        if a.sum() > rule2.radial_order:
            continue
        val = integrate(rule2, lambda xi: np.prod(xi**a))
        exact = gaussian_moment(2, tuple(a))
        assert abs(val - exact) <= 1e-8 * (1 + abs(exact))


def test_polynomial_moments_match_oracle_3d(rule3):
    for a in [(2, 2, 2), (4, 0, 0), (0, 2, 4), (6, 2, 0)]:
        val = integrate(rule3, lambda xi: np.prod(xi ** np.array(a)))
        exact = gaussian_moment(3, a)
        assert abs(val - exact) <= 1e-8 * (1 + abs(exact))


def test_rotation_invariance_of_radial_integrand(rule2):
    f = lambda xi: np.exp(-np.abs(np.linalg.norm(xi) - 1.0))
    base = integrate(rule2, f)
    rot = integrate(rule2.rotated(0.327), f)
    assert rot == pytest.approx(base, rel=1e-10)


def test_truncation_control():
    # contributions beyond |xi| = 5 are negligible for quadratic-form integrands
    rng = np.random.default_rng(3)
    A = rng.normal(size=(2, 2))
    f = lambda xi: float((A @ xi) @ xi) ** 2
    v5 = integrate(build_direction_rule(2, r_max=5.0), f)
    v8 = integrate(build_direction_rule(2, r_max=8.0), f)
    assert abs(v5 - v8) <= 1e-6 * abs(v8)


def test_sphere_rule_total_weights():
    for n, surface in [(1, 2.0), (2, 2 * np.pi), (3, 4 * np.pi)]:
        _, w = build_sphere_rule(n, 12)
        assert np.sum(w) == pytest.approx(surface, rel=1e-12)


def test_quality_error_on_tampered_rule(rule1):
    from nlgriffith.quad import DirectionRule, _verify_rule

    bad = DirectionRule(
        rule1.dimension,
        rule1.nodes,
        rule1.weights * 1.01,
        rule1.truncation_radius,
        rule1.radial_order,
        rule1.angular_order,
    )
    with pytest.raises(RuleQualityError):
        _verify_rule(bad)


# ---------------------------------------------------------------------------
# integrate
# ---------------------------------------------------------------------------


def test_integrate_constant_full_support(rule2):
    assert integrate(rule2, lambda xi: 1.0) == pytest.approx(np.pi, rel=1e-9)


def test_integrate_with_support_truncation():
    # dropping nodes at an interior cut is first-order accurate in the node
    # spacing; the brute-force target is erf(1) * sqrt(pi)
    target = erf(1.0) * SQRT_PI
    support = BoxDomain(np.array([-1.0]), np.array([1.0]))
    coarse = integrate(build_direction_rule(1), lambda xi: 1.0, support=support)
    fine = integrate(
        build_direction_rule(1, radial_order=14, angular_order=24), lambda xi: 1.0, support=support
    )
    # sanity at the default resolution, refinement must not drift away
    assert abs(coarse - target) <= 0.1
    assert abs(fine - target) <= 0.1


def test_integrate_reports_bad_node(rule1):
    def f(xi):
        return np.inf if xi[0] > 0 else 1.0

    with pytest.raises(NodeEvaluationError):
        integrate(rule1, f)


def test_integrate_fixed_order_reproducible(rule2):
    f = lambda xi: np.sin(3 * xi[0]) * xi[1] ** 2 + 0.1
    assert integrate(rule2, f) == integrate(rule2, f)
