import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from gbspectra.gbspline import (
    GBSplineBasis,
    Kind,
    Mode,
    PhaseConstraintError,
    SectionSpace,
    basis_defects,
    build_basis,
    eval_basis,
    make_knots,
    ratio_bounds,
)

SPACES = ["poly", "hyp:1:nonnested", "trig:1:nested", "trig:1:nonnested"]


def cox_de_boor(x, k, i, t):
    # right-continuous, with the last span closed so that x = 1 is covered
    if k == 0:
        if t[i] <= x < t[i + 1]:
            return 1.0
        return 1.0 if x == t[-1] and t[i] < t[i + 1] == t[-1] else 0.0
    out = 0.0
    if t[i + k] > t[i]:
        out += (x - t[i]) / (t[i + k] - t[i]) * cox_de_boor(x, k - 1, i, t)
    if t[i + k + 1] > t[i + 1]:
        out += (t[i + k + 1] - x) / (t[i + k + 1] - t[i + 1]) * cox_de_boor(x, k - 1, i + 1, t)
    return out


def test_make_knots_examples():
    assert make_knots(2, 1).knots.tolist() == [0, 0, 0.5, 1, 1]
    assert make_knots(4, 2).knots.tolist() == [0, 0, 0, 0.25, 0.5, 0.75, 1, 1, 1]
    with pytest.raises(ValueError):
        make_knots(1, 2)
    with pytest.raises(ValueError):
        make_knots(4, 0)


def test_section_space_parse_and_phase():
    s = SectionSpace.parse("trig:1.0:nested")
    assert s.kind is Kind.TRIGONOMETRIC and s.mode is Mode.NESTED and s.alpha == 1.0
    assert s.element_phase(8) == pytest.approx(1 / 8)
    assert SectionSpace.parse("hyp:1:nonnested").element_phase(8) == pytest.approx(1.0)
    assert SectionSpace.parse("poly").kind is Kind.POLYNOMIAL
    with pytest.raises(ValueError):
        SectionSpace.parse("spline:1")


def test_trig_phase_constraint():
    s = SectionSpace.trigonometric(4 * np.pi, "nested")
    assert s.min_elements == 5
    with pytest.raises(PhaseConstraintError, match="alpha"):
        GBSplineBasis(make_knots(2, 2), s)
    GBSplineBasis(make_knots(5, 2), s)
    with pytest.raises(PhaseConstraintError):
        SectionSpace.trigonometric(4.0, "nonnested").check(8)
    # pi/2 nested on 8 elements: per-element phase pi/16
    b = build_basis(make_knots(8, 2), SectionSpace.trigonometric(np.pi / 2, "nested"))
    assert b.dim == 10 and b.phase == pytest.approx(np.pi / 16)


def test_hat_midpoint():
    b = GBSplineBasis(make_knots(2, 1), SectionSpace())
    np.testing.assert_allclose(eval_basis(b, 0.25), [0.5, 0.5, 0.0], atol=1e-15)


def test_eval_rejects_outside():
    b = GBSplineBasis(make_knots(4, 2), SectionSpace())
    with pytest.raises(ValueError):
        b.eval(1.5)
    with pytest.raises(ValueError):
        b.eval(0.5, d=3)


@pytest.mark.parametrize("p", [1, 2, 3, 4])
@pytest.mark.parametrize("n", [2, 5, 8])
def test_polynomial_matches_cox_de_boor(p, n):
    b = GBSplineBasis(make_knots(n, p), SectionSpace())
    t = b.knots.knots
    x = np.linspace(0, 1, 97)
    ref = np.array([[cox_de_boor(xx, p, i, t) for i in range(n + p)] for xx in x])
    np.testing.assert_allclose(b.eval(x), ref, atol=1e-13)


@pytest.mark.parametrize("p", [2, 3])
def test_polynomial_derivatives_match_scipy(p):
    b = GBSplineBasis(make_knots(7, p), SectionSpace())
    t = b.knots.knots
    x = np.linspace(0, 1, 200, endpoint=False)
    for d in (1, 2):
        ref = np.column_stack([BSpline(t, np.eye(b.dim)[i], p)(x, nu=d) for i in range(b.dim)])
        np.testing.assert_allclose(b.eval(x, d), ref, atol=1e-11 * 7**d)


@pytest.mark.parametrize("space", SPACES)
@pytest.mark.parametrize("p", [2, 3])
def test_invariants(space, p):
    for n in (8, 16):
        d = basis_defects(GBSplineBasis(make_knots(n, p), SectionSpace.parse(space)))
        assert d["negativity"] <= 1e-14
        assert d["unity"] <= 1e-12
        assert d["support"] == 0.0
        assert d["smoothness"] <= 1e-8


def test_values_nonzero_band():
    b = GBSplineBasis(make_knots(16, 3), SectionSpace.parse("trig:1:nonnested"))
    V = b.eval(np.random.default_rng(0).random(50))
    for row in V:
        nz = np.nonzero(row)[0]
        assert len(nz) <= 4 and np.all(np.diff(nz) == 1)


def test_nested_limit_close_to_polynomial():
    x = np.linspace(0, 1, 301)
    dists = []
    for n in (8, 16, 32, 64):
        knots = make_knots(n, 2)
        gb = GBSplineBasis(knots, SectionSpace.parse("trig:1:nested")).eval(x)
        poly = GBSplineBasis(knots, SectionSpace()).eval(x)
        dists.append(np.abs(gb - poly).max())
    assert dists[-1] < 5e-3
    assert all(b < a for a, b in zip(dists, dists[1:]))


def test_derivative_consistent_with_finite_difference():
    b = GBSplineBasis(make_knots(6, 3), SectionSpace.parse("hyp:1:nonnested"))
    x = np.array([0.11, 0.37, 0.52, 0.9])
    eps = 1e-6
    fd = (b.eval(x + eps) - b.eval(x - eps)) / (2 * eps)
    np.testing.assert_allclose(b.eval(x, 1), fd, atol=1e-6)


def test_ratio_bounds():
    assert ratio_bounds(2, SectionSpace(), 8) == (1.0, 1.0)
    lo, hi = ratio_bounds(3, SectionSpace.parse("hyp:1:nonnested"), 32)
    assert 0 < lo <= 1 <= hi < np.inf
    trig = SectionSpace.parse("trig:1:nested")
    dev = [max(1 - lo, hi - 1) for lo, hi in (ratio_bounds(3, trig, n) for n in (16, 32, 64))]
    assert dev[0] > dev[1] > dev[2]


@settings(max_examples=30, deadline=None)
@given(
    x=st.floats(0.0, 1.0),
    p=st.integers(2, 4),
    n=st.integers(2, 12),
    alpha=st.floats(0.05, 3.0),
    kind=st.sampled_from(["hyp", "trig"]),
)
def test_partition_of_unity_random(x, p, n, alpha, kind):
    space = SectionSpace.parse(f"{kind}:{alpha!r}:nonnested")
    v = GBSplineBasis(make_knots(n, p), space).eval(x)
    assert abs(v.sum() - 1.0) <= 1e-12
    assert v.min() >= -1e-14
