import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from gbspectra.assembly import assemble_case
from gbspectra.gbspline import SectionSpace
from gbspectra.spectral import (
    BoundCheck,
    check_conditioning,
    check_mineig,
    check_modulus_chain,
    check_parter,
    check_toeplitz_parts,
    condition_2,
    estimate_Cp,
    gen_eigs,
    imag_part,
    is_decreasing,
    is_increasing,
    pencil_min,
    real_part,
    singular_values,
    specdist_series,
    sym_eigs,
)
from gbspectra.toeplitz import toeplitz

POLY = SectionSpace()
TRIG_NESTED = SectionSpace.parse("trig:1:nested")
TRIG_NONNESTED = SectionSpace.parse("trig:1:nonnested")


def test_sym_eigs_examples():
    np.testing.assert_array_equal(sym_eigs(np.eye(5)).values, np.ones(5))
    np.testing.assert_allclose(sym_eigs(np.diag([3.0, 1.0, 2.0])).values, [1, 2, 3])
    ev = sym_eigs(toeplitz(10, [-1.0, 2.0, -1.0])).values
    np.testing.assert_allclose(ev, 2 - 2 * np.cos(np.arange(1, 11) * np.pi / 11), atol=1e-10)
    with pytest.raises(ValueError):
        sym_eigs(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        sym_eigs(np.ones((2, 3)))


def test_gen_eigs_examples():
    vals = gen_eigs(np.array([[0.0, 1.0], [-1.0, 0.0]])).values
    np.testing.assert_allclose(vals, [-1j, 1j], atol=1e-15)
    rng = np.random.default_rng(4)
    S = rng.standard_normal((30, 30))
    S = S + S.T
    np.testing.assert_allclose(np.sort(gen_eigs(S).values.real), sym_eigs(S).values, atol=1e-8)
    with pytest.raises(ValueError):
        gen_eigs(np.ones((2, 3)))


def _in_rectangle(X, tol=1e-10):
    lam = gen_eigs(X).values
    re = sym_eigs(real_part(X)).values
    im = sym_eigs(imag_part(X)).values
    scale = max(1.0, np.abs(X).max())
    return (np.all(lam.real >= re[0] - tol * scale) and np.all(lam.real <= re[-1] + tol * scale)
            and np.all(lam.imag >= im[0] - tol * scale) and np.all(lam.imag <= im[-1] + tol * scale))


def test_rectangle_for_advection_matrix():
    assert _in_rectangle(assemble_case(2, POLY, 16).A(1.0, 0.0))


def test_rectangle_random():
    rng = np.random.default_rng(0x5EED)
    for _ in range(100):
        m = int(rng.integers(2, 9))
        assert _in_rectangle(rng.standard_normal((m, m)))


def test_singular_values_examples():
    Q, _ = np.linalg.qr(np.random.default_rng(5).standard_normal((4, 4)))
    np.testing.assert_allclose(singular_values(Q), np.ones(4), atol=1e-14)
    np.testing.assert_allclose(singular_values(np.diag([3.0, -2.0])), [3, 2])


def test_fan_hoffman_random():
    rng = np.random.default_rng(0x5EED)
    for _ in range(100):
        m = int(rng.integers(2, 9))
        X = rng.standard_normal((m, m))
        s = singular_values(X)
        lam = sym_eigs(real_part(X)).values[::-1]
        assert np.all(s >= lam - 1e-10)


def test_condition_examples():
    assert condition_2(np.eye(3)) == pytest.approx(1.0)
    assert condition_2(np.diag([10.0, 1.0])) == pytest.approx(10.0)
    with pytest.raises(np.linalg.LinAlgError):
        condition_2(np.array([[1.0, 1.0], [1.0, 1.0]]))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3))
def test_condition_scale_invariance(seed, c):
    X = np.random.default_rng(seed).standard_normal((5, 5)) + 5 * np.eye(5)
    assert condition_2(c * X) == pytest.approx(condition_2(X), rel=1e-10)


def test_pencil_min_matches_generalized_solver():
    s = assemble_case(2, TRIG_NONNESTED, 32)
    ref = sla.eigh(s.K, s.M, eigvals_only=True)[0]
    assert float(pencil_min(s.K, s.M)) == pytest.approx(ref, rel=1e-10)
    # congruence form M^{-1/2} K M^{-1/2}
    w, V = np.linalg.eigh(s.M)
    R = V @ np.diag(w**-0.5) @ V.T
    assert float(pencil_min(s.K, s.M)) == pytest.approx(np.linalg.eigvalsh(R @ s.K @ R)[0], rel=1e-10)


def test_estimate_Cp():
    lo, hi = estimate_Cp(1, POLY, [8, 16, 32])
    assert 1 / 3 < lo and hi < 1
    mins = [estimate_Cp(2, POLY, [n])[0] for n in (16, 32, 64)]
    assert max(mins) / min(mins) < 1.2
    assert mins[0] > 0
    with pytest.raises(ValueError):
        estimate_Cp(2, POLY, [])


@pytest.mark.parametrize("space", [POLY, TRIG_NESTED])
def test_mineig_p2_n32(space):
    C_p, _ = estimate_Cp(2, space, [16, 32, 64])
    checks = check_mineig(2, space, 32, C_p)
    assert [c.name for c in checks] == ["mineig.mass", "mineig.pencil", "mineig.stiffness"]
    assert all(c.passed for c in checks)
    with pytest.raises(ValueError):
        check_mineig(1, space, 32, C_p)


def test_modulus_chain_examples():
    C_p, _ = estimate_Cp(2, POLY, [16])
    mod, real = check_modulus_chain(2, POLY, 16, 0.0, 0.0, C_p)
    assert mod.passed and real.passed
    assert mod.measured == pytest.approx(mod.bound, rel=1e-10)
    assert all(c.passed for c in check_modulus_chain(2, POLY, 16, 1.0, 0.0, C_p))
    C3, _ = estimate_Cp(3, POLY, [32])
    mod, real = check_modulus_chain(3, POLY, 32, 1.0, 1.0, C3)
    assert mod.passed and real.passed and real.context["slack_ratio"] >= 1.0
    with pytest.raises(ValueError):
        check_modulus_chain(2, POLY, 16, 0.0, -1.0, C_p)


def test_conditioning_bounded():
    scaled, check = check_conditioning(2, POLY, [16, 32, 64, 128])
    assert len(scaled) == 4 and check.passed


def test_parter_examples():
    table = check_parter(2, POLY, [1, 2], [16, 32, 64])
    assert table.errors(1)[-1] < 0.05
    rows = {(j, n): v for j, n, v, _ in table.rows}
    assert rows[(2, 64)] == pytest.approx(4 * np.pi**2, rel=0.05)
    assert table.monotone(1) and table.monotone(2)
    with pytest.raises(ValueError):
        check_parter(1, POLY, [50], [8])


def test_parter_toeplitz_closed_form():
    for m in (16, 64, 256):
        lam = sym_eigs(toeplitz(m, [-1.0, 2.0, -1.0])).values[0]
        closed = (2 - 2 * np.cos(np.pi / (m + 1))) * (m + 1) ** 2
        assert lam * (m + 1) ** 2 == pytest.approx(closed, rel=1e-6)


def test_specdist_p1_limits():
    s = specdist_series(1, POLY, [8, 16, 32, 64])
    assert s.limits["M_f"] == pytest.approx(4.0, abs=1e-10)
    assert s.limits["m_h"] == pytest.approx(1 / 3, abs=1e-10)
    assert is_increasing(s.B_max) and s.B_max[-1] < 4
    assert is_increasing(s.C_max) and 1 - s.C_max[-1] < 0.02
    assert all(c.passed for c in check_toeplitz_parts(1, POLY, [8, 16, 32, 64]))


def test_specdist_trig_nonnested_flags():
    checks = check_toeplitz_parts(2, TRIG_NONNESTED, [8, 16, 32, 64])
    assert checks and all(c.passed for c in checks)


def test_boundcheck_directions():
    assert BoundCheck("x", 1.0, 1.0, ">=").passed
    assert not BoundCheck("x", 1.0, 1.0, ">").passed
    assert BoundCheck("x", 1.0, 1.0, "<", tol=1e-12).passed
    assert not BoundCheck("x", np.nan, 1.0, "<=").passed
    with pytest.raises(ValueError):
        BoundCheck("x", 1.0, 1.0, "==").passed
    assert "PASS" in str(BoundCheck("x", 2.0, 1.0, ">="))


def test_monotone_helpers():
    assert is_decreasing([3, 2, 2 + 1e-11, 1])
    assert not is_decreasing([3, 2, 2.1])
    assert is_increasing([1, 2, 2 - 1e-11])



def test_C_p_alpha_independent_of_n():
    from gbspectra.spectral import estimate_C_p_alpha

    vals = [estimate_C_p_alpha(3, TRIG_NONNESTED, [n]) for n in (16, 32, 64)]
    assert max(vals) == pytest.approx(min(vals), rel=1e-10)
    assert estimate_C_p_alpha(1, POLY, [8]) == pytest.approx(4.0)
