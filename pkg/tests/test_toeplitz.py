import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbspectra.gbspline import SectionSpace
from gbspectra.spectral import kronecker_identity_errors, random_normal
from gbspectra.toeplitz import (
    SymbolCoeffs,
    SymbolExtractionError,
    TwoLevelSymbol,
    distribution_distance,
    extract_symbol,
    kron,
    sample_symbol,
    symbol_extremes,
    symbol_from_matrix,
    symbol_grid,
    toeplitz,
    two_level_toeplitz,
)

SPACES = ["poly", "hyp:1:nonnested", "trig:1:nested", "trig:1:nonnested"]
F1 = SymbolCoeffs.from_half([2.0, -1.0], "f")
H1 = SymbolCoeffs.from_half([2 / 3, 1 / 6], "h")


def test_toeplitz_examples():
    np.testing.assert_array_equal(toeplitz(3, F1), [[2, -1, 0], [-1, 2, -1], [0, -1, 2]])
    np.testing.assert_array_equal(toeplitz(1, F1), [[2.0]])
    with pytest.raises(ValueError):
        toeplitz(0, F1)
    # T[i, j] = c_{i-j} with an asymmetric list
    T = toeplitz(4, [1.0, 2.0, 3.0])
    assert T[1, 0] == 3.0 and T[0, 1] == 1.0


@pytest.mark.parametrize("m", [10, 200])
def test_tridiagonal_closed_form(m):
    ev = np.linalg.eigvalsh(toeplitz(m, F1))
    j = np.arange(1, m + 1)
    np.testing.assert_allclose(ev, 2 - 2 * np.cos(j * np.pi / (m + 1)), atol=1e-10 if m == 10 else 1e-8)


def test_two_level_identity_and_hermitian():
    table = np.zeros((3, 3))
    table[1, 1] = 1.0
    np.testing.assert_array_equal(two_level_toeplitz(3, 4, table), np.eye(12))
    g = TwoLevelSymbol(F1, H1, F1, H1, 2.0)
    T = two_level_toeplitz(4, 5, g)
    np.testing.assert_array_equal(T, T.T)
    with pytest.raises(ValueError):
        two_level_toeplitz(2, 2, np.ones((2, 3)))


@pytest.mark.parametrize("m1", range(1, 6))
@pytest.mark.parametrize("m2", range(1, 6))
def test_commutation_identity(m1, m2):
    lhs = kron(toeplitz(m1, F1), toeplitz(m2, H1))
    rhs = two_level_toeplitz(m1, m2, np.outer(F1.coeffs, H1.coeffs))
    assert np.abs(lhs - rhs).max() <= 1e-14


def test_two_level_symbol_matrix_matches_kronecker_form():
    p = 2
    sp = SectionSpace()
    f, h = extract_symbol(p, sp, 16, "f"), extract_symbol(p, sp, 16, "h")
    nu = 2.0
    m1, m2 = 7, 9
    g = TwoLevelSymbol(f, h, f, h, nu)
    B = np.kron(toeplitz(m2, h), toeplitz(m1, f)) / nu + nu * np.kron(toeplitz(m2, f), toeplitz(m1, h))
    np.testing.assert_allclose(two_level_toeplitz(m2, m1, g), B, atol=1e-14)


def test_two_level_symbol_fourier_table():
    g = TwoLevelSymbol(F1, H1, extract_symbol(2, SectionSpace(), 16, "f"), extract_symbol(2, SectionSpace(), 16, "h"), 1.5)
    table = g.coefficient_table()
    t1, t2 = 0.3, -1.1
    k2 = np.arange(-2, 3)[:, None]
    k1 = np.arange(-1, 2)[None, :]
    direct = np.sum(table * np.exp(1j * (k1 * t1 + k2 * t2)))
    assert direct.real == pytest.approx(g(t1, t2), abs=1e-13)
    assert abs(direct.imag) < 1e-13


def test_kron_rejects_rectangular():
    with pytest.raises(ValueError):
        kron(np.ones((2, 3)), np.eye(2))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m1=st.integers(2, 6), m2=st.integers(2, 6))
def test_kronecker_identities_random(seed, m1, m2):
    rng = np.random.default_rng(seed)
    X = random_normal(rng, m1, int(rng.integers(1, m1 + 1)))
    Y = random_normal(rng, m2, int(rng.integers(1, m2 + 1)))
    errs = kronecker_identity_errors(X, Y)
    assert errs["normal"] <= 1e-9
    assert errs["spectrum"] <= 1e-9
    assert errs["rank"] == 0
    assert errs["norm"] <= 1e-9


def test_kronecker_symmetric_spectrum():
    rng = np.random.default_rng(3)
    X = rng.standard_normal((3, 3))
    Y = rng.standard_normal((3, 3))
    X, Y = X + X.T, Y + Y.T
    prod = np.sort(np.outer(np.linalg.eigvalsh(X), np.linalg.eigvalsh(Y)).ravel())
    np.testing.assert_allclose(np.linalg.eigvalsh(np.kron(X, Y)), prod, atol=1e-9)


def test_extract_p1_polynomial():
    f = extract_symbol(1, SectionSpace(), 8, "f")
    h = extract_symbol(1, SectionSpace(), 8, "h")
    np.testing.assert_allclose(f.coeffs, [-1, 2, -1], atol=1e-13)
    np.testing.assert_allclose(h.coeffs, [1 / 6, 2 / 3, 1 / 6], atol=1e-14)


@pytest.mark.parametrize("space", SPACES)
@pytest.mark.parametrize("p", [1, 2, 3])
def test_symbol_invariants(space, p):
    sp = SectionSpace.parse(space)
    f, h = extract_symbol(p, sp, 16, "f"), extract_symbol(p, sp, 16, "h")
    if sp.alpha is None or p >= 2:
        assert f.check() == []
        assert h.check() == []
    else:
        # degree-1 GB hats are not a partition of unity, so only evenness and positivity survive
        assert h(symbol_grid(256)).min() > 0 and f(symbol_grid(256)).min() >= -1e-12


def test_symbol_check_reports_violations():
    bad = SymbolCoeffs.from_half([1.0, 0.2], "f")
    assert any("f(0)" in msg for msg in bad.check())
    with pytest.raises(ValueError):
        SymbolCoeffs(np.ones(4), 2)
    with pytest.raises(ValueError):
        SymbolCoeffs(np.ones(3), 1, kind="g")


def test_symbol_from_small_matrix():
    with pytest.raises(SymbolExtractionError):
        symbol_from_matrix(np.eye(3), 2, "f")


def test_sample_symbol_examples():
    s = sample_symbol(F1, 3)
    assert np.all(np.diff(s) >= 0) and s.min() >= 0
    const = SymbolCoeffs(np.array([5.0]), 0)
    np.testing.assert_array_equal(sample_symbol(const, 7), 5.0)
    h = sample_symbol(H1, 101)
    assert h.min() >= 1 / 3 - 1e-15 and h.max() <= 1 + 1e-15
    g = sample_symbol(TwoLevelSymbol(F1, H1, F1, H1), (4, 6))
    assert g.shape == (24,) and np.all(np.diff(g) >= 0)
    with pytest.raises(ValueError):
        symbol_grid(0)


def test_distribution_distance():
    d = distribution_distance([1.0, 2.0], [1.0, 2.0])
    assert (d.mean_abs, d.max_abs, d.outlier_count) == (0.0, 0.0, 0)
    ev = np.linalg.eigvalsh(toeplitz(64, F1))
    d = distribution_distance(ev, sample_symbol(F1, 64), tol=0.1)
    assert d.mean_abs < 0.05 and d.outlier_count < 4
    with pytest.raises(ValueError):
        distribution_distance([1.0], [1.0, 2.0])


def test_symbol_extremes_p1():
    assert symbol_extremes(F1) == pytest.approx((0.0, 4.0), abs=1e-12)
    assert symbol_extremes(H1) == pytest.approx((1 / 3, 1.0), abs=1e-12)


@pytest.mark.parametrize("space", SPACES)
def test_szego_and_monotone_extremes(space):
    for s in (F1, extract_symbol(3, SectionSpace.parse(space), 16, "f"), extract_symbol(2, SectionSpace.parse(space), 16, "h")):
        lo, hi = symbol_extremes(s)
        mins, maxs = [], []
        for m in (4, 8, 16, 32, 64):
            ev = np.linalg.eigvalsh(toeplitz(m, s))
            assert lo < ev[0] and ev[-1] < hi
            mins.append(ev[0])
            maxs.append(ev[-1])
        assert all(b < a for a, b in zip(mins, mins[1:]))
        assert all(b > a for a, b in zip(maxs, maxs[1:]))


def test_periodic_grid():
    t = symbol_grid(512, "periodic")
    assert t[0] == -np.pi and 0.0 in t and t[-1] < np.pi
    with pytest.raises(ValueError):
        symbol_grid(4, "closed")
