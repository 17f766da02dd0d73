"""Toeplitz and two-level Toeplitz matrices, symbols and eigenvalue distribution metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .gbspline import Kind, SectionSpace


class SymbolExtractionError(RuntimeError):
    pass


@dataclass(frozen=True)
class SymbolCoeffs:
    """Real even trigonometric polynomial ``f(theta) = sum_{|k|<=p} c_k exp(i k theta)``.

    ``coeffs[k + p]`` holds ``c_k``.
    """

    coeffs: np.ndarray
    p: int
    kind: str = "f"
    space: SectionSpace = field(default_factory=SectionSpace)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 1 or len(c) != 2 * self.p + 1:
            raise ValueError(f"need 2p+1 = {2 * self.p + 1} coefficients, got shape {c.shape}")
        if self.kind not in ("f", "h"):
            raise ValueError(f"kind must be 'f' or 'h', got {self.kind!r}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_half(cls, half, kind: str = "f", space: SectionSpace | None = None) -> SymbolCoeffs:
        """Build from ``[c_0, c_1, ..., c_p]``."""
        half = np.asarray(half, dtype=float)
        return cls(np.concatenate([half[:0:-1], half]), len(half) - 1, kind, space or SectionSpace())

    def c(self, k: int) -> float:
        return float(self.coeffs[k + self.p]) if abs(k) <= self.p else 0.0

    @property
    def half(self) -> np.ndarray:
        return self.coeffs[self.p :]

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, self.p + 1)
        half = self.half
        return half[0] + 2.0 * np.cos(theta[..., None] * k) @ half[1:]

    def derivative2_at(self, theta: float) -> float:
        k = np.arange(1, self.p + 1)
        return float(-2.0 * np.sum(k**2 * self.half[1:] * np.cos(k * theta)))

    def extremes(self) -> tuple[float, float]:
        return symbol_extremes(self)

    def check(self, grid: int = 4096, tol: float = 1e-10) -> list[str]:
        """Symbol invariants; returns the list of violations (empty when fine)."""
        bad = []
        if not np.allclose(self.coeffs, self.coeffs[::-1], rtol=0, atol=1e-12):
            bad.append("coefficients are not even")
        vals = self(np.linspace(-np.pi, np.pi, grid))
        total = float(np.sum(self.coeffs))
        if self.kind == "h":
            if abs(total - 1.0) > tol:
                bad.append(f"h(0) = {total!r} != 1")
            if vals.min() <= 0.0 or vals.max() > 1.0 + tol:
                bad.append(f"h outside (0, 1]: [{vals.min()}, {vals.max()}]")
        else:
            if abs(total) > tol:
                bad.append(f"f(0) = {total!r} != 0")
            if vals.min() < -tol:
                bad.append(f"f negative: {vals.min()}")
        return bad

    def to_rows(self):
        return [(k, self.c(k)) for k in range(-self.p, self.p + 1)]


@dataclass(frozen=True)
class TwoLevelSymbol:
    """``g(t1, t2) = (1/nu) h2(t2) f1(t1) + nu f2(t2) h1(t1)``; ``t1`` belongs to the x direction."""

    f1: SymbolCoeffs
    h1: SymbolCoeffs
    f2: SymbolCoeffs
    h2: SymbolCoeffs
    nu: float = 1.0

    def __call__(self, theta1, theta2):
        return self.h2(theta2) * self.f1(theta1) / self.nu + self.nu * self.f2(theta2) * self.h1(theta1)

    def coefficient_table(self) -> np.ndarray:
        """Fourier coefficients ``table[k2 + p2, k1 + p1]``; outer index is the y direction."""
        return (np.outer(self.h2.coeffs, self.f1.coeffs) / self.nu
                + self.nu * np.outer(self.f2.coeffs, self.h1.coeffs))

    def extremes(self, grid: int = 512) -> tuple[float, float]:
        t = np.linspace(0.0, np.pi, grid)
        vals = self(t[:, None], t[None, :])
        return float(vals.min()), float(vals.max())


def _centered(coeffs) -> np.ndarray:
    if isinstance(coeffs, SymbolCoeffs):
        return coeffs.coeffs
    c = np.asarray(coeffs)
    if c.ndim != 1 or len(c) % 2 == 0:
        raise ValueError("Toeplitz coefficients must be an odd-length list c_{-p}..c_p")
    return c


def toeplitz(m: int, coeffs) -> np.ndarray:
    """``T_m`` with ``T[i, j] = c_{i-j}``; ``coeffs`` is a SymbolCoeffs or ``[c_{-p}, ..., c_p]``."""
    if m < 1:
        raise ValueError(f"matrix size must be >= 1, got {m}")
    c = _centered(coeffs)
    p = len(c) // 2
    T = np.zeros((m, m), dtype=c.dtype)
    for k in range(-min(p, m - 1), min(p, m - 1) + 1):
        T += c[k + p] * np.eye(m, k=-k, dtype=c.dtype)
    return T


def two_level_toeplitz(m1: int, m2: int, g) -> np.ndarray:
    """Block Toeplitz matrix with Toeplitz blocks ``G_k = T_{m2}(g_{k, .})``.

    ``g`` is a coefficient table indexed ``[k + p_outer, l + p_inner]`` or a
    :class:`TwoLevelSymbol` (then ``m1`` counts y-direction blocks and ``m2``
    the x-direction size of each block).
    """
    if m1 < 1 or m2 < 1:
        raise ValueError("matrix sizes must be >= 1")
    table = g.coefficient_table() if isinstance(g, TwoLevelSymbol) else np.asarray(g)
    if table.ndim != 2 or table.shape[0] % 2 == 0 or table.shape[1] % 2 == 0:
        raise ValueError("coefficient table must have odd sizes in both directions")
    po = table.shape[0] // 2
    out = np.zeros((m1 * m2, m1 * m2), dtype=table.dtype)
    blocks = {k: toeplitz(m2, table[k + po]) for k in range(-po, po + 1)}
    for a in range(m1):
        for b in range(m1):
            k = a - b
            if abs(k) <= po:
                out[a * m2 : (a + 1) * m2, b * m2 : (b + 1) * m2] = blocks[k]
    return out


def kron(X, Y) -> np.ndarray:
    X, Y = np.asarray(X), np.asarray(Y)
    if X.ndim != 2 or X.shape[0] != X.shape[1] or Y.ndim != 2 or Y.shape[0] != Y.shape[1]:
        raise ValueError("kron expects square matrices")
    return np.kron(X, Y)


def symbol_from_matrix(matrix: np.ndarray, p: int, kind: str, space: SectionSpace | None = None) -> SymbolCoeffs:
    """Read ``c_{-p}..c_p`` off the central row of a banded Toeplitz-like matrix."""
    m = matrix.shape[0]
    row = m // 2
    if row - p < 0 or row + p >= m:
        raise SymbolExtractionError(f"matrix of size {m} too small for bandwidth {p}")
    # c_k = T[i, i-k]
    coeffs = matrix[row, row - np.arange(-p, p + 1)]
    coeffs = 0.5 * (coeffs + coeffs[::-1])
    return SymbolCoeffs(coeffs, p, kind, space or SectionSpace())


def extract_symbol(p: int, space: SectionSpace, n: int, kind: str, stability_tol: float = 1e-10) -> SymbolCoeffs:
    """Symbol of the normalized stiffness (``kind='f'``) or mass (``kind='h'``) matrix at ``n`` elements.

    Interior rows only depend on the element phase, so they are read from a
    non-nested basis with the phase the given space has at ``n`` elements,
    assembled on ``max(n, 3p+1)`` and twice that many elements; the two rows
    must agree.
    """
    from .assembly import assemble_case

    if kind not in ("f", "h"):
        raise ValueError(f"kind must be 'f' or 'h', got {kind!r}")
    space.check(n)
    aux = space.with_phase(space.element_phase(n))
    n_work = max(n, 3 * p + 1)
    rows = []
    for nn in (n_work, 2 * n_work):
        s = assemble_case(p, aux, nn)
        rows.append(symbol_from_matrix(s.K if kind == "f" else s.M, p, kind, space).coeffs)
    gap = float(np.max(np.abs(rows[0] - rows[1])))
    if gap > stability_tol:
        raise SymbolExtractionError(
            f"interior row of {'K' if kind == 'f' else 'M'} not stable under refinement "
            f"(p={p}, {space.label}, n={n}): deviation {gap:.3e}")
    return SymbolCoeffs(rows[0], p, kind, space)


@dataclass
class ToeplitzParts:
    B: np.ndarray
    C: np.ndarray
    R: np.ndarray
    S: np.ndarray


def toeplitz_parts(gset, f: SymbolCoeffs, h: SymbolCoeffs) -> ToeplitzParts:
    """``K = B + R`` and ``M = C + S`` with ``B = T(f)``, ``C = T(h)``."""
    m = gset.size
    B, C = toeplitz(m, f), toeplitz(m, h)
    return ToeplitzParts(B=B, C=C, R=gset.K - B, S=gset.M - C)


def symbol_grid(N: int, kind: str = "open") -> np.ndarray:
    """Uniform grid on ``[-pi, pi]``.

    ``open``: ``-pi + (2j - 1) pi / N``, ``j = 1..N`` (cell midpoints);
    ``periodic``: ``-pi + 2 pi j / N``, ``j = 0..N-1`` (contains 0 for even ``N``).
    """
    if N < 1:
        raise ValueError("grid size must be >= 1")
    if kind == "open":
        return -np.pi + (2.0 * np.arange(1, N + 1) - 1.0) * np.pi / N
    if kind == "periodic":
        return -np.pi + 2.0 * np.pi * np.arange(N) / N
    raise ValueError(f"grid kind must be 'open' or 'periodic', got {kind!r}")


def sample_symbol(s, N) -> np.ndarray:
    """Sorted samples of a 1D symbol on ``N`` points or a two-level symbol on ``N1 x N2`` points."""
    if isinstance(s, TwoLevelSymbol):
        N1, N2 = N
        t1, t2 = symbol_grid(N1), symbol_grid(N2)
        vals = s(t1[None, :], t2[:, None])
    else:
        vals = s(symbol_grid(int(N)))
    return np.sort(np.ravel(vals))


def symbol_extremes(s: SymbolCoeffs, grid: int = 4096) -> tuple[float, float]:
    """Essential inf and sup of an even symbol from a dense grid on [0, pi], polished locally."""
    t = np.linspace(0.0, np.pi, grid + 1)
    vals = s(t)
    step = t[1] - t[0]
    out = []
    for sign, idx in ((1.0, int(np.argmin(vals))), (-1.0, int(np.argmax(vals)))):
        best = vals[idx]
        lo, hi = max(0.0, t[idx] - step), min(np.pi, t[idx] + step)
        res = minimize_scalar(lambda x: sign * float(s(x)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        cand = sign * res.fun
        best = min(best, cand) if sign > 0 else max(best, cand)
        out.append(float(best))
    return out[0], out[1]


@dataclass
class DistributionDistance:
    mean_abs: float
    max_abs: float
    outlier_count: int
    tol: float


def distribution_distance(eigs, samples, tol: float = 0.1) -> DistributionDistance:
    """Compare sorted eigenvalues with sorted symbol samples index by index."""
    eigs = np.sort(np.real(np.asarray(eigs)))
    samples = np.sort(np.asarray(samples))
    if eigs.shape != samples.shape:
        raise ValueError(f"length mismatch: {eigs.size} eigenvalues vs {samples.size} samples")
    diff = np.abs(eigs - samples)
    if diff.size == 0:
        return DistributionDistance(0.0, 0.0, 0, tol)
    return DistributionDistance(float(diff.mean()), float(diff.max()), int(np.sum(diff > tol)), tol)


def polynomial_limit(space: SectionSpace) -> bool:
    """Whether the relevant limit symbol is the polynomial one (nested and polynomial spaces)."""
    return space.kind is Kind.POLYNOMIAL or space.mode.value == "nested"
