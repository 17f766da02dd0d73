"""Polynomial and generalized (hyperbolic / trigonometric) B-splines.

GB-splines of degree ``p`` live on an open uniform knot vector over [0, 1].
On every element the section space is

    span{1, x, ..., x^(p-2), u(x), v(x)}

with ``{u, v}`` equal to ``{cos, sin}`` (trigonometric) or ``{cosh, sinh}``
(hyperbolic) of a fixed frequency. The basis is built with the integral
recurrence

    N_{i,k}(x) = int_0^x [ N_{i,k-1}(s) / mu_{i,k-1} - N_{i+1,k-1}(s) / mu_{i+1,k-1} ] ds

starting from closed-form "generalized hat" functions of degree 1. Every
element piece is stored as a Chebyshev series on the reference interval
[-1, 1], so the recurrence integrals are taken exactly on the series and the
result is accurate to a few ulps.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as cheb


class PhaseConstraintError(ValueError):
    """Trigonometric section space whose per-element phase reaches pi."""


class Kind(str, enum.Enum):
    POLYNOMIAL = "poly"
    HYPERBOLIC = "hyp"
    TRIGONOMETRIC = "trig"


class Mode(str, enum.Enum):
    NESTED = "nested"
    NONNESTED = "nonnested"


@dataclass(frozen=True)
class KnotVector:
    """Open uniform knot vector: ``p + 1`` copies of 0 and 1, interior knots ``i/n``."""

    p: int
    n: int
    knots: np.ndarray = field(repr=False)

    @property
    def breakpoints(self) -> np.ndarray:
        return self.knots[self.p : self.p + self.n + 1]

    def __len__(self) -> int:
        return len(self.knots)


def make_knots(n: int, p: int) -> KnotVector:
    """Open uniform knot vector with ``n`` elements for degree ``p``.

    >>> make_knots(4, 2).knots.tolist()
    [0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0, 1.0]
    """
    if int(n) != n or n < 2:
        raise ValueError(f"number of elements must be an integer >= 2, got n={n}")
    if int(p) != p or p < 1:
        raise ValueError(f"degree must be an integer >= 1, got p={p}")
    n, p = int(n), int(p)
    interior = np.arange(n + 1, dtype=float) / n
    knots = np.concatenate([np.zeros(p), interior, np.ones(p)])
    knots.setflags(write=False)
    return KnotVector(p=p, n=n, knots=knots)


@dataclass(frozen=True)
class SectionSpace:
    """Per-element space tag.

    ``alpha`` is the global frequency in nested mode (the element phase is
    ``alpha / n`` and shrinks under refinement) and the per-element phase in
    non-nested mode (the frequency is ``n * alpha``).
    """

    kind: Kind = Kind.POLYNOMIAL
    alpha: float | None = None
    mode: Mode = Mode.NESTED

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "mode", Mode(self.mode))
        if self.kind is Kind.POLYNOMIAL:
            object.__setattr__(self, "alpha", None)
            object.__setattr__(self, "mode", Mode.NESTED)
            return
        if self.alpha is None or not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ValueError(f"{self.kind.value} section space needs a phase alpha > 0, got {self.alpha}")
        object.__setattr__(self, "alpha", float(self.alpha))

    @classmethod
    def polynomial(cls) -> SectionSpace:
        return cls()

    @classmethod
    def hyperbolic(cls, alpha: float, mode: Mode | str = Mode.NESTED) -> SectionSpace:
        return cls(Kind.HYPERBOLIC, alpha, Mode(mode))

    @classmethod
    def trigonometric(cls, alpha: float, mode: Mode | str = Mode.NESTED) -> SectionSpace:
        return cls(Kind.TRIGONOMETRIC, alpha, Mode(mode))

    @classmethod
    def parse(cls, text: str) -> SectionSpace:
        """Parse ``poly``, ``hyp:1.0:nonnested``, ``trig:1.0:nested`` and friends."""
        parts = [s.strip().lower() for s in text.strip().split(":")]
        aliases = {
            "poly": Kind.POLYNOMIAL, "polynomial": Kind.POLYNOMIAL,
            "hyp": Kind.HYPERBOLIC, "hyperbolic": Kind.HYPERBOLIC,
            "trig": Kind.TRIGONOMETRIC, "trigonometric": Kind.TRIGONOMETRIC,
        }
        if not parts or parts[0] not in aliases:
            raise ValueError(f"unknown section space {text!r}; expected poly, hyp:ALPHA[:MODE] or trig:ALPHA[:MODE]")
        kind = aliases[parts[0]]
        if kind is Kind.POLYNOMIAL:
            if len(parts) > 1:
                raise ValueError(f"polynomial space takes no parameters: {text!r}")
            return cls()
        if len(parts) not in (2, 3):
            raise ValueError(f"malformed section space {text!r}")
        try:
            alpha = float(parts[1])
        except ValueError:
            raise ValueError(f"bad phase in section space {text!r}") from None
        mode = parts[2] if len(parts) == 3 else "nested"
        mode = mode.replace("-", "").replace("_", "")
        if mode not in ("nested", "nonnested"):
            raise ValueError(f"bad refinement mode in section space {text!r}")
        return cls(kind, alpha, Mode(mode))

    @property
    def label(self) -> str:
        if self.kind is Kind.POLYNOMIAL:
            return "poly"
        return f"{self.kind.value}:{self.alpha:g}:{self.mode.value}"

    @property
    def alpha_star(self) -> float | None:
        """``alpha / (floor(alpha/pi) + 1)``, the largest admissible nested element phase bound."""
        if self.alpha is None:
            return None
        return self.alpha / (math.floor(self.alpha / math.pi) + 1)

    @property
    def min_elements(self) -> int:
        """Smallest ``n`` for which the trigonometric nested phase ``alpha/n`` stays below pi."""
        if self.kind is Kind.TRIGONOMETRIC and self.mode is Mode.NESTED:
            return max(2, math.floor(self.alpha / math.pi) + 1)
        return 2

    def element_phase(self, n: int) -> float:
        """Phase seen by one element of width ``1/n`` (0 for polynomials)."""
        if self.kind is Kind.POLYNOMIAL:
            return 0.0
        if self.mode is Mode.NESTED:
            return self.alpha / n
        return self.alpha

    def frequency(self, n: int) -> float:
        return self.element_phase(n) * n

    def check(self, n: int) -> None:
        """Raise :class:`PhaseConstraintError` if the space is not admissible for ``n`` elements."""
        if self.kind is not Kind.TRIGONOMETRIC:
            return
        if self.mode is Mode.NONNESTED and self.alpha >= math.pi:
            raise PhaseConstraintError(
                f"non-nested trigonometric space needs element phase alpha < pi, got alpha={self.alpha:g}")
        if self.mode is Mode.NESTED and n < self.min_elements:
            raise PhaseConstraintError(
                f"nested trigonometric space with alpha={self.alpha:g} needs n >= floor(alpha/pi)+1 "
                f"= {self.min_elements} (alpha*={self.alpha_star:g}), got n={n}: "
                f"element phase {self.alpha / n:g} >= pi")

    def with_phase(self, phase: float) -> SectionSpace:
        """Non-nested space whose elements see ``phase``; identical interior translates."""
        if self.kind is Kind.POLYNOMIAL:
            return self
        return SectionSpace(self.kind, phase, Mode.NONNESTED)


def _hat_pieces(kind: Kind, phase: float) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev coefficients of the rising and falling degree-1 pieces on [-1, 1]."""
    if kind is Kind.POLYNOMIAL or phase == 0.0:
        return np.array([0.5, 0.5]), np.array([0.5, -0.5])
    fn = np.sin if kind is Kind.TRIGONOMETRIC else np.sinh
    deg = 20 + 2 * math.ceil(phase)
    denom = fn(phase)
    rise = cheb.chebinterpolate(lambda xi: fn(0.5 * phase * (xi + 1.0)) / denom, deg)
    fall = cheb.chebinterpolate(lambda xi: fn(0.5 * phase * (1.0 - xi)) / denom, deg)
    return rise, fall


def _cheb_integrals(length: int) -> np.ndarray:
    """``int_{-1}^{1} T_j`` for j < length."""
    j = np.arange(length)
    w = np.zeros(length)
    even = j % 2 == 0
    w[even] = 2.0 / (1.0 - j[even] ** 2)
    return w


class GBSplineBasis:
    """Basis ``N_{1,p}, ..., N_{n+p,p}`` of a section space on an open uniform knot vector.

    Instances are immutable after construction. Coefficients are kept per
    element: ``self._coef[e, r]`` is the Chebyshev series of ``N_{e+r+1,p}``
    on element ``e`` (``r = 0..p``).
    """

    def __init__(self, knots: KnotVector, space: SectionSpace):
        space.check(knots.n)
        self.knots = knots
        self.space = space
        self.p = knots.p
        self.n = knots.n
        self.dim = knots.n + knots.p
        self.h = 1.0 / knots.n
        self.phase = space.element_phase(knots.n)
        self._build()

    def __repr__(self) -> str:
        return f"GBSplineBasis(p={self.p}, n={self.n}, space={self.space.label})"

    def _build(self) -> None:
        p, n, h = self.p, self.n, self.h
        rise, fall = _hat_pieces(self.space.kind, self.phase)
        length = max(len(rise), len(fall))
        nfun = n + 2 * p - 1
        coef = np.zeros((nfun, n, length))
        for i in range(nfun):
            if 0 <= i - p < n:
                coef[i, i - p, : len(rise)] = rise
            if 0 <= i + 1 - p < n:
                coef[i, i + 1 - p, : len(fall)] = fall

        elem = np.arange(n)
        t = self.knots.knots
        dcoef = None
        for k in range(2, p + 1):
            mu = 0.5 * h * (coef @ _cheb_integrals(coef.shape[-1])).sum(axis=1)
            empty = mu <= 0.0
            delta = np.divide(1.0, mu, out=np.zeros_like(mu), where=~empty)
            # normalized cumulative integral of each lower-degree function;
            # an empty support collapsed onto a knot acts as a unit step there
            cum = cheb.chebint(delta[:, None, None] * coef, m=1, lbnd=-1, scl=0.5 * h, axis=-1)
            inc = cum.sum(axis=-1)
            cum[..., 0] += np.cumsum(inc, axis=1) - inc
            steps = np.nonzero(empty)[0]
            cum[steps] = 0.0
            cum[steps, :, 0] = (t[steps] <= 0.0)[:, None].astype(float)
            new = cum[:-1] - cum[1:]
            dcoef = delta[:-1, None, None] * coef[:-1] - delta[1:, None, None] * coef[1:]
            first = np.arange(new.shape[0])[:, None] - p
            outside = (elem[None, :] < first) | (elem[None, :] > first + k)
            new[outside] = 0.0
            dcoef[outside] = 0.0
            coef = new

        idx = elem[:, None] + np.arange(p + 1)[None, :]
        self._coef = coef[idx, elem[:, None]]
        if dcoef is None:
            self._dcoef = cheb.chebder(self._coef, axis=-1, scl=2.0 / h)
        else:
            dloc = dcoef[idx, elem[:, None]]
            self._dcoef = np.concatenate(
                [dloc, np.zeros(dloc.shape[:-1] + (self._coef.shape[-1] - dloc.shape[-1],))], axis=-1)
        self._ddcoef = cheb.chebder(self._dcoef, axis=-1, scl=2.0 / h)
        for arr in (self._coef, self._dcoef, self._ddcoef):
            arr.setflags(write=False)

    def _series(self, d: int) -> np.ndarray:
        if d not in (0, 1, 2):
            raise ValueError(f"derivative order must be 0, 1 or 2, got {d}")
        return (self._coef, self._dcoef, self._ddcoef)[d]

    def local_values(self, xi: np.ndarray, d: int = 0) -> np.ndarray:
        """Values of the ``p+1`` nonzero functions at reference points ``xi`` of every element.

        Returns an array of shape ``(n, len(xi), p + 1)``; entry ``[e, q, r]``
        belongs to global (0-based) function ``e + r``. Valid because all
        elements have the same width.
        """
        xi = np.asarray(xi, dtype=float)
        series = self._series(d)
        vander = cheb.chebvander(xi, series.shape[-1] - 1)
        return np.einsum("ql,erl->eqr", vander, series)

    def element_of(self, x: np.ndarray, side: str = "right") -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any((x < 0.0) | (x > 1.0)) or np.any(np.isnan(x)):
            raise ValueError("evaluation points must lie in [0, 1]")
        if side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {side!r}")
        e = np.searchsorted(self.knots.breakpoints, x, side=side) - 1
        return np.clip(e, 0, self.n - 1)

    def eval(self, x, d: int = 0, side: str = "right") -> np.ndarray:
        """Evaluate all ``n + p`` functions (or their ``d``-th derivative) at ``x``.

        At an interior knot the element on ``side`` of the knot is used,
        which gives one-sided derivatives.
        """
        scalar = np.ndim(x) == 0
        x = np.atleast_1d(np.asarray(x, dtype=float))
        e = self.element_of(x, side)
        series = self._series(d)
        xi = 2.0 * (x - self.knots.breakpoints[e]) / self.h - 1.0
        vander = cheb.chebvander(xi, series.shape[-1] - 1)
        local = np.einsum("ml,mrl->mr", vander, series[e])
        out = np.zeros((len(x), self.dim))
        rows = np.arange(len(x))[:, None]
        out[rows, e[:, None] + np.arange(self.p + 1)[None, :]] = local
        return out[0] if scalar else out

    def support(self, i: int) -> tuple[float, float]:
        """Support of ``N_{i,p}`` for the 1-based index ``i``."""
        t = self.knots.knots
        return float(t[i - 1]), float(t[i + self.p])


def build_basis(knots: KnotVector, space: SectionSpace) -> GBSplineBasis:
    return GBSplineBasis(knots, space)


def eval_basis(basis: GBSplineBasis, x, d: int = 0) -> np.ndarray:
    return basis.eval(x, d)


def ratio_bounds(p: int, space: SectionSpace, n: int, grid_size: int = 16) -> tuple[float, float]:
    """Sampled inf/sup of ``N^Q_{i,p}(x) / N_{i,p}(x)`` over interior functions.

    Uses ``grid_size`` equispaced points strictly inside every element and
    only interior functions ``i = 2..n+p-1``.
    """
    knots = make_knots(n, p)
    gb = GBSplineBasis(knots, space)
    poly = gb if space.kind is Kind.POLYNOMIAL else GBSplineBasis(knots, SectionSpace.polynomial())
    local = (np.arange(grid_size) + 1.0) / (grid_size + 1.0)
    x = (np.arange(n)[:, None] + local[None, :]).ravel() / n
    brk = knots.breakpoints
    x = x[np.min(np.abs(x[:, None] - brk[None, :]), axis=1) > 1e-6]
    num = gb.eval(x)[:, 1:-1]
    den = poly.eval(x)[:, 1:-1]
    ok = den >= 1e-14
    if not np.any(ok):
        raise ValueError("all sample points fell on zeros of the polynomial B-splines")
    ratio = num[ok] / den[ok]
    return float(ratio.min()), float(ratio.max())


def basis_defects(basis: GBSplineBasis, grid: int = 1000) -> dict[str, float]:
    """Worst observed violation of each basis invariant.

    ``negativity``: largest ``-N_i(x)``; ``unity``: largest ``|sum_i N_i(x) - 1|``;
    ``support``: largest ``|N_i(x)|`` outside the support of ``N_i``;
    ``smoothness``: largest relative jump of derivatives of order ``0..min(p-1, 2)``
    across interior knots.
    """
    x = np.linspace(0.0, 1.0, grid)
    V = basis.eval(x)
    t = basis.knots.knots
    lo = t[np.arange(basis.dim)]
    hi = t[np.arange(basis.dim) + basis.p + 1]
    outside = (x[:, None] < lo[None, :]) | (x[:, None] > hi[None, :])
    out = {
        "negativity": float(max(0.0, -V.min())),
        "unity": float(np.abs(V.sum(axis=1) - 1.0).max()),
        "support": float(np.abs(V[outside]).max()) if outside.any() else 0.0,
        "smoothness": 0.0,
    }
    inner = basis.knots.breakpoints[1:-1]
    if inner.size:
        for d in range(min(basis.p - 1, 2) + 1):
            left, right = basis.eval(inner, d, "left"), basis.eval(inner, d, "right")
            scale = max(1.0, float(np.abs(right).max()))
            out["smoothness"] = max(out["smoothness"], float(np.abs(left - right).max()) / scale)
    return out
