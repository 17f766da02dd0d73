"""Galerkin matrices for -u'' + beta u' + gamma u on GB-spline spaces.

One-dimensional matrices are normalized so that the raw bilinear-form matrix
of the interior (homogeneous Dirichlet) basis reads

    A = n K + beta H + (gamma / n) M

with ``M = n * mass``, ``K = stiffness / n`` and ``H = advection``, where
``H[a, b] = int N'_{b+1} N_{a+1}``. The 2D matrix on the unit square uses the
tensor basis ordered with the x index running fastest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh

from .gbspline import GBSplineBasis, SectionSpace, make_knots


class QuadratureError(RuntimeError):
    """Gauss rule refinement did not settle an entry."""


QUAD_TOL = 1e-11


@dataclass
class GalerkinSet1D:
    M: np.ndarray
    K: np.ndarray
    H: np.ndarray
    basis: GBSplineBasis = field(repr=False)
    quad_points: int = 0

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def p(self) -> int:
        return self.basis.p

    @property
    def size(self) -> int:
        return self.M.shape[0]

    def A(self, beta: float = 0.0, gamma: float = 0.0) -> np.ndarray:
        return assemble_A_1d(self, beta, gamma)


def _element_matrices(basis: GBSplineBasis, q: int):
    xi, w = np.polynomial.legendre.leggauss(q)
    w = 0.5 * basis.h * w
    val = basis.local_values(xi, 0)
    der = basis.local_values(xi, 1)
    mass = np.einsum("q,eqr,eqs->ers", w, val, val)
    stiff = np.einsum("q,eqr,eqs->ers", w, der, der)
    # adv[e, r, s] = int N'_s N_r (test r, trial s)
    adv = np.einsum("q,eqr,eqs->ers", w, val, der)
    return mass, stiff, adv


def _scatter(basis: GBSplineBasis, local: np.ndarray) -> np.ndarray:
    n, p = basis.n, basis.p
    m = n + p - 2
    out = np.zeros((m, m))
    glob = np.arange(n)[:, None] + np.arange(p + 1)[None, :] - 1
    for e in range(n):
        g = glob[e]
        keep = (g >= 0) & (g < m)
        out[np.ix_(g[keep], g[keep])] += local[e][np.ix_(keep, keep)]
    return out


def _assemble_raw(basis: GBSplineBasis, q: int):
    mass, stiff, adv = _element_matrices(basis, q)
    n = basis.n
    return {
        "M": n * _scatter(basis, mass),
        "K": _scatter(basis, stiff) / n,
        "H": _scatter(basis, adv),
    }


def _converged(basis: GBSplineBasis, q: int):
    coarse = _assemble_raw(basis, q)
    fine = _assemble_raw(basis, q + 2)
    worst = ("M", (0, 0), 0.0)
    for name in coarse:
        diff = np.abs(fine[name] - coarse[name])
        if diff.size and diff.max() > worst[2]:
            worst = (name, np.unravel_index(np.argmax(diff), diff.shape), float(diff.max()))
    return fine, worst


def assemble_1d(basis: GBSplineBasis, q: int | None = None) -> GalerkinSet1D:
    """Assemble normalized ``M``, ``K`` and ``H`` over the interior functions.

    Starts with ``p + 3`` Gauss points per element and checks against
    ``q + 2`` points; one doubling is allowed before giving up.
    """
    if basis.n + basis.p - 2 < 1:
        raise ValueError("no interior basis functions")
    q = basis.p + 3 if q is None else q
    mats, worst = _converged(basis, q)
    if worst[2] > QUAD_TOL:
        q *= 2
        mats, worst = _converged(basis, q)
        if worst[2] > QUAD_TOL:
            name, (a, b), gap = worst
            raise QuadratureError(
                f"{name}[{a},{b}] of {basis!r} changes by {gap:.3e} between {q} and {q + 2} Gauss points")
    for mat in mats.values():
        mat.setflags(write=False)
    return GalerkinSet1D(M=mats["M"], K=mats["K"], H=mats["H"], basis=basis, quad_points=q + 2)


@lru_cache(maxsize=256)
def assemble_case(p: int, space: SectionSpace, n: int) -> GalerkinSet1D:
    """Cached :func:`assemble_1d` on the open uniform knot vector; the matrices are read-only."""
    return assemble_1d(GBSplineBasis(make_knots(n, p), space))


def assemble_A_1d(gset: GalerkinSet1D, beta: float, gamma: float) -> np.ndarray:
    if gamma < 0:
        raise ValueError(f"reaction coefficient must be >= 0, got gamma={gamma}")
    n = gset.n
    return n * gset.K + beta * gset.H + (gamma / n) * gset.M


@dataclass
class GalerkinSet2D:
    x: GalerkinSet1D
    y: GalerkinSet1D
    A: np.ndarray
    beta1: float = 0.0
    beta2: float = 0.0
    gamma: float = 0.0

    @property
    def nu(self) -> float:
        return self.y.n / self.x.n

    @property
    def shape(self) -> tuple[int, int]:
        return self.x.size, self.y.size

    @property
    def K_hat(self) -> np.ndarray:
        return np.kron(self.y.M, self.x.K)

    @property
    def K_tilde(self) -> np.ndarray:
        return np.kron(self.y.K, self.x.M)

    @property
    def H_hat(self) -> np.ndarray:
        return np.kron(self.y.M, self.x.H)

    @property
    def H_tilde(self) -> np.ndarray:
        return np.kron(self.y.H, self.x.M)

    @property
    def M(self) -> np.ndarray:
        return np.kron(self.y.M, self.x.M)

    def real_part(self) -> np.ndarray:
        return 0.5 * (self.A + self.A.T)

    def recombine(self) -> np.ndarray:
        n1, n2 = self.x.n, self.y.n
        return (n1 / n2 * self.K_hat + n2 / n1 * self.K_tilde + self.beta1 / n2 * self.H_hat
                + self.beta2 / n1 * self.H_tilde + self.gamma / (n1 * n2) * self.M)


def assemble_2d_tensor(n1: int, p1: int, space1: SectionSpace, n2: int, p2: int, space2: SectionSpace,
                       beta1: float = 0.0, beta2: float = 0.0, gamma: float = 0.0) -> GalerkinSet2D:
    """Kronecker form of the 2D matrix, built from the two 1D sets."""
    if gamma < 0:
        raise ValueError(f"reaction coefficient must be >= 0, got gamma={gamma}")
    sx = assemble_case(p1, space1, n1)
    sy = assemble_case(p2, space2, n2)
    A = (n1 / n2 * np.kron(sy.M, sx.K) + n2 / n1 * np.kron(sy.K, sx.M)
         + beta1 / n2 * np.kron(sy.M, sx.H) + beta2 / n1 * np.kron(sy.H, sx.M)
         + gamma / (n1 * n2) * np.kron(sy.M, sx.M))
    return GalerkinSet2D(x=sx, y=sy, A=A, beta1=beta1, beta2=beta2, gamma=gamma)


def assemble_2d_direct(n1: int, p1: int, space1: SectionSpace, n2: int, p2: int, space2: SectionSpace,
                       beta1: float = 0.0, beta2: float = 0.0, gamma: float = 0.0,
                       q: tuple[int, int] | None = None) -> np.ndarray:
    """Raw bilinear-form matrix ``a(phi_j, phi_i)`` by tensor Gauss quadrature on each element.

    Independent of the Kronecker factorization: gradients and products of
    the bivariate functions are formed pointwise.
    """
    if gamma < 0:
        raise ValueError(f"reaction coefficient must be >= 0, got gamma={gamma}")
    bx = GBSplineBasis(make_knots(n1, p1), space1)
    by = GBSplineBasis(make_knots(n2, p2), space2)
    qx, qy = q if q is not None else (p1 + 6, p2 + 6)
    xi1, w1 = np.polynomial.legendre.leggauss(qx)
    xi2, w2 = np.polynomial.legendre.leggauss(qy)
    w = np.outer(0.5 * by.h * w2, 0.5 * bx.h * w1).ravel()

    vx, dx = bx.local_values(xi1, 0), bx.local_values(xi1, 1)
    vy, dy = by.local_values(xi2, 0), by.local_values(xi2, 1)
    m1, m2 = n1 + p1 - 2, n2 + p2 - 2
    A = np.zeros((m1 * m2, m1 * m2))
    ix = np.arange(p1 + 1)
    iy = np.arange(p2 + 1)
    for ey in range(n2):
        for ex in range(n1):
            # point index (b, a) with a along x; local function index (s, r) with r along x
            phi = np.einsum("bs,ar->basr", vy[ey], vx[ex]).reshape(qx * qy, -1)
            phi_x = np.einsum("bs,ar->basr", vy[ey], dx[ex]).reshape(qx * qy, -1)
            phi_y = np.einsum("bs,ar->basr", dy[ey], vx[ex]).reshape(qx * qy, -1)
            loc = (np.einsum("k,ki,kj->ij", w, phi_x, phi_x) + np.einsum("k,ki,kj->ij", w, phi_y, phi_y)
                   + np.einsum("k,ki,kj->ij", w, phi, beta1 * phi_x + beta2 * phi_y)
                   + gamma * np.einsum("k,ki,kj->ij", w, phi, phi))
            gx = ex + ix - 1
            gy = ey + iy - 1
            flat = (gy[:, None] * m1 + gx[None, :]).ravel()
            keep = ((gy[:, None] >= 0) & (gy[:, None] < m2) & (gx[None, :] >= 0) & (gx[None, :] < m1)).ravel()
            A[np.ix_(flat[keep], flat[keep])] += loc[np.ix_(keep, keep)]
    return A


def _singular_values(X: np.ndarray) -> np.ndarray:
    if np.allclose(X, X.T, rtol=0, atol=1e-14 * max(1.0, np.abs(X).max())):
        return np.sort(np.abs(np.linalg.eigvalsh(0.5 * (X + X.T))))[::-1]
    return np.linalg.svd(X, compute_uv=False)


def numerical_rank(X: np.ndarray, rtol: float = 1e-10, scale: float | None = None,
                   sv: np.ndarray | None = None) -> int:
    """Number of singular values above ``rtol * max(s_max, scale)``.

    ``scale`` anchors the threshold when ``X`` is a difference of larger
    matrices and may consist of rounding noise only. Precomputed singular
    values (descending) can be passed as ``sv``.
    """
    s = _singular_values(X) if sv is None else sv
    if s.size == 0:
        return 0
    ref = max(s[0], scale or 0.0)
    if ref == 0.0:
        return 0
    return int(np.sum(s > rtol * ref))


@dataclass
class Decomposition2D:
    B: np.ndarray
    R: np.ndarray
    rank: int
    norm: float
    rank_bound: int
    nu: float


def rank_bound_2d(n1: int, p1: int, n2: int, p2: int) -> int:
    return (n2 + p2 - 2) * (4 * p1 - 2) + (4 * p2 - 2) * (n1 + p1 - 2) + (4 * p2 - 2) * (4 * p1 - 2)


def decompose_2d(gset: GalerkinSet2D, symbols=None, nu: float | None = None) -> Decomposition2D:
    """Split ``(1/nu) K_hat + nu K_tilde`` into its two-level Toeplitz part and a remainder.

    ``symbols`` is ``(f1, h1, f2, h2)``; extracted from the set's own spaces
    when omitted.
    """
    from .toeplitz import extract_symbol, toeplitz

    if nu is not None and not np.isclose(nu, gset.nu, rtol=1e-12):
        raise ValueError(f"requested nu={nu} but the assembled set has nu={gset.nu}")
    nu = gset.nu
    sx, sy = gset.x, gset.y
    for s in (sx, sy):
        if s.n < 3 * s.p + 1:
            raise ValueError(f"decomposition needs n >= 3p+1, got n={s.n}, p={s.p}")
    if symbols is None:
        symbols = (extract_symbol(sx.p, sx.basis.space, sx.n, "f"), extract_symbol(sx.p, sx.basis.space, sx.n, "h"),
                   extract_symbol(sy.p, sy.basis.space, sy.n, "f"), extract_symbol(sy.p, sy.basis.space, sy.n, "h"))
    f1, h1, f2, h2 = symbols
    B1, C1 = toeplitz(sx.size, f1), toeplitz(sx.size, h1)
    B2, C2 = toeplitz(sy.size, f2), toeplitz(sy.size, h2)
    B = np.kron(C2, B1) / nu + nu * np.kron(B2, C1)
    full = gset.K_hat / nu + nu * gset.K_tilde
    R = full - B
    s = _singular_values(R)
    m = full.shape[0]
    scale = float(eigh(full, eigvals_only=True, subset_by_index=[m - 1, m - 1])[0])
    rank = numerical_rank(R, scale=scale, sv=s)
    return Decomposition2D(B=B, R=R, rank=rank, norm=float(s[0]) if s.size else 0.0,
                           rank_bound=rank_bound_2d(sx.n, sx.p, sy.n, sy.p), nu=nu)
