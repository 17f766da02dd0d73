"""Eigenvalue / singular value primitives and the bound checks built on them."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from .assembly import assemble_case
from .gbspline import SectionSpace
from scipy.optimize import linear_sum_assignment

from .toeplitz import extract_symbol, symbol_extremes, toeplitz, two_level_toeplitz

# pi to extended precision; np.longdouble(np.pi) would only carry double digits
PI_LD = np.longdouble("3.14159265358979323846264338327950288")
MONOTONE_SLACK = 1e-10


class EigenSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Spectrum:
    values: np.ndarray
    size: int

    def __len__(self) -> int:
        return len(self.values)

    @property
    def min(self):
        return self.values[0]

    @property
    def max(self):
        return self.values[-1]


def _is_hermitian(S: np.ndarray, rtol: float = 1e-10) -> bool:
    scale = np.abs(S).sum(axis=1).max() if S.size else 0.0
    return np.abs(S - S.conj().T).sum(axis=1).max() <= rtol * scale if S.size else True


def sym_eigs(S, spot_checks: int = 3, seed: int = 0x5EED) -> Spectrum:
    """Ascending eigenvalues of a real symmetric or complex Hermitian matrix.

    The residual ``||S v - lambda v||`` of a few seeded eigenpairs and the
    trace identity are verified before returning.
    """
    S = np.asarray(S)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError("sym_eigs expects a square matrix")
    if not _is_hermitian(S):
        raise ValueError("sym_eigs expects a symmetric (Hermitian) matrix")
    m = S.shape[0]
    if m == 0 or spot_checks <= 0:
        return Spectrum(np.linalg.eigvalsh(S), m)
    w, V = np.linalg.eigh(S)
    norm = max(abs(w[0]), abs(w[-1]))
    idx = np.random.default_rng(seed).choice(m, size=min(spot_checks, m), replace=False)
    res = np.linalg.norm(S @ V[:, idx] - V[:, idx] * w[idx], axis=0)
    if norm > 0 and res.max() > 1e-9 * norm:
        raise EigenSolverError(f"eigenpair residual {res.max():.3e} exceeds 1e-9 * {norm:.3e}")
    tr = np.trace(S).real
    if abs(tr - w.sum()) > 1e-9 * max(np.abs(w).sum(), 1e-300):
        raise EigenSolverError(f"trace {tr!r} differs from eigenvalue sum {w.sum()!r}")
    return Spectrum(w, m)


def gen_eigs(X, spot_checks: int = 3, seed: int = 0x5EED) -> Spectrum:
    """Eigenvalues of a general square matrix, sorted by real then imaginary part.

    A few eigenvalues are spot-checked through the backward error
    ``s_min(X - lambda I) / ||X||``.
    """
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("gen_eigs expects a square matrix")
    try:
        vals = np.linalg.eigvals(X)
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(f"QR iteration failed to converge: {exc}") from exc
    vals = vals[np.lexsort((vals.imag, vals.real))]
    norm = np.linalg.norm(X, 2) if X.size else 0.0
    if norm > 0:
        rng = np.random.default_rng(seed)
        m = X.shape[0]
        for idx in rng.choice(m, size=min(spot_checks, m), replace=False):
            smin = np.linalg.svd(X - vals[idx] * np.eye(m), compute_uv=False)[-1]
            if smin > 1e-10 * norm * max(1, m):
                raise EigenSolverError(f"eigenvalue {vals[idx]} has backward error {smin / norm:.2e}")
    return Spectrum(vals, X.shape[0])


def singular_values(X) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[0] != X.shape[1]:
        raise ValueError("singular_values expects a square matrix")
    return np.linalg.svd(X, compute_uv=False)


def condition_2(X) -> float:
    s = singular_values(X)
    if s[-1] <= 0.0 or s[-1] <= np.finfo(float).eps * s[0] * len(s):
        raise np.linalg.LinAlgError("matrix is singular to working precision")
    return float(s[0] / s[-1])


def real_part(X) -> np.ndarray:
    X = np.asarray(X)
    return 0.5 * (X + X.conj().T)


def imag_part(X) -> np.ndarray:
    X = np.asarray(X)
    return (X - X.conj().T) / 2j


def pencil_min(K: np.ndarray, M: np.ndarray) -> float:
    """Smallest eigenvalue of ``K x = lambda M x`` for SPD ``M``.

    Cholesky congruence ``M = L L^T`` and a symmetric eigensolve on
    ``L^-1 K L^-T``; the result is then replaced by the extended precision
    Rayleigh quotient of its eigenvector, which is second-order accurate.
    """
    L = np.linalg.cholesky(M)
    Linv = sla.solve_triangular(L, np.eye(len(L)), lower=True)
    C = Linv @ K @ Linv.T
    w, V = np.linalg.eigh(0.5 * (C + C.T))
    x = sla.solve_triangular(L.T, V[:, 0], lower=False).astype(np.longdouble)
    Kl, Ml = K.astype(np.longdouble), M.astype(np.longdouble)
    return (x @ Kl @ x) / (x @ Ml @ x)


@dataclass
class BoundCheck:
    name: str
    measured: float
    bound: float
    direction: str  # one of ">=", "<=", ">", "<": the relation measured must satisfy
    tol: float = 0.0
    context: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if not (np.isfinite(self.measured) and np.isfinite(self.bound)):
            return False
        if self.direction == ">=":
            return self.measured >= self.bound - self.tol
        if self.direction == "<=":
            return self.measured <= self.bound + self.tol
        if self.direction == "<":
            return self.measured < self.bound + self.tol
        if self.direction == ">":
            return self.measured > self.bound - self.tol
        raise ValueError(f"unknown direction {self.direction!r}")

    def __str__(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: {self.measured:.6g} {self.direction} {self.bound:.6g} {self.context}"


def _ctx(p, space: SectionSpace, n, **extra) -> dict:
    ctx = {"p": p, "space": space.label, "n": n}
    ctx.update(extra)
    return ctx


def estimate_Cp(p: int, space: SectionSpace, n_list: Sequence[int]) -> tuple[float, float]:
    """``(min_n lambda_min(M), max_n lambda_max(M))`` over the given refinements."""
    if not n_list:
        raise ValueError("n_list must not be empty")
    lo, hi = np.inf, -np.inf
    for n in n_list:
        ev = sym_eigs(assemble_case(p, space, n).M).values
        lo, hi = min(lo, ev[0]), max(hi, ev[-1])
    return float(lo), float(hi)


def estimate_C_p_alpha(p: int, space: SectionSpace, n_list: Sequence[int]) -> float:
    """Largest ``||n K||_inf / n`` over the given refinements (bounds the stiffness row sums)."""
    return float(max(np.abs(n * assemble_case(p, space, n).K).sum(axis=1).max() / n for n in n_list))


def check_mineig(p: int, space: SectionSpace, n: int, C_p: float) -> list[BoundCheck]:
    """Mass lower bound, Poincare pencil bound and stiffness lower bound at one ``n``."""
    if p < 2 or n < 2:
        raise ValueError("the minimal-eigenvalue estimates are stated for p >= 2, n >= 2")
    s = assemble_case(p, space, n)
    ctx = _ctx(p, space, n)
    lam_M = sym_eigs(s.M).min
    lam_K = sym_eigs(s.K).min
    pencil = pencil_min(s.K, s.M)
    poincare = PI_LD**2 / n**2
    return [
        BoundCheck("mineig.mass", float(lam_M), C_p, ">=", 1e-12, ctx),
        BoundCheck("mineig.pencil", float(pencil - poincare), 0.0, ">=", 0.0,
                   dict(ctx, pencil=float(pencil), poincare=float(poincare))),
        BoundCheck("mineig.stiffness", float(lam_K), float(np.pi**2 * C_p / n**2), ">=", 0.0, ctx),
    ]


def check_modulus_chain(p: int, space: SectionSpace, n: int, beta: float, gamma: float, C_p: float) -> list[BoundCheck]:
    """``|lambda_min(A)| >= lambda_min(Re A) >= C_p (pi^2 + gamma) / n``."""
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    s = assemble_case(p, space, n)
    A = s.A(beta, gamma)
    lam = gen_eigs(A).values
    modulus = float(np.min(np.abs(lam)))
    re_min = float(sym_eigs(real_part(A)).min)
    right = C_p * (np.pi**2 + gamma) / n
    ctx = _ctx(p, space, n, beta=beta, gamma=gamma)
    return [
        # equality when beta == 0; the two solvers may then differ by rounding
        BoundCheck("modulus.abs", modulus, re_min, ">=", 1e-10 * abs(re_min), ctx),
        BoundCheck("modulus.real", re_min, right, ">=", 0.0, dict(ctx, slack_ratio=re_min / right)),
    ]


def check_conditioning(p: int, space: SectionSpace, n_list: Sequence[int], beta: float = 1.0,
                       gamma: float = 1.0, max_ratio: float = 2.0) -> tuple[list[float], BoundCheck]:
    """``kappa_2(A) / n^2`` for each ``n`` and the max/min spread of that ratio."""
    scaled = [condition_2(assemble_case(p, space, n).A(beta, gamma)) / n**2 for n in n_list]
    spread = max(scaled) / min(scaled)
    check = BoundCheck("conditioning.spread", spread, max_ratio, "<", 0.0,
                       _ctx(p, space, tuple(n_list), beta=beta, gamma=gamma))
    return scaled, check


@dataclass
class ParterTable:
    p: int
    space: SectionSpace
    rows: list[tuple[int, int, float, float]]  # (j, n, n^2 lambda_j, |n^2 lambda_j / (j pi)^2 - 1|)

    def errors(self, j: int) -> list[float]:
        return [r[3] for r in self.rows if r[0] == j]

    def monotone(self, j: int, slack: float = MONOTONE_SLACK) -> bool:
        return is_decreasing(self.errors(j), slack)


def check_parter(p: int, space: SectionSpace, j_list: Sequence[int], n_list: Sequence[int]) -> ParterTable:
    rows = []
    for n in n_list:
        ev = sym_eigs(assemble_case(p, space, n).K).values
        for j in j_list:
            if j > len(ev):
                raise ValueError(f"j={j} exceeds matrix size {len(ev)}")
            scaled = n**2 * ev[j - 1]
            rows.append((j, n, float(scaled), float(abs(scaled / (j**2 * np.pi**2) - 1.0))))
    rows.sort()
    return ParterTable(p, space, rows)


def is_decreasing(seq, slack: float = MONOTONE_SLACK) -> bool:
    return all(b <= a + slack for a, b in zip(seq, seq[1:]))


def is_increasing(seq, slack: float = MONOTONE_SLACK) -> bool:
    return all(b >= a - slack for a, b in zip(seq, seq[1:]))


def _flag(name: str, ok: bool, measured: float, ctx: dict) -> BoundCheck:
    # flags are encoded as measured in {0, 1} against bound 1
    return BoundCheck(name, 1.0 if ok else 0.0, 1.0, ">=", 0.0, dict(ctx, value=measured))


@dataclass
class SpecdistSeries:
    n_list: list[int]
    B_min: list[float]
    B_max: list[float]
    B_low: dict[int, list[float]]
    C_min: list[float]
    C_max: list[float]
    limits: dict[str, float]


def specdist_series(p: int, space: SectionSpace, n_list: Sequence[int], j_list=(1, 2, 3)) -> SpecdistSeries:
    """Extreme eigenvalues of ``B_n = T(f)`` and ``C_n = T(h)`` along the refinement."""
    n_list = sorted(n_list)
    out = SpecdistSeries(list(n_list), [], [], {j: [] for j in j_list}, [], [], {})
    for n in n_list:
        m = n + p - 2
        f = extract_symbol(p, space, n, "f")
        h = extract_symbol(p, space, n, "h")
        eb = sym_eigs(toeplitz(m, f)).values
        ec = sym_eigs(toeplitz(m, h)).values
        out.B_min.append(float(eb[0]))
        out.B_max.append(float(eb[-1]))
        for j in j_list:
            out.B_low[j].append(float(eb[j - 1] * n**2 / (j**2 * np.pi**2)))
        out.C_min.append(float(ec[0]))
        out.C_max.append(float(ec[-1]))
    poly = SectionSpace.polynomial()
    limit_space = poly if space.mode.value == "nested" else space
    f_lim = extract_symbol(p, limit_space, max(n_list), "f")
    h_lim = extract_symbol(p, limit_space, max(n_list), "h")
    out.limits = {"M_f": symbol_extremes(f_lim)[1], "m_h": symbol_extremes(h_lim)[0]}
    return out


def check_toeplitz_parts(p: int, space: SectionSpace, n_list: Sequence[int], j_list=(1, 2, 3)) -> list[BoundCheck]:
    """Monotonicity and limit flags for the extreme eigenvalues of the Toeplitz parts.

    Nested and polynomial spaces are compared with the polynomial symbols,
    non-nested spaces with their own (n-independent) symbols.
    """
    s = specdist_series(p, space, n_list, j_list)
    nested = space.mode.value == "nested"
    ctx = _ctx(p, space, tuple(s.n_list))
    M_f, m_h = s.limits["M_f"], s.limits["m_h"]
    checks = [
        _flag("specdist.B_min.decreasing", is_decreasing(s.B_min), s.B_min[-1], ctx),
        _flag("specdist.B_min.positive", min(s.B_min) > 0.0, min(s.B_min), ctx),
        _flag("specdist.C_max.increasing", is_increasing(s.C_max), s.C_max[-1], ctx),
        _flag("specdist.C_max.below_one", max(s.C_max) < 1.0 + MONOTONE_SLACK, max(s.C_max), ctx),
    ]
    gap_f = [abs(M_f - v) for v in s.B_max]
    gap_h = [abs(v - m_h) for v in s.C_min]
    if nested:
        checks += [
            _flag("specdist.B_max.to_Mf", is_decreasing(gap_f), gap_f[-1], dict(ctx, M_f=M_f)),
            _flag("specdist.C_min.to_mh", is_decreasing(gap_h), gap_h[-1], dict(ctx, m_h=m_h)),
        ]
        for j in j_list:
            err = [abs(v - 1.0) for v in s.B_low[j]]
            checks.append(_flag(f"specdist.B_low[j={j}].to_one", is_decreasing(err), err[-1], ctx))
    else:
        checks += [
            _flag("specdist.B_max.increasing", is_increasing(s.B_max) and max(s.B_max) < M_f + MONOTONE_SLACK,
                  gap_f[-1], dict(ctx, M_f=M_f)),
            _flag("specdist.C_min.decreasing", is_decreasing(s.C_min) and min(s.C_min) > m_h - MONOTONE_SLACK,
                  gap_h[-1], dict(ctx, m_h=m_h)),
        ]
    return checks


def _szego_symbols(p_list: Sequence[int], spaces: Sequence[SectionSpace], n_ref: int = 16):
    from .toeplitz import SymbolCoeffs

    out = [("f1", SymbolCoeffs.from_half([2.0, -1.0], "f")), ("h1", SymbolCoeffs.from_half([2 / 3, 1 / 6], "h"))]
    for p in p_list:
        for space in spaces:
            for kind in ("f", "h"):
                out.append((f"{kind}{p}:{space.label}", extract_symbol(p, space, n_ref, kind)))
    return out


def check_toeplitz_extremes(p_list: Sequence[int], spaces: Sequence[SectionSpace],
                            m_list: Sequence[int] = (4, 8, 16, 32, 64)) -> list[BoundCheck]:
    """Strict containment in ``(m_f, M_f)`` and strict monotonicity of the extreme eigenvalues."""
    checks = []
    for name, s in _szego_symbols(p_list, spaces):
        lo, hi = symbol_extremes(s)
        mins, maxs = [], []
        for m in m_list:
            ev = sym_eigs(toeplitz(m, s)).values
            mins.append(float(ev[0]))
            maxs.append(float(ev[-1]))
        ctx = {"symbol": name, "m": tuple(m_list), "ess_inf": lo, "ess_sup": hi}
        margin = min(min(mins) - lo, hi - max(maxs))
        checks.append(BoundCheck("toeplitz.szego", margin, 0.0, ">", 0.0, ctx))
        steps = [a - b for a, b in zip(mins, mins[1:])] + [b - a for a, b in zip(maxs, maxs[1:])]
        checks.append(BoundCheck("toeplitz.monotone_extremes", min(steps), 0.0, ">", 0.0, ctx))
    return checks


def check_commutation(seed: int = 0x5EED, trials: int = 4, sizes: Sequence[int] = (1, 2, 3, 4, 5)) -> list[BoundCheck]:
    """``T_m1(f) kron T_m2(h) == T_m1,m2(f x h)`` for tridiagonal ``f``, ``h``."""
    rng = np.random.default_rng(seed)
    pairs = [(np.array([-1.0, 2.0, -1.0]), np.array([1 / 6, 2 / 3, 1 / 6]))]
    for _ in range(trials):
        a, b = rng.integers(-9, 10, size=2), rng.integers(-9, 10, size=2)
        pairs.append((np.array([a[1], a[0], a[1]], float), np.array([b[1], b[0], b[1]], float)))
    checks = []
    for t, (f, h) in enumerate(pairs):
        worst = 0.0
        for m1 in sizes:
            for m2 in sizes:
                lhs = np.kron(toeplitz(m1, f), toeplitz(m2, h))
                rhs = two_level_toeplitz(m1, m2, np.outer(f, h))
                worst = max(worst, float(np.abs(lhs - rhs).max()))
        checks.append(BoundCheck("toeplitz.commutation", worst, 1e-14, "<=", 0.0, {"pair": t}))
    return checks


def random_normal(rng: np.random.Generator, m: int, rank: int | None = None) -> np.ndarray:
    """Complex normal matrix ``Q diag(lambda) Q^*`` with random unitary ``Q``; ``rank`` zeroes eigenvalues."""
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m)))
    lam = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    if rank is not None:
        lam[rank:] = 0.0
    return (Q * lam) @ Q.conj().T


def kronecker_identity_errors(X: np.ndarray, Y: np.ndarray) -> dict[str, float]:
    """Relative deviations for the four tensor-product identities (rank item as an absolute count)."""
    Z = np.kron(X, Y)
    scale = np.linalg.norm(Z, 2) or 1.0
    normal = np.abs(Z @ Z.conj().T - Z.conj().T @ Z).max() / scale**2
    adj = np.abs(Z.conj().T - np.kron(X.conj().T, Y.conj().T)).max() / scale
    prod = np.outer(np.linalg.eigvals(X), np.linalg.eigvals(Y)).ravel()
    ez = np.linalg.eigvals(Z)
    dist = np.abs(ez[:, None] - prod[None, :])
    r, c = linear_sum_assignment(dist)
    spectrum_err = dist[r, c].max() / scale
    rank = abs(np.linalg.matrix_rank(Z) - np.linalg.matrix_rank(X) * np.linalg.matrix_rank(Y))
    n2 = abs(np.linalg.norm(Z, 2) - np.linalg.norm(X, 2) * np.linalg.norm(Y, 2)) / scale
    nuc = abs(np.linalg.norm(Z, "nuc") - np.linalg.norm(X, "nuc") * np.linalg.norm(Y, "nuc"))
    nuc /= np.linalg.norm(Z, "nuc") or 1.0
    return {"normal": max(normal, adj), "spectrum": spectrum_err, "rank": float(rank), "norm": max(n2, nuc)}


def check_kronecker_identities(seed: int = 0x5EED, cases: int = 100, tol: float = 1e-9) -> list[BoundCheck]:
    """Kronecker product identities over seeded random normal matrices of sizes 2-6."""
    rng = np.random.default_rng(seed)
    worst = {"normal": 0.0, "spectrum": 0.0, "rank": 0.0, "norm": 0.0}
    for _ in range(cases):
        m1, m2 = rng.integers(2, 7, size=2)
        r1, r2 = rng.integers(1, m1 + 1), rng.integers(1, m2 + 1)
        errs = kronecker_identity_errors(random_normal(rng, m1, r1), random_normal(rng, m2, r2))
        for k, v in errs.items():
            worst[k] = max(worst[k], v)
    ctx = {"cases": cases, "seed": seed}
    return [BoundCheck(f"toeplitz.kron.{k}", v, 0.0 if k == "rank" else tol, "<=", 0.0, ctx)
            for k, v in worst.items()]
