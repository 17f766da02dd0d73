"""Configuration-driven verification runner producing report.csv, summary.json and per-case CSVs."""

from __future__ import annotations

import configparser
import csv
import io
import json
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import export
from .assembly import assemble_2d_direct, assemble_2d_tensor, assemble_case, decompose_2d
from .gbspline import PhaseConstraintError, SectionSpace, ratio_bounds
from .spectral import (
    BoundCheck,
    check_commutation,
    check_conditioning,
    check_kronecker_identities,
    check_mineig,
    check_modulus_chain,
    check_parter,
    check_toeplitz_extremes,
    check_toeplitz_parts,
    estimate_Cp,
    is_decreasing,
    sym_eigs,
)
from .toeplitz import (
    TwoLevelSymbol,
    distribution_distance,
    extract_symbol,
    polynomial_limit,
    sample_symbol,
    symbol_extremes,
    toeplitz,
)

CHECKS = ("ratio-bounds", "mineig", "modulus", "conditioning", "parter", "toeplitz", "specdist",
          "2d-assembly", "2d-decomposition", "2d-distribution")

REPORT_HEADER = ["check", "p", "space", "alpha", "mode", "n", "beta", "gamma", "measured", "bound", "pass", "ms"]

DEFAULT_SPACES = ("poly", "hyp:1:nonnested", "trig:1:nested", "trig:1:nonnested")

DEFAULT_TOL = {
    "parter": 0.05,
    "cond_ratio": 2.0,
    "assembly": 1e-12,
    "kron": 1e-9,
    "norm_ratio": 1.1,
    "outlier_frac": 0.1,
    "outlier_scale": 0.2,
    "p1_limit": 0.02,
}


class ConfigError(ValueError):
    pass


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v, 0) for v in _items(text))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in _items(text))


def _items(text: str) -> list[str]:
    return [v.strip() for v in str(text).replace(";", ",").split(",") if v.strip()]


def _pairs(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for item in _items(text):
        a, sep, b = item.lower().partition("x")
        if not sep:
            raise ConfigError(f"expected AxB, got {item!r}")
        out.append((int(a), int(b)))
    return tuple(out)


@dataclass(frozen=True)
class ExperimentConfig:
    p_list: tuple[int, ...] = (2, 3)
    n_list: tuple[int, ...] = (16, 32, 64)
    spaces: tuple[SectionSpace, ...] = tuple(SectionSpace.parse(s) for s in DEFAULT_SPACES)
    beta: tuple[float, ...] = (0.0, 1.0)
    gamma: tuple[float, ...] = (0.0, 1.0)
    nu: tuple[int, ...] = (1, 2)
    ratio_n_list: tuple[int, ...] = (16, 32, 64)
    cond_n_list: tuple[int, ...] = (16, 32, 64, 128)
    specdist_n_list: tuple[int, ...] = (8, 16, 32, 64)
    parter_j: tuple[int, ...] = (1, 2, 3)
    pairs_2d: tuple[tuple[int, int], ...] = ((1, 1), (2, 2), (1, 2))
    assembly_sizes: tuple[tuple[int, int], ...] = ((6, 6), (6, 12))
    decomp_n1_list: tuple[int, ...] = (8, 16, 32)
    dist_n1_list: tuple[int, ...] = (8, 16, 24)
    checks: tuple[str, ...] = CHECKS
    out: str = "gbspectra_out"
    seed: int = 0x5EED
    property_cases: int = 100
    tol: dict = field(default_factory=lambda: dict(DEFAULT_TOL))

    _PARSERS = {
        "p_list": _ints, "n_list": _ints, "beta": _floats, "gamma": _floats, "nu": _ints,
        "ratio_n_list": _ints, "cond_n_list": _ints, "specdist_n_list": _ints, "parter_j": _ints,
        "pairs_2d": _pairs, "assembly_sizes": _pairs, "decomp_n1_list": _ints, "dist_n1_list": _ints,
        "spaces": lambda t: tuple(SectionSpace.parse(s) for s in _items(t)),
        "checks": lambda t: tuple(_items(t)),
        "out": str, "seed": lambda t: int(t, 0), "property_cases": lambda t: int(t, 0),
    }

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> ExperimentConfig:
        kw, tol = {}, dict(DEFAULT_TOL)
        for key, raw in values.items():
            if key.startswith("tol."):
                name = key[4:]
                if name not in DEFAULT_TOL:
                    raise ConfigError(f"unknown tolerance {key!r}; known: {', '.join(sorted(DEFAULT_TOL))}")
                tol[name] = float(raw)
                continue
            if key not in cls._PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                kw[key] = cls._PARSERS[key](raw)
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc
        return cls(tol=tol, **kw)

    @classmethod
    def from_file(cls, path) -> ExperimentConfig:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), delimiters=("=", ":"))
        parser.optionxform = str
        text = Path(path).read_text()
        try:
            parser.read_string("[run]\n" + text)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from exc
        return cls.from_mapping(dict(parser["run"]))

    def override(self, **kw) -> ExperimentConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def space_ns(self) -> list[tuple[SectionSpace, int, str]]:
        """Every (space, element count) the selected checks will touch."""
        want = set(self.checks)
        out = []

        def add(check, ns):
            if check in want:
                out.extend((s, n, check) for s in self.spaces for n in ns)

        add("ratio-bounds", self.ratio_n_list)
        add("mineig", self.n_list)
        add("modulus", self.n_list)
        add("parter", self.n_list)
        add("conditioning", self.cond_n_list)
        add("specdist", self.specdist_n_list)
        add("toeplitz", (16,))
        add("2d-assembly", sorted({n for pair in self.assembly_sizes for n in pair}))
        add("2d-decomposition", sorted({k * n for n in self.decomp_n1_list for k in (1, *self.nu)}))
        add("2d-distribution", sorted({k * n for n in self.dist_n1_list for k in (1, *self.nu)}))
        return out

    def validate(self) -> None:
        bad = [c for c in self.checks if c not in CHECKS]
        if bad:
            raise ConfigError(f"unknown check(s) {', '.join(bad)}; known: {', '.join(CHECKS)}")
        if not self.checks:
            raise ConfigError("no checks selected")
        if any(p < 1 for p in self.p_list) or not self.p_list:
            raise ConfigError("p_list must be a nonempty list of degrees >= 1")
        if "mineig" in self.checks and min(self.p_list) < 2:
            raise ConfigError("mineig needs p >= 2")
        for name in ("n_list", "ratio_n_list", "cond_n_list", "specdist_n_list", "decomp_n1_list", "dist_n1_list"):
            vals = getattr(self, name)
            if not vals or min(vals) < 2:
                raise ConfigError(f"{name} must be a nonempty list of element counts >= 2")
        if any(g < 0 for g in self.gamma):
            raise ConfigError("gamma must be >= 0")
        if any(v < 1 for v in self.nu):
            raise ConfigError("nu must be a list of positive integers (n2 = nu * n1)")
        if any(j < 1 for j in self.parter_j):
            raise ConfigError("parter_j entries must be >= 1")
        for space, n, check in self.space_ns():
            try:
                space.check(n)
            except PhaseConstraintError as exc:
                raise ConfigError(f"{check}: {exc}") from exc


@dataclass
class ReportRow:
    check: str
    p: str
    space: str
    alpha: str
    mode: str
    n: str
    beta: str
    gamma: str
    measured: float
    bound: float
    passed: bool
    ms: float = 0.0

    def key(self):
        def nums(text):
            return tuple(int(v) for v in text.replace("x", "-").split("-") if v.isdigit())
        return (self.check, nums(self.p), self.space, self.alpha, self.mode, nums(self.n), self.beta, self.gamma,
                self.measured)

    def cells(self, timings: bool) -> list[str]:
        ms = f"{self.ms:.1f}" if timings else "0"
        return [self.check, self.p, self.space, self.alpha, self.mode, self.n, self.beta, self.gamma,
                f"{self.measured:.17g}", f"{self.bound:.17g}", "1" if self.passed else "0", ms]


def _num(x) -> str:
    if x is None or x == "":
        return ""
    return f"{float(x):g}"


def _case(space: SectionSpace | None) -> tuple[str, str, str]:
    if space is None:
        return "", "", ""
    if space.alpha is None:
        return space.kind.value, "", ""
    return space.kind.value, _num(space.alpha), space.mode.value


def _row(bc: BoundCheck, p="", space=None, n="", beta="", gamma="") -> ReportRow:
    kind, alpha, mode = _case(space)
    n = "-".join(str(v) for v in n) if isinstance(n, tuple) else str(n)
    return ReportRow(bc.name, str(p), kind, alpha, mode, n, _num(beta), _num(gamma),
                     float(bc.measured), float(bc.bound), bool(bc.passed))


def _slug(space: SectionSpace) -> str:
    return space.label.replace(":", "-")


@dataclass
class TaskResult:
    rows: list[ReportRow]
    files: dict[str, str] = field(default_factory=dict)
    ms: float = 0.0


# --- per-check tasks: (config, p, space) -> TaskResult ----------------------------------------


def _task_ratio(cfg: ExperimentConfig, p: int, space: SectionSpace) -> TaskResult:
    rows, dev = [], []
    for n in cfg.ratio_n_list:
        lo, hi = ratio_bounds(p, space, n)
        dev.append(max(1.0 - lo, hi - 1.0))
        rows += [
            _row(BoundCheck("ratio-bounds.positive", lo, 0.0, ">"), p, space, n),
            _row(BoundCheck("ratio-bounds.low", lo, 1.0, "<=", 1e-12), p, space, n),
            _row(BoundCheck("ratio-bounds.high", hi, 1.0, ">=", 1e-12), p, space, n),
        ]
    if space.mode.value == "nested" and space.alpha is not None:
        rows.append(_row(BoundCheck("ratio-bounds.nested_limit", float(is_decreasing(dev)), 1.0, ">="),
                         p, space, tuple(cfg.ratio_n_list)))
    return TaskResult(rows)


def _task_mineig(cfg: ExperimentConfig, p: int, space: SectionSpace) -> TaskResult:
    C_p, _ = estimate_Cp(p, space, cfg.n_list)
    rows, files = [], {}
    for n in cfg.n_list:
        rows += [_row(bc, p, space, n) for bc in check_mineig(p, space, n, C_p)]
        s = assemble_case(p, space, n)
        for name, mat in (("M", s.M), ("K", s.K)):
            files[f"eigs/{_slug(space)}_p{p}_n{n}_{name}.csv"] = export.eigs_to_csv(sym_eigs(mat).values)
    return TaskResult(rows, files)


def _task_modulus(cfg: ExperimentConfig, p: int, space: SectionSpace) -> TaskResult:
    C_p, _ = estimate_Cp(p, space, cfg.n_list)
    rows = []
    for n in cfg.n_list:
        for beta in cfg.beta:
            for gamma in cfg.gamma:
                rows += [_row(bc, p, space, n, beta, gamma) for bc in check_modulus_chain(p, space, n, beta, gamma, C_p)]
    return TaskResult(rows)


def _task_conditioning(cfg: ExperimentConfig, p: int, space: SectionSpace) -> TaskResult:
    beta, gamma = 1.0, 1.0
    _, bc = check_conditioning(p, space, cfg.cond_n_list, beta, gamma, cfg.tol["cond_ratio"])
    return TaskResult([_row(bc, p, space, tuple(cfg.cond_n_list), beta, gamma)])


def _task_parter(cfg: ExperimentConfig, p: int, space: SectionSpace) -> TaskResult:
    table = check_parter(p, space, cfg.parter_j, cfg.n_list)
    rows = []
    n_max = max(cfg.n_list)
    for j in cfg.parter_j:
        errs = table.errors(j)
        rows.append(_row(BoundCheck(f"parter.error[j={j}]", errs[-1], cfg.tol["parter"], "<"), p, space, n_max))
        rows.append(_row(BoundCheck(f"parter.monotone[j={j}]", float(table.monotone(j)), 1.0, ">="),
                         p, space, tuple(sorted(cfg.n_list))))
    return TaskResult(rows)


def _task_toeplitz(cfg: ExperimentConfig, p: int, space: SectionSpace) -> TaskResult:
    rows = [_row(bc, p, space, 16) for bc in check_toeplitz_extremes((p,), (space,))]
    for n in cfg.n_list:
        if n < 3 * p + 1:
            continue
        s = assemble_case(p, space, n)
        for kind, mat in (("f", s.K), ("h", s.M)):
            sym = extract_symbol(p, space, n, kind)
            rem = mat - toeplitz(s.size, sym)
            sv = np.linalg.svd(rem, compute_uv=False)
            ref = max(sv[0] if sv.size else 0.0, float(np.linalg.norm(mat, 2)))
            rank = int(np.sum(sv > 1e-10 * ref))
            rows.append(_row(BoundCheck(f"toeplitz.remainder_rank.{kind}", rank, 4 * p - 2, "<="), p, space, n))
    return TaskResult(rows)


def _task_toeplitz_global(cfg: ExperimentConfig) -> TaskResult:
    checks = check_toeplitz_extremes((), ()) + check_commutation(cfg.seed)
    checks += check_kronecker_identities(cfg.seed, cfg.property_cases, cfg.tol["kron"])
    return TaskResult([_row(bc) for bc in checks])


def _task_specdist(cfg: ExperimentConfig, p: int, space: SectionSpace) -> TaskResult:
    rows = [_row(bc, p, space, tuple(sorted(cfg.specdist_n_list))) for bc in
            check_toeplitz_parts(p, space, cfg.specdist_n_list)]
    files = {}
    for n in cfg.specdist_n_list:
        if space.alpha is not None and n < space.min_elements:
            continue
        for kind in ("f", "h"):
            sym = extract_symbol(p, space, n, kind)
            files[f"symbols/{_slug(space)}_p{p}_n{n}_{kind}.csv"] = export.symbol_to_csv(sym)
    return TaskResult(rows, files)


def _task_specdist_p1(cfg: ExperimentConfig) -> TaskResult:
    poly = SectionSpace.polynomial()
    n = max(cfg.specdist_n_list)
    f1, h1 = extract_symbol(1, poly, n, "f"), extract_symbol(1, poly, n, "h")
    M_f, m_h = symbol_extremes(f1)[1], symbol_extremes(h1)[0]
    c_max = sym_eigs(toeplitz(n - 1, h1)).max
    rows = [
        _row(BoundCheck("specdist.p1.M_f", abs(M_f - 4.0), 1e-10, "<="), 1, poly, n),
        _row(BoundCheck("specdist.p1.m_h", abs(m_h - 1.0 / 3.0), 1e-10, "<="), 1, poly, n),
        _row(BoundCheck("specdist.p1.C_max", abs(1.0 - c_max), cfg.tol["p1_limit"], "<="), 1, poly, n),
    ]
    rows += [_row(bc, 1, poly, tuple(sorted(cfg.specdist_n_list)))
             for bc in check_toeplitz_parts(1, poly, cfg.specdist_n_list)]
    return TaskResult(rows)


def _task_2d_assembly(cfg: ExperimentConfig, space: SectionSpace) -> TaskResult:
    rows = []
    beta1 = beta2 = max(cfg.beta)
    gamma = max(cfg.gamma)
    for p1, p2 in cfg.pairs_2d:
        for n1, n2 in cfg.assembly_sizes:
            A = assemble_2d_tensor(n1, p1, space, n2, p2, space, beta1, beta2, gamma).A
            D = assemble_2d_direct(n1, p1, space, n2, p2, space, beta1, beta2, gamma)
            err = float(np.linalg.norm(A - D) / np.linalg.norm(D))
            rows.append(_row(BoundCheck("2d-assembly.oracle", err, cfg.tol["assembly"], "<="),
                             f"{p1}x{p2}", space, f"{n1}x{n2}", beta1, gamma))
    return TaskResult(rows)


def norm_ratios(norms, floor: float = 1e-12) -> list[float]:
    """Consecutive ratios; pairs that are both at rounding level count as 1."""
    out = []
    for a, b in zip(norms, norms[1:]):
        out.append(1.0 if max(a, b) <= floor else (b / a if a > 0 else np.inf))
    return out


def _task_2d_decomposition(cfg: ExperimentConfig, space: SectionSpace) -> TaskResult:
    rows = []
    for p1, p2 in cfg.pairs_2d:
        for nu in cfg.nu:
            norms = []
            ns = [n for n in sorted(cfg.decomp_n1_list) if n >= 3 * p1 + 1 and nu * n >= 3 * p2 + 1]
            for n1 in ns:
                d = decompose_2d(assemble_2d_tensor(n1, p1, space, nu * n1, p2, space))
                norms.append(d.norm)
                rows.append(_row(BoundCheck("2d-decomposition.rank", d.rank, d.rank_bound, "<="),
                                 f"{p1}x{p2}", space, f"{n1}x{nu * n1}"))
            for (n_a, n_b), r in zip(zip(ns, ns[1:]), norm_ratios(norms)):
                rows.append(_row(BoundCheck("2d-decomposition.norm_ratio", r, cfg.tol["norm_ratio"], "<"),
                                 f"{p1}x{p2}", space, f"{n_a}x{nu * n_a}-{n_b}x{nu * n_b}"))
    return TaskResult(rows)


def limit_symbol(p1: int, p2: int, space: SectionSpace, n1: int, n2: int, nu: float) -> TwoLevelSymbol:
    """Two-level distribution symbol: polynomial factors for nested spaces, the space's own otherwise."""
    lim = SectionSpace.polynomial() if polynomial_limit(space) else space
    return TwoLevelSymbol(extract_symbol(p1, lim, n1, "f"), extract_symbol(p1, lim, n1, "h"),
                          extract_symbol(p2, lim, n2, "f"), extract_symbol(p2, lim, n2, "h"), nu)


def distribution_series(p1: int, p2: int, space: SectionSpace, nu: int, n1_list, gamma: float = 0.0,
                        outlier_scale: float = 0.2):
    """``(n1, dim, mean_abs, outliers)`` for ``Re A_2d`` against its symbol samples."""
    out = []
    for n1 in sorted(n1_list):
        n2 = nu * n1
        g = assemble_2d_tensor(n1, p1, space, n2, p2, space, 0.0, 0.0, gamma)
        sym = limit_symbol(p1, p2, space, n1, n2, nu)
        ev = sym_eigs(g.real_part()).values
        samples = sample_symbol(sym, (g.x.size, g.y.size))
        dist = distribution_distance(ev, samples, outlier_scale * sym.extremes()[1])
        out.append((n1, len(ev), dist.mean_abs, dist.outlier_count))
    return out


def _task_2d_distribution(cfg: ExperimentConfig, space: SectionSpace) -> TaskResult:
    rows = []
    gamma = max(cfg.gamma)
    for p1, p2 in cfg.pairs_2d:
        for nu in cfg.nu:
            series = distribution_series(p1, p2, space, nu, cfg.dist_n1_list, gamma, cfg.tol["outlier_scale"])
            means = [s[2] for s in series]
            label = "-".join(f"{n}x{nu * n}" for n, *_ in series)
            steps = [b - a for a, b in zip(means, means[1:])]
            rows.append(_row(BoundCheck("2d-distribution.mean_decreasing", max(steps), 0.0, "<"),
                             f"{p1}x{p2}", space, label, "", gamma))
            n1, dim, _, outliers = series[-1]
            rows.append(_row(BoundCheck("2d-distribution.outliers", outliers, cfg.tol["outlier_frac"] * dim, "<"),
                             f"{p1}x{p2}", space, f"{n1}x{nu * n1}", "", gamma))
    return TaskResult(rows)


_PER_SPACE = {
    "ratio-bounds": _task_ratio, "mineig": _task_mineig, "modulus": _task_modulus,
    "conditioning": _task_conditioning, "parter": _task_parter, "toeplitz": _task_toeplitz,
    "specdist": _task_specdist,
}
_PER_2D = {
    "2d-assembly": _task_2d_assembly, "2d-decomposition": _task_2d_decomposition,
    "2d-distribution": _task_2d_distribution,
}
_GLOBAL = {"toeplitz": _task_toeplitz_global, "specdist": _task_specdist_p1}


def plan(cfg: ExperimentConfig) -> list[tuple[str, tuple]]:
    tasks = []
    for check in CHECKS:
        if check not in cfg.checks:
            continue
        if check in _GLOBAL:
            tasks.append((check, ("global",)))
        if check in _PER_SPACE:
            tasks += [(check, ("space", p, s)) for p in cfg.p_list for s in cfg.spaces]
        if check in _PER_2D:
            tasks += [(check, ("2d", s)) for s in cfg.spaces]
    return tasks


def _execute(cfg: ExperimentConfig, task: tuple[str, tuple]) -> TaskResult:
    check, (scope, *args) = task
    fn = {"global": _GLOBAL, "space": _PER_SPACE, "2d": _PER_2D}[scope][check]
    t0 = time.perf_counter()
    res = fn(cfg, *args)
    res.ms = 1e3 * (time.perf_counter() - t0)
    return res


def _group(name: str) -> str:
    return name.split(".", 1)[0]


@dataclass
class RunResult:
    rows: list[ReportRow]
    files: dict[str, str]
    summary: dict

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows)


def run(cfg: ExperimentConfig, jobs: int = 1, timings: bool = False, write: bool = True) -> RunResult:
    """Execute every selected check; writes report.csv, summary.json and per-case CSVs under ``cfg.out``."""
    cfg.validate()
    tasks = plan(cfg)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_execute, [cfg] * len(tasks), tasks))
    else:
        results = [_execute(cfg, t) for t in tasks]

    rows, files = [], {}
    for res in results:
        for r in res.rows:
            r.ms = res.ms / max(len(res.rows), 1)
        rows += res.rows
        files.update(res.files)
    rows.sort(key=ReportRow.key)

    per = {}
    for r in rows:
        g = per.setdefault(_group(r.check), Counter())
        g["rows"] += 1
        g["passed" if r.passed else "failed"] += 1
    summary = {
        "total": len(rows),
        "passed": sum(r.passed for r in rows),
        "failed": sum(not r.passed for r in rows),
        "checks": {k: {"rows": v["rows"], "passed": v["passed"], "failed": v["failed"]} for k, v in sorted(per.items())},
        "seed": cfg.seed,
    }

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in rows:
        w.writerow(r.cells(timings))
    files["report.csv"] = buf.getvalue()
    files["summary.json"] = json.dumps(summary, indent=2, sort_keys=True) + "\n"

    if write:
        out = Path(cfg.out)
        for rel, text in sorted(files.items()):
            path = out / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
    return RunResult(rows, files, summary)


def config_fields() -> list[str]:
    return [f.name for f in fields(ExperimentConfig) if not f.name.startswith("_")]
