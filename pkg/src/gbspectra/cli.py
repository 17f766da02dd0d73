"""Command line entry point: ``gbspectra run | symbol | assemble``."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from . import export
from .assembly import assemble_case
from .gbspline import PhaseConstraintError, SectionSpace
from .runner import CHECKS, ConfigError, ExperimentConfig, run
from .toeplitz import extract_symbol


def _int_list(text):
    if text is None:
        return None
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise click.BadParameter(f"expected comma-separated integers, got {text!r}") from exc


def _space(text: str) -> SectionSpace:
    try:
        return SectionSpace.parse(text)
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc


@click.group()
@click.version_option(package_name="artifact")
def main():
    """Spectral verification toolkit for GB-spline Galerkin matrices."""


@main.command("run")
@click.argument("config", required=False, type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--jobs", default=1, show_default=True, type=click.IntRange(min=1), help="Worker processes.")
@click.option("--seed", default=None, help="Seed for randomized property cases (default 0x5EED).")
@click.option("--p", "p_list", default=None, help="Degrees, e.g. 2,3.")
@click.option("--n", "n_list", default=None, help="Element counts, e.g. 16,32,64.")
@click.option("--space", "spaces", multiple=True, help="Section space, e.g. poly or trig:1.0:nested (repeatable).")
@click.option("--checks", default=None, help=f"Comma-separated subset of: {', '.join(CHECKS)}.")
@click.option("--out", default=None, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--timings", is_flag=True, help="Fill the ms column (makes report.csv run-dependent).")
def run_cmd(config, jobs, seed, p_list, n_list, spaces, checks, out, timings):
    """Run the verification matrix and write report.csv and summary.json."""
    try:
        cfg = ExperimentConfig.from_file(config) if config else ExperimentConfig()
        cfg = cfg.override(
            p_list=_int_list(p_list),
            n_list=_int_list(n_list),
            spaces=tuple(_space(s) for s in spaces) or None,
            checks=tuple(c.strip() for c in checks.split(",") if c.strip()) if checks else None,
            out=out,
            seed=int(seed, 0) if seed is not None else None,
        )
        cfg.validate()
    except (ConfigError, PhaseConstraintError, ValueError) as exc:
        raise click.UsageError(f"invalid configuration: {exc}") from exc

    result = run(cfg, jobs=jobs, timings=timings)
    for name, counts in result.summary["checks"].items():
        click.echo(f"{name:<18} {counts['passed']:>5}/{counts['rows']:<5} passed")
    click.echo(f"report written to {Path(cfg.out) / 'report.csv'}")
    if not result.ok:
        for r in result.rows:
            if not r.passed:
                click.echo(f"FAIL {r.check} p={r.p} space={r.space}:{r.alpha}:{r.mode} n={r.n} "
                           f"measured={r.measured:.6g} bound={r.bound:.6g}", err=True)
        sys.exit(1)


@main.command()
@click.option("--p", "p", required=True, type=click.IntRange(min=1))
@click.option("--space", "space", default="poly", show_default=True)
@click.option("--n", "n", required=True, type=click.IntRange(min=2))
@click.option("--kind", type=click.Choice(["f", "h"]), default="f", show_default=True)
@click.option("--samples", default=512, show_default=True, type=click.IntRange(min=1))
def symbol(p, space, n, kind, samples):
    """Print extracted symbol coefficients (k, c_k) followed by samples (theta, value).

    Samples use the periodic grid -pi + 2 pi j / N, which contains theta = 0.
    """
    try:
        sym = extract_symbol(p, _space(space), n, kind)
    except PhaseConstraintError as exc:
        raise click.UsageError(str(exc)) from exc
    click.echo(export.symbol_to_csv(sym), nl=False)
    click.echo(export.samples_to_csv(sym, samples, grid="periodic"), nl=False)


@main.command()
@click.option("--p", "p", required=True, type=click.IntRange(min=1))
@click.option("--n", "n", required=True, type=click.IntRange(min=2))
@click.option("--space", "space", default="poly", show_default=True)
@click.option("--matrix", "which", type=click.Choice(["A", "M", "K", "H"]), default="A", show_default=True)
@click.option("--beta", default=0.0, show_default=True, type=float)
@click.option("--gamma", default=0.0, show_default=True, type=click.FloatRange(min=0.0))
@click.option("--banded", is_flag=True, help="Write the banded text format instead of dense CSV.")
@click.option("--out", required=True, type=click.Path(dir_okay=False, path_type=Path))
def assemble(p, n, space, which, beta, gamma, banded, out):
    """Assemble a 1D Galerkin matrix and write it to a file."""
    try:
        s = assemble_case(p, _space(space), n)
    except PhaseConstraintError as exc:
        raise click.UsageError(str(exc)) from exc
    X = s.A(beta, gamma) if which == "A" else getattr(s, which)
    (export.matrix_to_banded if banded else export.matrix_to_csv)(X, out)
    click.echo(f"{which} ({X.shape[0]}x{X.shape[0]}) written to {out}")


if __name__ == "__main__":
    main()
