"""Command-line entry points: lsx check|run|dist|trace|measure-check FILE, lsx harness run."""

from __future__ import annotations

import random
import sys
from collections import Counter

import click

from .bases import BasisError, scoped_registry
from .evaluator import FuelExhausted, distribution, normalize
from .measure import check_trace
from .parser import ParseError, parse
from .syntax import Scale, Term, rebuild, show, show_type
from .typecheck import TypingError, infer

EXIT_OK, EXIT_PARSE, EXIT_TYPE, EXIT_FUEL = 0, 1, 2, 3


def _load(path: str):
    """Parse and typecheck FILE; exits with the matching code on failure."""
    try:
        with open(path, encoding="utf-8") as fh:
            src = fh.read()
    except OSError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_PARSE)
    try:
        sf = parse(src)
    except ParseError as e:
        click.echo(f"{path}:{e.line}:{e.col}: parse error: {e.msg}", err=True)
        sys.exit(EXIT_PARSE)
    except BasisError as e:
        click.echo(f"{path}: basis error: {e}", err=True)
        sys.exit(EXIT_PARSE)
    if sf.main is None:
        click.echo(f"{path}: no main term", err=True)
        sys.exit(EXIT_PARSE)
    try:
        ty = infer(None, sf.main).type
    except TypingError as e:
        click.echo(f"{path}: type error: {e}", err=True)
        sys.exit(EXIT_TYPE)
    return sf.main, ty


def _fuel_guard(fn):
    try:
        return fn()
    except FuelExhausted as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(EXIT_FUEL)


def _display(t: Term, digits: int = 10) -> str:
    """Print with scalars rounded, so float drift does not leak into reports."""

    def go(u: Term) -> Term:
        if isinstance(u, Scale):
            s = complex(round(u.s.real, digits), round(u.s.imag, digits))
            return Scale(s, go(u.body))
        return rebuild(u, go)

    return show(go(t))


seed_opt = click.option("--seed", type=int, default=0, show_default=True)
fuel_opt = click.option("--fuel", type=int, default=10_000, show_default=True)


@click.group()
def main():
    """Typed quantum lambda-calculus toolkit."""


@main.command()
@click.argument("file", type=click.Path())
def check(file):
    """Print the inferred type of the main term."""
    with scoped_registry():
        _, ty = _load(file)
        click.echo(show_type(ty))


@main.command()
@click.argument("file", type=click.Path())
@seed_opt
@fuel_opt
@click.option("--samples", type=int, default=1, show_default=True,
              help="Repeat the run and print outcome counts.")
def run(file, seed, fuel, samples):
    """Reduce to a normal form, sampling measurements with the seed."""
    with scoped_registry():
        t, _ = _load(file)
        rng = random.Random(seed)
        if samples <= 1:
            trace = _fuel_guard(lambda: normalize(t, rng, fuel))
            click.echo(_display(trace.final))
            return
        counts: Counter = Counter()
        for _ in range(samples):
            counts[_display(_fuel_guard(lambda: normalize(t, rng, fuel)).final)] += 1
        for term, n in sorted(counts.items()):
            click.echo(f"{term} {n / samples:.6g}")


@main.command()
@click.argument("file", type=click.Path())
@fuel_opt
def dist(file, fuel):
    """Print the exact outcome distribution, one `<term> <probability>` per line."""
    with scoped_registry():
        t, _ = _load(file)
        d = _fuel_guard(lambda: distribution(t, fuel))
        for term, p in d.outcomes:
            click.echo(f"{_display(term)} {p:.12g}")


@main.command()
@click.argument("file", type=click.Path())
@seed_opt
@fuel_opt
def trace(file, seed, fuel):
    """Print every reduction step of one seeded run."""
    with scoped_registry():
        t, _ = _load(file)
        tr = _fuel_guard(lambda: normalize(t, random.Random(seed), fuel))
        for s in tr.steps:
            click.echo(str(s))
        click.echo(f"final {show(tr.final)}")


@main.command("measure-check")
@click.argument("file", type=click.Path())
@seed_opt
@fuel_opt
def measure_check(file, seed, fuel):
    """Check that every non-beta step of a seeded run lowers the termination measure."""
    with scoped_registry():
        t, _ = _load(file)
        tr = _fuel_guard(lambda: normalize(t, random.Random(seed), fuel))
        report = check_trace(tr)
        for e in report.entries:
            tag = "OK" if e.ok else "VIOLATION"
            click.echo(f"{e.rule} {e.size_before} -> {e.size_after} {tag}")
        click.echo(f"violations {len(report.violations)}")


@main.group()
def harness():
    """Random well-typed terms versus the metatheory."""


@harness.command("run")
@click.option("--corpus", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--depth", type=int, default=5, show_default=True)
@click.option("--arity", type=int, default=3, show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--log", "log_path", type=click.Path(), default=None,
              help="Write violations as JSON lines.")
def harness_run(corpus, seed, depth, arity, workers, log_path):
    from .harness import GenConfig, run_sharded, write_log

    with scoped_registry():
        cfg = GenConfig(max_depth=depth, max_arity=arity, seed=seed)
        rep = run_sharded(corpus, cfg, workers)
    click.echo(rep.summary())
    if log_path:
        write_log(rep, log_path)
    sys.exit(EXIT_OK if rep.ok else 4)


if __name__ == "__main__":
    main()
