"""``fpf``: command-line front end.

Exit status: 0 on success, 1 when a check fails, 2 for a bad
configuration, 3 when a work budget is exhausted.
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
import secrets
import sys
from collections import Counter

import click
import numpy as np

from . import __version__
from .acceptance import DEFAULT_SEED, report_json, run_suite
from .errors import BudgetExceededError, ForestError
from .forest import build_forest, export_dot, local_r_ball
from .limit import sample_limit_ball, sample_limit_statistic
from .paths import (b_x_subset, bumped_set, longest_length, longest_path, lub_bound,
                    scan_shortest_positions, shortest_path, simple_upper_bound)
from .permutation import one_line, parse_permutation, separation_word
from .stats import (ALL_STATISTICS, GeometricLaw, PoissonLaw, EmpiricalDistribution,
                    mc_forest_stats, rball_histogram_compare, tv_distance,
                    indicator_tv_experiment)

EXIT_CHECK = 1
EXIT_CONFIG = 2
EXIT_BUDGET = 3
SEED_ENV = "FPF_SEED"
LIMIT_LAWS = {"M": PoissonLaw(1.0), "L": GeometricLaw(math.exp(-1.0)),
              "B": GeometricLaw(math.exp(-1.0))}


def parse_perm_arg(ctx, param, value):
    if value is None:
        return None
    try:
        return parse_permutation(value)
    except ForestError as exc:
        raise click.BadParameter(str(exc)) from None


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env:
        return int(env)
    seed = secrets.randbits(32)
    click.echo(f"seed: {seed}", err=True)
    return seed


def emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def dump(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def pmf_report(statistic: str, dist: EmpiricalDistribution, law=None,
               tol: float | None = None, **extra) -> dict:
    rep = {"statistic": statistic, "trials": dist.total,
           "pmf": [[v, p] for v, p in dist.pmf()],
           "moments": dist.moments(4), "comparisons": []}
    rep.update(extra)
    if law is not None:
        tv = tv_distance(dist, law)
        rep["comparisons"].append({"target": law.name, "tv": tv, "bound": tol,
                                   "pass": None if tol is None else tv <= tol})
    return rep


def pmf_csv(reports: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["statistic", "value", "probability"])
    for rep in reports:
        for v, p in rep["pmf"]:
            w.writerow([rep["statistic"], v, repr(p)])
    return buf.getvalue()


def envelope(command: str, config: dict, **body) -> dict:
    return {"command": command, "config": config, "version": __version__, **body}


class FpfGroup(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except BudgetExceededError as exc:
            click.echo(f"budget exhausted: {exc}", err=True)
            ctx.exit(EXIT_BUDGET)
        except (ForestError, ValueError) as exc:
            click.echo(f"error: {exc}", err=True)
            ctx.exit(EXIT_CONFIG)


@click.group(cls=FpfGroup)
@click.version_option(__version__)
def main():
    """Fixed point forests, their limit tree and the acceptance experiments."""


fmt_option = click.option("--format", "fmt", type=click.Choice(["json", "csv", "dot"]),
                          default="json", show_default=True)
out_option = click.option("--out", type=click.Path(dir_okay=False), default=None,
                          help="Write to this file instead of stdout.")
seed_option = click.option("--seed", type=int, default=None,
                           help=f"Random seed (default: ${SEED_ENV} or a fresh one, echoed).")
workers_option = click.option("--workers", type=click.IntRange(1), default=1, show_default=True,
                              help="Accepted for compatibility; work runs in one process.")


@main.command()
@click.option("--n", type=click.IntRange(1), help="Build all of F_n.")
@click.option("--perm", callback=parse_perm_arg, help="Root of a local ball instead.")
@click.option("--r", type=click.IntRange(0), default=1, show_default=True)
@click.option("--max-n", type=click.IntRange(1), default=9, show_default=True)
@click.option("--verify", "do_verify", is_flag=True, help="Check counts and acyclicity.")
@fmt_option
@out_option
@workers_option
def forest(n, perm, r, max_n, do_verify, fmt, out, workers):
    """Build F_n, or the radius-r ball around --perm, and export it."""
    if (n is None) == (perm is None):
        raise click.UsageError("give exactly one of --n and --perm")
    config = {"n": n, "perm": one_line(perm) if perm else None, "r": r, "format": fmt}
    if perm is not None:
        ball = local_r_ball(perm, r)
        if fmt == "dot":
            return emit(export_dot(ball, "ball"), out)
        if fmt == "csv":
            raise click.UsageError("csv export is for whole forests")
        return emit(dump(envelope("forest", config, vertices=len(ball),
                                  shape=str(ball.shape),
                                  edges=[[one_line(ball.labels[c]), one_line(ball.labels[p])]
                                         for c, p in ball.edges])), out)
    graph = build_forest(n, max_n=max_n)
    if fmt == "dot":
        emit(export_dot(graph), out)
    elif fmt == "csv":
        emit(graph.to_csv(), out)
    else:
        summary = {"vertices": len(graph), "bases": len(graph.bases()),
                   "leaves": len(graph.leaves()), "edges": len(graph.edges()),
                   "acyclic": graph.is_acyclic()}
        body = {"summary": summary}
        if n <= 5:
            body["edge_list"] = [[one_line(graph.vertex(c)), one_line(graph.vertex(p))]
                                 for c, p in graph.edges()]
        emit(dump(envelope("forest", config, **body)), out)
    if do_verify:
        ok = (len(graph) == math.factorial(n) and len(graph.bases()) == math.factorial(n - 1)
              and graph.is_acyclic())
        if not ok:
            click.echo("forest check failed", err=True)
            sys.exit(EXIT_CHECK)


@main.command()
@click.option("--perm", required=True, callback=parse_perm_arg,
              help='One-line notation, e.g. "3 2 4 1 5".')
@click.option("--x", "xs", type=float, multiple=True, default=(1.0, 2.0, 4.0), show_default=True)
@click.option("--budget-steps", type=click.IntRange(1), default=2**26, show_default=True)
@click.option("--full-paths", is_flag=True, help="Include both paths vertex by vertex.")
@out_option
def paths(perm, xs, budget_steps, full_paths, out):
    """Path statistics of one permutation."""
    if any(x <= 0 for x in xs):
        raise click.BadParameter("--x must be positive")
    b = bumped_set(perm)
    short = shortest_path(perm)
    body = {
        "permutation": one_line(perm),
        "separation_word": list(separation_word(perm).entries),
        "B": list(b.values),
        "B_x": {f"{x:g}": list(b_x_subset(perm, x).values) for x in xs},
        "M": len(short),
        "ell": longest_length(perm, budget_steps),
        "lub_bound": lub_bound(perm),
        "simple_upper_bound": {f"{x:g}": simple_upper_bound(perm, x) for x in xs},
        "scan_positions": scan_shortest_positions(perm),
    }
    if full_paths:
        body["shortest_path"] = [one_line(v) for v in short.vertices]
        body["longest_path"] = [one_line(v) for v in longest_path(perm, budget_steps).vertices]
    config = {"perm": one_line(perm), "x": list(xs), "budget_steps": budget_steps}
    emit(dump(envelope("paths", config, **body)), out)


@main.command()
@click.option("--n", type=click.IntRange(1), required=True)
@click.option("--trials", type=click.IntRange(1), default=10000, show_default=True)
@click.option("--x", "xs", type=float, multiple=True, default=(2.0,), show_default=True)
@click.option("--statistic", "stats", type=click.Choice(ALL_STATISTICS), multiple=True,
              help="Statistics to compute (default: all).")
@click.option("--exhaustive", is_flag=True, help="Use every permutation of size n once.")
@click.option("--tol", type=float, default=0.02, show_default=True,
              help="TV tolerance reported against the limit laws.")
@click.option("--budget-steps", type=click.IntRange(1), default=2**26, show_default=True)
@click.option("--budget-nodes", type=click.IntRange(1), default=1000, show_default=True,
              help="Sub-deck budget of the identity-tree solver.")
@click.option("--budget-sort", type=click.IntRange(1), default=10**4, show_default=True,
              help="Sort steps before R_n is censored.")
@seed_option
@workers_option
@fmt_option
@out_option
def mc(n, trials, xs, stats, exhaustive, tol, budget_steps, budget_nodes, budget_sort,
       seed, workers, fmt, out):
    """Monte Carlo (or exhaustive) statistics of uniform permutations."""
    if fmt == "dot":
        raise click.UsageError("dot output is only for forests")
    seed = resolve_seed(seed)
    stats = stats or ALL_STATISTICS
    res = mc_forest_stats(n, trials, np.random.default_rng(seed), x=xs, statistics=stats,
                          exhaustive=exhaustive, seed=seed, budget_steps=budget_steps,
                          budget_sort=budget_sort, budget_member=budget_nodes)
    reports = []
    for name, dist in res.dists.items():
        law = LIMIT_LAWS.get(name)
        extra = {"n": n, "seed": seed}
        if name.startswith("Bx:"):
            extra["x"] = float(name[3:])
        if name in res.censored:
            extra["censored"] = res.censored[name]
        reports.append(pmf_report(name, dist, law, tol, **extra))
    config = {"n": n, "trials": res.trials, "x": list(res.x), "statistics": list(stats),
              "exhaustive": exhaustive, "seed": seed, "workers": workers,
              "budget_steps": budget_steps, "budget_nodes": budget_nodes,
              "budget_sort": budget_sort}
    if fmt == "csv":
        return emit(pmf_csv(reports), out)
    emit(dump(envelope("mc", config, reports=reports)), out)


@main.command()
@click.option("--statistic", type=click.Choice(["nearest", "farthest", "scan", "yule", "ball"]),
              required=True)
@click.option("--trials", "--samples", "trials", type=click.IntRange(1), default=10**5,
              show_default=True)
@click.option("--t", type=click.FloatRange(0), default=1.0, show_default=True)
@click.option("--r", type=click.IntRange(0), default=1, show_default=True)
@click.option("--tol", type=float, default=0.005, show_default=True)
@seed_option
@workers_option
@fmt_option
@out_option
def limit(statistic, trials, t, r, tol, seed, workers, fmt, out):
    """Samplers on the limit tree."""
    if fmt == "dot":
        raise click.UsageError("dot output is only for forests")
    seed = resolve_seed(seed)
    rng = np.random.default_rng(seed)
    config = {"statistic": statistic, "trials": trials, "seed": seed, "workers": workers}
    if statistic == "ball":
        config["r"] = r
        hist = Counter(sample_limit_ball(r, rng).code for _ in range(trials))
        rows = [[code.decode(), c / trials] for code, c in
                sorted(hist.items(), key=lambda kv: (-kv[1], kv[0]))]
        if fmt == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["shape", "probability"])
            w.writerows([[s, repr(p)] for s, p in rows])
            return emit(buf.getvalue(), out)
        return emit(dump(envelope("limit", config, statistic="ball", r=r, trials=trials,
                                  seed=seed, histogram=rows)), out)
    if statistic == "yule":
        config["t"] = t
    samples = sample_limit_statistic(statistic, trials, rng, t=t)
    dist = EmpiricalDistribution.from_samples(samples, seed, statistic)
    law = PoissonLaw(1.0) if statistic == "nearest" else GeometricLaw(
        math.exp(-(t if statistic == "yule" else 1.0)))
    rep = pmf_report(statistic, dist, law, tol, seed=seed)
    if fmt == "csv":
        return emit(pmf_csv([rep]), out)
    emit(dump(envelope("limit", config, reports=[rep])), out)


@main.command()
@click.option("--n", type=click.IntRange(1), required=True)
@click.option("--r", type=click.IntRange(0), default=1, show_default=True)
@click.option("--trials", type=click.IntRange(1), default=10**4, show_default=True)
@click.option("--tol", type=float, default=None, help="Fail (exit 1) if the TV exceeds this.")
@seed_option
@workers_option
@out_option
def compare(n, r, trials, tol, seed, workers, out):
    """Ball-shape histograms of F_n against the limit tree."""
    seed = resolve_seed(seed)
    tv, finite, lim = rball_histogram_compare(n, r, trials, np.random.default_rng(seed))
    config = {"n": n, "r": r, "trials": trials, "seed": seed, "workers": workers}
    ok = None if tol is None else tv <= tol

    def rows(h):
        return [[k.decode(), c] for k, c in sorted(h.items(), key=lambda kv: (-kv[1], kv[0]))]
    emit(dump(envelope("compare", config, statistic="ball_shape", n=n, r=r, trials=trials,
                       seed=seed, comparisons=[{"target": "limit tree", "tv": tv,
                                                "bound": tol, "pass": ok}],
                       finite=rows(finite), limit=rows(lim))), out)
    if ok is False:
        sys.exit(EXIT_CHECK)


@main.command()
@click.option("--n", type=click.IntRange(2), required=True)
@click.option("--r", type=click.IntRange(1), default=1, show_default=True)
@click.option("--a", "cond", default=None, help="Conditioning values pi(1..r) (default 1..r).")
@click.option("--budget-nodes", type=click.IntRange(1), default=math.factorial(8),
              show_default=True, help="Largest number of permutations to enumerate.")
@out_option
def tv(n, r, cond, budget_nodes, out):
    """Exact TV between separation indicators and independent Poissons."""
    a = tuple(range(1, r + 1)) if cond is None else tuple(
        int(v) for v in cond.replace(",", " ").split())
    exact, bound = indicator_tv_experiment(n, r, a, budget_nodes)
    config = {"n": n, "r": r, "a": list(a)}
    emit(dump(envelope("tv", config, exact_tv=exact, bound=bound,
                       comparisons=[{"target": "independent Poi(1/n)", "tv": exact,
                                     "bound": bound, "pass": exact <= min(1.0, bound)}])), out)


@main.command()
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--scale", type=click.Choice(["full", "quick"]), default="full", show_default=True)
@click.option("--criterion", "only", type=click.IntRange(1, 12), multiple=True,
              help="Run only these criteria.")
@workers_option
@out_option
def verify(seed, scale, only, workers, out):
    """Run the acceptance suite; exit 1 if any check fails."""
    def progress(check):
        mark = "PASS" if check.passed else "FAIL"
        click.echo(f"[{mark}] criterion {check.criterion}: {check.name} "
                   f"({check.seconds:.1f}s)", err=True)
    report = run_suite(seed, scale, only=tuple(only) or None, progress=progress)
    emit(report_json(report), out)
    if not report["passed"]:
        sys.exit(EXIT_CHECK)


if __name__ == "__main__":
    main()
