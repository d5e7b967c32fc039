"""Command-line surface: pool building, scripted experiments, theory
checks, the live session service, and plotting."""

from __future__ import annotations

import itertools
import os

import click
import numpy as np

from .evaluation import (
    BoundViolated,
    LemmaViolated,
    check_half_lemma,
    check_logarithmic_bound,
    check_sortability,
    load_curve_csv,
    plot_curves,
    run_experiment,
    synthetic_frontier,
)
from .learner import best_query, info_compare, info_propose
from .netmodel import fixture_path, load_demands, load_topology
from .pcs import (
    ParetoCandidateSet,
    Pool,
    PoolSource,
    adversarial_pcs,
    build_pool,
    load_pool,
    scenario_from_pool,
)
from .scenarios import load_ground_truth, make_scenario

SCENARIOS = ("mcf", "bw", "nf", "ospf")


def _resolve(path: str) -> str:
    """Accept either a real path or the bare name of a bundled fixture."""
    if os.path.exists(path):
        return path
    bundled = fixture_path(path)
    if os.path.exists(bundled):
        return bundled
    raise click.BadParameter(f"no such file or bundled fixture: {path}")


class _FixedSampler:
    """Sampler that always yields one pinned ground-truth objective."""

    def __init__(self, gt) -> None:
        self.gt = gt

    def sample_objective(self, rng):
        return self.gt


def _sampler_for(pool: Pool):
    """Objective sampler matching a pool: the rebuilt scenario, or the
    synthetic-frontier sampler for abstract pools."""
    if isinstance(pool.scenario, dict) and pool.scenario.get("kind") == "synthetic-frontier":
        from .evaluation import FrontierSampler

        return FrontierSampler()
    try:
        return scenario_from_pool(pool, os.path.dirname(fixture_path("abilene.json")))
    except Exception as exc:
        raise click.UsageError(
            f"cannot rebuild the pool's scenario ({exc}); pass --ground-truth"
        ) from None


@click.group()
def main() -> None:
    """Interactive synthesis of network designs under unknown objectives."""


@main.command("pool")
@click.option("--scenario", "kind", type=click.Choice(SCENARIOS), required=True)
@click.option("--topology", required=True, help="topology JSON (path or bundled fixture name)")
@click.option("--demands", required=True, help="demand matrix JSON (path or bundled fixture name)")
@click.option("--size", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--k-tunnels", type=int, default=3, show_default=True, help="paths per flow (ignored by ospf)")
@click.option("--n-groups", type=int, default=4, show_default=True, help="flow groups (nf only)")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--progress/--no-progress", default=False)
def pool_cmd(kind, topology, demands, size, seed, k_tunnels, n_groups, out, progress):
    """Precompute a pool of (objective, optimal design) pairs."""
    topo = load_topology(_resolve(topology))
    dm = load_demands(_resolve(demands), topo)
    kwargs: dict = {}
    meta = {"kind": kind, "topology": topology, "demands": demands}
    if kind in ("mcf", "bw", "nf"):
        kwargs["k_tunnels"] = k_tunnels
        meta["k_tunnels"] = k_tunnels
    if kind == "nf":
        kwargs["n_groups"] = n_groups
        meta["n_groups"] = n_groups
    s = make_scenario(kind, topo, dm, **kwargs)
    p = build_pool(s, size, seed, scenario_meta=meta, progress=progress)
    p.save(out)
    click.echo(f"wrote {len(p.pairs)} pairs to {out}")


def _parse_teacher(_ctx, _param, value: str) -> tuple[str, float]:
    if value == "perfect":
        return "perfect", 0.0
    if value.startswith("imperfect:"):
        try:
            p = float(value.split(":", 1)[1])
        except ValueError:
            raise click.BadParameter(f"bad noise level in {value!r}") from None
        if p < 0:
            raise click.BadParameter("noise level must be >= 0")
        return "noisy", p
    raise click.BadParameter(f"{value!r}; expected 'perfect' or 'imperfect:P'")


@main.command("run")
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--teacher", callback=_parse_teacher, default="perfect", show_default=True,
              help="'perfect' or 'imperfect:P' (noise at P% of the reward spread)")
@click.option("--ground-truth", type=click.Path(exists=True, dir_okay=False),
              help="pin one hidden objective instead of sampling per repetition")
@click.option("--queries", type=int, default=10, show_default=True)
@click.option("--reps", type=int, default=31, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--thresh", type=int, default=16, show_default=True)
@click.option("--algo", type=click.Choice(["guided", "noprune"]), default="guided", show_default=True)
@click.option("--quality-pool", type=click.Path(exists=True, dir_okay=False),
              help="rank results against this pool instead of the session pool")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--progress/--no-progress", default=False)
def run_cmd(pool_path, teacher, ground_truth, queries, reps, seed, thresh, algo,
            quality_pool, out, progress):
    """Run scripted sessions and write the quality curve as CSV."""
    teacher_name, noise_p = teacher
    p = load_pool(pool_path)
    sampler = _FixedSampler(load_ground_truth(ground_truth)) if ground_truth else _sampler_for(p)
    qp = load_pool(quality_pool) if quality_pool else None
    curve = run_experiment(
        p,
        sampler,
        reps=reps,
        n_query=queries,
        seed=seed,
        teacher=teacher_name,
        noise_p=noise_p,
        prune=(algo == "guided"),
        thresh=thresh,
        quality_pool=qp,
        meta={"algo": algo, "pool_file": os.path.basename(pool_path)},
        progress=progress,
    )
    curve.save(out)
    click.echo(
        f"{algo} over {reps} reps: median quality "
        + " ".join(f"q{q}={m:.3f}" for q, m in zip(curve.queries, curve.median))
    )
    click.echo(f"wrote {out}")


@main.command("sweep-pool")
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True, dir_okay=False),
              help="master pool; sweep sizes subsample it")
@click.option("--sizes", required=True, help="comma-separated pool sizes, e.g. 10,100,300,1000")
@click.option("--queries", type=int, default=10, show_default=True)
@click.option("--reps", type=int, default=31, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--teacher", callback=_parse_teacher, default="perfect", show_default=True)
@click.option("--thresh", type=int, default=16, show_default=True)
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--progress/--no-progress", default=False)
def sweep_pool_cmd(pool_path, sizes, queries, reps, seed, teacher, thresh, out_dir, progress):
    """Quality versus candidate-pool size, always ranked against the master."""
    from .evaluation import pool_size_sweep

    teacher_name, noise_p = teacher
    try:
        size_list = [int(s) for s in sizes.split(",") if s.strip()]
    except ValueError:
        raise click.BadParameter(f"bad --sizes {sizes!r}") from None
    if not size_list:
        raise click.BadParameter("--sizes is empty")
    master = load_pool(pool_path)
    sampler = _sampler_for(master)
    curves = pool_size_sweep(
        sampler,
        size_list,
        master_pool=master,
        reps=reps,
        n_query=queries,
        seed=seed,
        teacher=teacher_name,
        noise_p=noise_p,
        thresh=thresh,
        progress=progress,
    )
    os.makedirs(out_dir, exist_ok=True)
    for size, curve in curves.items():
        path = os.path.join(out_dir, f"pool_{size}.csv")
        curve.save(path)
        click.echo(f"size {size}: final median {curve.median[-1]:.3f} -> {path}")


@main.command("check-theory")
@click.option("--pool", "pool_path", type=click.Path(exists=True, dir_okay=False),
              help="sample committee states from this pool for the sortability/halving checks")
@click.option("--samples", type=int, default=20, show_default=True)
@click.option("--synthetic-size", type=int, default=1000, show_default=True)
@click.option("--reps", type=int, default=31, show_default=True)
@click.option("--queries", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def check_theory_cmd(pool_path, samples, synthetic_size, reps, queries, seed):
    """Executable theory checks: committee halving on sortable states,
    worst-case committees, and the logarithmic median-quality bound."""
    failures = 0

    # Worst-case committees: every legal query removes exactly one member.
    for n in range(2, 11):
        g, r_best = adversarial_pcs(n)
        image = list(g.image().values())
        infos = [info_propose(g, c, r_best) for c in image]
        infos += [info_compare(g, a, b) for a, b in itertools.combinations(image, 2)]
        ok = all(i == 1 for i in infos) and best_query(g, r_best).info == 1
        click.echo(f"worst-case committee n={n}: every query removes exactly 1 -> {'PASS' if ok else 'FAIL'}")
        failures += 0 if ok else 1

    if pool_path:
        p = load_pool(pool_path)
        rng = np.random.default_rng(seed)
        sortable = unsortable = unknown = 0
        lemma_checked = lemma_failures = 0
        for _ in range(samples):
            g = ParetoCandidateSet()
            src = PoolSource(p, rng)
            r_best = src.initial_candidate()
            src.refill(g, r_best, int(rng.integers(3, 13)))
            if g.image_size < 2:
                continue
            verdict = check_sortability(g)
            if verdict["sortable"] is True:
                sortable += 1
                lemma_checked += 1
                try:
                    check_half_lemma(g, r_best)
                except LemmaViolated as exc:
                    lemma_failures += 1
                    click.echo(f"halving FAILED: {exc}")
            elif verdict["sortable"] is False:
                unsortable += 1
            else:
                unknown += 1
        click.echo(
            f"pool committee states: {sortable} sortable, {unsortable} not, "
            f"{unknown} undecided (image too large to brute-force)"
        )
        click.echo(
            f"halving on sortable states: {lemma_checked - lemma_failures}/{lemma_checked} "
            f"-> {'PASS' if lemma_failures == 0 else 'FAIL'}"
        )
        failures += lemma_failures

    sp, sampler = synthetic_frontier(synthetic_size, seed=seed)
    curve = run_experiment(sp, sampler, reps=reps, n_query=queries, seed=seed)
    try:
        report = check_logarithmic_bound(curve)
        leaned = sum(1 for r in report if r["median"] < r["threshold"])
        note = f", {leaned} indices within CI slack" if leaned else ""
        click.echo(
            f"median-quality bound on {synthetic_size} synthetic candidates: "
            f"PASS ({len(report)} indices{note})"
        )
    except BoundViolated as exc:
        click.echo(f"median-quality bound: FAIL ({exc})")
        failures += 1

    if failures:
        raise SystemExit(1)
    click.echo("all theory checks passed")


@main.command("serve")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--pool", "pool_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--static", "static_dir", type=click.Path(exists=True, file_okay=False),
              help="directory of built UI assets to serve at /")
@click.option("--data-dir", type=click.Path(file_okay=False),
              help="where transcripts/results are written (default $NETQ_DATA_DIR)")
@click.option("--queries", type=int, default=10, show_default=True)
@click.option("--thresh", type=int, default=2, show_default=True)
@click.option("--ttl", type=float, default=7200.0, show_default=True, help="session TTL seconds")
def serve_cmd(port, host, pool_path, static_dir, data_dir, queries, thresh, ttl):
    """Serve the live human-session HTTP API (and optionally the UI)."""
    import uvicorn

    from .service import create_app

    app = create_app(
        load_pool(pool_path),
        data_dir=data_dir,
        ttl=ttl,
        n_query=queries,
        thresh=thresh,
        static_dir=static_dir,
    )
    uvicorn.run(app, host=host, port=port)


@main.command("plot")
@click.option("--curves", multiple=True, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--labels", help="comma-separated legend labels (default: file stems)")
@click.option("--title", default="")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def plot_cmd(curves, labels, title, out):
    """Plot one or more quality-curve CSVs to an SVG."""
    names = (
        [s.strip() for s in labels.split(",")]
        if labels
        else [os.path.splitext(os.path.basename(c))[0] for c in curves]
    )
    if len(names) != len(curves):
        raise click.BadParameter("--labels count must match --curves")
    loaded = {}
    for name, path in zip(names, curves):
        loaded[name] = load_curve_csv(path)
    plot_curves(loaded, out, title=title)
    click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
