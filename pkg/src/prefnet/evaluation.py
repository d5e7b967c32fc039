"""Quality measurement and the experiment harness.

Quality of a design is approximated by its rank inside a precomputed pool:
the fraction of pool candidates whose ground-truth reward it matches or
beats. Experiments run many independent sessions (fresh hidden objective,
fresh pool order per repetition) and aggregate per-query quality curves;
executable checks cover the committee-halving property of sortable
candidate sets and the logarithmic median-quality growth of the guided
session loop.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np

from .learner import LearnConfig, best_query, info_compare, run_noprune, run_session
from .pcs import ParetoCandidateSet, Pool, PoolSource
from .scenarios import Candidate, ObjectiveInstance, eval_objective, reward_cmp
from .teacher import NoiseModel, PerfectOracle, imperfect_oracle


class BoundViolated(AssertionError):
    """A quality curve fell below the guaranteed median-quality bound."""


class LemmaViolated(AssertionError):
    """A sortable candidate set offered no committee-halving query."""


def quality(c: Candidate, pool: Pool, gt: ObjectiveInstance) -> float:
    """Rank-in-pool quality of ``c`` under the hidden objective ``gt``: the
    fraction of pool candidates whose reward ``c`` ties or beats."""
    if not pool.pairs:
        raise ValueError("pool is empty")
    r = eval_objective(gt, c.metrics)
    hits = sum(
        1 for _, cc in pool.pairs if reward_cmp(r, eval_objective(gt, cc.metrics)) >= 0
    )
    return hits / len(pool.pairs)


def _quality_of_reward(r: float, pool_rewards: np.ndarray) -> float:
    hits = sum(1 for x in pool_rewards if reward_cmp(r, float(x)) >= 0)
    return hits / len(pool_rewards)


@dataclass
class QualityCurve:
    """Per-query-index median/min/max quality over independent repetitions."""

    queries: list[int]
    median: list[float]
    qmin: list[float]
    qmax: list[float]
    reps: int
    meta: dict = field(default_factory=dict)
    samples: np.ndarray | None = None  # (reps, n_query) raw qualities

    @classmethod
    def from_samples(cls, samples: np.ndarray, meta: dict) -> "QualityCurve":
        samples = np.asarray(samples, dtype=float)
        reps, n = samples.shape
        return cls(
            queries=list(range(1, n + 1)),
            median=[float(v) for v in np.median(samples, axis=0)],
            qmin=[float(v) for v in samples.min(axis=0)],
            qmax=[float(v) for v in samples.max(axis=0)],
            reps=reps,
            meta=dict(meta),
            samples=samples,
        )

    def median_at(self, query_index: int) -> float:
        return self.median[self.queries.index(query_index)]

    def save(self, csv_path: str) -> None:
        """Write the curve as CSV (query, median, min, max) plus a JSON
        sidecar holding the configuration metadata."""
        path = FsPath(csv_path)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["query", "median", "min", "max"])
            for q, md, lo, hi in zip(self.queries, self.median, self.qmin, self.qmax):
                w.writerow([q, f"{md:.6f}", f"{lo:.6f}", f"{hi:.6f}"])
        sidecar = dict(self.meta)
        sidecar["reps"] = self.reps
        with open(path.with_suffix(".json"), "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)


def load_curve_csv(csv_path: str) -> QualityCurve:
    path = FsPath(csv_path)
    queries, med, lo, hi = [], [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            queries.append(int(row["query"]))
            med.append(float(row["median"]))
            lo.append(float(row["min"]))
            hi.append(float(row["max"]))
    meta = {}
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        with open(sidecar) as fh:
            meta = json.load(fh)
    reps = int(meta.get("reps", 0))
    return QualityCurve(queries, med, lo, hi, reps, meta)


def _make_teacher(name: str, gt: ObjectiveInstance, noise_p: float, pool: Pool, seed: int):
    if name == "perfect":
        return PerfectOracle(gt)
    if name == "noisy":
        nm = NoiseModel.from_pool(gt, pool, p=noise_p, seed=seed)
        return imperfect_oracle(gt, nm)
    raise ValueError(f"unknown teacher {name!r} (expected 'perfect' or 'noisy')")


def run_experiment(
    pool: Pool,
    sampler,
    *,
    reps: int = 301,
    n_query: int = 10,
    seed: int = 0,
    teacher: str = "perfect",
    noise_p: float = 0.0,
    prune: bool = True,
    thresh: int = 16,
    replicas: int = 0,
    drop_prob: float = 0.2,
    quality_pool: Pool | None = None,
    meta: dict | None = None,
    progress: bool = False,
) -> QualityCurve:
    """Run ``reps`` independent sessions and aggregate per-query quality.

    Each repetition samples a fresh hidden objective from ``sampler``
    (anything with ``sample_objective(rng)``), runs one session over a
    freshly shuffled ``pool``, and records the rank-in-pool quality of the
    running best after each of the first ``n_query`` queries (carrying the
    last value forward if the session ended early). Quality ranks against
    ``quality_pool`` when given (the pool-size sweep ranks subsampled pools
    against the full master pool), else against ``pool`` itself.
    Deterministic per ``seed``; ``reps`` must be odd so medians are exact
    sample values.
    """
    if reps < 1 or reps % 2 == 0:
        raise ValueError("reps must be a positive odd number")
    ref_pool = quality_pool if quality_pool is not None else pool
    samples = np.zeros((reps, n_query))
    children = np.random.SeedSequence(seed).spawn(reps)
    for rep, child in enumerate(children):
        rng = np.random.default_rng(child)
        gt = sampler.sample_objective(rng)
        source = PoolSource(pool, rng)
        rep_seed = int(child.generate_state(1, dtype=np.uint32)[0])
        t = _make_teacher(teacher, gt, noise_p, ref_pool, rep_seed)
        cfg = LearnConfig(
            n_query=n_query,
            thresh=thresh,
            seed=rep_seed,
            replicas=replicas,
            drop_prob=drop_prob,
        )
        driver = run_session if prune else run_noprune
        result = driver(source, t, cfg)
        ref_rewards = np.array(
            [eval_objective(gt, c.metrics) for _, c in ref_pool.pairs]
        )
        # Quality of the running best after each *answered* question,
        # forward-filled across indices the session never reached. The
        # transcript's first row is the auto-accepted opening proposal — not
        # a question — so answered question n is transcript iteration n + 1.
        by_iter: dict[int, tuple] = {}
        for s in result.steps:
            by_iter[s.iter] = s.r_best_metrics
        q = 0.0
        last = by_iter.get(1)
        for n in range(1, n_query + 1):
            last = by_iter.get(n + 1, last)
            if last is not None:
                q = _quality_of_reward(eval_objective(gt, last), ref_rewards)
            samples[rep, n - 1] = q
        if progress:
            print(f"rep {rep + 1}/{reps}: final quality {samples[rep, -1]:.3f}")
    info = {
        "scenario": pool.scenario,
        "teacher": teacher,
        "noise_p": noise_p,
        "prune": prune,
        "n_query": n_query,
        "thresh": thresh,
        "replicas": replicas,
        "drop_prob": drop_prob,
        "seed": seed,
        "pool_size": len(pool.pairs),
        "quality_pool_size": len(ref_pool.pairs),
    }
    info.update(meta or {})
    return QualityCurve.from_samples(samples, info)


def median_ci(samples: np.ndarray, confidence: float = 0.99) -> tuple[float, float]:
    """Distribution-free confidence interval for the median via binomial
    order statistics."""
    from scipy.stats import binom

    x = np.sort(np.asarray(samples, dtype=float))
    r = len(x)
    alpha = 1.0 - confidence
    lo = int(binom.ppf(alpha / 2, r, 0.5))
    hi = int(binom.ppf(1 - alpha / 2, r, 0.5))
    return float(x[max(lo, 0)]), float(x[min(hi, r - 1)])


def check_logarithmic_bound(curve: QualityCurve, confidence: float = 0.99) -> list[dict]:
    """Check the guided loop's median-quality guarantee: after n answered
    questions (curve index n), the median quality must reach 2^(-1/(n+1)).

    The observed median passes outright, or within the statistical slack of
    a distribution-free binomial confidence interval on the median.
    Raises BoundViolated at the first failing index. Only guided
    (pruning) curves qualify — the baseline has no such guarantee.
    """
    if not curve.meta.get("prune", True):
        raise ValueError("the logarithmic bound applies to the guided loop only")
    report = []
    for idx in curve.queries:
        n = idx
        threshold = 2.0 ** (-1.0 / (n + 1))
        med = curve.median_at(idx)
        if curve.samples is not None:
            _, ci_hi = median_ci(curve.samples[:, idx - 1], confidence)
        else:
            ci_hi = med
        ok = med >= threshold or ci_hi >= threshold
        report.append(
            {
                "query": idx,
                "n": n,
                "threshold": threshold,
                "median": med,
                "ci_high": ci_hi,
                "ok": bool(ok),
            }
        )
        if not ok:
            raise BoundViolated(
                f"median quality {med:.4f} after {n} answered questions is below "
                f"2^(-1/{n + 1}) = {threshold:.4f} (CI high {ci_hi:.4f})"
            )
    return report


# ------------------------------------------------------------- sortability


def _order_violation(g: ParetoCandidateSet, order: list[Candidate]):
    """First triple violating the committee-order conditions, or None.

    The order is valid when, for every ordered triple a < b < c of image
    members, every objective mapped to ``a`` still prefers ``b`` over ``c``
    and every objective mapped to ``c`` still prefers ``b`` over ``a`` —
    preferences fall away monotonically on both sides of each objective's
    peak.
    """
    mappers: dict[str, list] = {}
    for o, e in g.items():
        mappers.setdefault(e.id, []).append(o)
    for a, b, c in itertools.combinations(order, 3):
        for o in mappers[a.id]:
            if reward_cmp(g.reward(o, b), g.reward(o, c)) <= 0:
                return (a.id, b.id, c.id, "left objective does not prefer middle over right")
        for o in mappers[c.id]:
            if reward_cmp(g.reward(o, b), g.reward(o, a)) <= 0:
                return (a.id, b.id, c.id, "right objective does not prefer middle over left")
    return None


def check_sortability(g: ParetoCandidateSet, brute_limit: int = 8) -> dict:
    """Decide whether the candidate set's image admits a total order under
    which every query can halve the committee.

    Tries the lexicographic metric order first (the natural witness for
    concave allocation frontiers); on failure and images of at most
    ``brute_limit`` candidates, falls back to trying every permutation.
    Returns {"sortable", "order", "counterexample", "method"}; "sortable"
    is None when the lexicographic order fails and the image is too large
    to brute-force.
    """
    image = sorted(g.image().values(), key=lambda c: (c.metrics, c.id))
    if len(image) < 3:
        return {
            "sortable": True,
            "order": [c.id for c in image],
            "counterexample": None,
            "method": "trivial",
        }
    bad = _order_violation(g, image)
    if bad is None:
        return {
            "sortable": True,
            "order": [c.id for c in image],
            "counterexample": None,
            "method": "lex",
        }
    if len(image) > brute_limit:
        return {"sortable": None, "order": None, "counterexample": bad, "method": "lex"}
    for perm in itertools.permutations(image):
        if _order_violation(g, list(perm)) is None:
            return {
                "sortable": True,
                "order": [c.id for c in perm],
                "counterexample": None,
                "method": "brute",
            }
    return {"sortable": False, "order": None, "counterexample": bad, "method": "brute"}


def check_half_lemma(g: ParetoCandidateSet, r_best: Candidate | None = None) -> bool:
    """For a sortable candidate set, the best query must be able to rule out
    at least half the committee. Returns False (skipped) when the set is not
    verifiably sortable; raises LemmaViolated when sortable but no halving
    query exists."""
    verdict = check_sortability(g)
    if verdict["sortable"] is not True:
        return False
    want = g.image_size // 2
    if r_best is not None:
        got = best_query(g, r_best).info
    else:
        image = list(g.image().values())
        got = max(
            (info_compare(g, a, b) for a, b in itertools.combinations(image, 2)),
            default=0,
        )
    if got < want:
        raise LemmaViolated(f"best query rules out {got} < {want} committee members")
    return True


# ------------------------------------------------------- synthetic frontier


class FrontierSampler:
    """Objective sampler over a circular-arc trade-off frontier: hidden
    preferences are random positive linear weightings of the two metrics."""

    def sample_objective(self, rng: np.random.Generator) -> ObjectiveInstance:
        theta = rng.uniform(0.0, math.pi / 2)
        return ObjectiveInstance.make(
            "linear", {"weights": (math.cos(theta), math.sin(theta))}
        )


def synthetic_frontier(size: int, seed: int = 0) -> tuple[Pool, FrontierSampler]:
    """A pool of ``size`` candidates spread uniformly over a quarter-circle
    trade-off frontier, each paired with the linear objective it maximizes.

    Because candidates are drawn uniformly and ranked within the same set,
    rank-in-pool quality coincides with the true probability of beating a
    uniformly drawn design — the regime the median-quality guarantee
    speaks about.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xF207]))
    angles = rng.uniform(0.0, math.pi / 2, size=size)
    pairs = []
    for i, th in enumerate(angles):
        m = (math.cos(th), math.sin(th))
        o = ObjectiveInstance.make("linear", {"weights": m})
        c = Candidate.make(np.array([th]), np.array(m))
        pairs.append((o, c))
    pool = Pool(
        scenario={"kind": "synthetic-frontier", "params": {"size": size}},
        seed=seed,
        pairs=pairs,
    )
    return pool, FrontierSampler()


# --------------------------------------------------------- pool-size sweep


def pool_size_sweep(
    scenario,
    sizes: list[int],
    master_size: int = 5000,
    seed: int = 0,
    *,
    master_pool: Pool | None = None,
    reps: int = 31,
    n_query: int = 10,
    teacher: str = "perfect",
    noise_p: float = 0.0,
    thresh: int = 16,
    progress: bool = False,
) -> dict[int, QualityCurve]:
    """Quality as a function of the candidate-pool size offered to the
    learner. One master pool is built (or supplied); each sweep size
    subsamples it for the session while quality always ranks against the
    full master.

    ``scenario`` samples the hidden objectives; when ``master_pool`` is
    omitted it must be a full scenario so the master can be built from it,
    otherwise any object with ``sample_objective(rng)`` serves."""
    from .pcs import build_pool

    if master_pool is None:
        master_pool = build_pool(scenario, master_size, seed, progress=progress)
    master_size = len(master_pool.pairs)
    if any(s < 1 or s > master_size for s in sizes):
        raise ValueError(f"sizes must lie in [1, {master_size}]")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x51EE]))
    out: dict[int, QualityCurve] = {}
    for size in sizes:
        if size == master_size:
            sub = master_pool
        else:
            idx = sorted(rng.choice(master_size, size=size, replace=False))
            sub = Pool(
                scenario=master_pool.scenario,
                seed=master_pool.seed,
                pairs=[master_pool.pairs[i] for i in idx],
            )
        out[size] = run_experiment(
            sub,
            scenario,
            reps=reps,
            n_query=n_query,
            seed=seed,
            teacher=teacher,
            noise_p=noise_p,
            thresh=thresh,
            quality_pool=master_pool,
            meta={"sweep_size": size},
            progress=progress,
        )
    return out


# ------------------------------------------------------------------ plotting


def plot_curves(curves: dict[str, QualityCurve], path: str, title: str = "") -> None:
    """Render median quality curves (with min/max bands) to an SVG file."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for label, curve in curves.items():
        (line,) = ax.plot(curve.queries, curve.median, marker="o", markersize=3, label=label)
        ax.fill_between(
            curve.queries, curve.qmin, curve.qmax, alpha=0.12, color=line.get_color()
        )
    ax.set_xlabel("queries answered")
    ax.set_ylabel("solution quality (rank in pool)")
    ax.set_ylim(0.0, 1.02)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
