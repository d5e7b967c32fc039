"""Walk through one preference-elicitation session, question by question.

A hidden objective is drawn from a shipped pool and handed to a perfect
oracle; the learner never sees it. Watch the committee of candidate
objectives shrink as each answer rules members out, and the running best
design improve, until the recommendation matches the hidden optimum.

Run from the repository root:

    python3 demos/01_interactive_session.py [--pool data/pools/abilene_mcf_5000.json.gz]
"""

from __future__ import annotations

import argparse

import numpy as np

from prefnet import (
    LearnConfig,
    PoolSource,
    load_pool,
    perfect_oracle,
    run_session,
)
from prefnet.evaluation import quality


def fmt(metrics) -> str:
    return "(" + ", ".join(f"{v:,.1f}" for v in metrics) + ")"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pool", default="data/pools/abilene_mcf_5000.json.gz")
    ap.add_argument("--pair", type=int, default=42, help="pool index of the hidden objective")
    ap.add_argument("--queries", type=int, default=10)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    pool = load_pool(args.pool)
    hidden, true_best = pool.pairs[args.pair]
    print(f"pool: {args.pool}  ({len(pool.pairs)} objective/optimum pairs)")
    print(f"hidden objective: a {hidden.kind} template instance the learner never sees")
    print(f"its true optimum has metrics {fmt(true_best.metrics)}\n")

    teacher = perfect_oracle(hidden)
    source = PoolSource(pool, np.random.default_rng(args.seed))
    result = run_session(
        source, teacher, LearnConfig(n_query=args.queries, thresh=16, seed=args.seed)
    )

    incumbent: tuple | None = None
    for step in result.steps:
        q = step.query
        if incumbent is None:
            print(f"[{step.iter:>2}] opening proposal auto-accepted: {fmt(q.left.metrics)}")
            incumbent = step.r_best_metrics
            continue
        if q.kind == "propose":
            question = f"propose {fmt(q.left.metrics)} against best {fmt(incumbent)}"
        else:
            question = f"compare {fmt(q.left.metrics)} vs {fmt(q.right.metrics)}"
        print(
            f"[{step.iter:>2}] {question}\n"
            f"     guaranteed to eliminate >= {q.info} committee members"
            f"  ->  teacher says: {step.response}\n"
            f"     committee {step.image_before} -> {step.image_after};"
            f" best now {fmt(step.r_best_metrics)}"
            + (f"  ({step.note})" if step.note else "")
        )
        incumbent = step.r_best_metrics

    print(f"\nstopped: {result.stop_reason} after {result.count} counted queries")
    print(f"recommended design metrics: {fmt(result.r_best.metrics)}")
    print(f"hidden-objective quality (rank in pool): {quality(result.r_best, pool, hidden):.4f}")


if __name__ == "__main__":
    main()
