"""The three structural guarantees behind the learner, checked empirically.

1. Halving: on a sortable committee (one whose candidate designs can be
   ordered so every member's preference is consistent with the order), some
   single question is guaranteed to eliminate at least half the committee.
   Checked on committee states sampled from a real traffic-engineering pool.

2. Worst case: committees exist where NO question can eliminate more than
   one member per answer — guided selection cannot beat linear scanning
   there. Built explicitly for committee sizes 2..10.

3. Logarithmic bound: against a synthetic trade-off frontier, the median
   quality of the running best after the committee reaches size n is at
   least 2^(-1/(n+1)) — rapidly approaching 1 as questions accumulate.

Run from the repository root:

    python3 demos/03_theory_checks.py [--pool data/pools/abilene_mcf_5000.json.gz]
"""

from __future__ import annotations

import argparse
import itertools

import numpy as np

from prefnet import (
    ParetoCandidateSet,
    PoolSource,
    adversarial_pcs,
    best_query,
    info_compare,
    info_propose,
    load_pool,
)
from prefnet.evaluation import (
    check_half_lemma,
    check_logarithmic_bound,
    check_sortability,
    run_experiment,
    synthetic_frontier,
)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pool", default="data/pools/abilene_mcf_5000.json.gz")
    ap.add_argument("--samples", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print("1. halving on sortable committee states sampled from", args.pool)
    pool = load_pool(args.pool)
    rng = np.random.default_rng(args.seed)
    sortable = checked = 0
    for _ in range(args.samples):
        g = ParetoCandidateSet()
        src = PoolSource(pool, rng)
        r_best = src.initial_candidate()
        src.refill(g, r_best, int(rng.integers(3, 13)))
        if g.image_size < 2:
            continue
        if check_sortability(g)["sortable"] is True:
            sortable += 1
            check_half_lemma(g, r_best)  # raises LemmaViolated on failure
            checked += 1
    print(f"   {sortable} sortable states sampled; best query halved all {checked}\n")

    print("2. worst-case committees: every query eliminates exactly one member")
    for n in range(2, 11):
        g, r_best = adversarial_pcs(n)
        image = list(g.image().values())
        infos = [info_propose(g, c, r_best) for c in image]
        infos += [info_compare(g, a, b) for a, b in itertools.combinations(image, 2)]
        assert all(i == 1 for i in infos) and best_query(g, r_best).info == 1
        print(f"   n={n:>2}: max guaranteed elimination over all queries = 1")

    print("\n3. logarithmic median-quality bound on a synthetic frontier")
    fpool, sampler = synthetic_frontier(300, seed=args.seed)
    curve = run_experiment(fpool, sampler, reps=31, n_query=10, seed=args.seed)
    report = check_logarithmic_bound(curve)  # raises BoundViolated on failure
    print(f"   {'answered':>9} {'median':>8} {'bound':>8}")
    for row in report:
        print(f"   {row['n']:>9} {row['median']:>8.4f} {row['threshold']:>8.4f}")
    print("   bound holds at every index")


if __name__ == "__main__":
    main()
