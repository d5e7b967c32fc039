#!/usr/bin/env python3
"""Build the candidate pools shipped with the repository.

Produces gzip-compressed pool files under data/pools/.  Each pool embeds a
scenario descriptor so tooling can rebuild the originating scenario from the
pool file alone.  The script is idempotent: existing pool files are skipped
unless ``--force`` is given.

Two build strategies are used:

* **Exact pools** (small topologies): every candidate is the scenario
  optimiser's answer to a sampled objective, via ``build_pool``.
* **Greedy pools** (large topologies): the exact optimiser's LP tableau does
  not fit in memory for networks with thousands of commodities, so candidates
  are generated by a feasible-by-construction greedy allocator that sweeps the
  throughput/latency trade-off, and each sampled objective is paired with its
  reward-maximising candidate from that set.  These pools exercise pool-driven
  code paths (feasibility, latency, serving) on realistic large networks.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from prefnet.netmodel import fixture_path, load_demands, load_topology
from prefnet.pcs import Pool, build_pool, load_pool, scenario_from_pool
from prefnet.scenarios import make_scenario
from prefnet.scenarios.base import ObjectiveInstance, eval_objective
from prefnet.scenarios.mcf import McfScenario

OUT_DIR = Path(__file__).resolve().parent.parent / "data" / "pools"

# name -> (scenario meta, pool size, seed)
EXACT_POOLS = {
    "abilene_mcf_5000": (
        {"kind": "mcf", "topology": "abilene.json", "demands": "abilene_demands_k2.json", "k_tunnels": 3},
        5000,
        101,
    ),
    "b4_mcf_1000": (
        {"kind": "mcf", "topology": "b4.json", "demands": "b4_demands_k1.json", "k_tunnels": 3},
        1000,
        102,
    ),
    # Fairness pools need the high-load demand fixtures: on the light-load
    # matrices every class can be served in full simultaneously, so every
    # weighting shares one optimum and the pool is degenerate.
    "abilene_bw_1000": (
        {"kind": "bw", "topology": "abilene.json", "demands": "abilene_demands_k4_hi.json", "k_tunnels": 3},
        1000,
        103,
    ),
    "b4_bw_1000": (
        {"kind": "bw", "topology": "b4.json", "demands": "b4_demands_k4_hi.json", "k_tunnels": 3},
        1000,
        104,
    ),
    "abilene_nf_200": (
        {"kind": "nf", "topology": "abilene.json", "demands": "abilene_demands_k2_mid.json", "k_tunnels": 3, "n_groups": 4},
        200,
        105,
    ),
    "abilene_ospf_130": (
        {"kind": "ospf", "topology": "abilene.json", "demands": "abilene_demands_k2.json"},
        130,
        106,
    ),
}

# name -> (topology fixture, demands fixture, seed)
GREEDY_POOLS = {
    "cwix_mcf_1000": ("cwix.json", "cwix_demands_k4.json", 111),
    "btna_mcf_1000": ("btna.json", "btna_demands_k1.json", 112),
    "tinet_mcf_1000": ("tinet.json", "tinet_demands_k1.json", 113),
    "deltacom_mcf_1000": ("deltacom.json", "deltacom_demands_k1.json", 114),
    "ion_mcf_1000": ("ion.json", "ion_demands_k1.json", 115),
}

GREEDY_N_CANDIDATES = 300
GREEDY_N_OBJECTIVES = 1000


def scenario_from_meta(meta: dict) -> object:
    kwargs = dict(meta)
    kind = kwargs.pop("kind")
    topo = load_topology(fixture_path(kwargs.pop("topology")))
    dm = load_demands(fixture_path(kwargs.pop("demands")), topo)
    return make_scenario(kind, topo, dm, **kwargs)


def greedy_allocation(
    scenario: McfScenario, rng: np.random.Generator, tunnel_links: list[np.ndarray]
) -> np.ndarray:
    """One feasible allocation sweeping the throughput/latency trade-off.

    Tunnels are considered in ascending path-weight order (or a random order,
    for interior points); a random quantile cutoff drops the longest paths
    entirely (low cutoff -> low latency and low throughput, cutoff 1.0 ->
    greedy max-throughput), and a random fill factor adds further interior
    points between the two regimes.
    """
    sp = scenario.space
    residual = sp.topo.capacities().astype(float).copy()
    remaining = sp.demand.astype(float).copy()
    alloc = np.zeros(sp.n_tunnels)

    cutoff = float(np.quantile(sp.pathweight, rng.uniform(0.05, 1.0)))
    fill = float(rng.uniform(0.6, 1.0)) if rng.random() < 0.5 else 1.0
    if rng.random() < 0.5:
        order = np.argsort(sp.pathweight, kind="stable")  # frontier sweep
    else:
        order = rng.permutation(sp.n_tunnels)  # interior spread
    for t in order:
        if sp.pathweight[t] > cutoff:
            continue
        links = tunnel_links[t]
        room = residual[links].min() if links.size else float("inf")
        give = min(remaining[sp.flow_of[t]], room) * fill
        if give <= 1e-9:
            continue
        alloc[t] = give
        residual[links] -= give
        remaining[sp.flow_of[t]] -= give
    return alloc


def sample_objectives(mats: np.ndarray, n: int, rng: np.random.Generator) -> list[ObjectiveInstance]:
    """Sample throughput/latency trade-off objectives scaled to the pool.

    Uses the allocation scenario's objective template, but derives the scales
    from the greedy candidate set instead of solving the (oversized)
    extreme-point programs.  The latency/throughput weight ratio is drawn
    log-uniformly over the candidate frontier's empirical slope range so the
    sampled objectives spread their optima across the whole trade-off sweep
    rather than piling onto a few kink points.
    """
    thr = mats[:, 0]
    lat = -mats[:, 1]
    max_t = float(thr.max())
    lo_l, hi_l = float(lat.min()), float(lat.max())

    # Pareto frontier (max throughput, min latency), then consecutive slopes.
    order = np.argsort(lat, kind="stable")
    front_t, front_l, best = [], [], -np.inf
    for i in order:
        if thr[i] > best + 1e-9:
            best = thr[i]
            front_t.append(thr[i])
            front_l.append(lat[i])
    slopes = np.diff(front_t) / np.maximum(np.diff(front_l), 1e-12)
    slopes = slopes[slopes > 0]
    if slopes.size == 0:
        slopes = np.array([max_t / max(hi_l - lo_l, 1.0)])
    s_lo, s_hi = np.quantile(slopes, 0.02), np.quantile(slopes, 0.98)

    objs = []
    for _ in range(n):
        # Effective latency-vs-throughput exchange rate near a frontier slope.
        s = float(np.exp(rng.uniform(np.log(max(s_lo, 1e-12)), np.log(max(s_hi, 2e-12)))))
        w_t = float(rng.uniform(0.5, 2.0))
        objs.append(
            ObjectiveInstance.make(
                "mcf",
                {
                    "w_t": w_t,
                    "p_t": float(w_t * rng.uniform(0.0, 0.9)),
                    "theta_t": float(rng.uniform(0.3, 0.95) * max_t),
                    "w_l": float(s * w_t * rng.uniform(0.7, 1.4)),
                    "p_l": float(s * w_t * rng.uniform(0.0, 0.9)),
                    "theta_l": float(lo_l + rng.uniform(0.1, 0.9) * (hi_l - lo_l)),
                },
            )
        )
    return objs


def build_greedy_pool(topology: str, demands: str, seed: int) -> Pool:
    meta = {"kind": "mcf", "topology": topology, "demands": demands, "k_tunnels": 1}
    scenario = scenario_from_meta(meta)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x6EED]))
    sp = scenario.space
    tunnel_links = [np.flatnonzero(sp.incidence[:, t]) for t in range(sp.n_tunnels)]

    cands, seen = [], set()
    while len(cands) < GREEDY_N_CANDIDATES:
        cand = scenario.candidate(greedy_allocation(scenario, rng, tunnel_links))
        key = tuple(np.round(cand.metrics, 6))
        if key not in seen:
            seen.add(key)
            cands.append(cand)
    mats = np.array([c.metrics for c in cands])

    pairs = []
    for obj in sample_objectives(mats, GREEDY_N_OBJECTIVES, rng):
        rewards = [eval_objective(obj, c.metrics) for c in cands]
        pairs.append((obj, cands[int(np.argmax(rewards))]))

    return Pool(scenario=meta, seed=seed, pairs=pairs)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--force", action="store_true", help="rebuild pools that already exist")
    ap.add_argument("--only", nargs="*", default=None, help="build only these pool names")
    args = ap.parse_args()

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    wanted = set(args.only) if args.only else None

    for name, (meta, size, seed) in EXACT_POOLS.items():
        if wanted and name not in wanted:
            continue
        path = OUT_DIR / f"{name}.json.gz"
        if path.exists() and not args.force:
            print(f"[skip] {name}", flush=True)
            continue
        t0 = time.monotonic()
        scenario = scenario_from_meta(meta)
        pool = build_pool(scenario, size, seed=seed, scenario_meta=meta, progress=True)
        pool.save(path)
        check = load_pool(path)
        assert len(check.pairs) == size, name
        scenario_from_pool(check, fixture_dir=str(Path(fixture_path("abilene.json")).parent))
        print(f"[done] {name}: {size} pairs in {time.monotonic() - t0:.1f}s -> {path}", flush=True)

    for name, (topology, demands, seed) in GREEDY_POOLS.items():
        if wanted and name not in wanted:
            continue
        path = OUT_DIR / f"{name}.json.gz"
        if path.exists() and not args.force:
            print(f"[skip] {name}", flush=True)
            continue
        t0 = time.monotonic()
        pool = build_greedy_pool(topology, demands, seed)
        pool.save(path)
        check = load_pool(path)
        assert len(check.pairs) == GREEDY_N_OBJECTIVES, name
        print(f"[done] {name}: {GREEDY_N_OBJECTIVES} pairs in {time.monotonic() - t0:.1f}s -> {path}", flush=True)

    return 0


if __name__ == "__main__":
    raise SystemExit(main())
