"""Link-weight tuning scenario: integer OSPF weights route traffic over
shortest paths with equal-cost multipath splitting; the objective trades
demand-weighted latency against peak link utilization."""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as csgraph_dijkstra

from ..netmodel import DemandMatrix, Topology, Unreachable
from .base import (
    Candidate,
    InfeasibleParams,
    NotBetter,
    ObjectiveInstance,
    Scenario,
    eval_objective,
    reward_cmp,
)

WEIGHT_MIN, WEIGHT_MAX = 1, 64
DELTAS = (1, 2, 4, 8)


def ecmp_route(topo: Topology, dm: DemandMatrix, weights) -> tuple[np.ndarray, float]:
    """Route every demand over its shortest-weight paths with equal splits.

    ``weights`` are per declared link (both directions of an undirected link
    share one weight). Returns (per-directed-link utilization, demand-weighted
    average path length in weight units). At each node the traffic toward a
    destination is split equally across the outgoing links that lie on some
    shortest path. Raises Unreachable if any demand endpoint pair is
    disconnected.
    """
    w = np.asarray(weights, dtype=float)
    if topo.directed:
        w_dir = w
    else:
        w_dir = np.repeat(w, 2)
    n = topo.n_nodes
    rows = [ln.src for ln in topo.directed_links]
    cols = [ln.dst for ln in topo.directed_links]
    graph = csr_matrix((w_dir, (rows, cols)), shape=(n, n))
    dist = csgraph_dijkstra(graph, directed=True)

    inj = np.zeros((n, n))  # inj[src, dst]
    lat_num = 0.0
    total = 0.0
    for f in dm.flows:
        if not np.isfinite(dist[f.src, f.dst]):
            raise Unreachable(f"{topo.nodes[f.src]} cannot reach {topo.nodes[f.dst]}")
        inj[f.src, f.dst] += f.demand
        lat_num += f.demand * dist[f.src, f.dst]
        total += f.demand
    latency = lat_num / total if total > 0 else 0.0

    loads = np.zeros(len(topo.directed_links))
    for dstn in range(n):
        if not inj[:, dstn].any():
            continue
        order = np.argsort(-dist[:, dstn])  # farthest first: upstream before downstream
        amount = inj[:, dstn].copy()
        for v in order:
            if v == dstn or amount[v] <= 0 or not np.isfinite(dist[v, dstn]):
                continue
            next_hops = [
                j
                for j in topo.out_links[v]
                if dist[v, dstn] == w_dir[j] + dist[topo.directed_links[j].dst, dstn]
            ]
            share = amount[v] / len(next_hops)
            for j in next_hops:
                loads[j] += share
                amount[topo.directed_links[j].dst] += share
    return loads / topo.capacities(), float(latency)


def _clip_weights(w: np.ndarray) -> np.ndarray:
    return np.clip(w, WEIGHT_MIN, WEIGHT_MAX)


class OspfScenario(Scenario):
    kind = "ospf"
    sortable = True

    def __init__(self, topo: Topology, dm: DemandMatrix):
        self.topo = topo
        self.dm = dm

    @property
    def d(self) -> int:
        return 2

    def metrics_of(self, params) -> np.ndarray:
        w = np.asarray(params)
        util, latency = ecmp_route(self.topo, self.dm, w)
        return np.array([-latency, -float(util.max())])

    def candidate(self, params) -> Candidate:
        w = np.asarray(params, dtype=float)
        if w.shape != (self.topo.n_links,):
            raise InfeasibleParams(f"expected {self.topo.n_links} link weights")
        if np.any(w != np.round(w)) or np.any(w < WEIGHT_MIN) or np.any(w > WEIGHT_MAX):
            raise InfeasibleParams(f"weights must be integers in [{WEIGHT_MIN}, {WEIGHT_MAX}]")
        return Candidate.make(w.astype(float), self.metrics_of(w))

    def sample_objective(self, rng: np.random.Generator) -> ObjectiveInstance:
        u_lo = rng.uniform(0.3, 0.7)
        return ObjectiveInstance.make(
            "ospf",
            {
                "u_lo": u_lo,
                "u_hi": rng.uniform(u_lo + 0.1, 1.0),
                "a_lat": rng.uniform(0.1, 10.0),
                "a_util": rng.uniform(0.1, 10.0),
            },
        )

    def _local_search(self, score, w0: np.ndarray, iters: int) -> tuple[np.ndarray, float]:
        """Greedy best-improvement over single-link weight changes of
        +-{1,2,4,8}; stops early at a local optimum."""
        w = w0.copy()
        best = score(self.metrics_of(w))
        for _ in range(iters):
            best_w, best_gain = None, 0.0
            for link in range(len(w)):
                for delta in DELTAS:
                    for sign in (1, -1):
                        cand = w.copy()
                        cand[link] = min(WEIGHT_MAX, max(WEIGHT_MIN, cand[link] + sign * delta))
                        if cand[link] == w[link]:
                            continue
                        val = score(self.metrics_of(cand))
                        if val > best + 1e-12 and val - best > best_gain:
                            best_w, best_gain = cand, val - best
            if best_w is None:
                break
            w, best = best_w, best + best_gain
        return w, best

    def improve(self, o: ObjectiveInstance, floor: Candidate | None = None,
                restarts: int = 32, iters: int = 200,
                rng: np.random.Generator | None = None) -> Candidate:
        """Multistart local search maximizing the objective's reward. Not an
        exact argmax (the weight lattice is exponential); restarts keep it
        near the frontier."""
        rng = rng if rng is not None else np.random.default_rng(0)
        score = lambda m: eval_objective(o, m)
        best_w, best_val = None, -np.inf
        for _ in range(restarts):
            w0 = rng.integers(WEIGHT_MIN, WEIGHT_MAX + 1, size=self.topo.n_links).astype(float)
            w, val = self._local_search(score, w0, iters)
            if val > best_val:
                best_w, best_val = w, val
        cand = self.candidate(best_w)
        if floor is not None:
            if reward_cmp(best_val, eval_objective(o, floor.metrics)) <= 0:
                raise NotBetter
        return cand

    def syn_prog(self, rng: np.random.Generator, iters: int = 200) -> Candidate:
        """Random weight vector refined by local search on a random positive
        scalarization of (latency, utilization)."""
        lam = 10.0 ** rng.uniform(-1.0, 1.0, size=2)
        score = lambda m: float(lam @ np.asarray(m))
        w0 = rng.integers(WEIGHT_MIN, WEIGHT_MAX + 1, size=self.topo.n_links).astype(float)
        w, _ = self._local_search(score, w0, iters)
        return self.candidate(w)

    def describe_metrics(self, metrics) -> list[dict]:
        return [
            {"label": "avg path latency", "value": float(-metrics[0]), "unit": "weight units",
             "higher_better": False},
            {"label": "peak link utilization", "value": float(-metrics[1]), "unit": "",
             "higher_better": False},
        ]
