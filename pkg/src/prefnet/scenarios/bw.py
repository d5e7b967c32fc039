"""Bandwidth-allocation scenario: weighted proportional fairness across
traffic classes, maximizing sum of w_k * log(average allocation of class k)."""

from __future__ import annotations

import numpy as np

from ..netmodel import DemandMatrix, Topology
from ..solvers import LpProblem, LpStatus, VertexSet, lp_solve, maximize_concave
from .base import (
    Candidate,
    InfeasibleScenario,
    NotBetter,
    ObjectiveInstance,
    Scenario,
    TunnelSpace,
    eval_objective,
    reward_cmp,
)

HULL_DIRECTIONS = 128


class BwScenario(Scenario):
    kind = "bw"
    sortable = False

    def __init__(self, topo: Topology, dm: DemandMatrix, k_tunnels: int = 3):
        self.space = TunnelSpace(topo, dm, k_tunnels)
        self.n_classes = dm.n_classes
        counts = np.zeros(self.n_classes)
        self.class_of = np.array([f.cls for f in dm.flows])
        for c in self.class_of:
            counts[c] += 1
        if np.any(counts == 0):
            raise InfeasibleScenario("every class needs at least one flow")
        # avg = class_matrix @ served(alloc)
        self.class_matrix = np.zeros((self.n_classes, self.space.n_flows))
        for fi, c in enumerate(self.class_of):
            self.class_matrix[c, fi] = 1.0 / counts[c]
        # tiny per-tunnel floors keep every class average strictly positive
        self.alloc_lb = 1e-6 * self.space.demand[self.space.flow_of] / self.space.k
        self._hull: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def d(self) -> int:
        return self.n_classes

    def metrics_of(self, params) -> np.ndarray:
        alloc = np.asarray(params, dtype=float)
        return self.class_matrix @ self.space.served(alloc)

    def candidate(self, params) -> Candidate:
        alloc = np.asarray(params, dtype=float)
        self.space.check_feasible(alloc)
        return Candidate.make(alloc, self.metrics_of(alloc))

    def sample_objective(self, rng: np.random.Generator) -> ObjectiveInstance:
        return ObjectiveInstance.make(
            "bw", {"weights": rng.uniform(0.5, 8.0, size=self.n_classes)}
        )

    # -- the achievable class-average region, as an explicit vertex hull ----

    def hull(self) -> tuple[np.ndarray, np.ndarray]:
        """(avgs, allocs): vertices of the achievable class-average polytope
        together with one allocation realizing each. Built once from exact
        LPs over a deterministic direction set."""
        if self._hull is None:
            rng = np.random.default_rng(0)
            dirs = [np.ones(self.n_classes)]
            for i in range(self.n_classes):
                e = np.zeros(self.n_classes)
                e[i] = 1.0
                dirs.append(e)
                dirs.append(0.05 * np.ones(self.n_classes) + e)
            while len(dirs) < HULL_DIRECTIONS:
                dirs.append(rng.dirichlet(np.ones(self.n_classes)))
            rows = self.space.feasibility_rows()
            bounds = [(float(lb), None) for lb in self.alloc_lb]
            avgs, allocs, seen = [], [], set()
            for direction in dirs:
                c = (direction @ self.class_matrix)[self.space.flow_of]
                sol = lp_solve(LpProblem(self.space.n_tunnels, c, rows, list(bounds)))
                if sol.status is not LpStatus.OPTIMAL:
                    raise InfeasibleScenario(f"hull LP ended {sol.status}")
                avg = self.metrics_of(sol.x)
                key = tuple(np.round(avg, 9))
                if key not in seen:
                    seen.add(key)
                    avgs.append(avg)
                    allocs.append(sol.x)
            self._hull = (np.array(avgs), np.array(allocs))
        return self._hull

    def set_hull(self, avgs: np.ndarray, allocs: np.ndarray) -> None:
        """Install a precomputed hull (loaded from disk) to skip the LPs."""
        self._hull = (np.asarray(avgs, dtype=float), np.asarray(allocs, dtype=float))

    def improve(self, o: ObjectiveInstance, floor: Candidate | None = None) -> Candidate:
        """Frank-Wolfe over the hull, run in a lifted space whose points are
        (class averages | allocation) so the returned convex combination
        carries a realizing allocation along with its averages."""
        w = np.asarray(o["weights"])
        avgs, allocs = self.hull()
        lifted = np.hstack([avgs, allocs])
        K = self.n_classes

        def f(x):
            head = x[:K]
            if np.any(head <= 0):
                return -np.inf
            return float(w @ np.log(head))

        def grad(x):
            g = np.zeros(len(x))
            g[:K] = w / x[:K]
            return g

        x = maximize_concave(VertexSet(lifted), f, grad, tol=1e-6, max_iters=4000)
        cand = self.candidate(np.clip(x[K:], 0.0, None))
        if floor is not None:
            if reward_cmp(eval_objective(o, cand.metrics), eval_objective(o, floor.metrics)) <= 0:
                raise NotBetter
        return cand

    def syn_prog(self, rng: np.random.Generator) -> Candidate:
        return self.improve(self.sample_objective(rng), floor=None)

    def describe_metrics(self, metrics) -> list[dict]:
        return [
            {
                "label": f"class {k} avg allocation",
                "value": float(metrics[k]),
                "unit": "Mbps",
                "higher_better": True,
            }
            for k in range(self.n_classes)
        ]
