"""Multi-commodity-flow scenario: split each flow across its k shortest
tunnels to trade total throughput against allocation-weighted latency."""

from __future__ import annotations

import numpy as np

from ..netmodel import DemandMatrix, Topology
from ..solvers import Constraint, LpProblem, LpStatus, lp_solve
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


class McfScenario(Scenario):
    kind = "mcf"
    sortable = True

    def __init__(self, topo: Topology, dm: DemandMatrix, k_tunnels: int = 3):
        self.space = TunnelSpace(topo, dm, k_tunnels)
        self._extremes: tuple[float, float] | None = None

    @property
    def d(self) -> int:
        return 2

    def metrics_of(self, params) -> np.ndarray:
        alloc = np.asarray(params, dtype=float)
        return np.array([float(alloc.sum()), -float(self.space.pathweight @ alloc)])

    def candidate(self, params) -> Candidate:
        alloc = np.asarray(params, dtype=float)
        self.space.check_feasible(alloc)
        return Candidate.make(alloc, self.metrics_of(alloc))

    def extremes(self) -> tuple[float, float]:
        """(max throughput, max latency) over the feasible region; two LPs,
        cached."""
        if self._extremes is None:
            rows = self.space.feasibility_rows()
            n = self.space.n_tunnels
            maxes = []
            for c in (np.ones(n), self.space.pathweight):
                sol = lp_solve(LpProblem(n, c, rows))
                if sol.status is not LpStatus.OPTIMAL:
                    raise InfeasibleScenario(f"extreme LP ended {sol.status}")
                maxes.append(sol.objective_value)
            self._extremes = (maxes[0], maxes[1])
        return self._extremes

    def sample_objective(self, rng: np.random.Generator) -> ObjectiveInstance:
        max_t, max_l = self.extremes()
        w_t = rng.uniform(1.0, 10.0)
        w_l = rng.uniform(1.0, 10.0)
        return ObjectiveInstance.make(
            "mcf",
            {
                "w_t": w_t,
                "p_t": rng.uniform(0.0, 2.0 * w_t),
                "theta_t": rng.uniform(0.40, 0.95) * max_t,
                "w_l": w_l,
                "p_l": rng.uniform(0.0, 2.0 * w_l),
                "theta_l": rng.uniform(0.40, 0.95) * max_l,
            },
        )

    def improve(self, o: ObjectiveInstance, floor: Candidate | None = None) -> Candidate:
        """Exact argmax via the epigraph LP: hinge terms max(T-theta,0) and
        max(L-theta,0) become auxiliary variables u, v with T-u <= theta_t,
        L-v <= theta_l; their objective coefficients are -p_t, -p_l <= 0, so
        the optimum sets them to the hinge values."""
        p = o.param_dict()
        n = self.space.n_tunnels
        pw = self.space.pathweight
        rows = [
            Constraint(tuple(c.coeffs) + (0.0, 0.0), c.relation, c.rhs)
            for c in self.space.feasibility_rows()
        ]
        rows.append(Constraint(tuple(np.ones(n)) + (-1.0, 0.0), "<=", p["theta_t"]))
        rows.append(Constraint(tuple(pw) + (0.0, -1.0), "<=", p["theta_l"]))
        c_obj = np.concatenate(
            [np.full(n, p["w_t"]) - p["w_l"] * pw, [-p["p_t"], -p["p_l"]]]
        )
        sol = lp_solve(LpProblem(n + 2, c_obj, rows))
        if sol.status is not LpStatus.OPTIMAL:
            raise InfeasibleScenario(f"improve LP ended {sol.status}")
        cand = self.candidate(np.clip(sol.x[:n], 0.0, None))
        if floor is not None:
            if reward_cmp(eval_objective(o, cand.metrics), eval_objective(o, floor.metrics)) <= 0:
                raise NotBetter
        return cand

    def syn_prog(self, rng: np.random.Generator) -> Candidate:
        return self.improve(self.sample_objective(rng), floor=None)

    def describe_metrics(self, metrics) -> list[dict]:
        return [
            {"label": "throughput", "value": float(metrics[0]), "unit": "Mbps", "higher_better": True},
            {"label": "latency", "value": float(-metrics[1]), "unit": "Mbps-hops", "higher_better": False},
        ]
