"""Failure-robust allocation scenario: per-group guaranteed served fractions
under normal conditions (zn) and under the worst single physical link
failure (zf)."""

from __future__ import annotations

import zlib

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


def flow_group(src_name: str, dst_name: str, n_groups: int) -> int:
    """Stable partition of ordered node pairs into groups (crc32, not the
    per-process-salted builtin hash)."""
    return zlib.crc32(f"{src_name}>{dst_name}".encode()) % n_groups


class NfScenario(Scenario):
    kind = "nf"
    sortable = False

    def __init__(self, topo: Topology, dm: DemandMatrix, k_tunnels: int = 3, n_groups: int = 4):
        self.space = TunnelSpace(topo, dm, k_tunnels)
        self.n_groups = n_groups
        self.group_of = np.array(
            [flow_group(topo.nodes[f.src], topo.nodes[f.dst], n_groups) for f in dm.flows]
        )
        if len(np.unique(self.group_of)) != n_groups:
            raise InfeasibleScenario("some traffic group is empty; use fewer groups")
        # kill[l, t] = 1 if failing physical link l severs tunnel t (either direction)
        n_fail = topo.n_links
        inc = self.space.incidence
        self.kill = np.zeros((n_fail, self.space.n_tunnels))
        for l in range(n_fail):
            ids = (l,) if topo.directed else (2 * l, 2 * l + 1)
            self.kill[l] = np.minimum(inc[list(ids)].sum(axis=0), 1.0)

    @property
    def d(self) -> int:
        return 2 * self.n_groups

    def nf_evaluate(self, params) -> tuple[np.ndarray, np.ndarray]:
        """Exact (zn, zf) per group for an allocation vector."""
        alloc = np.asarray(params, dtype=float)
        sp = self.space
        frac = sp.served(alloc) / sp.demand
        zn = np.array([frac[self.group_of == g].min() for g in range(self.n_groups)])
        # served fraction per flow under each single failure
        lost = np.stack(
            [np.bincount(sp.flow_of, weights=alloc * row, minlength=sp.n_flows) for row in self.kill]
        )
        fail_frac = (sp.served(alloc) - lost) / sp.demand  # (n_fail, n_flows)
        zf = np.array([fail_frac[:, self.group_of == g].min() for g in range(self.n_groups)])
        return zn, zf

    def metrics_of(self, params) -> np.ndarray:
        zn, zf = self.nf_evaluate(params)
        return np.concatenate([zn, zf])

    def candidate(self, params) -> Candidate:
        alloc = np.asarray(params, dtype=float)
        self.space.check_feasible(alloc)
        return Candidate.make(alloc, self.metrics_of(alloc))

    def sample_objective(self, rng: np.random.Generator) -> ObjectiveInstance:
        return ObjectiveInstance.make(
            "nf",
            {
                "wn": rng.uniform(0.5, 8.0, size=self.n_groups),
                "wf": rng.uniform(0.5, 8.0, size=self.n_groups),
            },
        )

    def improve(self, o: ObjectiveInstance, floor: Candidate | None = None,
                max_rounds: int = 200, time_budget: float | None = 300.0) -> Candidate:
        """Exact argmax of sum(wn.zn + wf.zf) by LP with lazy failure rows.

        Variables are (alloc, zn, zf). All normal-condition rows are present
        from the start; failure rows (zf_i bounded by a specific flow's
        served fraction under a specific failure) are generated only when the
        relaxation overshoots the true zf, which keeps the tableau small. On
        exit the relaxation's optimum is feasible for the full LP, hence
        optimal for it.

        Rare weightings need so many failure rows that the growing tableau
        makes round after round of dense re-solves crawl; ``time_budget``
        (seconds, ``None`` = unlimited) turns those into InfeasibleScenario
        so a pool builder can resample instead of hanging."""
        import time as _time

        deadline = None if time_budget is None else _time.monotonic() + time_budget
        wn, wf = np.asarray(o["wn"]), np.asarray(o["wf"])
        sp, G = self.space, self.n_groups
        n, n_f = sp.n_tunnels, sp.n_flows
        nv = n + 2 * G

        def ext(coeffs_alloc, zn_part=None, zf_part=None):
            v = np.zeros(nv)
            v[:n] = coeffs_alloc
            if zn_part is not None:
                v[n : n + G] = zn_part
            if zf_part is not None:
                v[n + G :] = zf_part
            return tuple(v)

        rows = [Constraint(ext(np.asarray(c.coeffs)), c.relation, c.rhs)
                for c in sp.feasibility_rows()]
        for fi in range(n_f):
            tunnels_of_f = (sp.flow_of == fi).astype(float)
            e = np.zeros(G)
            e[self.group_of[fi]] = 1.0
            rows.append(Constraint(ext(-tunnels_of_f / sp.demand[fi], zn_part=e), "<=", 0.0))
        bounds = [(0.0, None)] * n + [(0.0, 1.0)] * (2 * G)
        c_obj = np.concatenate([np.zeros(n), wn, wf])

        alloc = np.zeros(n)
        seen_rows: set[tuple[int, int]] = set()
        rows_per_round = 10  # per overshooting group; keeps round counts low
        for _ in range(max_rounds):
            if deadline is not None and _time.monotonic() > deadline:
                raise InfeasibleScenario("improve exceeded its time budget")
            sol = lp_solve(LpProblem(nv, c_obj, rows, list(bounds)))
            if sol.status is not LpStatus.OPTIMAL:
                raise InfeasibleScenario(f"improve LP ended {sol.status}")
            alloc = np.clip(sol.x[:n], 0.0, None)
            lp_zf = sol.x[n + G :]
            _, true_zf = self.nf_evaluate(alloc)
            overshoot = [g for g in range(G) if lp_zf[g] > true_zf[g] + 1e-7]
            if not overshoot:
                break
            lost = np.stack(
                [np.bincount(sp.flow_of, weights=alloc * row, minlength=n_f)
                 for row in self.kill]
            )
            fail_frac = (sp.served(alloc) - lost) / sp.demand  # (n_fail, n_flows)
            added = False
            for g in overshoot:
                flows_g = np.flatnonzero(self.group_of == g)
                # Violation of each candidate row at the current optimum; the
                # most violated row is exactly the group's true zf argmin.
                gap = lp_zf[g] - fail_frac[:, flows_g]
                kept = 0
                for idx in np.argsort(gap, axis=None)[::-1]:
                    if kept >= rows_per_round or gap.flat[idx] <= 1e-7:
                        break
                    l_star, f_pos = np.unravel_index(idx, gap.shape)
                    fi = int(flows_g[f_pos])
                    key = (int(l_star), fi)
                    if key in seen_rows:
                        continue
                    seen_rows.add(key)
                    surviving = (sp.flow_of == fi) * (1.0 - self.kill[l_star])
                    e = np.zeros(G)
                    e[g] = 1.0
                    rows.append(
                        Constraint(ext(-surviving / sp.demand[fi], zf_part=e), "<=", 0.0)
                    )
                    added = True
                    kept += 1
            if not added:
                # Every violated row is already in the tableau, so the
                # remaining overshoot is solver-tolerance noise; the current
                # allocation is feasible and optimal to within it.
                break
        else:
            raise InfeasibleScenario("failure-row generation did not converge")

        cand = self.candidate(alloc)
        if floor is not None:
            if reward_cmp(eval_objective(o, cand.metrics), eval_objective(o, floor.metrics)) <= 0:
                raise NotBetter
        return cand

    def syn_prog(self, rng: np.random.Generator) -> Candidate:
        return self.improve(self.sample_objective(rng), floor=None)

    def describe_metrics(self, metrics) -> list[dict]:
        G = self.n_groups
        out = []
        for g in range(G):
            out.append({"label": f"group {g} normal fraction", "value": float(metrics[g]),
                        "unit": "", "higher_better": True})
        for g in range(G):
            out.append({"label": f"group {g} worst-failure fraction", "value": float(metrics[G + g]),
                        "unit": "", "higher_better": True})
        return out
