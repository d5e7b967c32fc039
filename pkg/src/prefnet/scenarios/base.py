"""Shared scenario machinery: candidates, objective templates, reward
comparison, and the tunnel-allocation search space reused by several
scenarios."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..netmodel import DemandMatrix, Path, Topology, build_tunnels
from ..solvers import Constraint

REL_TOL = 1e-9


class DomainError(ValueError):
    """Objective evaluated outside its domain (e.g. log of a zero average)."""


class InfeasibleParams(ValueError):
    """Parameters violate the scenario's feasibility condition."""


class InfeasibleScenario(RuntimeError):
    """No feasible design exists at all."""


class NotBetter(Exception):
    """The optimum under this objective does not beat the floor candidate."""


def reward_cmp(a: float, b: float, rel: float = REL_TOL) -> int:
    """Three-way reward comparison with relative tolerance: 0 means the two
    rewards are indistinguishable, +1 means a > b, -1 means a < b."""
    if abs(a - b) <= rel * max(1.0, abs(a), abs(b)):
        return 0
    return 1 if a > b else -1


@dataclass(frozen=True)
class Candidate:
    """A feasible design: raw parameters plus its metric vector."""

    params: tuple[float, ...]
    metrics: tuple[float, ...]
    id: str

    @staticmethod
    def make(params: np.ndarray, metrics: np.ndarray) -> "Candidate":
        # float64 canonical form so ids survive serialization round-trips
        p = np.asarray(params, dtype=float)
        cid = hashlib.md5(p.tobytes()).hexdigest()[:16]
        return Candidate(tuple(float(v) for v in p), tuple(float(v) for v in metrics), cid)

    @property
    def params_array(self) -> np.ndarray:
        return np.asarray(self.params)


@dataclass(frozen=True)
class ObjectiveInstance:
    """One concrete objective: a scenario kind plus filled template slots."""

    kind: str
    params: tuple[tuple[str, Any], ...]

    @staticmethod
    def make(kind: str, params: dict[str, Any]) -> "ObjectiveInstance":
        def freeze(v):
            if isinstance(v, (list, tuple, np.ndarray)):
                return tuple(freeze(x) for x in v)
            return float(v)

        return ObjectiveInstance(kind, tuple(sorted((k, freeze(v)) for k, v in params.items())))

    def param_dict(self) -> dict[str, Any]:
        return dict(self.params)

    def __getitem__(self, key: str):
        return dict(self.params)[key]


def load_ground_truth(path: str) -> ObjectiveInstance:
    """Read a ground-truth objective JSON: {"kind": ..., "params": {...}}."""
    with open(path) as fh:
        raw = json.load(fh)
    return ObjectiveInstance.make(raw["kind"], raw["params"])


def eval_objective(o: ObjectiveInstance, m) -> float:
    """Reward of metric vector ``m`` under objective ``o`` (higher is better).

    Templates by kind (metric orientation is already beneficial, so
    latency/utilization are recovered by negating the stored entries):

    - mcf: w_t*T - p_t*max(T - theta_t, 0) - w_l*L - p_l*max(L - theta_l, 0)
    - bw: sum_k w_k * log(avg_k)
    - nf: sum_i wn_i * zn_i + wf_i * zf_i
    - ospf: negated piecewise cost; pure latency below u_lo, pure utilization
      above u_hi, the weighted mix in between
    """
    m = np.asarray(m, dtype=float)
    p = o.param_dict()
    if o.kind == "mcf":
        t, lat = m[0], -m[1]
        return float(
            p["w_t"] * t
            - p["p_t"] * max(t - p["theta_t"], 0.0)
            - p["w_l"] * lat
            - p["p_l"] * max(lat - p["theta_l"], 0.0)
        )
    if o.kind == "bw":
        w = np.asarray(p["weights"])
        if np.any(m <= 0):
            raise DomainError("bw objective needs strictly positive class averages")
        return float(w @ np.log(m))
    if o.kind == "nf":
        # Scalar weights broadcast uniformly across the groups.
        g = len(m) // 2
        wn = np.broadcast_to(np.atleast_1d(p["wn"]).astype(float), (g,))
        wf = np.broadcast_to(np.atleast_1d(p["wf"]).astype(float), (g,))
        return float(wn @ m[:g] + wf @ m[g:])
    if o.kind == "ospf":
        lat, util = -m[0], -m[1]
        if util > p["u_hi"]:
            cost = util
        elif util > p["u_lo"]:
            cost = p["a_lat"] * lat + p["a_util"] * util
        else:
            cost = lat
        return -float(cost)
    if o.kind == "linear":
        # Abstract objective: a plain weighted sum of the metric vector,
        # used for synthetic frontiers where true quality is computable.
        return float(np.dot(np.asarray(p["weights"]), m))
    if o.kind == "table":
        # Abstract objective: an explicit metric-vector -> reward lookup,
        # used for synthetic candidate sets detached from any network.
        table = dict(p["table"])
        key = tuple(float(v) for v in m)
        try:
            return float(table[key])
        except KeyError:
            raise DomainError(f"metric vector {key} not in table objective") from None
    raise ValueError(f"unknown objective kind {o.kind!r}")


class Scenario:
    """Interface every synthesis scenario implements. A scenario owns the
    feasible design space and the objective template family; rewards are
    always maximized."""

    kind: str
    sortable: bool

    @property
    def d(self) -> int:
        """Metric vector dimension."""
        raise NotImplementedError

    def metrics_of(self, params) -> np.ndarray:
        raise NotImplementedError

    def candidate(self, params) -> Candidate:
        """Feasibility-check ``params`` and package them with their metrics."""
        raise NotImplementedError

    def sample_objective(self, rng: np.random.Generator) -> ObjectiveInstance:
        raise NotImplementedError

    def improve(self, o: ObjectiveInstance, floor: Candidate | None = None) -> Candidate:
        """Best feasible design under ``o``; NotBetter if it fails to beat
        ``floor``."""
        raise NotImplementedError

    def syn_prog(self, rng: np.random.Generator) -> Candidate:
        """An arbitrary near-Pareto design (used to seed sessions/pools)."""
        raise NotImplementedError

    def describe_metrics(self, metrics) -> list[dict]:
        """Human-readable breakdown of a metric vector for interactive UIs."""
        raise NotImplementedError


@dataclass
class TunnelSpace:
    """Per-tunnel allocation variables over k shortest paths per flow, with
    the two feasibility families every allocation scenario shares: per-flow
    served <= demand, per-link load <= capacity."""

    topo: Topology
    dm: DemandMatrix
    k: int
    tunnels: list[list[Path]] = field(init=False)
    flow_of: np.ndarray = field(init=False)
    pathweight: np.ndarray = field(init=False)
    incidence: np.ndarray = field(init=False)  # (n directed links, n tunnels) 0/1
    demand: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.tunnels = build_tunnels(self.topo, self.dm, self.k)
        flow_of, weight, cols = [], [], []
        for fi, paths in enumerate(self.tunnels):
            for path in paths:
                flow_of.append(fi)
                weight.append(path.weight)
                cols.append(path.link_ids)
        self.flow_of = np.array(flow_of, dtype=int)
        self.pathweight = np.array(weight, dtype=float)
        self.incidence = np.zeros((len(self.topo.directed_links), len(flow_of)))
        for t, link_ids in enumerate(cols):
            for j in link_ids:
                self.incidence[j, t] = 1.0
        self.demand = self.dm.demands()

    @property
    def n_tunnels(self) -> int:
        return len(self.flow_of)

    @property
    def n_flows(self) -> int:
        return len(self.dm.flows)

    def served(self, alloc: np.ndarray) -> np.ndarray:
        return np.bincount(self.flow_of, weights=alloc, minlength=self.n_flows)

    def loads(self, alloc: np.ndarray) -> np.ndarray:
        return self.incidence @ alloc

    def check_feasible(self, alloc: np.ndarray, tol: float = 1e-6) -> None:
        alloc = np.asarray(alloc, dtype=float)
        if alloc.shape != (self.n_tunnels,):
            raise InfeasibleParams(f"expected {self.n_tunnels} tunnel allocations")
        if np.any(alloc < -tol):
            raise InfeasibleParams("negative allocation")
        served, demand = self.served(alloc), self.demand
        bad = np.flatnonzero(served > demand * (1 + tol) + tol)
        if bad.size:
            raise InfeasibleParams(f"flow {bad[0]} served {served[bad[0]]} > demand {demand[bad[0]]}")
        caps = self.topo.capacities()
        loads = self.loads(alloc)
        bad = np.flatnonzero(loads > caps * (1 + tol) + tol)
        if bad.size:
            raise InfeasibleParams(f"link {bad[0]} load {loads[bad[0]]} > capacity {caps[bad[0]]}")

    def feasibility_rows(self) -> list[Constraint]:
        rows = []
        for fi in range(self.n_flows):
            coeffs = np.where(self.flow_of == fi, 1.0, 0.0)
            rows.append(Constraint(tuple(coeffs), "<=", float(self.demand[fi])))
        caps = self.topo.capacities()
        for j in range(self.incidence.shape[0]):
            rows.append(Constraint(tuple(self.incidence[j]), "<=", float(caps[j])))
        return rows
