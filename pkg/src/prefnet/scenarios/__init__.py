"""The four synthesis scenarios plus their shared candidate/objective types."""

from __future__ import annotations

from ..netmodel import DemandMatrix, Topology
from .base import (  # noqa: F401
    Candidate,
    DomainError,
    InfeasibleParams,
    InfeasibleScenario,
    NotBetter,
    ObjectiveInstance,
    Scenario,
    TunnelSpace,
    eval_objective,
    load_ground_truth,
    reward_cmp,
)
from .bw import BwScenario  # noqa: F401
from .mcf import McfScenario  # noqa: F401
from .nf import NfScenario, flow_group  # noqa: F401
from .ospf import OspfScenario, ecmp_route  # noqa: F401


def make_scenario(kind: str, topo: Topology, dm: DemandMatrix, **kwargs) -> Scenario:
    """Factory keyed by scenario kind name."""
    table = {"mcf": McfScenario, "bw": BwScenario, "nf": NfScenario, "ospf": OspfScenario}
    if kind not in table:
        raise ValueError(f"unknown scenario {kind!r}; expected one of {sorted(table)}")
    return table[kind](topo, dm, **kwargs)


def metrics_of(s: Scenario, params):
    return s.metrics_of(params)


def sample_objective(s: Scenario, rng) -> ObjectiveInstance:
    return s.sample_objective(rng)


def syn_prog(s: Scenario, rng) -> Candidate:
    return s.syn_prog(rng)


def improve(s: Scenario, o: ObjectiveInstance, floor: Candidate | None = None) -> Candidate:
    return s.improve(o, floor)
