"""Network model: topologies, traffic demand matrices, and path enumeration.

Topologies are declared as JSON (see :func:`load_topology`); an undirected
input edge is expanded into two directed links with equal capacity and
weight, and all routing/allocation code works on the directed expansion.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np


class ValidationError(ValueError):
    """A topology or demand file violates a structural invariant."""


def fixture_path(name: str) -> str:
    """Absolute path of a bundled fixture file (e.g. ``"abilene.json"``)."""
    from importlib.resources import files

    return str(files("prefnet").joinpath("fixtures", name))


class Unreachable(ValueError):
    """No path exists between the requested endpoints."""


@dataclass(frozen=True)
class Link:
    """One directed link. ``src``/``dst`` are node indices."""

    src: int
    dst: int
    capacity: float
    weight: int


@dataclass(frozen=True)
class Flow:
    """One demand entry: traffic of one class between an ordered node pair."""

    src: int
    dst: int
    cls: int
    demand: float


@dataclass
class Topology:
    """A named network. ``links`` holds the declared edges; ``directed_links``
    is the directed expansion every algorithm operates on."""

    name: str
    nodes: list[str]
    links: list[Link]
    directed: bool = False
    directed_links: list[Link] = field(init=False, repr=False)
    out_links: list[list[int]] = field(init=False, repr=False)
    in_links: list[list[int]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = len(self.nodes)
        for i, ln in enumerate(self.links):
            if ln.src == ln.dst:
                raise ValidationError(f"link {i} ({self.nodes[ln.src]}) is a self-loop")
            if not (0 <= ln.src < n and 0 <= ln.dst < n):
                raise ValidationError(f"link {i} references an undeclared node")
            if not ln.capacity > 0:
                raise ValidationError(
                    f"link {i} {self.nodes[ln.src]}->{self.nodes[ln.dst]} has capacity {ln.capacity}"
                )
            if int(ln.weight) != ln.weight or ln.weight < 1:
                raise ValidationError(
                    f"link {i} {self.nodes[ln.src]}->{self.nodes[ln.dst]} has weight {ln.weight}; "
                    "weights are integers >= 1"
                )
        if self.directed:
            expanded = list(self.links)
        else:
            expanded = []
            for ln in self.links:
                expanded.append(ln)
                expanded.append(Link(ln.dst, ln.src, ln.capacity, ln.weight))
        self.directed_links = expanded
        self.out_links = [[] for _ in range(n)]
        self.in_links = [[] for _ in range(n)]
        for j, ln in enumerate(expanded):
            self.out_links[ln.src].append(j)
            self.in_links[ln.dst].append(j)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_links(self) -> int:
        return len(self.links)

    def node_id(self, name: str) -> int:
        try:
            return self.nodes.index(name)
        except ValueError:
            raise ValidationError(f"unknown node {name!r}") from None

    def degree(self, node: int) -> int:
        """Number of distinct physical neighbors of ``node``."""
        neigh = {ln.dst for ln in self.links if ln.src == node}
        neigh |= {ln.src for ln in self.links if ln.dst == node}
        return len(neigh)

    def capacities(self) -> np.ndarray:
        return np.array([ln.capacity for ln in self.directed_links])

    def weights(self) -> np.ndarray:
        return np.array([ln.weight for ln in self.directed_links], dtype=float)

    def total_capacity(self) -> float:
        return float(sum(ln.capacity for ln in self.directed_links))


@dataclass
class DemandMatrix:
    """Per-class traffic demands; one flow per ordered node pair per class."""

    n_classes: int
    flows: list[Flow]

    def __post_init__(self) -> None:
        if self.n_classes < 1:
            raise ValidationError("need at least one traffic class")
        seen: set[tuple[int, int, int]] = set()
        for f in self.flows:
            if f.src == f.dst:
                raise ValidationError(f"flow {f} has src == dst")
            if not (0 <= f.cls < self.n_classes):
                raise ValidationError(f"flow {f} has class outside [0, {self.n_classes})")
            if not (np.isfinite(f.demand) and f.demand >= 0):
                raise ValidationError(f"flow {f} has invalid demand")
            key = (f.src, f.dst, f.cls)
            if key in seen:
                raise ValidationError(f"duplicate flow entry {key}")
            seen.add(key)

    def demands(self) -> np.ndarray:
        return np.array([f.demand for f in self.flows])

    def total_demand(self) -> float:
        return float(sum(f.demand for f in self.flows))


def load_topology(path: str) -> Topology:
    """Load and validate a topology JSON file.

    Format: ``{"name": str, "nodes": [str], "links": [{"src": str, "dst": str,
    "capacity": number, "weight": int}], "directed": bool?}``. Optional
    ``n_nodes``/``n_links`` headers are cross-checked when present.
    """
    with open(path) as fh:
        raw = json.load(fh)
    return topology_from_dict(raw)


def topology_from_dict(raw: dict) -> Topology:
    nodes = list(raw["nodes"])
    if len(set(nodes)) != len(nodes):
        raise ValidationError("duplicate node names")
    index = {name: i for i, name in enumerate(nodes)}

    def _node(ref) -> int:
        if isinstance(ref, str):
            if ref not in index:
                raise ValidationError(f"link references unknown node {ref!r}")
            return index[ref]
        return int(ref)

    links = [
        Link(_node(ln["src"]), _node(ln["dst"]), float(ln["capacity"]), int(ln["weight"]))
        for ln in raw["links"]
    ]
    topo = Topology(
        name=raw.get("name", "unnamed"),
        nodes=nodes,
        links=links,
        directed=bool(raw.get("directed", False)),
    )
    if "n_nodes" in raw and raw["n_nodes"] != topo.n_nodes:
        raise ValidationError(f"declared n_nodes={raw['n_nodes']} but found {topo.n_nodes}")
    if "n_links" in raw and raw["n_links"] != topo.n_links:
        raise ValidationError(f"declared n_links={raw['n_links']} but found {topo.n_links}")
    return topo


def topology_to_dict(topo: Topology) -> dict:
    return {
        "name": topo.name,
        "n_nodes": topo.n_nodes,
        "n_links": topo.n_links,
        "directed": topo.directed,
        "nodes": list(topo.nodes),
        "links": [
            {
                "src": topo.nodes[ln.src],
                "dst": topo.nodes[ln.dst],
                "capacity": ln.capacity,
                "weight": ln.weight,
            }
            for ln in topo.links
        ],
    }


def load_demands(path: str, topo: Topology) -> DemandMatrix:
    """Load a demand JSON file: ``{"classes": int, "flows": [{"src", "dst",
    "class", "demand"}]}`` with node names for src/dst."""
    with open(path) as fh:
        raw = json.load(fh)
    return demands_from_dict(raw, topo)


def demands_from_dict(raw: dict, topo: Topology) -> DemandMatrix:
    flows = [
        Flow(topo.node_id(f["src"]), topo.node_id(f["dst"]), int(f["class"]), float(f["demand"]))
        for f in raw["flows"]
    ]
    return DemandMatrix(n_classes=int(raw["classes"]), flows=flows)


def demands_to_dict(dm: DemandMatrix, topo: Topology) -> dict:
    return {
        "classes": dm.n_classes,
        "flows": [
            {
                "src": topo.nodes[f.src],
                "dst": topo.nodes[f.dst],
                "class": f.cls,
                "demand": f.demand,
            }
            for f in dm.flows
        ],
    }


def generate_demands(topo: Topology, k_classes: int = 1, scale: float = 0.2, seed: int = 0) -> DemandMatrix:
    """Gravity-model demands: one flow per ordered node pair per class,
    demand proportional to degree(src)*degree(dst), total normalized to
    ``scale * total directed capacity`` and split evenly across classes.

    The model is a pure function of its arguments; ``seed`` is accepted for
    interface stability and provenance but does not perturb the values.
    """
    if k_classes < 1:
        raise ValidationError("k_classes must be >= 1")
    if not scale > 0:
        raise ValidationError("scale must be positive")
    del seed
    deg = np.array([topo.degree(v) for v in range(topo.n_nodes)], dtype=float)
    pair_weight = {}
    for s in range(topo.n_nodes):
        for d in range(topo.n_nodes):
            if s != d:
                pair_weight[(s, d)] = deg[s] * deg[d]
    total_weight = sum(pair_weight.values())
    budget = scale * topo.total_capacity()
    flows = [
        Flow(s, d, cls, budget * w / (total_weight * k_classes))
        for (s, d), w in sorted(pair_weight.items())
        for cls in range(k_classes)
    ]
    return DemandMatrix(n_classes=k_classes, flows=flows)


# ---------------------------------------------------------------------------
# Path enumeration


@dataclass(frozen=True)
class Path:
    """A loop-free directed walk: node sequence plus the traversed link ids."""

    nodes: tuple[int, ...]
    link_ids: tuple[int, ...]
    weight: float


def _dijkstra_lex(topo: Topology, src: int, dst: int,
                  banned_nodes: frozenset[int] = frozenset(),
                  banned_links: frozenset[int] = frozenset()) -> Path | None:
    """Shortest src->dst path by total weight; ties resolved toward the
    lexicographically smallest node sequence. The heap carries full node
    tuples, which keeps tie-breaking exact (fine at the graph sizes where
    Yen's algorithm is used)."""
    heap: list[tuple[float, tuple[int, ...], tuple[int, ...]]] = [(0.0, (src,), ())]
    settled: set[int] = set()
    while heap:
        cost, nodes, link_ids = heapq.heappop(heap)
        here = nodes[-1]
        if here == dst:
            return Path(nodes, link_ids, cost)
        if here in settled:
            continue
        settled.add(here)
        for j in topo.out_links[here]:
            if j in banned_links:
                continue
            ln = topo.directed_links[j]
            if ln.dst in settled or ln.dst in banned_nodes or ln.dst in nodes:
                continue
            heapq.heappush(heap, (cost + ln.weight, nodes + (ln.dst,), link_ids + (j,)))
    return None


def k_shortest_paths(topo: Topology, src: int, dst: int, k: int) -> list[Path]:
    """Up to ``k`` loop-free src->dst paths in nondecreasing total weight
    (Yen's algorithm); equal-weight candidates ordered by node sequence."""
    if src == dst:
        raise ValidationError("src == dst")
    if k < 1:
        raise ValidationError("k must be >= 1")
    first = _dijkstra_lex(topo, src, dst)
    if first is None:
        raise Unreachable(f"{topo.nodes[src]} cannot reach {topo.nodes[dst]}")
    found = [first]
    candidates: list[tuple[float, tuple[int, ...], Path]] = []
    seen_nodes = {first.nodes}
    while len(found) < k:
        prev = found[-1]
        for i in range(len(prev.nodes) - 1):
            spur = prev.nodes[i]
            root_nodes = prev.nodes[: i + 1]
            root_links = prev.link_ids[:i]
            banned_links = {
                p.link_ids[i] for p in found
                if len(p.nodes) > i + 1 and p.nodes[: i + 1] == root_nodes
            }
            banned_nodes = frozenset(root_nodes[:-1])
            spur_path = _dijkstra_lex(topo, spur, dst, banned_nodes, frozenset(banned_links))
            if spur_path is None:
                continue
            nodes = root_nodes[:-1] + spur_path.nodes
            if nodes in seen_nodes or any(c[1] == nodes for c in candidates):
                continue
            link_ids = root_links + spur_path.link_ids
            weight = sum(topo.directed_links[j].weight for j in link_ids)
            heapq.heappush(candidates, (weight, nodes, Path(nodes, link_ids, weight)))
        if not candidates:
            break
        _, nodes, path = heapq.heappop(candidates)
        found.append(path)
        seen_nodes.add(nodes)
    return found


def build_tunnels(topo: Topology, dm: DemandMatrix, k: int) -> list[list[Path]]:
    """Per-flow tunnel sets: up to ``k`` shortest paths per flow, cached by
    node pair (all classes of a pair share tunnels)."""
    cache: dict[tuple[int, int], list[Path]] = {}
    out = []
    for f in dm.flows:
        key = (f.src, f.dst)
        if key not in cache:
            cache[key] = k_shortest_paths(topo, f.src, f.dst, k)
        out.append(cache[key])
    return out


def single_shortest_paths(topo: Topology, dm: DemandMatrix) -> list[list[Path]]:
    """One shortest path per flow via an all-pairs sweep; the fast variant
    used on large topologies where per-pair Yen enumeration is unnecessary."""
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra as csgraph_dijkstra

    n = topo.n_nodes
    rows = [ln.src for ln in topo.directed_links]
    cols = [ln.dst for ln in topo.directed_links]
    vals = [float(ln.weight) for ln in topo.directed_links]
    # keep the lightest parallel link if any duplicates exist
    graph = csr_matrix((vals, (rows, cols)), shape=(n, n))
    dist, pred = csgraph_dijkstra(graph, directed=True, return_predecessors=True)
    link_of: dict[tuple[int, int], int] = {}
    for j, ln in enumerate(topo.directed_links):
        key = (ln.src, ln.dst)
        if key not in link_of or ln.weight < topo.directed_links[link_of[key]].weight:
            link_of[key] = j
    cache: dict[tuple[int, int], list[Path]] = {}
    out = []
    for f in dm.flows:
        key = (f.src, f.dst)
        if key not in cache:
            if not np.isfinite(dist[f.src, f.dst]):
                raise Unreachable(f"{topo.nodes[f.src]} cannot reach {topo.nodes[f.dst]}")
            nodes = [f.dst]
            while nodes[-1] != f.src:
                nodes.append(int(pred[f.src, nodes[-1]]))
            nodes.reverse()
            link_ids = tuple(link_of[(a, b)] for a, b in zip(nodes, nodes[1:]))
            cache[key] = [Path(tuple(nodes), link_ids, float(dist[f.src, f.dst]))]
        out.append(cache[key])
    return out
