"""Regenerate the topology and demand fixtures shipped with the package.

The Abilene topology is the real Internet2 backbone (11 PoPs, 14 links,
OC-192 trunks with the one OC-48 Indianapolis-Atlanta link). The other
networks match the published node/link counts of their namesakes; their
exact wiring is a deterministic ring-plus-chords reconstruction, which is
all the experiments need (they depend on size and path diversity, not on
street addresses).

Run from the repository root:  python scripts/make_fixtures.py
"""

from __future__ import annotations

import json
import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from prefnet.netmodel import (  # noqa: E402
    demands_to_dict,
    generate_demands,
    topology_from_dict,
    topology_to_dict,
)

OUT = pathlib.Path(__file__).resolve().parents[1] / "src" / "prefnet" / "fixtures"

ABILENE_NODES = [
    "Seattle", "Sunnyvale", "LosAngeles", "Denver", "KansasCity", "Houston",
    "Indianapolis", "Chicago", "Atlanta", "WashingtonDC", "NewYork",
]

# (src, dst, capacity Mbps, weight): OC-192 everywhere except the OC-48
# Indianapolis-Atlanta link. Weights are small integers (coarse mileage
# buckets); keeping them near 1 keeps the latency metric on the same scale
# as throughput, which is what gives the objective templates a real
# throughput/latency tradeoff instead of latency dominating everywhere.
ABILENE_LINKS = [
    ("Seattle", "Sunnyvale", 9920, 1),
    ("Seattle", "Denver", 9920, 2),
    ("Sunnyvale", "LosAngeles", 9920, 1),
    ("Sunnyvale", "Denver", 9920, 2),
    ("LosAngeles", "Houston", 9920, 3),
    ("Denver", "KansasCity", 9920, 1),
    ("KansasCity", "Houston", 9920, 2),
    ("KansasCity", "Indianapolis", 9920, 1),
    ("Houston", "Atlanta", 9920, 2),
    ("Indianapolis", "Chicago", 9920, 1),
    ("Indianapolis", "Atlanta", 2480, 1),
    ("Chicago", "NewYork", 9920, 2),
    ("Atlanta", "WashingtonDC", 9920, 1),
    ("WashingtonDC", "NewYork", 9920, 1),
]


def ring_plus_chords(name: str, n_nodes: int, n_links: int, seed: int,
                     capacity_choices=(9920, 4960, 2480)) -> dict:
    """Connected topology with exact node/link counts: an n-cycle plus
    deterministic random chords, capacities drawn from trunk sizes."""
    assert n_links >= n_nodes, "need at least a cycle"
    rng = np.random.default_rng(seed)
    nodes = [f"{name.lower()}-{i:03d}" for i in range(n_nodes)]
    edges = {(i, (i + 1) % n_nodes) for i in range(n_nodes)}
    edges = {(min(a, b), max(a, b)) for a, b in edges}
    while len(edges) < n_links:
        a, b = sorted(rng.integers(0, n_nodes, size=2).tolist())
        if a != b and (a, b) not in edges:
            edges.add((a, b))
    links = []
    for a, b in sorted(edges):
        cap = int(rng.choice(capacity_choices, p=[0.6, 0.25, 0.15]))
        weight = int(rng.integers(1, 4))
        links.append({"src": nodes[a], "dst": nodes[b], "capacity": cap, "weight": weight})
    return {"name": name, "nodes": nodes, "links": links}


def write(path: pathlib.Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=1) + "\n")
    print(f"wrote {path}")


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)

    abilene = {
        "name": "Abilene",
        "nodes": ABILENE_NODES,
        "links": [
            {"src": s, "dst": d, "capacity": c, "weight": w}
            for s, d, c, w in ABILENE_LINKS
        ],
    }
    specs = {
        "abilene": abilene,
        "b4": ring_plus_chords("B4", 12, 19, seed=11),
        "cwix": ring_plus_chords("CWIX", 21, 26, seed=12),
        "btna": ring_plus_chords("BTNorthAmerica", 36, 76, seed=13),
        "tinet": ring_plus_chords("Tinet", 48, 84, seed=14),
        "deltacom": ring_plus_chords("Deltacom", 103, 151, seed=15),
        "ion": ring_plus_chords("Ion", 114, 135, seed=16),
    }
    for stem, raw in specs.items():
        topo = topology_from_dict(raw)
        write(OUT / f"{stem}.json", topology_to_dict(topo))

    demand_builds = [
        ("abilene", 1, 0.2, "abilene_demands_k1.json"),
        ("abilene", 2, 0.2, "abilene_demands_k2.json"),
        ("abilene", 4, 0.2, "abilene_demands_k4.json"),
        # High-load variants: total demand at 2x total capacity, so classes
        # genuinely compete.  Fairness-style objectives are degenerate on an
        # uncongested network (serving everything maximizes every class at
        # once); these are the fixtures the bandwidth-fairness pools use.
        ("abilene", 4, 2.0, "abilene_demands_k4_hi.json"),
        # Moderate-load variant for the failure-robustness pools: per-group
        # served fractions only trade off against each other under
        # contention, and single-link failures already bite at half load
        # while the exact argmax LP stays fast.
        ("abilene", 2, 0.5, "abilene_demands_k2_mid.json"),
        ("b4", 1, 0.2, "b4_demands_k1.json"),
        ("b4", 4, 0.2, "b4_demands_k4.json"),
        ("b4", 4, 2.0, "b4_demands_k4_hi.json"),
        ("cwix", 4, 0.2, "cwix_demands_k4.json"),
        ("btna", 1, 0.1, "btna_demands_k1.json"),
        ("tinet", 1, 0.1, "tinet_demands_k1.json"),
        ("deltacom", 1, 0.1, "deltacom_demands_k1.json"),
        ("ion", 1, 0.1, "ion_demands_k1.json"),
    ]
    for stem, k, scale, fname in demand_builds:
        topo = topology_from_dict(specs[stem])
        dm = generate_demands(topo, k_classes=k, scale=scale, seed=7)
        write(OUT / fname, demands_to_dict(dm, topo))

    ground_truths = {
        "gt_mcf.json": {
            "kind": "mcf",
            "params": {"w_t": 2, "p_t": 1, "theta_t": 350, "w_l": 9, "p_l": 10, "theta_l": 28},
        },
        "gt_bw.json": {"kind": "bw", "params": {"weights": [4.0, 2.0, 1.0, 0.5]}},
        "gt_nf.json": {"kind": "nf", "params": {"wn": [8.0, 4.0, 2.0, 1.0], "wf": [4.0, 3.0, 2.0, 1.0]}},
        "gt_ospf.json": {
            "kind": "ospf",
            "params": {"u_lo": 0.5, "u_hi": 0.8, "a_lat": 1.0, "a_util": 4.0},
        },
    }
    for fname, payload in ground_truths.items():
        write(OUT / fname, payload)


if __name__ == "__main__":
    main()
