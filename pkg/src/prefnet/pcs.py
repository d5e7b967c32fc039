"""Pareto candidate sets: the learner's unified search space.

A :class:`ParetoCandidateSet` is a finite partial map from objective
instances to candidates in which every entry is effectively optimal among
the mapped candidates under its own objective.  The set doubles as a voting
committee: responses to queries are turned into :class:`PreferenceRecord`
constraints that prune objectives (and thereby candidates) from the map.

Candidates enter the map either from a precomputed :class:`Pool` of
(objective, optimal-design) pairs or from a live generator that synthesizes
them on the fly against the scenario's solvers.
"""

from __future__ import annotations

import gzip
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .scenarios import (
    Candidate,
    InfeasibleScenario,
    NotBetter,
    ObjectiveInstance,
    Scenario,
    eval_objective,
    make_scenario,
    reward_cmp,
)

GT = "GT"
LT = "LT"
EQ = "EQ"
LEQ = "LEQ"

_RELATIONS = frozenset({GT, LT, EQ, LEQ})


class Unsatisfiable(Exception):
    """A preference emptied a non-empty candidate set: no remaining objective
    is consistent with every recorded preference."""


@dataclass(frozen=True)
class PreferenceRecord:
    """One constraint on the hidden ranking: how the teacher ordered the two
    metric vectors. ``LEQ`` is the complement of a strict acceptance (a
    rejected proposal means "not strictly better")."""

    lhs: tuple[float, ...]
    rhs: tuple[float, ...]
    relation: str
    source: int = 0

    def __post_init__(self) -> None:
        if self.relation not in _RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        if len(self.lhs) != len(self.rhs):
            raise ValueError("metric vectors of mismatched dimension")

    def to_dict(self) -> dict:
        return {
            "lhs": list(self.lhs),
            "rhs": list(self.rhs),
            "relation": self.relation,
            "source": self.source,
        }


def satisfies(o: ObjectiveInstance, record: PreferenceRecord) -> bool:
    """Does objective ``o`` order the record's metric vectors the same way the
    teacher did?  Rewards within relative tolerance count as equal."""
    sign = reward_cmp(eval_objective(o, record.lhs), eval_objective(o, record.rhs))
    if record.relation == GT:
        return sign > 0
    if record.relation == LT:
        return sign < 0
    if record.relation == EQ:
        return sign == 0
    return sign <= 0  # LEQ


def satisfies_all(o: ObjectiveInstance, records: Iterable[PreferenceRecord]) -> bool:
    return all(satisfies(o, r) for r in records)


class ParetoCandidateSet:
    """Partial map objective -> candidate, every entry optimal under its own
    objective among all mapped candidates (ties broken toward the
    lexicographically smaller metric vector).

    The set owns the list of preference records applied to it, so ensemble
    replicas can each carry their own (records, entries) pair.
    """

    def __init__(self) -> None:
        self._entries: dict[ObjectiveInstance, Candidate] = {}
        self._records: list[PreferenceRecord] = []
        self._reward_cache: dict[tuple[ObjectiveInstance, str], float] = {}

    # ------------------------------------------------------------------ views

    @property
    def records(self) -> tuple[PreferenceRecord, ...]:
        return tuple(self._records)

    @property
    def domain(self) -> tuple[ObjectiveInstance, ...]:
        return tuple(self._entries)

    def entry(self, o: ObjectiveInstance) -> Candidate:
        return self._entries[o]

    def items(self):
        return self._entries.items()

    def image(self) -> dict[str, Candidate]:
        """Distinct candidates currently mapped, keyed by candidate id."""
        return {c.id: c for c in self._entries.values()}

    @property
    def image_size(self) -> int:
        return len({c.id for c in self._entries.values()})

    def __len__(self) -> int:
        return len(self._entries)

    def reward(self, o: ObjectiveInstance, c: Candidate) -> float:
        key = (o, c.id)
        try:
            return self._reward_cache[key]
        except KeyError:
            r = eval_objective(o, c.metrics)
            self._reward_cache[key] = r
            return r

    def copy(self) -> "ParetoCandidateSet":
        """Independent entries/records; the pure reward memo is shared."""
        dup = ParetoCandidateSet()
        dup._entries = dict(self._entries)
        dup._records = list(self._records)
        dup._reward_cache = self._reward_cache
        return dup

    # ------------------------------------------------------------- mutation

    def _beats(self, o: ObjectiveInstance, a: Candidate, b: Candidate) -> bool:
        """Strictly better under ``o``: higher reward, or equal reward with a
        lexicographically smaller metric vector."""
        sign = reward_cmp(self.reward(o, a), self.reward(o, b))
        if sign != 0:
            return sign > 0
        return a.metrics < b.metrics

    def insert(self, o: ObjectiveInstance, c: Candidate) -> Candidate:
        """Map ``o`` to the best of {``c``} and the current image under ``o``.

        If ``c`` does enter the image, entries of other objectives that
        ``c`` beats under *their* objective are upgraded to ``c``, keeping
        every entry optimal among the mapped candidates. Returns the
        candidate actually mapped to ``o``.
        """
        best = c
        for cand in sorted(self.image().values(), key=lambda x: (x.metrics, x.id)):
            if self._beats(o, cand, best):
                best = cand
        self._entries[o] = best
        if best.id == c.id:
            for o2, e2 in self._entries.items():
                if o2 != o and self._beats(o2, c, e2):
                    self._entries[o2] = c
        return best

    def update(self, record: PreferenceRecord) -> int:
        """Append a preference and drop every objective inconsistent with it.

        Returns the number of objectives removed. Raises
        :class:`Unsatisfiable` (after committing the prune and the record)
        when the preference emptied a non-empty domain.
        """
        survivors = {o: c for o, c in self._entries.items() if satisfies(o, record)}
        removed = len(self._entries) - len(survivors)
        was_nonempty = bool(self._entries)
        self._entries = survivors
        self._records.append(record)
        if was_nonempty and not survivors:
            raise Unsatisfiable(f"no objective satisfies all {len(self._records)} preferences")
        return removed

    def restrict_prefer_better(self, c: Candidate) -> int:
        """Keep only objectives that still map a candidate strictly better
        than ``c`` (the accepted new running best). Emptying the set here is
        normal — it means no committee member sees room to improve."""
        survivors = {
            o: e
            for o, e in self._entries.items()
            if reward_cmp(self.reward(o, e), self.reward(o, c)) > 0
        }
        removed = len(self._entries) - len(survivors)
        self._entries = survivors
        return removed

    def check_invariant(self) -> None:
        """Every entry is optimal among mapped candidates under its own
        objective (used by tests; raises AssertionError on violation)."""
        image = list(self.image().values())
        for o, e in self._entries.items():
            for cand in image:
                assert reward_cmp(self.reward(o, cand), self.reward(o, e)) <= 0, (
                    f"entry for {o.kind} objective is not optimal in the image"
                )


# ---------------------------------------------------------------------- pools


@dataclass
class Pool:
    """A precomputed list of (objective, optimal candidate) pairs drawn from
    one scenario, with the metadata needed to rebuild that scenario."""

    scenario: dict
    seed: int
    pairs: list[tuple[ObjectiveInstance, Candidate]]

    def __len__(self) -> int:
        return len(self.pairs)

    def candidates(self) -> list[Candidate]:
        return [c for _, c in self.pairs]

    def to_dict(self) -> dict:
        # Candidates are stored once in a table and referenced by index, so a
        # pool whose optima repeat (common on large networks, where many
        # objectives share a winner) does not serialize each winner per pair.
        cand_ix: dict[tuple, int] = {}
        cands: list[dict] = []
        pairs = []
        for o, c in self.pairs:
            key = tuple(float(v) for v in c.params)
            i = cand_ix.get(key)
            if i is None:
                i = cand_ix[key] = len(cands)
                cands.append({"params": list(c.params), "metrics": list(c.metrics)})
            pairs.append({"objective": {"kind": o.kind, "params": _param_json(o)}, "cand": i})
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "candidates": cands,
            "pairs": pairs,
        }

    def save(self, path: str) -> None:
        data = json.dumps(self.to_dict(), separators=(",", ":"), sort_keys=True)
        if str(path).endswith(".gz"):
            # Anonymous member + fixed mtime so identical pools are
            # byte-identical on disk.
            with open(path, "wb") as raw:
                with gzip.GzipFile(filename="", fileobj=raw, mode="wb", mtime=0) as fh:
                    fh.write(data.encode())
        else:
            with open(path, "w") as fh:
                fh.write(data)


def _param_json(o: ObjectiveInstance) -> dict:
    def thaw(v):
        return list(thaw(x) for x in v) if isinstance(v, tuple) else v

    return {k: thaw(v) for k, v in o.params}


def load_pool(path: str) -> Pool:
    if str(path).endswith(".gz"):
        with gzip.open(path, "rt") as fh:
            raw = json.load(fh)
    else:
        with open(path) as fh:
            raw = json.load(fh)
    table = [
        Candidate.make(np.asarray(d["params"]), np.asarray(d["metrics"]))
        for d in raw.get("candidates", [])
    ]
    pairs = []
    for p in raw["pairs"]:
        o = ObjectiveInstance.make(p["objective"]["kind"], p["objective"]["params"])
        if "cand" in p:
            c = table[p["cand"]]
        else:  # older inline layout
            c = Candidate.make(np.asarray(p["params"]), np.asarray(p["metrics"]))
        pairs.append((o, c))
    return Pool(scenario=raw["scenario"], seed=raw["seed"], pairs=pairs)


def scenario_from_pool(pool: Pool, fixture_dir: str | None = None) -> Scenario:
    """Rebuild the scenario a pool was generated from, resolving topology and
    demand files relative to ``fixture_dir`` when the stored paths are bare
    names."""
    import os

    from .netmodel import load_demands, load_topology

    meta = dict(pool.scenario)
    kind = meta.pop("kind")

    def resolve(name: str) -> str:
        if fixture_dir and not os.path.exists(name):
            return os.path.join(fixture_dir, name)
        return name

    topo = load_topology(resolve(meta.pop("topology")))
    dm = load_demands(resolve(meta.pop("demands")), topo)
    return make_scenario(kind, topo, dm, **meta)


def build_pool(
    s: Scenario,
    size: int,
    seed: int,
    scenario_meta: dict | None = None,
    progress: bool = False,
) -> Pool:
    """``size`` (objective, optimum) pairs, deterministic per seed.

    Each pair gets its own child RNG stream, so the build order (or a
    parallel split across workers) cannot change the result. An objective
    whose exact solve fails (or blows its scenario's solve budget) is
    resampled from the same stream a few times before the build gives up.
    """
    import inspect

    if size < 1:
        raise ValueError("pool size must be >= 1")
    takes_rng = "rng" in inspect.signature(s.improve).parameters
    children = np.random.SeedSequence(seed).spawn(size)
    pairs: list[tuple[ObjectiveInstance, Candidate]] = []
    for i, child in enumerate(children):
        rng = np.random.default_rng(child)
        for attempt in range(5):
            o = s.sample_objective(rng)
            try:
                c = s.improve(o, rng=rng) if takes_rng else s.improve(o)
                break
            except InfeasibleScenario:
                if attempt == 4:
                    raise
        pairs.append((o, c))
        if progress and (i + 1) % 25 == 0:
            print(f"  pool pair {i + 1}/{size}", flush=True)
    meta = scenario_meta if scenario_meta is not None else {"kind": s.kind}
    return Pool(scenario=meta, seed=seed, pairs=pairs)


# ------------------------------------------------------------ candidate sources


def _mirror_insert(
    mirrors: Sequence[ParetoCandidateSet], o: ObjectiveInstance, c: Candidate
) -> None:
    for m in mirrors:
        if satisfies_all(o, m.records):
            m.insert(o, c)


class PoolSource:
    """Feeds a session from a precomputed pool in a seeded shuffled order.

    A pair is consumed once inserted. Pairs that currently fail a filter —
    the objective contradicts a recorded preference, or fails to prefer its
    candidate over the running best — stay available: the preference set in
    force can shrink (ensemble takeover) and the running best changes, so
    eligibility is re-checked on every refill.
    """

    def __init__(self, pool: Pool, rng: np.random.Generator) -> None:
        self.pool = pool
        self._order = [int(i) for i in rng.permutation(len(pool.pairs))]
        self._used: set[int] = set()

    @property
    def exhausted(self) -> bool:
        return len(self._used) >= len(self.pool.pairs)

    def initial_candidate(self) -> Candidate | None:
        """The session's starting design: the first unused pair's candidate
        (consumed)."""
        for idx in self._order:
            if idx not in self._used:
                self._used.add(idx)
                return self.pool.pairs[idx][1]
        return None

    def next_candidate(self) -> Candidate | None:
        """Next unused pair's candidate with no filtering at all (the
        no-pruning baseline draws these directly)."""
        return self.initial_candidate()

    def refill(
        self,
        g: ParetoCandidateSet,
        r_best: Candidate | None,
        budget: int,
        mirrors: Sequence[ParetoCandidateSet] = (),
    ) -> int:
        inserted = 0
        for idx in self._order:
            if inserted >= budget:
                break
            if idx in self._used:
                continue
            o, c = self.pool.pairs[idx]
            if not satisfies_all(o, g.records):
                continue
            if r_best is not None and reward_cmp(
                eval_objective(o, c.metrics), eval_objective(o, r_best.metrics)
            ) <= 0:
                continue
            g.insert(o, c)
            _mirror_insert(mirrors, o, c)
            self._used.add(idx)
            inserted += 1
        return inserted


class FlySource:
    """Synthesizes (objective, candidate) pairs live against the scenario's
    samplers and solvers instead of a precomputed pool.

    Per slot: draw a fresh near-Pareto design, then rejection-sample an
    objective consistent with all recorded preferences that prefers the new
    design over the running best. If none of the consistent draws prefers
    it, fall back to the first consistent draw and optimize under it,
    requiring the optimum to beat the running best.
    """

    def __init__(
        self,
        scenario: Scenario,
        rng: np.random.Generator,
        improve_after_syn: bool = True,
        max_draws: int = 5000,
        max_failures: int = 16,
    ) -> None:
        self.scenario = scenario
        self.rng = rng
        self.improve_after_syn = improve_after_syn
        self.max_draws = max_draws
        self.max_failures = max_failures

    @property
    def exhausted(self) -> bool:
        return False

    def initial_candidate(self) -> Candidate:
        return self.scenario.syn_prog(self.rng)

    def next_candidate(self) -> Candidate:
        """A fresh random objective's optimum (no-pruning baseline draws)."""
        o = self.scenario.sample_objective(self.rng)
        return self.scenario.improve(o)

    def refill(
        self,
        g: ParetoCandidateSet,
        r_best: Candidate | None,
        budget: int,
        mirrors: Sequence[ParetoCandidateSet] = (),
    ) -> int:
        inserted = 0
        failures = 0
        # A failed slot (no consistent objective found, or nothing beats the
        # running best under the fallback draw) is retried with fresh draws;
        # the failure allowance is this source's stand-in for a wall-clock
        # generation timeout.
        while inserted < budget and failures < self.max_failures:
            pair = self._one_slot(g.records, r_best)
            if pair is None:
                failures += 1
                continue
            g.insert(*pair)
            _mirror_insert(mirrors, *pair)
            inserted += 1
        return inserted

    def _one_slot(
        self, records: Sequence[PreferenceRecord], r_best: Candidate | None
    ) -> tuple[ObjectiveInstance, Candidate] | None:
        s = self.scenario
        c = s.syn_prog(self.rng)
        preferring: ObjectiveInstance | None = None
        fallback: ObjectiveInstance | None = None
        for _ in range(self.max_draws):
            o = s.sample_objective(self.rng)
            if not satisfies_all(o, records):
                continue
            if r_best is None or reward_cmp(
                eval_objective(o, c.metrics), eval_objective(o, r_best.metrics)
            ) > 0:
                preferring = o
                break
            if fallback is None:
                fallback = o
        if preferring is not None:
            o = preferring
            if self.improve_after_syn:
                improved = s.improve(o)
                if reward_cmp(
                    eval_objective(o, improved.metrics), eval_objective(o, c.metrics)
                ) >= 0:
                    c = improved
            return o, c
        if fallback is not None and r_best is not None:
            try:
                return fallback, s.improve(fallback, floor=r_best)
            except NotBetter:
                return None
        return None


# ------------------------------------------------------- adversarial construction


def adversarial_pcs(n: int) -> tuple[ParetoCandidateSet, Candidate]:
    """An ``n``-entry candidate set in which *every* legal query has
    informativeness exactly 1, plus a running best outside the image.

    Entry ``i`` ranks candidate ``i`` on top and the others in reverse index
    order beneath it, so no single response can ever rule out more than one
    candidate. Objectives are explicit rank tables over abstract 2-d metric
    vectors; the running best sits below every candidate in every ranking.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    cands = [
        Candidate.make(np.array([float(j)]), np.array([float(j), -float(j)]))
        for j in range(1, n + 1)
    ]
    r_best = Candidate.make(np.array([0.0]), np.array([0.0, 0.0]))
    g = ParetoCandidateSet()
    for i in range(1, n + 1):
        table = {r_best.metrics: -1.0, cands[i - 1].metrics: float(n)}
        # Others ascend as the index falls: c_n lowest, then c_{n-1}, ... c_1.
        for j in range(1, n + 1):
            if j != i:
                table[cands[j - 1].metrics] = float(n - j)
        o = ObjectiveInstance.make("table", {"table": tuple(table.items())})
        g.insert(o, cands[i - 1])
    return g, r_best
