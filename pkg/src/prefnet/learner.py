"""The interactive learner: query informativeness, best-query selection, and
the session loop that drives Propose/Compare queries against a teacher.

The learner treats the candidate set as a voting committee. Each legal query
is scored by the number of committee candidates that are guaranteed to be
ruled out whatever the teacher answers (the minimum over all possible
responses), and the highest-scoring query is asked. Responses become
preference records that prune the committee; accepted proposals additionally
replace the running best and drop every objective that no longer sees an
improvement over it.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace

import numpy as np

from .pcs import (
    EQ,
    GT,
    LEQ,
    LT,
    ParetoCandidateSet,
    PreferenceRecord,
    Unsatisfiable,
)
from .scenarios import Candidate

# Response vocabulary shared between the learner and every teacher.
ACCEPT = "accept"
REJECT = "reject"
LEFT_BETTER = "left_better"
RIGHT_BETTER = "right_better"
EQUAL = "equal"
ABSTAIN = "abstain"
STOP = "stop"

_PROPOSE_RESPONSES = frozenset({ACCEPT, REJECT, ABSTAIN, STOP})
_COMPARE_RESPONSES = frozenset({LEFT_BETTER, RIGHT_BETTER, EQUAL, ABSTAIN, STOP})


class EmptyPcs(Exception):
    """No legal query can be formed: the candidate set's image is empty."""


class TeacherDisconnected(Exception):
    """The teacher went away mid-session; the partial transcript is still
    meaningful."""


@dataclass(frozen=True)
class Query:
    """One question for the teacher: propose ``left`` against the running
    best, or compare ``left`` with ``right``."""

    kind: str  # "propose" | "compare"
    left: Candidate
    right: Candidate | None = None
    info: int = 0

    def key(self) -> tuple:
        if self.kind == "propose":
            return ("propose", self.left.id)
        a, b = sorted((self.left.id, self.right.id))
        return ("compare", a, b)

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "left": {"id": self.left.id, "metrics": list(self.left.metrics)},
            "info": self.info,
        }
        out["right"] = (
            {"id": self.right.id, "metrics": list(self.right.metrics)} if self.right else None
        )
        return out


def info_compare(g: ParetoCandidateSet, c1: Candidate, c2: Candidate) -> int:
    """Guaranteed committee shrinkage of Compare(c1, c2): the minimum over
    the three possible responses of how many distinct mapped candidates the
    response's pruning would touch."""
    from .scenarios import reward_cmp

    left_not_better: set[str] = set()  # entries of objectives with c1 <= c2
    right_not_better: set[str] = set()  # entries of objectives with c1 >= c2
    unequal: set[str] = set()  # entries of objectives ranking them strictly
    for o, e in g.items():
        s = reward_cmp(g.reward(o, c1), g.reward(o, c2))
        if s <= 0:
            left_not_better.add(e.id)
        if s >= 0:
            right_not_better.add(e.id)
        if s != 0:
            unequal.add(e.id)
    return min(len(left_not_better), len(right_not_better), len(unequal))


def info_propose(g: ParetoCandidateSet, c: Candidate, r_best: Candidate) -> int:
    """Guaranteed committee shrinkage of Propose(c) against ``r_best``.

    On acceptance, objectives that preferred the old best — plus objectives
    whose own entry merely ties ``c`` and so can never improve on it — lose
    their entries; on rejection, objectives that preferred ``c`` do."""
    from .scenarios import reward_cmp

    if_accepted: set[str] = set()
    if_rejected: set[str] = set()
    for o, e in g.items():
        vs_best = reward_cmp(g.reward(o, c), g.reward(o, r_best))
        if vs_best <= 0 or reward_cmp(g.reward(o, c), g.reward(o, e)) == 0:
            if_accepted.add(e.id)
        if vs_best > 0:
            if_rejected.add(e.id)
    return min(len(if_accepted), len(if_rejected))


def best_query(
    g: ParetoCandidateSet,
    r_best: Candidate,
    declined: frozenset | set = frozenset(),
) -> Query:
    """The most informative legal query over the current image.

    Considers Propose(c) for every mapped candidate other than the running
    best and Compare over every unordered pair of mapped candidates, skipping
    queries in ``declined``. Deterministic tie-break: higher informativeness,
    then Propose before Compare, then lower candidate id(s).
    """
    image = sorted(g.image().values(), key=lambda c: c.id)
    if not image:
        raise EmptyPcs("candidate set image is empty")
    queries: list[Query] = []
    for c in image:
        if c.id != r_best.id:
            queries.append(Query("propose", c, None, info_propose(g, c, r_best)))
    for a, b in itertools.combinations(image, 2):
        queries.append(Query("compare", a, b, info_compare(g, a, b)))
    queries = [q for q in queries if q.key() not in declined]
    if not queries:
        raise EmptyPcs("every legal query has been declined")
    return min(queries, key=lambda q: (-q.info, 0 if q.kind == "propose" else 1, q.key()))


@dataclass
class LearnConfig:
    """Session knobs. ``thresh`` is the committee size the learner tops the
    candidate set up to before each query (2 suits interactive sessions,
    16 gives oracle experiments a richer committee). ``replicas`` > 0 turns
    on the robustness ensemble: that many backup candidate-set copies, each
    independently ignoring responses with probability ``drop_prob``, ready
    to take over if the primary's preferences become unsatisfiable.
    ``max_queries`` (0 = 4x n_query) caps pathological non-shrinking loops.
    """

    n_query: int = 10
    thresh: int = 16
    seed: int = 0
    replicas: int = 0
    drop_prob: float = 0.2
    max_queries: int = 0

    def __post_init__(self) -> None:
        if self.n_query < 1:
            raise ValueError("n_query must be >= 1")
        if self.thresh < 1:
            raise ValueError("thresh must be >= 1")
        if self.replicas < 0:
            raise ValueError("replicas must be >= 0")
        if not 0.0 <= self.drop_prob < 1.0:
            raise ValueError("drop_prob must be in [0, 1)")

    @property
    def query_cap(self) -> int:
        return self.max_queries if self.max_queries > 0 else 4 * self.n_query


@dataclass
class Step:
    """One transcript row."""

    iter: int
    query: Query
    response: str
    image_before: int
    image_after: int
    r_best_metrics: tuple[float, ...]
    image_ids_before: tuple[str, ...] = ()
    image_ids_after: tuple[str, ...] = ()
    r_best_id_before: str | None = None
    r_best_id_after: str = ""
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "iter": self.iter,
            "query": self.query.to_dict(),
            "response": self.response,
            "image_before": self.image_before,
            "image_after": self.image_after,
            "r_best_metrics": list(self.r_best_metrics),
            **({"note": self.note} if self.note else {}),
        }


@dataclass
class SessionResult:
    r_best: Candidate
    steps: list[Step]
    count: int
    pcs: ParetoCandidateSet
    stop_reason: str  # guard | exhausted | stop | cap | all_unsatisfiable | disconnected

    @property
    def records(self) -> tuple[PreferenceRecord, ...]:
        return self.pcs.records


def transcript_ndjson(result: SessionResult) -> str:
    """Newline-delimited JSON transcript, one row per query."""
    return "\n".join(json.dumps(s.to_dict(), sort_keys=True) for s in result.steps)


class _Ensemble:
    """The primary candidate set plus optional replicas that each drop
    incoming responses independently and stand by for takeover."""

    def __init__(self, cfg: LearnConfig) -> None:
        self.primary = ParetoCandidateSet()
        self.replicas = [ParetoCandidateSet() for _ in range(cfg.replicas)]
        self.ensemble_mode = cfg.replicas > 0
        self.drop_prob = cfg.drop_prob
        self._rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x5EED]))

    def apply(self, rec: PreferenceRecord, accepted: Candidate | None) -> str:
        """Route one response to every set. Returns a transcript note:
        empty, "takeover", or "all_unsatisfiable"."""
        for rep in self.replicas:
            if self._rng.random() < self.drop_prob:
                continue  # this replica ignores the response entirely
            try:
                rep.update(rec)
            except Unsatisfiable:
                continue
            if accepted is not None:
                rep.restrict_prefer_better(accepted)
        try:
            self.primary.update(rec)
        except Unsatisfiable:
            return self._takeover()
        if accepted is not None:
            self.primary.restrict_prefer_better(accepted)
        return ""

    def _takeover(self) -> str:
        live = [r for r in self.replicas if len(r) > 0]
        if not live:
            # Plain mode (no replicas) treats an emptied set as a normal
            # empty committee; an ensemble with every replica dead ends the
            # session.
            return "all_unsatisfiable" if self.ensemble_mode else ""
        chosen = max(live, key=lambda r: len(r.records))
        self.replicas.remove(chosen)
        self.primary = chosen
        return f"takeover:retained={len(chosen.records)}"


def _dispatch(teacher, q: Query, r_best: Candidate) -> str:
    if q.kind == "propose":
        resp = teacher.answer_propose(q.left, r_best)
        allowed = _PROPOSE_RESPONSES
    else:
        resp = teacher.answer_compare(q.left, q.right)
        allowed = _COMPARE_RESPONSES
    if resp not in allowed:
        raise ValueError(f"teacher returned {resp!r} to a {q.kind} query")
    return resp


def _record_for(q: Query, resp: str, r_best: Candidate, count: int) -> PreferenceRecord | None:
    if q.kind == "propose":
        rel = GT if resp == ACCEPT else LEQ
        return PreferenceRecord(q.left.metrics, r_best.metrics, rel, source=count)
    if resp == LEFT_BETTER:
        return PreferenceRecord(q.left.metrics, q.right.metrics, GT, source=count)
    if resp == RIGHT_BETTER:
        return PreferenceRecord(q.left.metrics, q.right.metrics, LT, source=count)
    return PreferenceRecord(q.left.metrics, q.right.metrics, EQ, source=count)


def run_session(source, teacher, cfg: LearnConfig | None = None) -> SessionResult:
    """Drive one full interactive session.

    The first design drawn from the source is surfaced as query #1 — a
    Propose with nothing to beat — so the transcript shows where the running
    best started. Before each query the committee is topped up from the
    source (only while the query budget lasts); the most informative query
    is asked; the response prunes the committee. The session ends when the
    query budget is spent and the committee has drained, when the source
    cannot supply another candidate, or when the teacher stops or leaves.
    """
    cfg = cfg or LearnConfig()
    ens = _Ensemble(cfg)
    steps: list[Step] = []
    declined: set[tuple] = set()

    r0 = source.initial_candidate()
    if r0 is None:
        raise ValueError("candidate source is empty")
    try:
        resp = teacher.answer_propose(r0, None)
    except TeacherDisconnected:
        resp = None
    r_best = r0
    count = 1
    steps.append(
        Step(
            iter=1,
            query=Query("propose", r0),
            response=resp if resp is not None else "disconnected",
            image_before=0,
            image_after=0,
            r_best_metrics=r0.metrics,
            r_best_id_before=None,
            r_best_id_after=r0.id,
        )
    )
    if resp is None:
        return SessionResult(r_best, steps, count, ens.primary, "disconnected")

    stop_reason = "guard"
    while True:
        if count >= cfg.query_cap:
            stop_reason = "cap"
            break
        # Top up the committee — only while queries remain in the budget;
        # afterwards the remaining queries drain what is left.
        if count < cfg.n_query:
            need = cfg.thresh - ens.primary.image_size
            if need > 0:
                source.refill(ens.primary, r_best, need, mirrors=ens.replicas)
        g = ens.primary
        if g.image_size == 0:
            stop_reason = "guard" if count >= cfg.n_query else "exhausted"
            break
        try:
            q = best_query(g, r_best, declined)
        except EmptyPcs:
            stop_reason = "guard" if count >= cfg.n_query else "exhausted"
            break

        image_before = g.image_size
        ids_before = tuple(sorted(g.image()))
        r_best_before = r_best
        try:
            resp = _dispatch(teacher, q, r_best)
        except TeacherDisconnected:
            stop_reason = "disconnected"
            break

        if resp == STOP:
            steps.append(
                Step(
                    iter=count,
                    query=q,
                    response=STOP,
                    image_before=image_before,
                    image_after=image_before,
                    r_best_metrics=r_best.metrics,
                    image_ids_before=ids_before,
                    image_ids_after=ids_before,
                    r_best_id_before=r_best_before.id,
                    r_best_id_after=r_best.id,
                    note="stopped by teacher",
                )
            )
            stop_reason = "stop"
            break

        count += 1
        note = ""
        if resp == ABSTAIN:
            declined.add(q.key())
        else:
            rec = _record_for(q, resp, r_best, count)
            accepted = q.left if (q.kind == "propose" and resp == ACCEPT) else None
            note = ens.apply(rec, accepted)
            if accepted is not None:
                r_best = accepted
        g = ens.primary
        steps.append(
            Step(
                iter=count,
                query=q,
                response=resp,
                image_before=image_before,
                image_after=g.image_size,
                r_best_metrics=r_best.metrics,
                image_ids_before=ids_before,
                image_ids_after=tuple(sorted(g.image())),
                r_best_id_before=r_best_before.id,
                r_best_id_after=r_best.id,
                note=note,
            )
        )
        if note == "all_unsatisfiable":
            stop_reason = "all_unsatisfiable"
            break
        if g.image_size == 0 and count >= cfg.n_query:
            stop_reason = "guard"
            break

    return SessionResult(r_best, steps, count, ens.primary, stop_reason)


def run_noprune(source, teacher, cfg: LearnConfig | None = None) -> SessionResult:
    """Baseline session: repeatedly propose a fresh random objective's
    optimal design. No records, no committee, no pruning — informativeness
    never enters the picture."""
    cfg = cfg or LearnConfig()
    steps: list[Step] = []
    g = ParetoCandidateSet()  # stays empty; returned for interface parity

    r0 = source.initial_candidate()
    if r0 is None:
        raise ValueError("candidate source is empty")
    try:
        resp = teacher.answer_propose(r0, None)
    except TeacherDisconnected:
        resp = None
    r_best = r0
    count = 1
    steps.append(
        Step(
            iter=1,
            query=Query("propose", r0),
            response=resp if resp is not None else "disconnected",
            image_before=0,
            image_after=0,
            r_best_metrics=r0.metrics,
            r_best_id_before=None,
            r_best_id_after=r0.id,
        )
    )
    if resp is None:
        return SessionResult(r_best, steps, count, g, "disconnected")

    stop_reason = "guard"
    skips = 0
    while count < cfg.n_query:
        c = source.next_candidate()
        if c is None:
            stop_reason = "exhausted"
            break
        if c.id == r_best.id:
            skips += 1
            if skips >= 1000:  # degenerate source that only yields the incumbent
                stop_reason = "exhausted"
                break
            continue  # nothing to ask; draw again
        skips = 0
        q = Query("propose", c)
        try:
            resp = _dispatch(teacher, q, r_best)
        except TeacherDisconnected:
            stop_reason = "disconnected"
            break
        if resp == STOP:
            stop_reason = "stop"
            break
        count += 1
        r_best_before = r_best
        if resp == ACCEPT:
            r_best = c
        steps.append(
            Step(
                iter=count,
                query=q,
                response=resp,
                image_before=0,
                image_after=0,
                r_best_metrics=r_best.metrics,
                r_best_id_before=r_best_before.id,
                r_best_id_after=r_best.id,
            )
        )
    return SessionResult(r_best, steps, count, g, stop_reason)
