"""Teachers: the answering side of the interactive session.

A teacher answers two kinds of questions about concrete designs. Compare
asks which of two designs is preferred (or whether they tie); Propose asks
whether a design should replace the current best. Implementations here:

- ``perfect_oracle``  — answers exactly per a hidden ground-truth objective.
- ``imperfect_oracle`` — same, but each presented design's perceived value is
  perturbed by fresh Gaussian noise, so judgments near-ties can flip.
- ``HumanBridge``     — adapts a queue/poll surface (e.g. a web UI) to the
  blocking teacher interface, with timeouts and "too hard".
- ``ensemble_wrap``   — runs a session with response-dropping replica
  candidate sets so one bad answer cannot sink the search.
"""

from __future__ import annotations

import dataclasses
import queue
import threading
from dataclasses import dataclass

import numpy as np

from . import learner
from .learner import (
    ABSTAIN,
    ACCEPT,
    EQUAL,
    LEFT_BETTER,
    REJECT,
    RIGHT_BETTER,
    STOP,
    LearnConfig,
    SessionResult,
    TeacherDisconnected,
)
from .scenarios import Candidate, ObjectiveInstance, eval_objective, reward_cmp


class Teacher:
    """Interface: both methods return one of the learner's response strings."""

    def answer_compare(self, c1: Candidate, c2: Candidate) -> str:
        raise NotImplementedError

    def answer_propose(self, c: Candidate, r_best: Candidate | None) -> str:
        raise NotImplementedError


class PerfectOracle(Teacher):
    """Answers exactly according to the hidden ground-truth objective."""

    def __init__(self, gt: ObjectiveInstance) -> None:
        self.gt = gt

    def _reward(self, c: Candidate) -> float:
        return eval_objective(self.gt, c.metrics)

    def answer_compare(self, c1: Candidate, c2: Candidate) -> str:
        s = reward_cmp(self._reward(c1), self._reward(c2))
        if s > 0:
            return LEFT_BETTER
        if s < 0:
            return RIGHT_BETTER
        return EQUAL

    def answer_propose(self, c: Candidate, r_best: Candidate | None) -> str:
        if r_best is None:
            return ACCEPT
        return ACCEPT if reward_cmp(self._reward(c), self._reward(r_best)) > 0 else REJECT


def perfect_oracle(gt: ObjectiveInstance) -> PerfectOracle:
    return PerfectOracle(gt)


@dataclass
class NoiseModel:
    """Judgment-noise scale for a simulated imperfect teacher.

    ``p`` is a percentage knob: the noise standard deviation is p% of the
    gap between the best and the average ground-truth reward over a
    reference population of designs. p = 0 reproduces the perfect oracle
    bit for bit.
    """

    p: float
    mean_reward: float
    opt_reward: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.p < 0:
            raise ValueError("p must be >= 0")
        if self.opt_reward < self.mean_reward:
            raise ValueError("opt_reward must be >= mean_reward")

    @property
    def sigma(self) -> float:
        return (self.p / 100.0) * (self.opt_reward - self.mean_reward)

    @classmethod
    def from_pool(
        cls, gt: ObjectiveInstance, pool, p: float, seed: int = 0
    ) -> "NoiseModel":
        """Calibrate mean/optimum over a pool's candidates under ``gt``."""
        rewards = [eval_objective(gt, c.metrics) for _, c in pool.pairs]
        if not rewards:
            raise ValueError("pool has no candidates to calibrate against")
        return cls(p=p, mean_reward=float(np.mean(rewards)), opt_reward=float(max(rewards)), seed=seed)


class NoisyOracle(Teacher):
    """Ground-truth oracle whose every *presented* design is judged through
    fresh Gaussian noise — the same design can be perceived differently on
    different questions, like a human eyeballing close dashboards."""

    def __init__(self, gt: ObjectiveInstance, noise: NoiseModel) -> None:
        self.gt = gt
        self.noise = noise
        self._rng = np.random.default_rng(noise.seed)

    def _perceive(self, c: Candidate) -> float:
        true = eval_objective(self.gt, c.metrics)
        if self.noise.sigma == 0.0:
            return true  # no draw: p=0 must match the perfect oracle exactly
        return true + self._rng.normal(0.0, self.noise.sigma)

    def answer_compare(self, c1: Candidate, c2: Candidate) -> str:
        s = reward_cmp(self._perceive(c1), self._perceive(c2))
        if s > 0:
            return LEFT_BETTER
        if s < 0:
            return RIGHT_BETTER
        return EQUAL

    def answer_propose(self, c: Candidate, r_best: Candidate | None) -> str:
        if r_best is None:
            return ACCEPT
        return ACCEPT if reward_cmp(self._perceive(c), self._perceive(r_best)) > 0 else REJECT


def imperfect_oracle(gt: ObjectiveInstance, noise: NoiseModel) -> NoisyOracle:
    return NoisyOracle(gt, noise)


class BridgeTimeout(TeacherDisconnected):
    """No answer arrived within the bridge's timeout."""


class Disconnected(TeacherDisconnected):
    """The bridge was closed while a question was outstanding."""


_COMPARE_CHOICES = {
    "left": LEFT_BETTER,
    "right": RIGHT_BETTER,
    "equal": EQUAL,
    "too_hard": ABSTAIN,
    "stop": STOP,
}
_PROPOSE_CHOICES = {
    "accept": ACCEPT,
    "reject": REJECT,
    "too_hard": ABSTAIN,
    "stop": STOP,
}


class HumanBridge(Teacher):
    """Thread-safe adapter between the blocking teacher interface and a
    poll/post surface such as an HTTP service.

    The session thread blocks inside ``answer_*`` while the surface polls
    ``current_question()`` and eventually calls ``post_answer(choice)``.
    The very first proposal of a session (nothing to beat yet) is accepted
    automatically without surfacing a question.
    """

    def __init__(self, timeout: float = 900.0) -> None:
        self.timeout = timeout
        self._lock = threading.Lock()
        self._answers: queue.Queue[str] = queue.Queue()
        self._pending: dict | None = None
        self._seq = 0
        self._closed = False

    # -- session-thread side -------------------------------------------------

    def _ask(self, question: dict) -> str:
        with self._lock:
            if self._closed:
                raise Disconnected("bridge is closed")
            self._seq += 1
            question["seq"] = self._seq
            self._pending = question
        try:
            resp = self._answers.get(timeout=self.timeout)
        except queue.Empty:
            with self._lock:
                self._pending = None
            raise BridgeTimeout(f"no answer within {self.timeout}s") from None
        with self._lock:
            self._pending = None
        if resp == "__disconnect__":
            raise Disconnected("bridge closed while waiting")
        return resp

    def answer_compare(self, c1: Candidate, c2: Candidate) -> str:
        return self._ask(
            {
                "kind": "compare",
                "candidates": [
                    {"id": c1.id, "metrics": list(c1.metrics)},
                    {"id": c2.id, "metrics": list(c2.metrics)},
                ],
            }
        )

    def answer_propose(self, c: Candidate, r_best: Candidate | None) -> str:
        if r_best is None:
            return ACCEPT
        return self._ask(
            {
                "kind": "propose",
                "candidates": [
                    {"id": c.id, "metrics": list(c.metrics)},
                    {"id": r_best.id, "metrics": list(r_best.metrics)},
                ],
            }
        )

    # -- surface side ----------------------------------------------------------

    def current_question(self) -> dict | None:
        with self._lock:
            return dict(self._pending) if self._pending is not None else None

    def post_answer(self, choice: str) -> None:
        with self._lock:
            if self._pending is None:
                raise LookupError("no question is awaiting an answer")
            kind = self._pending["kind"]
        table = _COMPARE_CHOICES if kind == "compare" else _PROPOSE_CHOICES
        if choice not in table:
            raise ValueError(f"{choice!r} is not a valid answer to a {kind} question")
        self._answers.put(table[choice])

    def disconnect(self) -> None:
        """Close the bridge; a session blocked on an answer wakes with
        ``Disconnected``."""
        with self._lock:
            self._closed = True
            had_pending = self._pending is not None
        if had_pending:
            self._answers.put("__disconnect__")


def ensemble_wrap(
    source,
    teacher: Teacher,
    cfg: LearnConfig | None = None,
    replicas: int = 4,
    drop_prob: float = 0.2,
) -> SessionResult:
    """Run a session with a robustness ensemble: ``replicas`` backup
    candidate-set copies each independently ignore a response with
    probability ``drop_prob``; if the primary's accumulated preferences
    become unsatisfiable, the surviving backup that retained the most
    responses takes over."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if not 0.0 < drop_prob < 1.0:
        raise ValueError("drop_prob must be in (0, 1)")
    cfg = dataclasses.replace(
        cfg or LearnConfig(), replicas=replicas, drop_prob=drop_prob
    )
    return learner.run_session(source, teacher, cfg)
