"""Two-player game between an update-choosing adversary and an estimating algorithm."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import InvalidUpdate
from .estimators import Estimator, accurate
from .problems import describe

OBLIVIOUS = "oblivious"
ADAPTIVE = "adaptive"
BLINKING = "blinking"


@dataclass
class Transcript:
    """x0 plus the (update, output) sequence and refresh boundaries. Nothing hidden."""

    x0: Any
    updates: list = field(default_factory=list)
    outputs: list = field(default_factory=list)
    refreshes: list = field(default_factory=list)  # output count at each refresh

    def append(self, update, output: float, refreshed: bool = False):
        if refreshed:
            # the refresh happened before this output was produced
            self.refreshes.append(len(self.outputs))
        self.updates.append(update)
        self.outputs.append(float(output))

    def records(self) -> list[dict]:
        return [{"step": i, "update": describe(u), "output": z}
                for i, (u, z) in enumerate(zip(self.updates, self.outputs))]

    def to_jsonl(self) -> str:
        head = {"x0": self.x0 if isinstance(self.x0, (dict, list, str, int, float)) else str(self.x0),
                "refreshes": self.refreshes}
        return "\n".join(json.dumps(r, sort_keys=True) for r in [head, *self.records()]) + "\n"


@dataclass(frozen=True)
class View:
    """What a strategy may read: every update it issued, outputs up to a cutoff."""

    x0: Any
    updates: tuple
    outputs: tuple
    refreshes: tuple = ()


class Adversary:
    kind = ADAPTIVE

    def __init__(self, strategy):
        self.strategy = strategy

    def start(self, x0, rng: np.random.Generator):
        self.strategy.start(x0, rng)

    def view(self, tr: Transcript) -> View:
        return View(tr.x0, tuple(tr.updates), tuple(tr.outputs), tuple(tr.refreshes))

    def next(self, tr: Transcript):
        return self.strategy.propose(self.view(tr))


class AdaptiveAdversary(Adversary):
    kind = ADAPTIVE


class BlinkingAdversary(Adversary):
    """Sees outputs only up to the most recent refresh boundary."""

    kind = BLINKING

    def view(self, tr: Transcript) -> View:
        cut = tr.refreshes[-1] if tr.refreshes else len(tr.outputs)
        return View(tr.x0, tuple(tr.updates), tuple(tr.outputs[:cut]), tuple(tr.refreshes))


class ObliviousAdversary(Adversary):
    """Replays a fixed script; never looks at outputs."""

    kind = OBLIVIOUS

    def __init__(self, script: Sequence):
        self.script = list(script)

    def start(self, x0, rng):
        self.i = 0

    def next(self, tr: Transcript):
        if self.i >= len(self.script):
            return None
        u = self.script[self.i]
        self.i += 1
        return u


class EstimatorPlayer:
    """A single oblivious estimator exposed directly to the adversary."""

    def __init__(self, est: Estimator):
        self.est = est
        self.gamma = est.gamma
        self.factor = est.gamma
        self.refreshed = False

    @property
    def meter(self):
        return self.est.meter

    def start(self, x, rng):
        self.est.init(x, rng)

    def respond(self, op) -> float:
        self.est.update(op)
        return self.est.query()


@dataclass
class Metrics:
    truth: list = field(default_factory=list)
    output: list = field(default_factory=list)
    acc: list = field(default_factory=list)
    copy_frac: list = field(default_factory=list)
    work: list = field(default_factory=list)
    refresh: list = field(default_factory=list)
    violation: str | None = None

    @property
    def steps(self) -> int:
        return len(self.acc)

    def acc_freq(self) -> float:
        return float(np.mean(self.acc)) if self.acc else 1.0

    def all_accurate(self) -> bool:
        return bool(all(self.acc))

    def records(self) -> list[dict]:
        out = []
        for i in range(self.steps):
            r = {"step": i, "truth": self.truth[i], "output": self.output[i], "acc": int(self.acc[i]),
                 "work": self.work[i], "refresh": int(self.refresh[i])}
            if self.copy_frac:
                r["copy_frac"] = self.copy_frac[i]
            out.append(r)
        return out


def measure_copy_accuracy(player, truth: float) -> float:
    """Fraction of copies whose own answer is accurate right now (test instrumentation)."""
    answers = player.copy_answers()
    return float(np.mean([accurate(truth, a, player.gamma) for a in answers]))


def run_game(player, adversary: Adversary, problem, steps: int, seed: int,
             instrument: bool = False, on_step: Callable | None = None) -> tuple[Transcript, Metrics]:
    """Alternate adversary update / algorithm output for ``steps`` rounds.

    Everything random is derived from ``seed``, so a game replays bit-identically.
    """
    ss = np.random.SeedSequence(seed)
    p_ss, a_ss = ss.spawn(2)
    problem = problem.clone()
    x0 = problem.input()
    player.start(x0, np.random.default_rng(p_ss))
    adversary.start(problem.input(), np.random.default_rng(a_ss))
    tr = Transcript(x0=getattr(problem, "name", "input"))
    met = Metrics()
    for _ in range(steps):
        upd = adversary.next(tr)
        if upd is None:
            break
        try:
            problem.apply(upd)
        except InvalidUpdate as e:
            met.violation = str(e)
            break
        z = player.respond(upd)
        truth = problem.truth()
        tr.append(upd, z, player.refreshed)
        met.truth.append(truth)
        met.output.append(z)
        met.acc.append(accurate(truth, z, player.factor))
        met.work.append(player.meter.total())
        met.refresh.append(bool(player.refreshed))
        if instrument:
            met.copy_frac.append(measure_copy_accuracy(player, truth))
        if on_step is not None:
            on_step(problem, player, tr, met)
    return tr, met
