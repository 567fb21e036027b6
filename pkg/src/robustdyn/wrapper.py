"""Robust wrapper: c oblivious copies, hidden subsampling, private median of rounded answers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidArgument, PhaseExhausted
from .estimators import Estimator
from .metering import Meter
from .privacy import OrderedGrid, build_grid, gamma_for, private_median_index, round_indices


@dataclass(frozen=True)
class WrapperParams:
    T: int
    U: float
    alpha: float
    delta_fail: float
    eps_med: float
    beta: float
    grid_size: int
    Gamma: int
    s: int
    c: int
    mode: str = "full"
    grid: OrderedGrid = field(repr=False, compare=False, default=None)

    @property
    def eps_sub(self) -> float:
        return 6.0 * self.s / self.c * self.eps_med


def derive_params(T: int, U: float, alpha: float, delta_fail: float, *, s_mult: float | None = None,
                  c_mult: float | None = None, eps_med: float = 0.5, gamma_const: float = 2.0) -> WrapperParams:
    """Full constants by default; pass s_mult and c_mult for the scaled mode
    (s = ceil(s_mult * Gamma), c = ceil(c_mult * s), c_mult >= 2)."""
    if not (isinstance(T, (int, np.integer)) and T >= 1):
        raise InvalidArgument("T must be a positive integer")
    if not 0 < delta_fail < 1:
        raise InvalidArgument("delta_fail must lie in (0,1)")
    grid = build_grid(U, alpha)
    beta = delta_fail / (2 * T)
    Gamma = gamma_for(grid.size, eps_med, beta, gamma_const)
    if s_mult is None and c_mult is None:
        s = 100 * Gamma
        c = math.ceil(200 * 6 * s * eps_med * math.sqrt(2 * T * math.log(100 / beta)))
        mode = "full"
    else:
        if s_mult is None or c_mult is None or c_mult < 2:
            raise InvalidArgument("scaled mode needs s_mult and c_mult >= 2")
        s = math.ceil(s_mult * Gamma)
        c = math.ceil(c_mult * s)
        mode = "scaled"
    return WrapperParams(T, float(U), float(alpha), float(delta_fail), eps_med, beta, grid.size, Gamma, s, c,
                         mode, grid)


def composition_budget(p: WrapperParams) -> float:
    """Left side of the T-fold transcript-privacy bound (must be <= 1/100 with full constants)."""
    e = p.eps_sub
    return math.sqrt(2 * p.T * math.log(100 / p.beta)) * e + 2 * p.T * e * e


class RobustWrapper:
    """Answers adaptively chosen updates with a privately aggregated copy farm.

    Implements the game-player protocol (start / respond) on top of update / query.
    Hidden state (copy seeds and sampled indices) never leaves this object.
    """

    def __init__(self, factory: Callable[[], Estimator], params: WrapperParams, tracker=None,
                 auto_restart: bool = True):
        if params.s > params.c / 2:
            raise InvalidArgument("need s <= c/2")
        self.factory = factory
        self.p = params
        self.grid = params.grid if params.grid is not None else build_grid(params.U, params.alpha)
        self.copies: list[Estimator] = [factory() for _ in range(params.c)]
        self.gamma = self.copies[0].gamma
        self.tracker = tracker
        self.auto_restart = auto_restart
        self.meter = Meter()
        self.step = 0
        self.phase = 0
        self.refreshed = False
        self.clamped = 0

    @property
    def factor(self) -> float:
        return self.gamma * (1 + self.p.alpha)

    # ------------------------------------------------------------ lifecycle

    def start(self, x, rng: np.random.Generator) -> None:
        self._ss = np.random.SeedSequence(int(rng.integers(2**63)))
        self._rng = np.random.default_rng(self._ss.spawn(1)[0])
        for cp in self.copies:
            cp.init(x, self._child())
        self.step = 0
        self.phase = 0

    def _child(self) -> np.random.Generator:
        return np.random.default_rng(self._ss.spawn(1)[0])

    def restart(self, x=None) -> None:
        """Fresh randomness for every copy on the current input; refresh where supported."""
        if x is None and self.tracker is not None:
            x = self.tracker.input()
        for cp in self.copies:
            before = cp.meter.total()
            if cp.refresh_capable:
                cp.refresh(self._child())
            else:
                cp.reset(x, self._child())
            self.meter.add("restart", cp.meter.total() - before)
        self.phase += 1
        self.step = 0
        self.refreshed = True

    # ------------------------------------------------------------ game interface

    def update(self, op) -> None:
        if self.step >= self.p.T:
            if not self.auto_restart:
                raise PhaseExhausted(f"phase of {self.p.T} outputs used up")
            self.restart()
        if self.tracker is not None:
            self.tracker.apply(op)
        for cp in self.copies:
            before = cp.meter.total()
            cp.update(op)
            self.meter.add("update", cp.meter.total() - before)

    def query(self) -> float:
        if self.step >= self.p.T:
            if not self.auto_restart:
                raise PhaseExhausted(f"phase of {self.p.T} outputs used up")
            self.restart()
        self.step += 1
        picks = self._rng.integers(0, self.p.c, size=self.p.s)
        uniq, inv = np.unique(picks, return_inverse=True)
        answers = np.empty(len(uniq))
        for i, j in enumerate(uniq):
            cp = self.copies[j]
            before = cp.meter.total()
            answers[i] = cp.query()
            self.meter.add("query", cp.meter.total() - before)
        idx, clamped = round_indices(answers[inv], self.grid)
        self.clamped += clamped
        out = private_median_index(idx, self.grid.size, self.p.eps_med, self._rng)
        self.meter.add("median", self.p.s + self.grid.size)
        return float(self.grid.points[out])

    def respond(self, op) -> float:
        self.refreshed = False
        self.update(op)
        return self.query()

    # ------------------------------------------------------------ instrumentation (never shown to adversaries)

    def copy_answers(self) -> np.ndarray:
        return np.array([cp.query() for cp in self.copies])


class MinCutPipeline(RobustWrapper):
    """Copies run on independent sparsifier handles of one shared decomposition.

    A phase ends when cnt has grown by ``phase_cnt`` (or a handle runs out of budget,
    or the output budget T is spent); every handle is then refreshed.
    """

    def __init__(self, params: WrapperParams, phase_cnt: int, dcfg, scfg, auto_restart: bool = True):
        from .estimators import HandleMinCut  # local: keeps estimator imports one-way

        self.phase_cnt = phase_cnt
        self.dcfg, self.scfg = dcfg, scfg
        super().__init__(lambda: HandleMinCut(None, phase_cnt, scfg), params, auto_restart=auto_restart)
        self.phase_refresh_work: list[int] = []
        self.decomp_meter = Meter()

    def start(self, x, rng):
        from .sparsify.decomposition import ExpanderDecomposition

        self.d = ExpanderDecomposition(x, self.dcfg, self.decomp_meter)
        for cp in self.copies:
            cp.d = self.d
        self.build_work = self.decomp_meter["decompose"]
        before = sum(cp.meter["refresh"] for cp in self.copies)
        super().start(x, rng)
        self.phase_refresh_work = [sum(cp.meter["refresh"] for cp in self.copies) - before]
        self.cnt_at_phase = self.d.cnt

    def restart(self, x=None):
        if self.d.buffer_edges:
            # phase boundary: fold buffered insertions back into expander pieces
            self.d.rebuild()
        before = sum(cp.meter["refresh"] for cp in self.copies)
        super().restart(x)
        self.phase_refresh_work.append(sum(cp.meter["refresh"] for cp in self.copies) - before)
        self.cnt_at_phase = self.d.cnt

    def update(self, op):
        from .errors import BudgetExhausted

        if self.step >= self.p.T:
            self.restart()
        self.d.update(op)
        if self.d.cnt - self.cnt_at_phase > self.phase_cnt:
            self.restart()
            return
        try:
            for cp in self.copies:
                before = cp.meter.total()
                cp.update(op)
                self.meter.add("update", cp.meter.total() - before)
        except BudgetExhausted:
            self.restart()


class WorstCaseWrapper:
    """Two staggered wrappers so no single step pays for a full rebuild.

    The active instance answers for T steps. Meanwhile the standby builds its c copies
    on a snapshot of the input, a few copies per step during the first three quarters
    of the phase, then replays the updates buffered since the snapshot fast enough to
    catch up by the boundary. At the boundary the roles swap.
    """

    def __init__(self, factory: Callable[[], Estimator], params: WrapperParams, tracker_factory):
        self.factory = factory
        self.p = params
        self.tracker_factory = tracker_factory
        self.meter = Meter()
        self.refreshed = False
        self.build_steps = max(1, 3 * params.T // 4)
        self.replay_rate = -(-params.T // max(1, params.T - self.build_steps)) + 1

    @property
    def factor(self) -> float:
        return self.active.factor

    @property
    def gamma(self) -> float:
        return self.active.gamma

    def start(self, x, rng):
        self._ss = np.random.SeedSequence(int(rng.integers(2**63)))
        self.tracker = self.tracker_factory(x)
        self.active = self._fresh_wrapper()
        self.active.start(x, self._rng())
        self._begin_standby()
        self.step = 0
        self.boundaries: list[int] = []
        self.total_steps = 0

    def _rng(self):
        return np.random.default_rng(self._ss.spawn(1)[0])

    def _fresh_wrapper(self) -> RobustWrapper:
        return RobustWrapper(self.factory, self.p, tracker=None, auto_restart=False)

    def _begin_standby(self):
        self.standby = self._fresh_wrapper()
        self.standby._ss = np.random.SeedSequence(int(self._rng().integers(2**63)))
        self.standby._rng = np.random.default_rng(self.standby._ss.spawn(1)[0])
        self.snapshot = self.tracker.input()
        self.built = 0
        self.buffer: list = []

    def _work(self, w: RobustWrapper) -> int:
        return sum(cp.meter.total() for cp in w.copies)

    def _advance_standby(self):
        """Per-step share of the standby's preparation."""
        c = self.p.c
        if self.built < c:
            target = min(c, -(-c * (self.step + 1) // self.build_steps))
            while self.built < target:
                self.standby.copies[self.built].init(self.snapshot, self.standby._child())
                self.built += 1
        elif self.buffer:
            k = self.replay_rate
            for op in self.buffer[:k]:
                for cp in self.standby.copies:
                    cp.update(op)
            del self.buffer[:k]

    def respond(self, op) -> float:
        self.refreshed = False
        spent = self._swap() if self.step >= self.p.T else 0
        before = self._work(self.active) + self._work(self.standby)
        self.tracker.apply(op)
        self.active.update(op)
        self.buffer.append(op)
        self._advance_standby()
        z = self.active.query()
        self.step += 1
        self.total_steps += 1
        spent += self._work(self.active) + self._work(self.standby) - before
        self.meter.add("work", spent)
        self.last_step_work = spent
        return z

    def _swap(self) -> int:
        before = self._work(self.standby)
        # finish any leftover replay (only happens if T is tiny)
        while self.built < self.p.c or self.buffer:
            self._advance_standby()
        spent = self._work(self.standby) - before
        self.active = self.standby
        self.active.step = 0
        self._begin_standby()
        self.step = 0
        self.boundaries.append(self.total_steps)
        self.refreshed = True
        return spent
