"""Concrete adaptive strategies and oblivious scripts.

Every strategy knows the public parameters of its target (sampling rate, output
scale) but never its coins; all it reads is a harness View.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph, GraphUpdate, edge_key, min_cut_matrix
from .problems import SetPair, SumUpdate

KEEP, UNDO = "keep", "undo"


class Strategy:
    def start(self, x0, rng: np.random.Generator) -> None:
        self.rng = rng

    def propose(self, view):
        raise NotImplementedError


class _Mirror:
    """The adversary's own copy of the graph, rebuilt from the updates it issued."""

    def __init__(self, g: Graph):
        self.g = g.copy()
        self.seen = 0

    def sync(self, updates):
        for u in updates[self.seen:]:
            if isinstance(u, GraphUpdate):
                self.g.apply(u)
        self.seen = len(updates)


class CutProbeAttack(Strategy):
    """Biases a sampled min-cut estimate downward.

    Works on the edges crossing the true minimum cut (which the adversary can compute,
    it knows the graph). An inserted probe edge whose estimate jump is smaller than its
    true weight was under-sampled and is kept; otherwise it is removed again. When no
    crossing pair is free, an existing crossing edge is deleted; if the estimate fell by
    more than its weight it was over-sampled and stays deleted, otherwise it is put back
    (which is itself a fresh insertion probe).

    ``unit`` is the public output multiplier of the target (1 / (1 - eps')).
    """

    def __init__(self, w_probe: float, unit: float = 1.0, candidates: int = 0):
        self.w_probe = w_probe
        self.unit = unit
        self.candidates = candidates
        self.probes = 0

    def start(self, x0: Graph, rng):
        super().start(x0, rng)
        self.mirror = _Mirror(x0)
        self.pending = None  # (kind, update, baseline output or None)
        self.weights = {}

    def _side(self) -> np.ndarray:
        _, mask = min_cut_matrix(self.mirror.g.adjacency_matrix())
        return mask

    def _decide(self, view):
        kind, upd, base = self.pending
        self.pending = None
        if base is None or len(view.outputs) < len(view.updates):
            return KEEP if kind == "insert" else UNDO
        jump = view.outputs[-1] - base
        w = upd.w if kind == "insert" else self.weights[edge_key(upd.u, upd.v)]
        if kind == "insert":
            return KEEP if jump < w * self.unit else UNDO
        return KEEP if -jump > w * self.unit else UNDO

    def propose(self, view):
        self.mirror.sync(view.updates)
        g = self.mirror.g
        if self.pending is not None:
            kind, upd, _ = self.pending
            verdict = self._decide(view)
            if verdict == UNDO:
                if kind == "insert":
                    return GraphUpdate.delete(upd.u, upd.v)
                return self._probe_insert(upd.u, upd.v, self.weights[edge_key(upd.u, upd.v)], view)
        mask = self._side()
        S = np.flatnonzero(mask)
        R = np.flatnonzero(~mask)
        free = [(int(a), int(b)) for a in S for b in R if not g.has_edge(a, b)]
        if free:
            a, b = free[int(self.rng.integers(len(free)))]
            return self._probe_insert(a, b, self.w_probe, view)
        present = [(int(a), int(b)) for a in S for b in R if g.has_edge(a, b)]
        a, b = present[int(self.rng.integers(len(present)))]
        self.weights[edge_key(a, b)] = g.weight(a, b)
        self.probes += 1
        base = view.outputs[-1] if len(view.outputs) == len(view.updates) and view.outputs else None
        upd = GraphUpdate.delete(a, b)
        self.pending = ("delete", upd, base)
        return upd

    def _probe_insert(self, a, b, w, view):
        self.probes += 1
        base = view.outputs[-1] if len(view.outputs) == len(view.updates) and view.outputs else None
        upd = GraphUpdate.insert(a, b, w)
        self.weights[edge_key(a, b)] = w
        self.pending = ("insert", upd, base)
        return upd


class SumAttack(Strategy):
    """Inserts a value; if the estimate jumped the item was kept, so it is deleted again."""

    def __init__(self, value: float = 1.0):
        self.value = value

    def start(self, x0: dict, rng):
        super().start(x0, rng)
        self.next_key = max(x0, default=-1) + 1
        self.last = None

    def propose(self, view):
        if self.last is not None:
            key, base = self.last
            self.last = None
            if base is not None and view.outputs and view.outputs[-1] > base:
                return SumUpdate.delete(key)
        base = view.outputs[-1] if view.outputs and len(view.outputs) == len(view.updates) else None
        key = self.next_key
        self.next_key += 1
        self.last = (key, base)
        return SumUpdate.insert(key, self.value)


class LandmarkAttack(Strategy):
    """Reads the hub revealed by the answer and cuts the source's edge to it.

    On the hubs family the answer 2h + i names hub i. When the answer names no live
    hub, the oldest cut edge is put back (it may lead to a landmark again); with
    nothing to restore, a random source edge is cut instead.
    """

    def __init__(self, fam: "HubsFamily"):
        self.fam = fam

    def start(self, x0, rng):
        super().start(x0, rng)
        self.mirror = _Mirror(x0)
        self.cut: list[int] = []
        self.probes = 0  # deletions aimed at a revealed landmark

    def propose(self, view):
        self.mirror.sync(view.updates)
        f = self.fam
        if not view.outputs or len(view.outputs) < len(view.updates):
            return SetPair(f.src, f.snk)
        hub = f.hub_from_answer(view.outputs[-1])
        g = self.mirror.g
        live = [i for i in range(f.k) if g.has_edge(f.src, f.hub(i))]
        if hub is not None and hub in live and len(live) > 1:
            self.probes += 1
            self.cut.append(hub)
            return GraphUpdate.delete(f.src, f.hub(hub))
        if self.cut:
            i = self.cut.pop(0)
            return GraphUpdate.insert(f.src, f.hub(i), f.w_src(i))
        i = live[int(self.rng.integers(len(live)))]
        self.cut.append(i)
        return GraphUpdate.delete(f.src, f.hub(i))


class LockInAttack(Strategy):
    """Walks until the estimate is wrong, then stops moving.

    The adversary knows the graph, so it can compute the true answer itself. It
    toggles random edges at src and snk while the output looks accurate; once an
    output misses, it only re-sends the (src, snk) register, which leaves the target's
    sample untouched, so the wrong answer is repeated from then on.
    """

    def __init__(self, src: int, snk: int, truth, factor: float, weight: float = 1.0):
        self.src, self.snk = src, snk
        self.truth = truth
        self.factor = factor
        self.weight = weight

    def start(self, x0, rng):
        super().start(x0, rng)
        self.mirror = _Mirror(x0)
        n = x0.n
        self.pairs = [edge_key(a, v) for a in (self.src, self.snk) for v in range(n) if v not in (self.src, self.snk)]
        self.locked_steps = 0

    def _wrong(self, view) -> bool:
        if not view.outputs or len(view.outputs) < len(view.updates):
            return False
        t = self.truth(self.mirror.g, self.src, self.snk)
        z = view.outputs[-1]
        return not (t * (1 - 1e-9) <= z <= self.factor * t * (1 + 1e-9))

    def propose(self, view):
        self.mirror.sync(view.updates)
        if not view.updates or self._wrong(view):
            self.locked_steps += bool(view.updates)
            return SetPair(self.src, self.snk)
        g = self.mirror.g
        a, b = self.pairs[int(self.rng.integers(len(self.pairs)))]
        if g.has_edge(a, b) and g.deg[a] > 1 and g.deg[b] > 1:
            return GraphUpdate.delete(a, b)
        if g.has_edge(a, b):
            return SetPair(self.src, self.snk)
        return GraphUpdate.insert(a, b, self.weight)


# ------------------------------------------------------------------ families and scripts


class HubsFamily:
    """src and snk joined through k hubs; src-hub_i has weight h+i, hub_i-snk weight h.

    Shortest path is via hub 0 (length 2h); a landmark at hub i answers 2h + i.
    """

    def __init__(self, k: int, h: int | None = None):
        self.k = k
        self.h = h if h is not None else k
        self.src, self.snk = 0, 1

    def hub(self, i: int) -> int:
        return 2 + i

    def w_src(self, i: int) -> int:
        return self.h + i

    def graph(self) -> Graph:
        edges = []
        for i in range(self.k):
            edges.append((self.src, self.hub(i), self.w_src(i)))
            edges.append((self.hub(i), self.snk, self.h))
        return Graph.from_edges(self.k + 2, edges)

    def hub_from_answer(self, z: float) -> int | None:
        if not np.isfinite(z):
            return None
        i = int(round(z)) - 2 * self.h
        return i if 0 <= i < self.k and abs(z - round(z)) < 1e-9 else None


def toggle_script(g: Graph, pairs, weight, steps: int, rng: np.random.Generator):
    """Oblivious script that flips uniformly random pairs (insert if absent, else delete)."""
    g = g.copy()
    pairs = list(pairs)
    out = []
    for _ in range(steps):
        a, b = pairs[int(rng.integers(len(pairs)))]
        if g.has_edge(a, b):
            upd = GraphUpdate.delete(a, b)
        else:
            w = weight(rng) if callable(weight) else weight
            upd = GraphUpdate.insert(a, b, w)
        g.apply(upd)
        out.append(upd)
    return out


def sum_script(steps: int, value: float, rng: np.random.Generator, start_key: int = 0, p_delete: float = 0.2):
    keys = []
    out = []
    nxt = start_key
    for _ in range(steps):
        if keys and rng.random() < p_delete:
            k = keys.pop(int(rng.integers(len(keys))))
            out.append(SumUpdate.delete(k))
        else:
            out.append(SumUpdate.insert(nxt, value))
            keys.append(nxt)
            nxt += 1
    return out
