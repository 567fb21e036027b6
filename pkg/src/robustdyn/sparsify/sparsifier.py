"""Refreshable sparsifier: per-piece importance sampling over owned edge units.

Integer edge weights are treated as bundles of parallel unit edges. Each owned unit
is kept independently at its owner's rate, so a kept edge carries weight
(kept units) / rate and every edge weight is unbiased.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import BudgetExhausted
from ..graph import Graph, edge_key
from ..metering import Meter
from .decomposition import ADD_PIECE, DELETE_EDGE, REMOVE_PIECE, ExpanderDecomposition, Piece
from .sampling import next_pow2, piece_sampling_prob, subset_sample


@dataclass(frozen=True)
class SamplingConfig:
    eps: float = 0.25
    const: float = 24.0
    oversampling: float | None = None  # replaces (const ln n / (eps phi^2))^2 when set

    def prob(self, n: int, phi: float, deg_tilde: float) -> float:
        return piece_sampling_prob(n, self.eps, phi, deg_tilde, self.const, self.oversampling)


def sample_owned(piece: Piece, u: int, p: float, rng, meter: Meter) -> dict:
    """Sample u's owned units at rate p; returns {edge key: kept units}."""
    own = piece.ownership()
    prefix = own.prefix[u]
    N = int(prefix[-1]) if len(prefix) else 0
    idx = subset_sample(N, p, rng, meter)
    meter.add("vertices", 1)
    meter.add("retrievals", len(idx))
    if len(idx) == 0:
        return {}
    pos = np.searchsorted(prefix, idx, side="right")
    pos, counts = np.unique(pos, return_counts=True)
    nb = own.nbrs[u]
    return {edge_key(u, int(nb[i])): int(k) for i, k in zip(pos, counts)}


def sample_piece(piece: Piece, n: int, phi: float, cfg: SamplingConfig, rng, meter: Meter | None = None):
    """One sampled sparsifier of a piece: ({edge key: weight}, {edge key: units}, {u: rate})."""
    meter = meter if meter is not None else Meter()
    own = piece.ownership()
    probs = {u: cfg.prob(n, phi, own.deg_tilde[u]) for u in piece.vertices}
    H, units = {}, {}
    for u in piece.vertices:
        for key, k in sample_owned(piece, u, probs[u], rng, meter).items():
            units[key] = k
            H[key] = k / probs[u]
    return H, units, probs


class SparsifierHandle:
    """H = union of per-piece samples, maintained until cnt grows by t."""

    def __init__(self, d: ExpanderDecomposition, t: int, cfg: SamplingConfig, rng: np.random.Generator,
                 meter: Meter | None = None):
        self.d = d
        self.t = t
        self.cfg = cfg
        self.rng = rng
        self.n = d.g.n
        self.meter = meter if meter is not None else Meter()
        self.cnt_at_issue = d.cnt
        self.cursor = len(d.log)
        self.H: dict[tuple[int, int], float] = {}
        self.units: dict[tuple[int, int], int] = {}
        self.piece_keys: dict[int, set] = {}
        self.deg_tilde: dict[int, dict] = {}
        self.prob: dict[int, dict] = {}
        self.deltas: list[tuple[int, int, float]] = []
        build = Meter()
        for pid in sorted(d.pieces):
            self._sample_piece(d.pieces[pid], build)
        self.build_work = build.total("vertices", "touches", "retrievals")
        self.meter.add("refresh", self.build_work)
        self.deltas.clear()

    # ------------------------------------------------------------ sampling

    def _set(self, key, units: int, p: float, pid: int):
        old = self.H.pop(key, 0.0)
        self.units.pop(key, None)
        new = units / p if units else 0.0
        if units:
            self.H[key] = new
            self.units[key] = units
            self.piece_keys[pid].add(key)
        else:
            self.piece_keys[pid].discard(key)
        if new != old:
            self.deltas.append((key[0], key[1], new - old))

    def _sample_piece(self, piece: Piece, meter: Meter):
        pid = piece.pid
        own = piece.ownership()
        self.piece_keys[pid] = set()
        self.deg_tilde[pid] = dict(own.deg_tilde)
        self.prob[pid] = {u: self.cfg.prob(self.n, self.d.phi, dt) for u, dt in own.deg_tilde.items()}
        for u in piece.vertices:
            p = self.prob[pid][u]
            for key, k in sample_owned(piece, u, p, self.rng, meter).items():
                self._set(key, k, p, pid)

    def _drop_piece(self, pid: int):
        for key in self.piece_keys.pop(pid, ()):
            w = self.H.pop(key)
            self.units.pop(key)
            self.deltas.append((key[0], key[1], -w))
        self.deg_tilde.pop(pid, None)
        self.prob.pop(pid, None)

    # ------------------------------------------------------------ maintenance

    def pending(self) -> int:
        return self.d.cnt - self.cnt_at_issue

    def valid(self) -> bool:
        return self.pending() <= self.t

    def sync(self) -> list[tuple[int, int, float]]:
        """Follow the decomposition's change log; returns edge weight deltas of H."""
        if not self.valid():
            raise BudgetExhausted(f"cnt grew by {self.pending()} > t={self.t}")
        log = self.d.log
        touched: dict[int, set] = {}
        while self.cursor < len(log):
            ch = log[self.cursor]
            self.cursor += 1
            if ch.kind == DELETE_EDGE:
                key = (ch.u, ch.v)
                if key in self.H:
                    self._set(key, 0, 1.0, ch.pid)
                self.meter.add("maintain", 1)
                touched.setdefault(ch.pid, set()).update(key)
            elif ch.kind == REMOVE_PIECE:
                self._drop_piece(ch.pid)
                touched.pop(ch.pid, None)
            elif ch.kind == ADD_PIECE:
                m = Meter()
                self._sample_piece(self.d.pieces[ch.pid], m)
                self.meter.add("maintain", m.total())
        for pid, verts in touched.items():
            piece = self.d.pieces.get(pid)
            if piece is None:
                continue
            own = piece.ownership()
            for x in sorted(verts):
                if x in own.deg_tilde and own.deg_tilde[x] != self.deg_tilde[pid].get(x):
                    self._resample_vertex(piece, x)
        out = self.deltas
        self.deltas = []
        return out

    def _resample_vertex(self, piece: Piece, x: int):
        """x's approximate degree moved: redo every edge of x in this piece."""
        own = piece.ownership()
        pid = piece.pid
        # clear x's incident edges first so stale samples never survive an owner switch
        for y in piece.adj[x]:
            key = edge_key(x, y)
            if key in self.H:
                self._set(key, 0, 1.0, pid)
        dts = self.deg_tilde[pid]
        dts[x] = own.deg_tilde[x]
        self.prob[pid][x] = px = self.cfg.prob(self.n, self.d.phi, dts[x])
        for key, k in sample_owned(piece, x, px, self.rng, self.meter).items():
            self._set(key, k, px, pid)
        owned = {edge_key(x, int(y)) for y in own.nbrs[x]}
        for y, w in piece.adj[x].items():
            key = edge_key(x, y)
            if key in owned:
                continue
            # a neighbour whose own bucket moved is redone later in its own pass
            py = self.cfg.prob(self.n, self.d.phi, own.deg_tilde[y])
            self.meter.add("touches", 1)
            self._set(key, int(self.rng.binomial(int(w), py)), py, pid)

    # ------------------------------------------------------------ views

    def graph(self) -> Graph:
        return Graph.from_edges(self.n, [(u, v, w) for (u, v), w in self.H.items()])

    def matrix(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        for (u, v), w in self.H.items():
            W[u, v] = W[v, u] = w
        return W

    def edge_set(self) -> frozenset:
        return frozenset(self.units.items())


def sparsify(d: ExpanderDecomposition, t: int, rng: np.random.Generator, cfg: SamplingConfig | None = None,
             meter: Meter | None = None) -> SparsifierHandle:
    return SparsifierHandle(d, t, cfg or SamplingConfig(), rng, meter)


def refresh(handle: SparsifierHandle, rng: np.random.Generator) -> SparsifierHandle:
    """Re-issue against the live decomposition with fresh randomness."""
    return SparsifierHandle(handle.d, handle.t, handle.cfg, rng, handle.meter)
