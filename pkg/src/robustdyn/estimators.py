"""Oblivious randomized dynamic estimators sharing one interface.

Each is a desk-scale stand-in: correct with probability >= 9/10 per step when the
update sequence does not depend on its coins, and easy to break when it does.

Randomized estimators report raw / (1 - e') with e' = eps / (2 + eps), which turns a
two-sided (1 +- e') error into the one-sided g <= out <= (1 + eps) g contract.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExhausted, InvalidArgument
from .graph import DELETE, INSERT, Graph, GraphUpdate, dijkstra, edge_key, effective_resistance_matrix, min_cut_matrix
from .metering import Meter
from .problems import SetPair, SumUpdate
from .sparsify.decomposition import DecompConfig, ExpanderDecomposition
from .sparsify.sparsifier import SamplingConfig, SparsifierHandle


def one_sided_scale(eps: float) -> float:
    return 1.0 / (1.0 - eps / (2.0 + eps))


@dataclass(frozen=True)
class EstimatorSpec:
    name: str
    gamma: float
    g: str
    refresh_capable: bool = False


class Estimator:
    spec: EstimatorSpec

    def __init__(self):
        self.meter = Meter()
        self.rng: np.random.Generator | None = None

    @property
    def gamma(self) -> float:
        return self.spec.gamma

    @property
    def refresh_capable(self) -> bool:
        return self.spec.refresh_capable

    def init(self, x, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def update(self, op) -> None:
        raise NotImplementedError

    def query(self) -> float:
        raise NotImplementedError

    def reset(self, x, rng: np.random.Generator) -> None:
        self.init(x, rng)

    def accurate(self, truth: float, out: float, tol: float = 1e-9) -> bool:
        return accurate(truth, out, self.gamma, tol)


def accurate(truth: float, out: float, factor: float, tol: float = 1e-9) -> bool:
    """truth <= out <= factor * truth, with a relative tolerance for float noise."""
    if math.isinf(truth):
        return math.isinf(out)
    if truth == 0:
        return abs(out) <= tol
    return truth * (1 - tol) <= out <= factor * truth * (1 + tol)


# --------------------------------------------------------------------- sum


class SubsampleSum(Estimator):
    """Keeps each item independently with probability ``rate``; answers kept/rate."""

    def __init__(self, rate: float, eps: float = 0.25):
        super().__init__()
        if not 0 < rate <= 1:
            raise InvalidArgument("rate must lie in (0,1]")
        self.rate, self.eps = rate, eps
        self.scale = 1.0 if rate == 1 else one_sided_scale(eps)
        self.spec = EstimatorSpec("sum", 1.0 + eps if rate < 1 else 1.0, "sum of values")

    def init(self, x: dict, rng):
        self.rng = rng
        self.kept: dict[int, float] = {}
        self.total = 0.0
        for key in sorted(x):
            self._insert(key, x[key])
        self.meter.add("build", len(x))

    def _insert(self, key, value):
        if self.rate == 1 or self.rng.random() < self.rate:
            self.kept[key] = value
            self.total += value
        else:
            self.kept[key] = None

    def update(self, op: SumUpdate):
        self.meter.add("update", 1)
        if op.kind == "insert":
            self._insert(op.key, op.value)
        else:
            v = self.kept.pop(op.key)
            if v is not None:
                self.total -= v

    def query(self) -> float:
        self.meter.add("query", 1)
        return self.total / self.rate * self.scale


class ExactSum(SubsampleSum):
    def __init__(self):
        super().__init__(1.0)


# --------------------------------------------------------------------- min cut


class CutCache:
    """Min cut of a dense weight matrix with exact shortcuts for single-edge changes.

    If the witness side is known: removing weight across it lowers the value by exactly
    that amount, and adding weight inside one side leaves it unchanged. Anything else
    marks the cache stale.
    """

    def __init__(self, W: np.ndarray, meter: Meter):
        self.W = W
        self.meter = meter
        self.value: float | None = None
        self.mask: np.ndarray | None = None

    def change(self, u: int, v: int, dw: float):
        if dw == 0:
            return
        self.W[u, v] += dw
        self.W[v, u] += dw
        if self.value is None:
            return
        crosses = self.mask[u] != self.mask[v]
        if dw < 0 and crosses:
            self.value += dw
        elif dw > 0 and not crosses:
            pass
        else:
            self.value = None

    def get(self) -> float:
        if self.value is None:
            n = self.W.shape[0]
            self.meter.add("sw_calls", 1)
            self.meter.add("query", n * n * n // 3)
            self.value, self.mask = min_cut_matrix(self.W)
            self.value = max(self.value, 0.0)
        return self.value


class SampledMinCut(Estimator):
    """Keeps each weight unit independently w.p. rho (weight k/rho); exact min cut of the sample.

    rho=None picks rho = min(1, C ln n / (eps'^2 lambda)) from the initial min cut.
    """

    def __init__(self, rho: float | None = 0.5, eps: float = 0.25, C: float = 3.0):
        super().__init__()
        if rho is not None and not 0 < rho <= 1:
            raise InvalidArgument("rho must lie in (0,1]")
        self.rho_cfg, self.eps, self.C = rho, eps, C
        self.spec = EstimatorSpec("mincut", 1.0 + eps, "global min cut")

    def init(self, g: Graph, rng):
        self.rng = rng
        self.n = g.n
        rho = self.rho_cfg
        if rho is None:
            lam = min_cut_matrix(g.adjacency_matrix())[0] if g.n > 1 else 0.0
            e = self.eps / (2 + self.eps)
            rho = 1.0 if lam <= 0 else min(1.0, self.C * math.log(max(g.n, 2)) / (e * e * lam))
        self.rho = rho
        self.scale = 1.0 if rho == 1 else one_sided_scale(self.eps)
        self.units: dict[tuple[int, int], float] = {}
        self.cache = CutCache(np.zeros((g.n, g.n)), self.meter)
        for u, v, w in g.edges():
            self._insert(u, v, w)
        self.cache.value = None
        self.meter.add("build", g.m)

    def _draw(self, w) -> float:
        if self.rho == 1:
            return float(w)
        if float(w).is_integer():
            return self.rng.binomial(int(w), self.rho) / self.rho
        return float(w) / self.rho if self.rng.random() < self.rho else 0.0

    def _insert(self, u, v, w):
        sw = self._draw(w)
        self.units[edge_key(u, v)] = sw
        self.cache.change(u, v, sw)

    def update(self, op: GraphUpdate):
        self.meter.add("update", 1)
        if op.kind == INSERT:
            self._insert(op.u, op.v, op.w)
        elif op.kind == DELETE:
            sw = self.units.pop(edge_key(op.u, op.v))
            self.cache.change(op.u, op.v, -sw)
        else:
            raise InvalidArgument(op.kind)

    def sampled_weight(self, u, v) -> float:
        return self.units.get(edge_key(u, v), 0.0)

    def query(self) -> float:
        return self.cache.get() * self.scale


class HandleMinCut(Estimator):
    """Exact min cut of this copy's own sparsifier handle (pipeline copy)."""

    def __init__(self, decomp: ExpanderDecomposition, t: int, cfg: SamplingConfig):
        super().__init__()
        self.d, self.t, self.cfg = decomp, t, cfg
        exact = cfg.oversampling is None
        self.scale = 1.0 if exact else one_sided_scale(cfg.eps)
        self.spec = EstimatorSpec("mincut-sparsified", 1.0 + cfg.eps, "global min cut", refresh_capable=True)

    def init(self, x, rng):
        self.rng = rng
        self.handle = SparsifierHandle(self.d, self.t, self.cfg, rng, self.meter)
        self.cache = CutCache(self.handle.matrix(), self.meter)

    def refresh(self, rng):
        self.init(None, rng)

    def reset(self, x, rng):
        self.init(x, rng)

    def update(self, op=None):
        """The shared decomposition has already absorbed the update; follow its log."""
        for u, v, dw in self.handle.sync():
            self.cache.change(u, v, dw)

    def query(self) -> float:
        return self.cache.get() * self.scale


# --------------------------------------------------------------------- effective resistance


class SparsifiedEffRes(Estimator):
    """Effective resistance between the registered pair, computed on a private sparsifier."""

    def __init__(self, eps: float = 0.25, phi: float = 0.1, oversampling: float | None = None,
                 decomp: DecompConfig | None = None, const: float = 24.0):
        super().__init__()
        self.cfg = SamplingConfig(eps=eps, const=const, oversampling=oversampling)
        self.dcfg = decomp or DecompConfig(phi=phi)
        self.scale = 1.0 if oversampling is None else one_sided_scale(eps)
        self.spec = EstimatorSpec("effres", 1.0 + eps, "effective resistance R(src,snk)")
        self.src, self.snk = 0, 1

    def init(self, g: Graph, rng):
        self.rng = rng
        self.d = ExpanderDecomposition(g, self.dcfg, self.meter)
        self.handle = SparsifierHandle(self.d, 1 << 62, self.cfg, rng, self.meter)
        self.W = self.handle.matrix()
        self._value = None

    def update(self, op):
        self.meter.add("update", 1)
        if isinstance(op, SetPair):
            self.src, self.snk = op.src, op.snk
            self._value = None
            return
        self.d.update(op)
        try:
            deltas = self.handle.sync()
        except BudgetExhausted:  # pragma: no cover - budget is effectively unbounded
            self.handle = SparsifierHandle(self.d, 1 << 62, self.cfg, self.rng, self.meter)
            self.W = self.handle.matrix()
            deltas = []
        for u, v, dw in deltas:
            self.W[u, v] += dw
            self.W[v, u] += dw
        if deltas:
            self._value = None

    def sampled_weight(self, u, v) -> float:
        return self.handle.H.get(edge_key(u, v), 0.0)

    def query(self) -> float:
        if self._value is None:
            n = self.W.shape[0]
            self.meter.add("query", n ** 3)
            if _connected_pair(self.W, self.src, self.snk):
                self._value = effective_resistance_matrix(self.W, self.src, self.snk) * self.scale
            else:
                self._value = math.inf
        return self._value


def _connected_pair(W: np.ndarray, s: int, t: int) -> bool:
    if s == t:
        return True
    seen = np.zeros(W.shape[0], dtype=bool)
    seen[s] = True
    stack = [s]
    while stack:
        x = stack.pop()
        for y in np.flatnonzero((W[x] > 0) & ~seen):
            seen[y] = True
            stack.append(int(y))
    return bool(seen[t])


# --------------------------------------------------------------------- distance


class LandmarkDistance(Estimator):
    """d(src, l) + d(l, snk) through a committed random landmark l.

    If src or snk is itself a landmark the answer is exact and no commitment is
    needed. Deleting an edge at the committed landmark forces a recommit to a fresh
    random landmark (the only randomness the estimator has).
    """

    def __init__(self, k: int | str = 4, candidates=None, stretch: float = 3.0):
        super().__init__()
        self.k, self.candidates = k, candidates
        self.spec = EstimatorSpec("distance", stretch, "shortest-path distance d(src,snk)")
        self.src, self.snk = 0, 1

    def init(self, g: Graph, rng):
        self.rng = rng
        self.g = g.copy()
        pool = list(range(g.n)) if self.candidates is None else list(self.candidates)
        if self.k == "all" or self.k >= len(pool):
            self.landmarks = set(pool)
        else:
            self.landmarks = {pool[i] for i in rng.choice(len(pool), size=self.k, replace=False)}
        self.committed: int | None = None
        self.recommits = 0
        self._dist: dict[int, np.ndarray] = {}

    def _commit(self):
        pool = sorted(self.landmarks)
        self.committed = pool[int(self.rng.integers(len(pool)))]

    def update(self, op):
        self.meter.add("update", 1)
        if isinstance(op, SetPair):
            self.src, self.snk = op.src, op.snk
            return
        self.g.apply(op)
        self._dist.clear()
        if op.kind == DELETE and self.committed is not None and self.committed in (op.u, op.v):
            self.recommits += 1
            self._commit()

    def _sssp(self, s: int) -> np.ndarray:
        if s not in self._dist:
            self.meter.add("query", self.g.m + self.g.n)
            self._dist[s] = dijkstra(self.g, s)
        return self._dist[s]

    def landmark(self) -> int | None:
        if self.src in self.landmarks or self.snk in self.landmarks:
            return None
        if self.committed is None:
            self._commit()
        return self.committed

    def query(self) -> float:
        if self.src == self.snk:
            return 0.0
        if self.src in self.landmarks:
            return float(self._sssp(self.src)[self.snk])
        if self.snk in self.landmarks:
            return float(self._sssp(self.snk)[self.src])
        d = self._sssp(self.landmark())
        return float(d[self.src] + d[self.snk])


# --------------------------------------------------------------------- registry


def make_estimator(name: str, **kw) -> Estimator:
    if name == "sum":
        return SubsampleSum(kw.get("rate", 0.5), kw.get("eps", 0.25))
    if name == "mincut":
        return SampledMinCut(kw.get("rho", 0.5), kw.get("eps", 0.25))
    if name == "effres":
        return SparsifiedEffRes(kw.get("eps", 0.25), kw.get("phi", 0.1), kw.get("oversampling"))
    if name == "distance":
        return LandmarkDistance(kw.get("landmarks", 4))
    raise InvalidArgument(f"unknown estimator {name!r}")
