"""Dynamic weighted undirected graph with an update log, plus exact (slow) oracles."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from numba import njit

from .errors import InfiniteResistance, InvalidArgument, InvalidUpdate, SizeLimitError

INSERT = "insert"
DELETE = "delete"


def edge_key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class GraphUpdate:
    kind: str
    u: int
    v: int
    w: float = 0

    @classmethod
    def insert(cls, u, v, w=1):
        return cls(INSERT, int(u), int(v), w)

    @classmethod
    def delete(cls, u, v):
        return cls(DELETE, int(u), int(v), 0)

    def inverse(self, w=None) -> "GraphUpdate":
        if self.kind == INSERT:
            return GraphUpdate.delete(self.u, self.v)
        return GraphUpdate.insert(self.u, self.v, self.w if w is None else w)

    def to_line(self) -> str:
        if self.kind == INSERT:
            return f"+ {self.u} {self.v} {_fmt(self.w)}"
        return f"- {self.u} {self.v}"


def _fmt(w) -> str:
    return str(int(w)) if float(w).is_integer() else repr(float(w))


@dataclass(frozen=True)
class Cut:
    side: frozenset

    @classmethod
    def of(cls, vertices: Iterable[int]) -> "Cut":
        return cls(frozenset(int(v) for v in vertices))

    def check(self, n: int) -> None:
        if not self.side or len(self.side) >= n or any(not 0 <= v < n for v in self.side):
            raise InvalidArgument("cut side must be a nonempty proper subset of V")


class Graph:
    def __init__(self, n: int):
        if n < 0:
            raise InvalidArgument("vertex count must be nonnegative")
        self.n = n
        self.adj: list[dict[int, float]] = [dict() for _ in range(n)]
        self.deg = np.zeros(n, dtype=float)
        self.m = 0
        self.log: list[GraphUpdate] = []

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple]) -> "Graph":
        g = cls(n)
        for e in edges:
            u, v = e[0], e[1]
            w = e[2] if len(e) > 2 else 1
            g._insert(int(u), int(v), w)
        return g

    def copy(self) -> "Graph":
        g = Graph(self.n)
        g.adj = [dict(a) for a in self.adj]
        g.deg = self.deg.copy()
        g.m = self.m
        return g

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def weight(self, u: int, v: int) -> float:
        return self.adj[u].get(v, 0)

    def edges(self) -> Iterator[tuple[int, int, float]]:
        for u in range(self.n):
            for v, w in self.adj[u].items():
                if u < v:
                    yield u, v, w

    def edge_list(self) -> list[tuple[int, int, float]]:
        return list(self.edges())

    def total_weight(self) -> float:
        return float(self.deg.sum()) / 2

    def _check_pair(self, u, v):
        if not (0 <= u < self.n and 0 <= v < self.n):
            raise InvalidUpdate(f"vertex out of range in ({u},{v})")
        if u == v:
            raise InvalidUpdate("self-loops are not allowed")

    def _insert(self, u, v, w):
        self._check_pair(u, v)
        if not w > 0:
            raise InvalidUpdate(f"weight must be positive, got {w}")
        if v in self.adj[u]:
            raise InvalidUpdate(f"edge ({u},{v}) already present")
        self.adj[u][v] = w
        self.adj[v][u] = w
        self.deg[u] += w
        self.deg[v] += w
        self.m += 1

    def _delete(self, u, v) -> float:
        self._check_pair(u, v)
        if v not in self.adj[u]:
            raise InvalidUpdate(f"edge ({u},{v}) not present")
        w = self.adj[u].pop(v)
        del self.adj[v][u]
        self.deg[u] -= w
        self.deg[v] -= w
        self.m -= 1
        return w

    def check_update(self, upd: GraphUpdate) -> None:
        self._check_pair(upd.u, upd.v)
        present = upd.v in self.adj[upd.u]
        if upd.kind == INSERT:
            if present:
                raise InvalidUpdate(f"edge ({upd.u},{upd.v}) already present")
            if not upd.w > 0:
                raise InvalidUpdate("insert needs a positive weight")
        elif upd.kind == DELETE:
            if not present:
                raise InvalidUpdate(f"edge ({upd.u},{upd.v}) not present")
        else:
            raise InvalidUpdate(f"unknown update kind {upd.kind!r}")

    def apply(self, upd: GraphUpdate) -> float:
        """Apply an update; returns the weight of the edge inserted or removed."""
        self.check_update(upd)
        if upd.kind == INSERT:
            self._insert(upd.u, upd.v, upd.w)
            w = upd.w
        else:
            w = self._delete(upd.u, upd.v)
        self.log.append(upd)
        return w

    def adjacency_matrix(self) -> np.ndarray:
        W = np.zeros((self.n, self.n))
        for u, v, w in self.edges():
            W[u, v] = W[v, u] = w
        return W

    def laplacian(self) -> np.ndarray:
        W = self.adjacency_matrix()
        return np.diag(W.sum(axis=1)) - W

    def components(self) -> list[list[int]]:
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            stack, comp = [s], []
            while stack:
                x = stack.pop()
                comp.append(x)
                for y in self.adj[x]:
                    if not seen[y]:
                        seen[y] = True
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def recount(self) -> tuple[np.ndarray, int]:
        """Degrees and edge count recomputed from scratch."""
        deg = np.zeros(self.n)
        m = 0
        for u in range(self.n):
            for v, w in self.adj[u].items():
                deg[u] += w
                if u < v:
                    m += 1
        return deg, m


def apply_update(g: Graph, upd: GraphUpdate) -> None:
    g.apply(upd)


def cut_weight(g: Graph, cut: Cut) -> float:
    cut.check(g.n)
    s = cut.side
    return float(sum(w for u in s for v, w in g.adj[u].items() if v not in s))


def volume(g: Graph, cut: Cut) -> float:
    cut.check(g.n)
    return float(sum(g.deg[u] for u in cut.side))


def quadratic_form(g: Graph, x) -> float:
    x = np.asarray(x, dtype=float)
    return float(sum(w * (x[u] - x[v]) ** 2 for u, v, w in g.edges()))


# ---------------------------------------------------------------- cut enumeration

def _mask_chunks(n: int, chunk: int = 1 << 15):
    """Bit-matrices for every nonempty S not containing vertex n-1 (each cut once)."""
    total = 1 << (n - 1)
    bits = np.arange(n - 1, dtype=np.int64)
    for start in range(1, total, chunk):
        ids = np.arange(start, min(total, start + chunk), dtype=np.int64)
        X = ((ids[:, None] >> bits[None, :]) & 1).astype(float)
        X = np.hstack([X, np.zeros((len(ids), 1))])
        yield ids, X


def all_cuts(W: np.ndarray):
    """Yields (mask ids, cut weights, side volumes) over every cut of a dense weight matrix."""
    n = W.shape[0]
    deg = W.sum(axis=1)
    for ids, X in _mask_chunks(n):
        XW = X @ W
        cut = np.einsum("ij,ij->i", XW, 1.0 - X)
        vol = X @ deg
        yield ids, cut, vol


def _mask_to_cut(mask: int, n: int) -> Cut:
    return Cut.of(i for i in range(n) if mask >> i & 1)


def conductance_exact_matrix(W: np.ndarray) -> tuple[float, int]:
    n = W.shape[0]
    total = W.sum()
    best, best_mask = math.inf, 0
    for ids, cut, vol in all_cuts(W):
        denom = np.minimum(vol, total - vol)
        with np.errstate(divide="ignore", invalid="ignore"):
            phi = np.where(denom > 0, cut / np.where(denom > 0, denom, 1), np.inf)
        i = int(np.argmin(phi))
        if phi[i] < best:
            best, best_mask = float(phi[i]), int(ids[i])
    return best, best_mask


def conductance_min(g: Graph, exact: bool = True, max_exact: int = 20) -> tuple[float, Cut, bool]:
    """Minimum conductance and a minimizing cut.

    Returns (phi, cut, approximate). Exact enumeration up to ``max_exact`` vertices;
    otherwise a spectral sweep cut, flagged approximate.
    """
    if g.n < 2 or g.m == 0:
        raise InvalidArgument("conductance needs at least one edge")
    if g.n <= max_exact:
        phi, mask = conductance_exact_matrix(g.adjacency_matrix())
        return phi, _mask_to_cut(mask, g.n), False
    if exact:
        raise SizeLimitError(f"exact conductance limited to {max_exact} vertices, got {g.n}")
    phi, side = sweep_cut(g.adjacency_matrix())
    return phi, Cut.of(side), True


def fiedler_normalized(W: np.ndarray) -> tuple[float, np.ndarray]:
    """Second-smallest eigenpair of the normalized Laplacian (vector mapped back by D^-1/2)."""
    deg = W.sum(axis=1)
    dinv = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1)), 0.0)
    N = np.eye(len(deg)) - dinv[:, None] * W * dinv[None, :]
    vals, vecs = np.linalg.eigh(N)
    return float(vals[1]), vecs[:, 1] * dinv


def sweep_cut(W: np.ndarray, vec: np.ndarray | None = None) -> tuple[float, list[int]]:
    """Best prefix cut along the ordering of ``vec`` (Fiedler vector by default)."""
    if vec is None:
        _, vec = fiedler_normalized(W)
    order = np.argsort(vec, kind="stable")
    deg = W.sum(axis=1)
    total = deg.sum()
    Wo = W[np.ix_(order, order)]
    # cut(prefix k) = vol(prefix) - 2*inside(prefix)
    vol = np.cumsum(deg[order])
    inner = np.cumsum(np.tril(Wo, -1).sum(axis=1))
    cut = vol - 2 * inner
    denom = np.minimum(vol, total - vol)[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.where(denom > 0, cut[:-1] / np.where(denom > 0, denom, 1), np.inf)
    k = int(np.argmin(phi))
    return float(phi[k]), sorted(int(v) for v in order[: k + 1])


# ---------------------------------------------------------------- minimum cut

@njit(cache=True)
def _stoer_wagner(W):
    n = W.shape[0]
    A = W.copy()
    label = np.arange(n)
    group = np.arange(n)
    best = np.inf
    best_mask = np.zeros(n, np.bool_)
    key = np.empty(n)
    used = np.empty(n, np.bool_)
    k = n
    while k > 1:
        for i in range(k):
            key[i] = 0.0
            used[i] = False
        prev = -1
        last = -1
        for it in range(k):
            sel = -1
            bv = -1.0
            for i in range(k):
                if not used[i] and key[i] > bv:
                    bv = key[i]
                    sel = i
            used[sel] = True
            prev = last
            last = sel
            if it < k - 1:
                row = A[sel]
                for i in range(k):
                    key[i] += row[i]
        if key[last] < best:
            best = key[last]
            rep = label[last]
            for v in range(n):
                best_mask[v] = group[v] == rep
        rl = label[last]
        rp = label[prev]
        for v in range(n):
            if group[v] == rl:
                group[v] = rp
        for i in range(k):
            A[prev, i] += A[last, i]
        for i in range(k):
            A[i, prev] = A[prev, i]
        A[prev, prev] = 0.0
        j = k - 1
        if last != j:
            # compact: move row/column j into the freed slot
            for i in range(k):
                A[last, i] = A[j, i]
            for i in range(k):
                A[i, last] = A[last, i]
            A[last, last] = 0.0
            label[last] = label[j]
        k -= 1
    return best, best_mask


def min_cut_matrix(W: np.ndarray) -> tuple[float, np.ndarray]:
    """Global min cut of a dense symmetric weight matrix; returns (value, side mask)."""
    n = W.shape[0]
    if n < 2:
        raise InvalidArgument("min cut needs at least two vertices")
    val, mask = _stoer_wagner(np.ascontiguousarray(W, dtype=np.float64))
    return float(val), mask


MAX_SW = 400


def min_cut_exact(g: Graph) -> tuple[float, Cut]:
    if g.n < 2:
        raise InvalidArgument("min cut needs at least two vertices")
    comps = g.components()
    if len(comps) > 1:
        return 0.0, Cut.of(comps[0])
    if g.n > MAX_SW:
        raise SizeLimitError(f"exact min cut limited to {MAX_SW} vertices")
    val, mask = min_cut_matrix(g.adjacency_matrix())
    return val, Cut.of(np.flatnonzero(mask))


def min_cut_enumerate(g: Graph, max_n: int = 14) -> tuple[float, Cut]:
    if g.n > max_n:
        raise SizeLimitError(f"enumeration limited to {max_n} vertices")
    best, best_mask = math.inf, 0
    for ids, cut, _ in all_cuts(g.adjacency_matrix()):
        i = int(np.argmin(cut))
        if cut[i] < best:
            best, best_mask = float(cut[i]), int(ids[i])
    return best, _mask_to_cut(best_mask, g.n)


# ---------------------------------------------------------------- resistance, distance

def effective_resistance_matrix(W: np.ndarray, u: int, v: int) -> float:
    if u == v:
        return 0.0
    L = np.diag(W.sum(axis=1)) - W
    Lp = np.linalg.pinv(L, hermitian=True)
    b = np.zeros(W.shape[0])
    b[u], b[v] = 1.0, -1.0
    return float(b @ Lp @ b)


def effective_resistance_exact(g: Graph, u: int, v: int) -> float:
    if u == v:
        return 0.0
    comp = next(c for c in g.components() if u in c)
    if v not in comp:
        raise InfiniteResistance(f"{u} and {v} are disconnected")
    idx = {x: i for i, x in enumerate(comp)}
    W = np.zeros((len(comp), len(comp)))
    for x in comp:
        for y, w in g.adj[x].items():
            W[idx[x], idx[y]] = w
    return effective_resistance_matrix(W, idx[u], idx[v])


def dijkstra(g: Graph, s: int) -> np.ndarray:
    dist = np.full(g.n, np.inf)
    dist[s] = 0.0
    heap = [(0.0, s)]
    while heap:
        d, x = heapq.heappop(heap)
        if d > dist[x]:
            continue
        for y, w in g.adj[x].items():
            nd = d + w
            if nd < dist[y]:
                dist[y] = nd
                heapq.heappush(heap, (nd, y))
    return dist


def distance_exact(g: Graph, s: int, t: int) -> float:
    if s == t:
        return 0.0
    return float(dijkstra(g, s)[t])


# ---------------------------------------------------------------- text formats

def write_graph(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines += [f"{u} {v} {_fmt(w)}" for u, v, w in g.edges()]
    return "\n".join(lines) + "\n"


def _num(tok: str):
    x = float(tok)
    return int(x) if x.is_integer() else x


def read_graph(text: str) -> Graph:
    rows = [ln.split() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    n, m = int(rows[0][0]), int(rows[0][1])
    if len(rows) - 1 != m:
        raise InvalidArgument(f"header says {m} edges, found {len(rows) - 1}")
    return Graph.from_edges(n, [(int(r[0]), int(r[1]), _num(r[2])) for r in rows[1:]])


def write_script(updates: Iterable[GraphUpdate]) -> str:
    return "".join(u.to_line() + "\n" for u in updates)


def read_script(text: str) -> list[GraphUpdate]:
    out = []
    for ln in text.splitlines():
        tok = ln.split()
        if not tok:
            continue
        if tok[0] == "+":
            out.append(GraphUpdate.insert(int(tok[1]), int(tok[2]), _num(tok[3])))
        elif tok[0] == "-":
            out.append(GraphUpdate.delete(int(tok[1]), int(tok[2])))
        else:
            raise InvalidArgument(f"bad script line: {ln!r}")
    return out


# ---------------------------------------------------------------- families

def complete_graph(n: int, w=1) -> Graph:
    return Graph.from_edges(n, [(u, v, w) for u in range(n) for v in range(u + 1, n)])


def cycle_graph(n: int, w=1) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n, w) for i in range(n)])


def path_graph(n: int, w=1) -> Graph:
    return Graph.from_edges(n, [(i, i + 1, w) for i in range(n - 1)])


def random_graph(n: int, m: int, rng: np.random.Generator, wmin: int = 1, wmax: int = 1) -> Graph:
    """Uniform simple graph with exactly m edges and integer weights in [wmin, wmax]."""
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    if m > len(pairs):
        raise InvalidArgument("too many edges requested")
    pick = rng.choice(len(pairs), size=m, replace=False)
    ws = rng.integers(wmin, wmax + 1, size=m)
    return Graph.from_edges(n, [(*pairs[i], int(w)) for i, w in zip(pick, ws)])


def two_cliques(q: int, intra: int, bridge: int, bridge_w: int, rng: np.random.Generator) -> Graph:
    """Two q-cliques (vertices 0..q-1 and q..2q-1) with intra-clique weight ``intra``
    joined by ``bridge`` random cross edges of weight ``bridge_w``."""
    if bridge > q * q:
        raise InvalidArgument("more bridge edges than cross pairs")
    edges = []
    for base in (0, q):
        edges += [(base + i, base + j, intra) for i in range(q) for j in range(i + 1, q)]
    cross = rng.choice(q * q, size=bridge, replace=False)
    edges += [(int(c // q), q + int(c % q), bridge_w) for c in cross]
    return Graph.from_edges(2 * q, edges)


def random_multigraph(n: int, units: int, rng: np.random.Generator) -> Graph:
    """``units`` uniformly random unit edges; parallel copies fold into integer weights."""
    u = rng.integers(0, n, size=units)
    v = rng.integers(0, n - 1, size=units)
    v = np.where(v >= u, v + 1, v)  # uniform over v != u
    a, b = np.minimum(u, v), np.maximum(u, v)
    keys, counts = np.unique(a * n + b, return_counts=True)
    return Graph.from_edges(n, [(int(k // n), int(k % n), int(c)) for k, c in zip(keys, counts)])


def random_circulant(n: int, d: int, rng: np.random.Generator, wmin: int = 1, wmax: int = 1) -> Graph:
    """d-regular circulant graph on random offsets (d even, d < n - 1)."""
    if d % 2 or d >= n - 1:
        raise InvalidArgument("need even d < n - 1")
    offs = 1 + rng.choice((n - 1) // 2, size=d // 2, replace=False)
    keys = {edge_key(i, (i + int(o)) % n) for i in range(n) for o in offs}
    ws = rng.integers(wmin, wmax + 1, size=len(keys))
    return Graph.from_edges(n, [(u, v, int(w)) for (u, v), w in zip(sorted(keys), ws)])
