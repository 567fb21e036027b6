"""Edge-disjoint expander decomposition with a piece-level change log.

Maintenance is deliberately simple: deletions are applied in place and the piece is
re-certified, insertions land in singleton buffer pieces, and a piece is rebuilt from
scratch when its certificate fails or it has absorbed too many deletions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidArgument
from ..graph import DELETE, INSERT, Graph, GraphUpdate, conductance_exact_matrix, edge_key, fiedler_normalized, sweep_cut
from ..metering import Meter
from .sampling import next_pow2

DELETE_EDGE = "delete_edge"
DELETE_VERTEX = "delete_vertex"
REMOVE_PIECE = "remove_piece"
ADD_PIECE = "add_piece"


@dataclass(frozen=True)
class Change:
    kind: str
    pid: int
    u: int = -1
    v: int = -1
    w: float = 0
    size: int = 0  # edge changes this record stands for

    def to_line(self) -> str:
        return f"{self.kind} {self.pid} {self.u} {self.v} {self.w} {self.size}"


@dataclass
class Ownership:
    """Per-vertex owned edge lists with unit prefix sums, for one piece."""

    deg_tilde: dict
    nbrs: dict  # u -> np.ndarray of owned neighbours (sorted)
    weights: dict  # u -> np.ndarray of their weights
    prefix: dict  # u -> cumulative unit counts

    def owner(self, u: int, v: int) -> int:
        return u if (self.deg_tilde[u], u) < (self.deg_tilde[v], v) else v


@dataclass
class Piece:
    pid: int
    adj: dict = field(default_factory=dict)  # u -> {v: w}
    deg: dict = field(default_factory=dict)
    m: int = 0
    cert: str = "none"
    phi_value: float = math.nan
    m0: int = 0
    changes: int = 0
    buffered: bool = False
    _own: Ownership | None = field(default=None, repr=False)

    @classmethod
    def from_edges(cls, pid: int, edges: dict) -> "Piece":
        p = cls(pid)
        for (u, v), w in edges.items():
            p.adj.setdefault(u, {})[v] = w
            p.adj.setdefault(v, {})[u] = w
            p.deg[u] = p.deg.get(u, 0) + w
            p.deg[v] = p.deg.get(v, 0) + w
        p.m = p.m0 = len(edges)
        return p

    @property
    def vertices(self) -> list[int]:
        return sorted(self.adj)

    def edges(self) -> dict:
        return {(u, v): w for u, nb in self.adj.items() for v, w in nb.items() if u < v}

    def matrix(self) -> tuple[np.ndarray, list[int]]:
        verts = self.vertices
        idx = {x: i for i, x in enumerate(verts)}
        W = np.zeros((len(verts), len(verts)))
        for u, nb in self.adj.items():
            for v, w in nb.items():
                W[idx[u], idx[v]] = w
        return W, verts

    def remove_edge(self, u: int, v: int) -> tuple[float, list[int]]:
        w = self.adj[u].pop(v)
        del self.adj[v][u]
        self.m -= 1
        gone = []
        for x in (u, v):
            self.deg[x] -= w
            if not self.adj[x]:
                del self.adj[x]
                del self.deg[x]
                gone.append(x)
        self._own = None
        return w, gone

    def ownership(self, meter: Meter | None = None) -> Ownership:
        if self._own is None:
            dt = {u: next_pow2(d) for u, d in self.deg.items()}
            nbrs, weights, prefix = {}, {}, {}
            for u in sorted(self.adj):
                owned = sorted(v for v in self.adj[u] if (dt[u], u) < (dt[v], v))
                ws = np.array([self.adj[u][v] for v in owned], dtype=np.int64)
                nbrs[u] = np.array(owned, dtype=np.int64)
                weights[u] = ws
                prefix[u] = np.cumsum(ws)
            if meter is not None:
                meter.add("index", 2 * self.m + len(self.adj))
            self._own = Ownership(dt, nbrs, weights, prefix)
        return self._own


@dataclass
class DecompConfig:
    phi: float = 0.1
    exact_max: int = 16
    rebuild_frac: float = 0.25
    buffer_limit: int = 0  # 0 means max(32, m // 4) at build time
    max_phi: float = 0.5
    bucket_weights: bool = True  # False: integer weights are parallel unit edges, one class


class ExpanderDecomposition:
    def __init__(self, g: Graph, cfg: DecompConfig | None = None, meter: Meter | None = None):
        self.cfg = cfg or DecompConfig()
        if not 0 < self.cfg.phi <= self.cfg.max_phi:
            raise InvalidArgument(f"phi must lie in (0, {self.cfg.max_phi}], got {self.cfg.phi}")
        self.phi = self.cfg.phi
        self.g = g.copy()
        self.meter = meter if meter is not None else Meter()
        self.pieces: dict[int, Piece] = {}
        self.edge_piece: dict[tuple[int, int], int] = {}
        self.log: list[Change] = []
        self.cnt = 0
        self._next_pid = 0
        self.buffer_edges = 0
        self.buffer_limit = self.cfg.buffer_limit or max(32, g.m // 4)
        for piece in self._build(dict(((u, v), w) for u, v, w in self.g.edges())):
            self._install(piece)
            piece.ownership(self.meter)

    # ------------------------------------------------------------ construction

    def _new_pid(self) -> int:
        self._next_pid += 1
        return self._next_pid - 1

    def _certify(self, piece: Piece) -> tuple[str, float, list[int] | None]:
        """(certificate kind, conductance value or bound, violating side or None)."""
        if piece.m == 1:
            return "singleton", 1.0, None
        W, verts = piece.matrix()
        k = len(verts)
        if k <= self.cfg.exact_max:
            self.meter.add("decompose", 1 << (k - 1))
            phi, mask = conductance_exact_matrix(W)
            if phi >= self.phi:
                return "exact", phi, None
            return "exact", phi, [verts[i] for i in range(k) if mask >> i & 1]
        self.meter.add("decompose", k * k)
        lam, vec = fiedler_normalized(W)
        if lam / 2 >= self.phi:
            return "spectral", lam / 2, None
        phi, side = sweep_cut(W, vec)
        if phi < self.phi:
            return "sweep", phi, [verts[i] for i in side]
        return "sweep", phi, None

    def _build(self, edges: dict) -> list[Piece]:
        """Split an edge set into certified pieces; every edge lands in exactly one."""
        buckets: dict[int, dict] = {}
        for key, w in edges.items():
            b = int(math.floor(math.log2(w))) if self.cfg.bucket_weights else 0
            buckets.setdefault(b, {})[key] = w
        stack = []
        for b in sorted(buckets):
            stack.extend(_components(buckets[b]))
        out = []
        while stack:
            es = stack.pop()
            self.meter.add("decompose", len(es))
            piece = Piece.from_edges(-1, es)
            cert, val, side = self._certify(piece)
            if side is None:
                piece.cert, piece.phi_value = cert, val
                out.append(piece)
                continue
            S = set(side)
            ins, outs, cross = {}, {}, {}
            for (u, v), w in es.items():
                a, b = u in S, v in S
                (ins if a and b else outs if not a and not b else cross)[(u, v)] = w
            for part in (ins, outs, cross):
                if part:
                    stack.extend(_components(part))
        return out

    def _install(self, piece: Piece, buffered: bool = False) -> Change:
        piece.pid = self._new_pid()
        piece.buffered = buffered
        piece.changes = 0
        piece.m0 = piece.m
        self.pieces[piece.pid] = piece
        for u, nb in piece.adj.items():
            for v in nb:
                if u < v:
                    self.edge_piece[(u, v)] = piece.pid
        if buffered:
            self.buffer_edges += piece.m
        return Change(ADD_PIECE, piece.pid, size=piece.m)

    def _uninstall(self, pid: int) -> Change:
        piece = self.pieces.pop(pid)
        for key in piece.edges():
            del self.edge_piece[key]
        if piece.buffered:
            self.buffer_edges -= piece.m
        return Change(REMOVE_PIECE, pid, size=piece.m)

    # ------------------------------------------------------------ maintenance

    def update(self, upd: GraphUpdate) -> list[Change]:
        self.g.check_update(upd)
        self.g.apply(upd)
        if upd.kind == INSERT:
            changes = self._on_insert(upd)
        elif upd.kind == DELETE:
            changes = self._on_delete(upd)
        else:  # pragma: no cover - check_update rejects these
            raise InvalidArgument(upd.kind)
        self.log.extend(changes)
        self.cnt += sum(c.size for c in changes)
        for pid in {c.pid for c in changes}:
            if pid in self.pieces:
                self.pieces[pid].ownership(self.meter)
        return changes

    def _on_insert(self, upd: GraphUpdate) -> list[Change]:
        key = edge_key(upd.u, upd.v)
        self.meter.add("maintain", 1)
        piece = Piece.from_edges(-1, {key: upd.w})
        piece.cert, piece.phi_value = "singleton", 1.0
        changes = [self._install(piece, buffered=True)]
        if self.buffer_edges > self.buffer_limit:
            changes += self._flush_buffer()
        return changes

    def _flush_buffer(self) -> list[Change]:
        pids = [pid for pid, p in self.pieces.items() if p.buffered]
        edges = {}
        changes = []
        for pid in pids:
            edges.update(self.pieces[pid].edges())
            changes.append(self._uninstall(pid))
        for piece in self._build(edges):
            changes.append(self._install(piece))
        return changes

    def rebuild(self) -> list[Change]:
        """Decompose the whole current graph again (all pieces replaced)."""
        changes = [self._uninstall(pid) for pid in sorted(self.pieces)]
        for piece in self._build(dict(((u, v), w) for u, v, w in self.g.edges())):
            changes.append(self._install(piece))
            piece.ownership(self.meter)
        self.log.extend(changes)
        self.cnt += sum(c.size for c in changes)
        return changes

    def _on_delete(self, upd: GraphUpdate) -> list[Change]:
        key = edge_key(upd.u, upd.v)
        pid = self.edge_piece.pop(key)
        piece = self.pieces[pid]
        w, gone = piece.remove_edge(*key)
        self.meter.add("maintain", 1)
        if piece.buffered:
            self.buffer_edges -= 1
        changes = [Change(DELETE_EDGE, pid, key[0], key[1], w, 1)]
        changes += [Change(DELETE_VERTEX, pid, x) for x in gone]
        piece.changes += 1
        if piece.m == 0:
            del self.pieces[pid]
            return changes
        if piece.changes > self.cfg.rebuild_frac * max(1, piece.m0) or not self._still_certified(piece):
            edges = piece.edges()
            changes.append(self._uninstall(pid))
            for p in self._build(edges):
                changes.append(self._install(p))
        return changes

    def _still_certified(self, piece: Piece) -> bool:
        if len(piece.adj) > 1 and not _connected(piece):
            return False
        cert, val, side = self._certify(piece)
        piece.cert, piece.phi_value = cert, val
        return side is None

    # ------------------------------------------------------------ queries

    def vertex_occurrences(self) -> int:
        return sum(len(p.adj) for p in self.pieces.values())

    def check_partition(self) -> bool:
        seen = {}
        for pid, p in self.pieces.items():
            for key in p.edges():
                if key in seen:
                    return False
                seen[key] = pid
        want = {(u, v) for u, v, _ in self.g.edges()}
        return set(seen) == want and seen == self.edge_piece

    def dump(self) -> str:
        lines = []
        for pid in sorted(self.pieces):
            p = self.pieces[pid]
            lines.append(f"piece {pid} cert={p.cert} phi={p.phi_value:.6g} m={p.m}")
            lines += [f"  {u} {v} {w}" for (u, v), w in sorted(p.edges().items())]
        return "\n".join(lines) + "\n"

    def dump_log(self) -> str:
        return "".join(c.to_line() + "\n" for c in self.log)


def _components(edges: dict) -> list[dict]:
    parent: dict[int, int] = {}

    def find(x):
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict[int, dict] = {}
    for key, w in edges.items():
        groups.setdefault(find(key[0]), {})[key] = w
    return [groups[r] for r in sorted(groups)]


def _connected(piece: Piece) -> bool:
    verts = piece.adj
    start = next(iter(verts))
    seen = {start}
    stack = [start]
    while stack:
        x = stack.pop()
        for y in verts[x]:
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(verts)


def decompose(g: Graph, phi: float, **kw) -> ExpanderDecomposition:
    return ExpanderDecomposition(g, DecompConfig(phi=phi, **kw))


def decomp_update(d: ExpanderDecomposition, upd: GraphUpdate) -> list[Change]:
    return d.update(upd)
