"""Cost-accounted simulations of the oblivious/adaptive separations.

Everything here is charged in oracle reads. A read is one call to
``CostedOracle.read``; no bit of the oracle can be obtained any other way, so every
cost statement below is an identity between a counter and a formula.
"""

from __future__ import annotations

import hashlib
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DecodeError, InvalidArgument


class CostedOracle:
    """Keyed pseudorandom function standing in for a random oracle.

    ``read(index, width)`` returns ``width`` bits (width <= 64) and costs one unit.
    """

    def __init__(self, seed: int):
        self.key = int(seed).to_bytes(16, "little", signed=False)
        self.reads = 0

    def read(self, index: int, width: int = 1) -> int:
        if not 1 <= width <= 64:
            raise InvalidArgument("width must be in [1, 64]")
        if index < 0:
            raise InvalidArgument("negative oracle index")
        self.reads += 1
        nbytes = max(16, (index.bit_length() + 7) // 8)
        h = hashlib.blake2b(index.to_bytes(nbytes, "little"), key=self.key, digest_size=8)
        return int.from_bytes(h.digest(), "little") & ((1 << width) - 1)


class HFunction:
    """H'_n: {0,1}^{2n} -> {0,1}^n built from disjoint oracle blocks.

    b(z) is the integer written 1 followed by the 2n bits of z. Output bit i is the
    XOR of P/n single-bit reads R[n*P*b(z) + j], j in the i-th group of 1..P, so one
    evaluation costs exactly P reads and distinct inputs never share a bit.
    """

    def __init__(self, oracle: CostedOracle, n: int, P: int | None = None):
        P = n * n if P is None else P
        if P % n:
            raise InvalidArgument("P must be a multiple of n")
        self.oracle, self.n, self.P = oracle, n, P
        self.evals = 0

    def b(self, z: int) -> int:
        if not 0 <= z < 1 << (2 * self.n):
            raise InvalidArgument("z must have 2n bits")
        return (1 << (2 * self.n)) | z

    def __call__(self, z: int) -> int:
        base = self.n * self.P * self.b(z)
        g = self.P // self.n
        out = 0
        for i in range(self.n):
            bit = 0
            for j in range(i * g + 1, (i + 1) * g + 1):
                bit ^= self.oracle.read(base + j)
            out |= bit << i
        self.evals += 1
        return out

    def pair(self, x: int, y: int) -> int:
        return self(x << self.n | y)


# ------------------------------------------------------------------ list of outputs


@dataclass
class ListOfOutputsState:
    """Excluded set X and the FIFO list Y of n^c suffixes."""

    n: int
    c: int
    X: set = field(default_factory=set)
    Y: deque = field(default_factory=deque)

    @classmethod
    def fresh(cls, n: int, c: int, rng: np.random.Generator) -> "ListOfOutputsState":
        Y = deque(int(v) for v in rng.integers(0, 1 << n, size=n**c))
        return cls(n, c, set(), Y)

    @property
    def size(self) -> int:
        return self.n**self.c

    def x_bound(self) -> float:
        return 2 ** (0.5 * self.n)

    def update(self, x_excluded: int, y_new: int) -> int:
        """Add to X, replace the earliest y. Returns the removed y."""
        self.X.add(x_excluded)
        old = self.Y.popleft()
        self.Y.append(y_new)
        return old

    def legal(self, x: int) -> bool:
        return x not in self.X


def _fresh_x(state: ListOfOutputsState, rng: np.random.Generator, avoid=()) -> int:
    while True:
        x = int(rng.integers(0, 1 << state.n))
        if x not in state.X and x not in avoid:
            return x


class ObliviousLoO:
    """Fix x once, keep H(x . y) for the current Y, pay P per new y."""

    def preprocess(self, state, H, rng):
        self.rng = rng
        self.x = _fresh_x(state, rng)
        self.vals = deque(H.pair(self.x, y) for y in state.Y)
        self.failures = 0

    def update(self, state, H, old_y, new_y):
        if not state.legal(self.x):
            # the script hit our x: record it and start over on a new x
            self.failures += 1
            self.x = _fresh_x(state, self.rng)
            self.vals = deque(H.pair(self.x, y) for y in state.Y)
            return self.x
        self.vals.popleft()
        self.vals.append(H.pair(self.x, new_y))
        return self.x


class HonestAdaptive:
    """No caching: a new legal x every round and all n^c values recomputed."""

    def preprocess(self, state, H, rng):
        self.rng = rng
        self.x = _fresh_x(state, rng)
        self.vals = [H.pair(self.x, y) for y in state.Y]

    def update(self, state, H, old_y, new_y):
        self.x = _fresh_x(state, self.rng)
        self.vals = [H.pair(self.x, y) for y in state.Y]
        return self.x


class CacheEverything:
    """Precomputes up to ``budget`` values on a pool of x's and the initial Y, caches
    every value it ever computes, and picks the unused x with the most cache hits."""

    def __init__(self, budget: int):
        self.budget = budget

    def _get(self, H, x, y):
        key = (x, y)
        if key not in self.cache:
            self.cache[key] = H.pair(x, y)
        return self.cache[key]

    def preprocess(self, state, H, rng):
        self.rng = rng
        self.cache: dict = {}
        self.pool: list[int] = []
        ys = list(state.Y)
        spent = 0
        while spent + len(ys) <= self.budget:
            x = _fresh_x(state, rng, self.pool)
            self.pool.append(x)
            for y in ys:
                self._get(H, x, y)
            spent += len(ys)
        self.x = self.pool[0] if self.pool else _fresh_x(state, rng)
        self.vals = [self._get(H, self.x, y) for y in state.Y]

    def update(self, state, H, old_y, new_y):
        best, hits = None, -1
        for x in self.pool:
            if x in state.X:
                continue
            h = sum((x, y) in self.cache for y in state.Y)
            if h > hits:
                best, hits = x, h
        if best is None or hits == 0:
            best = _fresh_x(state, self.rng)
        self.x = best
        self.vals = [self._get(H, self.x, y) for y in state.Y]
        return self.x


@dataclass
class LoOReport:
    n: int
    c: int
    P: int
    steps: int
    preprocess_cost: int
    update_costs: list
    failures: int = 0
    violations: int = 0
    x_bound_ok: bool = True
    slack: float = 0.0

    @property
    def total(self) -> int:
        return self.preprocess_cost + sum(self.update_costs)

    def block_costs(self) -> list[int]:
        b = self.n**self.c
        return [sum(self.update_costs[i:i + b]) for i in range(0, len(self.update_costs), b)]

    def oblivious_formula(self) -> int:
        return self.n**self.c * self.P + self.steps * self.P

    def block_formula(self) -> int:
        return self.n ** (2 * self.c) * self.P

    def amortized(self) -> float:
        return self.total / max(1, self.steps)


def collision_slack(n: int, c: int, steps: int, pool: int = 0) -> float:
    """Bound on the fraction of a block's evaluations a cache could save: each needed
    point x_j . y_i is reusable only if the fresh y_i repeats one of the at most
    n^c + steps + pool suffixes seen before."""
    return min(1.0, (n**c + steps + pool) / 2**n)


def _run_lob(alg, n, c, steps, seed, P, adaptive):
    ss = np.random.SeedSequence(seed)
    o_ss, a_ss, g_ss = ss.spawn(3)
    oracle = CostedOracle(int(o_ss.generate_state(1, np.uint64)[0]))
    H = HFunction(oracle, n, P)
    adv = np.random.default_rng(a_ss)
    state = ListOfOutputsState.fresh(n, c, adv)
    # the oblivious script is fixed before the game starts
    script_x = [int(v) for v in adv.integers(0, 1 << n, size=steps)]
    script_y = [int(v) for v in adv.integers(0, 1 << n, size=steps)]
    alg.preprocess(state, H, np.random.default_rng(g_ss))
    rep = LoOReport(n, c, H.P, steps, oracle.reads, [], x_bound_ok=steps < state.x_bound())
    x_prev = alg.x
    for i in range(steps):
        before = oracle.reads
        old = state.update(x_prev if adaptive else script_x[i], script_y[i])
        x_prev = alg.update(state, H, old, script_y[i])
        rep.update_costs.append(oracle.reads - before)
        if not state.legal(x_prev):
            rep.violations += 1
    rep.failures = getattr(alg, "failures", 0)
    rep.slack = collision_slack(n, c, steps, len(getattr(alg, "pool", ())) * n**c)
    return rep


def lob_oblivious(n: int, c: int, steps: int, seed: int, P: int | None = None) -> LoOReport:
    """Oblivious algorithm against a fixed random script of X additions."""
    return _run_lob(ObliviousLoO(), n, c, steps, seed, P, adaptive=False)


def lob_adaptive_game(algorithm, n: int, c: int, steps: int, seed: int, P: int | None = None) -> LoOReport:
    """Adversary excludes the algorithm's previous x every round."""
    return _run_lob(algorithm, n, c, steps, seed, P, adaptive=True)


# ------------------------------------------------------------------ boxes


@dataclass(frozen=True)
class Box:
    p: int
    body: int


class BoxesScheme:
    """Enc(x) = (p, k_p xor x) with k_p the T-fold oracle chain from p.

    The chain map is R_k(v) = oracle[k * 2^n + v] read n bits wide, so each chain step
    is one read and Dec costs exactly T.
    """

    def __init__(self, oracle: CostedOracle, n: int, T: int):
        if T < 1 or not 1 <= n <= 64:
            raise InvalidArgument("need T >= 1 and 1 <= n <= 64")
        self.oracle, self.n, self.T = oracle, n, T

    def gen(self, rng: np.random.Generator) -> int:
        return int(rng.integers(0, 1 << self.n))

    def _chain(self, key: int, p: int) -> int:
        v = p
        for _ in range(self.T):
            v = self.oracle.read((key << self.n) | v, self.n)
        return v

    def enc(self, key: int, x: int, rng: np.random.Generator) -> Box:
        if not 0 <= x < 1 << self.n:
            raise InvalidArgument("plaintext must have n bits")
        p = int(rng.integers(0, 1 << self.n))
        return Box(p, self._chain(key, p) ^ x)

    def dec(self, key: int, box) -> int:
        lim = 1 << self.n
        if not isinstance(box, Box) or not (0 <= box.p < lim and 0 <= box.body < lim):
            raise DecodeError(f"malformed box {box!r}")
        return self._chain(key, box.p) ^ box.body


def boxes_roundtrip(scheme: BoxesScheme, key: int, inputs, rng: np.random.Generator) -> bool:
    return all(scheme.dec(key, scheme.enc(key, int(x), rng)) == int(x) for x in inputs)


@dataclass(frozen=True)
class BitQuery:
    """Statistical query q(x) = bit ``j`` of x, optionally negated."""

    j: int
    flip: bool = False

    def __call__(self, xs: np.ndarray) -> np.ndarray:
        v = (np.asarray(xs, dtype=np.int64) >> self.j) & 1
        return 1 - v if self.flip else v


@dataclass(frozen=True)
class ThresholdQuery:
    t: int

    def __call__(self, xs: np.ndarray) -> np.ndarray:
        return (np.asarray(xs, dtype=np.int64) < self.t).astype(np.int64)


def boxes_width(alpha: float, beta: float, ell: int) -> int:
    """Number of boxes to open: ceil(ln(2 ell / beta) / (2 alpha^2)) (Hoeffding + union bound)."""
    return math.ceil(math.log(2 * ell / beta) / (2 * alpha**2))


@dataclass
class AvgBoxesResult:
    answers: np.ndarray
    w: int
    w_eff: int
    decode_cost: int
    query_cost: int

    @property
    def cost(self) -> int:
        return self.decode_cost + self.query_cost


def avg_boxes_oblivious(scheme: BoxesScheme, key: int, boxes, queries, alpha: float, beta: float,
                        rng: np.random.Generator) -> AvgBoxesResult:
    """Open a random subset of w boxes once, answer each query by its mean on them.

    If w exceeds the number of boxes every box is opened (the mean is then exact).
    Query cost is one unit per predicate evaluation.
    """
    m = len(boxes)
    w = boxes_width(alpha, beta, len(queries))
    w_eff = min(w, m)
    pick = rng.choice(m, size=w_eff, replace=False)
    before = scheme.oracle.reads
    plain = np.array([scheme.dec(key, boxes[i]) for i in pick], dtype=np.int64)
    decode_cost = scheme.oracle.reads - before
    answers = np.array([float(np.mean(q(plain))) for q in queries])
    return AvgBoxesResult(answers, w, w_eff, decode_cost, len(queries) * w_eff)


def oblivious_query_stream(n: int, ell: int, rng: np.random.Generator) -> list:
    out = []
    for _ in range(ell):
        if rng.random() < 0.5:
            out.append(BitQuery(int(rng.integers(n)), bool(rng.integers(2))))
        else:
            out.append(ThresholdQuery(int(rng.integers(1, 1 << n))))
    return out
