"""Estimation problems: the evolving input, legal updates, and the exact answer g(x)."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfiniteResistance, InvalidUpdate
from .graph import Graph, GraphUpdate, distance_exact, effective_resistance_exact, min_cut_exact


@dataclass(frozen=True)
class SetPair:
    """Moves the (src, snk) register; the answer then refers to the new pair."""

    src: int
    snk: int


@dataclass(frozen=True)
class SumUpdate:
    kind: str  # "insert" | "delete"
    key: int
    value: float = 0.0

    @classmethod
    def insert(cls, key, value):
        return cls("insert", int(key), float(value))

    @classmethod
    def delete(cls, key):
        return cls("delete", int(key))


def describe(update) -> dict:
    """JSON-friendly view of an update (used in transcripts)."""
    if isinstance(update, GraphUpdate):
        d = {"op": update.kind, "u": update.u, "v": update.v}
        if update.kind == "insert":
            d["w"] = update.w
        return d
    if isinstance(update, SumUpdate):
        d = {"op": update.kind, "key": update.key}
        if update.kind == "insert":
            d["value"] = update.value
        return d
    if isinstance(update, SetPair):
        return {"op": "pair", "src": update.src, "snk": update.snk}
    if update is None:
        return {"op": "none"}
    raise TypeError(f"unknown update {update!r}")


class SumProblem:
    name = "sum"

    def __init__(self, items: dict | None = None):
        self.items = dict(items or {})

    def input(self):
        return dict(self.items)

    def clone(self) -> "SumProblem":
        return SumProblem(self.items)

    def apply(self, upd: SumUpdate) -> None:
        if not isinstance(upd, SumUpdate):
            raise InvalidUpdate(f"sum problem cannot take {upd!r}")
        if upd.kind == "insert":
            if upd.key in self.items:
                raise InvalidUpdate(f"key {upd.key} already present")
            self.items[upd.key] = upd.value
        elif upd.kind == "delete":
            if upd.key not in self.items:
                raise InvalidUpdate(f"key {upd.key} absent")
            del self.items[upd.key]
        else:
            raise InvalidUpdate(upd.kind)

    def truth(self) -> float:
        return float(sum(self.items.values()))


class MinCutProblem:
    name = "mincut"

    def __init__(self, g: Graph):
        self.g = g.copy()
        self._cache = None

    def input(self):
        return self.g.copy()

    def clone(self):
        return MinCutProblem(self.g)

    def apply(self, upd) -> None:
        if not isinstance(upd, GraphUpdate):
            raise InvalidUpdate(f"min cut problem cannot take {upd!r}")
        self.g.apply(upd)
        self._cache = None

    def truth(self) -> float:
        if self._cache is None:
            self._cache = min_cut_exact(self.g)[0]
        return self._cache


class _PairProblem:
    def __init__(self, g: Graph, src: int = 0, snk: int = 1):
        self.g = g.copy()
        self.src, self.snk = src, snk
        self._cache = None

    def input(self):
        return self.g.copy()

    def clone(self):
        return type(self)(self.g, self.src, self.snk)

    def apply(self, upd) -> None:
        if isinstance(upd, SetPair):
            if not (0 <= upd.src < self.g.n and 0 <= upd.snk < self.g.n):
                raise InvalidUpdate("pair out of range")
            self.src, self.snk = upd.src, upd.snk
        elif isinstance(upd, GraphUpdate):
            self.g.apply(upd)
        else:
            raise InvalidUpdate(f"{self.name} problem cannot take {upd!r}")
        self._cache = None


class EffResProblem(_PairProblem):
    name = "effres"

    def truth(self) -> float:
        if self._cache is None:
            try:
                self._cache = effective_resistance_exact(self.g, self.src, self.snk)
            except InfiniteResistance:
                self._cache = math.inf
        return self._cache


class DistanceProblem(_PairProblem):
    name = "distance"

    def truth(self) -> float:
        if self._cache is None:
            self._cache = distance_exact(self.g, self.src, self.snk)
        return self._cache
