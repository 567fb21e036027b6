"""Differential-privacy primitives: Laplace noise, exponential-mechanism median,
composition and subsampling accounting, and the geometric answer grid."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument


class GridClampWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise InvalidArgument(f"epsilon must be nonnegative, got {self.epsilon}")
        if not 0.0 <= self.delta <= 1.0:
            raise InvalidArgument(f"delta must lie in [0,1], got {self.delta}")


def laplace_sample(scale: float, rng: np.random.Generator) -> float:
    if not scale > 0:
        raise InvalidArgument(f"scale must be positive, got {scale}")
    return float(rng.laplace(0.0, scale))


def advanced_composition(k: int, eps: float, delta: float, delta_prime: float) -> PrivacyParams:
    """k-fold adaptive composition of (eps, delta)-DP mechanisms."""
    if not (isinstance(k, (int, np.integer)) and k >= 1):
        raise InvalidArgument(f"k must be a positive integer, got {k}")
    if not 0.0 <= eps <= 1.0:
        raise InvalidArgument(f"eps must lie in [0,1], got {eps}")
    if not 0.0 <= delta <= 1.0:
        raise InvalidArgument(f"delta must lie in [0,1], got {delta}")
    if not 0.0 < delta_prime <= 1.0:
        raise InvalidArgument(f"delta_prime must lie in (0,1], got {delta_prime}")
    eps_total = math.sqrt(2 * k * math.log(1.0 / delta_prime)) * eps + 2 * k * eps * eps
    return PrivacyParams(eps_total, min(1.0, delta_prime + k * delta))


def subsample_epsilon(eps: float, k: int, n: int) -> float:
    """Privacy of an eps-DP mechanism run on k of n rows drawn with repetition."""
    if not (k >= 1 and n >= 1):
        raise InvalidArgument("k and n must be positive")
    if 2 * k > n:
        raise InvalidArgument(f"subsampling needs k <= n/2, got k={k}, n={n}")
    if not 0.0 <= eps <= 1.0:
        raise InvalidArgument(f"eps must lie in [0,1], got {eps}")
    return 6.0 * k / n * eps


# exponents are computed with a little slack so that e.g. U = (1+alpha)^a exactly
# does not pick up a spurious extra level from floating error
_LOG_TOL = 1e-9


@dataclass(frozen=True)
class OrderedGrid:
    U: float
    alpha: float
    A: int
    points: np.ndarray = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def zero_index(self) -> int:
        return 2 * self.A + 1

    @property
    def extreme(self) -> float:
        return float(self.points[-1])

    def index_of(self, value: float) -> int:
        """Index of an exact grid member; raises for anything off-grid."""
        i = int(np.searchsorted(self.points, value))
        for j in (i - 1, i):
            if 0 <= j < self.size and _same(self.points[j], value):
                return j
        raise InvalidArgument(f"{value!r} is not a grid point")

    def indices_of(self, values) -> np.ndarray:
        vals = np.asarray(values, dtype=float)
        idx = np.clip(np.searchsorted(self.points, vals), 0, self.size - 1)
        lo = np.clip(idx - 1, 0, self.size - 1)
        pick_lo = np.abs(self.points[lo] - vals) < np.abs(self.points[idx] - vals)
        idx = np.where(pick_lo, lo, idx)
        ok = np.isclose(self.points[idx], vals, rtol=1e-12, atol=0.0) | (
            (vals == 0) & (self.points[idx] == 0)
        )
        if not np.all(ok):
            bad = vals[~ok][0]
            raise InvalidArgument(f"{bad!r} is not a grid point")
        return idx


def _same(a: float, b: float) -> bool:
    if a == b:
        return True
    return a != 0 and b != 0 and abs(a - b) <= 1e-12 * max(abs(a), abs(b))


def build_grid(U: float, alpha: float) -> OrderedGrid:
    if not U > 1:
        raise InvalidArgument(f"U must exceed 1, got {U}")
    if not 0 < alpha <= 1:
        raise InvalidArgument(f"alpha must lie in (0,1], got {alpha}")
    A = math.ceil(math.log(U) / math.log1p(alpha) - _LOG_TOL)
    pos = (1.0 + alpha) ** np.arange(-A, A + 1, dtype=float)
    points = np.concatenate([-pos[::-1], [0.0], pos])
    points.setflags(write=False)
    return OrderedGrid(U=float(U), alpha=float(alpha), A=A, points=points)


def round_indices(values, grid: OrderedGrid) -> tuple[np.ndarray, int]:
    """Vectorised rounding away from zero onto the grid.

    Returns grid indices and the number of values clamped at the extreme.
    """
    v = np.asarray(values, dtype=float)
    mag = np.abs(v)
    base = math.log1p(grid.alpha)
    with np.errstate(divide="ignore"):
        a = np.ceil(np.log(np.where(mag > 0, mag, 1.0)) / base - _LOG_TOL)
    a = np.clip(a, -grid.A, grid.A).astype(np.int64)
    # guard the floating-point boundary: the chosen level must cover |v|
    level = (1.0 + grid.alpha) ** a.astype(float)
    a = np.where((level < mag) & (a < grid.A), a + 1, a)
    clamped = mag > grid.extreme * (1 + 1e-12)
    offset = a + grid.A  # 0 .. 2A
    pos_idx = grid.zero_index + 1 + offset
    neg_idx = grid.zero_index - 1 - offset
    idx = np.where(v > 0, pos_idx, np.where(v < 0, neg_idx, grid.zero_index))
    return idx.astype(np.int64), int(np.count_nonzero(clamped & (v != 0)))


def round_to_grid(v: float, grid: OrderedGrid) -> float:
    """Smallest-magnitude grid point whose magnitude is at least |v|, sign kept."""
    idx, clamped = round_indices([v], grid)
    if clamped:
        warnings.warn(
            f"value {v!r} exceeds grid extreme {grid.extreme!r}; clamped", GridClampWarning, stacklevel=2
        )
    return float(grid.points[idx[0]])


@dataclass(frozen=True)
class MedianConfig:
    eps_med: float
    beta: float
    gamma_rank: int

    @classmethod
    def for_grid(cls, grid: OrderedGrid, eps_med: float, beta: float, const: float = 2.0) -> "MedianConfig":
        return cls(eps_med, beta, gamma_for(grid.size, eps_med, beta, const))

    def __post_init__(self):
        if not self.eps_med > 0:
            raise InvalidArgument("eps_med must be positive")
        if not 0 < self.beta < 1:
            raise InvalidArgument("beta must lie in (0,1)")
        if self.gamma_rank < 1:
            raise InvalidArgument("gamma_rank must be a positive integer")


def gamma_for(grid_size: int, eps_med: float, beta: float, const: float = 2.0) -> int:
    return math.ceil(const / eps_med * math.log(grid_size / beta))


def median_utility(counts: np.ndarray) -> np.ndarray:
    """u(x) = min(#{s <= x}, #{s >= x}); changes by at most one per changed row."""
    counts = np.asarray(counts)
    below = np.cumsum(counts)
    above = np.cumsum(counts[::-1])[::-1]
    return np.minimum(below, above)


def median_distribution(counts: np.ndarray, eps_med: float) -> np.ndarray:
    """Exact output distribution of the exponential-mechanism median."""
    logw = 0.5 * eps_med * median_utility(counts).astype(float)
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def private_median_index(sample_idx, grid_size: int, eps_med: float, rng: np.random.Generator) -> int:
    sample_idx = np.asarray(sample_idx, dtype=np.int64)
    if sample_idx.size == 0:
        raise InvalidArgument("empty sample")
    counts = np.bincount(sample_idx, minlength=grid_size)
    p = median_distribution(counts, eps_med)
    # inverse-cdf draw; one uniform per call keeps replay simple
    cdf = np.cumsum(p)
    return int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), grid_size - 1))


def private_median(sample, grid: OrderedGrid, cfg: MedianConfig, rng: np.random.Generator) -> float:
    sample = list(sample)
    if not sample:
        raise InvalidArgument("empty sample")
    idx = grid.indices_of(sample)
    return float(grid.points[private_median_index(idx, grid.size, cfg.eps_med, rng)])


def rank_ok(sample_idx, out_idx: int, gamma_rank: int) -> bool:
    """Whether at least |S|/2 - Gamma sample elements lie on each side of the output."""
    s = np.asarray(sample_idx)
    need = len(s) / 2 - gamma_rank
    return bool(np.count_nonzero(s >= out_idx) >= need and np.count_nonzero(s <= out_idx) >= need)
