"""Independent-subset sampling by geometric skips, and the per-vertex sampling rate."""

from __future__ import annotations

import math

import numpy as np

from ..errors import InvalidArgument


def subset_sample(N: int, p: float, rng: np.random.Generator, meter=None) -> np.ndarray:
    """Indices of [0, N) each kept independently with probability p.

    Gaps between kept indices are geometric, so the work is one draw per kept index
    plus the final overshooting draw. ``meter`` (if given) gets that count under "touches".
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidArgument(f"p must lie in [0,1], got {p}")
    if N <= 0 or p == 0.0:
        if meter is not None:
            meter.add("touches", 1)
        return np.empty(0, dtype=np.int64)
    if p == 1.0:
        if meter is not None:
            meter.add("touches", N + 1)
        return np.arange(N, dtype=np.int64)
    mean = p * N
    batch = int(mean + 4 * math.sqrt(mean) + 8)
    out = []
    pos = -1
    while True:
        gaps = rng.geometric(p, size=batch)
        idx = pos + np.cumsum(gaps)
        stop = int(np.searchsorted(idx, N))
        out.append(idx[:stop])
        if stop < len(idx):
            break
        pos = int(idx[-1])
    res = np.concatenate(out) if len(out) > 1 else out[0]
    if meter is not None:
        meter.add("touches", len(res) + 1)
    return res.astype(np.int64, copy=False)


def next_pow2(x: float) -> int:
    """Smallest power of two that is >= x (x > 0); 0 maps to 0."""
    if x <= 0:
        return 0
    k = math.ceil(x - 1e-9)
    return 1 << max(0, (k - 1).bit_length())


def oversampling_factor(n: int, eps: float, phi: float, const: float = 24.0) -> float:
    return (const * math.log(n) / (eps * phi * phi)) ** 2


def piece_sampling_prob(n: int, eps: float, phi: float, deg_tilde: float, const: float = 24.0,
                        oversampling: float | None = None) -> float:
    """min{1, K * 2 / deg_tilde} with K = (const ln n / (eps phi^2))^2 unless overridden."""
    if not (n > 0 and eps > 0 and phi > 0 and deg_tilde > 0):
        raise InvalidArgument("all parameters must be positive")
    K = oversampling_factor(n, eps, phi, const) if oversampling is None else oversampling
    return min(1.0, K * 2.0 / deg_tilde)
