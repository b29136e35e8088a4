"""The admissible weight polytope and maximization over it.

The set of deployment weight vectors is a hypercube slice: every coordinate
lies in [1-delta, 1+delta] and the coordinates sum to n.  Linear and
squared-linear forms are maximized over it in closed form by sorting, which
is what makes the per-feature screening bound cheap.  The module also
converts between delta and the total-shift budget V = max ||w - 1||_1.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

CORNER_CAP = 12


@dataclass(frozen=True)
class WeightBox:
    """Weight vectors in [1-delta, 1+delta]^n summing to n."""

    n: int
    delta: float

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must be in [0, 1), got {self.delta}")


def delta_from_v(v: float, n: int) -> float:
    """Per-instance bound delta realizing total-shift budget v = max ||w - 1||_1."""
    if v < 0:
        raise ValueError(f"V must be >= 0, got {v}")
    if v == 0:
        return 0.0
    if n < 2:
        raise ValueError("V > 0 is not representable with a single instance")
    delta = v / n if n % 2 == 0 else v / (n - 1)
    if delta >= 1.0:
        raise ValueError(
            f"uncertainty level exceeds representable shift: V={v} needs delta={delta} >= 1"
        )
    return delta


def v_from_delta(box: WeightBox) -> float:
    """Total-shift budget max ||w - 1||_1 over the box."""
    if box.n % 2 == 0:
        return box.n * box.delta
    return (box.n - 1) * box.delta


def worst_case_weights(box: WeightBox) -> np.ndarray:
    """The ascending corner weight vector: floor(n/2) lows, a middle 1 when
    n is odd, floor(n/2) highs."""
    n, delta = box.n, box.delta
    half = n // 2
    w = np.empty(n)
    w[:half] = 1.0 - delta
    w[n - half:] = 1.0 + delta
    if n % 2 == 1:
        w[half] = 1.0
    return w


def max_linear(c, box: WeightBox) -> float:
    """max of c . w over the box, by the sorted pairing with the worst-case
    corner."""
    c = np.asarray(c, dtype=float)
    if c.shape != (box.n,):
        raise ValueError(f"expected {box.n} coefficients, got shape {c.shape}")
    return float(np.dot(np.sort(c), worst_case_weights(box)))


def max_linear_squared(c, box: WeightBox) -> float:
    """max of c . (w o w) over the box; intended for nonnegative c."""
    c = np.asarray(c, dtype=float)
    if c.shape != (box.n,):
        raise ValueError(f"expected {box.n} coefficients, got shape {c.shape}")
    return float(np.dot(np.sort(c), worst_case_weights(box) ** 2))


def corner_count(box: WeightBox) -> int:
    half = box.n // 2
    count = math.comb(box.n, half)
    if box.n % 2 == 1:
        count *= box.n - half
    return count


def enumerate_corners(box: WeightBox, cap: int = CORNER_CAP) -> Iterator[np.ndarray]:
    """Yield every extreme point of the box exactly once.

    Combinatorial: C(n, n/2) corners for even n, C(n, (n-1)/2) * (n+1)/2 for
    odd n, so enumeration is refused above `cap` instances.
    """
    n, delta = box.n, box.delta
    if n > cap:
        raise ValueError(
            f"corner enumeration capped at n={cap} ({corner_count(box)} corners for "
            f"n={n}); use sample_feasible instead"
        )
    half = n // 2
    indices = range(n)
    for lows in itertools.combinations(indices, half):
        rest = [i for i in indices if i not in lows]
        if n % 2 == 0:
            w = np.full(n, 1.0 + delta)
            w[list(lows)] = 1.0 - delta
            yield w
        else:
            for mid in rest:
                w = np.full(n, 1.0 + delta)
                w[list(lows)] = 1.0 - delta
                w[mid] = 1.0
                yield w


def sample_feasible(box: WeightBox, rng: np.random.Generator, mode: str = "corner") -> np.ndarray:
    """Draw one feasible weight vector.

    "corner": a uniformly random permutation of the worst-case corner.
    "interior": uniform noise on [-delta, delta]^n, centered, then shrunk
    back into the cube; covers the interior without being uniform over it.
    """
    if mode == "corner":
        return rng.permutation(worst_case_weights(box))
    if mode != "interior":
        raise ValueError(f"mode must be 'corner' or 'interior', got {mode!r}")
    n, delta = box.n, box.delta
    if delta == 0.0 or n == 1:
        return np.ones(n)
    u = rng.uniform(-delta, delta, size=n)
    u -= u.mean()
    u -= u.mean()  # second pass mops up the first pass's rounding
    peak = np.max(np.abs(u))
    if peak > delta:
        u *= delta / peak
    return 1.0 + u


def contains(box: WeightBox, w) -> bool:
    """Membership test with floating-point slack on bounds and sum."""
    w = np.asarray(w, dtype=float)
    if w.shape != (box.n,):
        raise ValueError(f"expected weight vector of length {box.n}, got shape {w.shape}")
    lo = 1.0 - box.delta - 1e-12
    hi = 1.0 + box.delta + 1e-12
    if np.any(w < lo) or np.any(w > hi):
        return False
    return abs(float(np.sum(w)) - box.n) <= 1e-9 * box.n
