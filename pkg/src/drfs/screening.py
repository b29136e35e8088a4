"""Certified feature elimination over the whole weight polytope.

Given an (approximately) optimal fit under uniform weights, each feature j
gets an upper bound on |sum_i w_i alpha_i^{*(w)} x_ij| that is valid for
every admissible weight vector simultaneously.  Features whose bound stays
below lambda can never enter the optimal support under any admissible
shift and are safe to drop.  The bound combines a rescaled dual point that
stays feasible for all weights, a duality-gap ball for the re-weighted
dual optimum, and two sort-based maximizations over the weight polytope.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .losses import LossKind, conjugate_neg, feasibility_q, loss_value, nu_constant
from .solver import FittedModel, duality_gap
from .uncertainty import WeightBox, contains, max_linear, v_from_delta, worst_case_weights

# strict-inequality guard: a bound within one part in 1e12 of lambda keeps
# the feature, so floating-point equality never removes anything
STRICT_BAND = 1e-12
# acceptance band for the all-zero-reference endpoint rule (see screen())
ZERO_REFERENCE_BAND = 1e-10
_DOMAIN_SLACK = 1e-9


@dataclass(frozen=True)
class ReferencePair:
    """Uniform-weight solution plus the dual point reused across all shifts."""

    b: np.ndarray
    b0: float
    alpha_star: np.ndarray
    q: float
    lam: float
    delta: float
    loss_kind: LossKind
    y: np.ndarray
    losses_at_optimum: np.ndarray
    gap: float


@dataclass(frozen=True)
class ScreeningReport:
    bounds: np.ndarray
    removed: np.ndarray
    lam: float
    box: WeightBox
    gap_at_reference: float
    q: float
    nu: float

    @property
    def removed_ratio(self) -> float:
        return float(np.mean(self.removed))

    @property
    def v(self) -> float:
        return v_from_delta(self.box)

    def to_json(self) -> str:
        payload = {
            "lambda": self.lam,
            "delta": self.box.delta,
            "V": self.v,
            "bounds": [float(u) for u in self.bounds],
            "removed": [bool(r) for r in self.removed],
            "gap_at_reference": self.gap_at_reference,
            "q": self.q,
            "nu": self.nu,
        }
        return json.dumps(payload)

    def to_csv(self) -> str:
        lines = ["index,bound,removed"]
        for j, (u, r) in enumerate(zip(self.bounds, self.removed)):
            lines.append(f"{j},{float(u)!r},{'true' if r else 'false'}")
        return "\n".join(lines) + "\n"


def build_reference(dataset: Dataset, model: FittedModel, box: WeightBox) -> ReferencePair:
    """Freeze the uniform-weight fit into the reference used by screen().

    The model must have been fit with all weights equal to one and at the
    same lambda that will be screened.
    """
    if model.weights.shape != (dataset.n,) or not np.all(model.weights == 1.0):
        raise ValueError("reference model must be fit with uniform weights w = 1")
    q = feasibility_q(model.loss_kind, box.delta)
    margins = dataset.x @ model.b + model.b0
    losses = np.asarray(loss_value(model.loss_kind, dataset.y, margins))
    if model.loss_kind is LossKind.LOGISTIC:
        p = dataset.y * model.alpha
        if np.any(p < -_DOMAIN_SLACK) or np.any(p > 1.0 + _DOMAIN_SLACK):
            raise ValueError("reference dual point leaves the logistic conjugate domain")
    return ReferencePair(
        b=np.array(model.b, copy=True),
        b0=float(model.b0),
        alpha_star=np.array(model.alpha, copy=True),
        q=q,
        lam=model.lam,
        delta=box.delta,
        loss_kind=model.loss_kind,
        y=np.array(dataset.y, copy=True),
        losses_at_optimum=losses,
        gap=model.gap,
    )


def dg_radius(gap: float, nu: float, delta: float) -> float:
    """Radius of the ball certain to contain the re-weighted dual optimum."""
    if gap < 0:
        raise ValueError(f"gap must be >= 0, got {gap}")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must be in [0, 1), got {delta}")
    return math.sqrt(2.0 * nu * gap / (1.0 - delta))


def _conjugate_at_scaled(ref: ReferencePair, factor: float) -> np.ndarray:
    """conj(y_i, -factor * alpha_i) with a floating-point domain guard.

    The scaling factors are constructed so the true values stay inside the
    conjugate domain; only rounding can push y*alpha marginally past 1.
    """
    alpha = factor * ref.alpha_star
    if ref.loss_kind is LossKind.LOGISTIC:
        p = ref.y * alpha
        if np.any(p < -_DOMAIN_SLACK) or np.any(p > 1.0 + _DOMAIN_SLACK):
            bad = int(np.argmax(np.maximum(p - 1.0, -p)))
            raise ValueError(
                f"instance {bad}: scaled dual point outside the conjugate domain "
                f"(y*alpha={p[bad]}); reference pair is inconsistent with this shift"
            )
        alpha = ref.y * np.clip(p, 0.0, 1.0)
    return np.asarray(conjugate_neg(ref.loss_kind, ref.y, alpha))


def rho_vector(ref: ReferencePair, delta: float) -> np.ndarray:
    """Per-instance worst-case gap contribution over the weight range.

    rho_i = loss_i + max of the conjugate at the two extreme reweightings
    q/(1+delta) and q/(1-delta); convexity puts the maximum at an endpoint.
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must be in [0, 1), got {delta}")
    lo = _conjugate_at_scaled(ref, ref.q / (1.0 + delta))
    hi = _conjugate_at_scaled(ref, ref.q / (1.0 - delta))
    return ref.losses_at_optimum + np.maximum(lo, hi)


def _gbar_max(ref: ReferencePair, box: WeightBox) -> float:
    """Worst-case duality gap over the box: sorted-rho maximization plus the
    regularizer term, clamped at zero against rounding."""
    rho = rho_vector(ref, box.delta)
    raw = max_linear(rho, box) + ref.lam * float(np.sum(np.abs(ref.b)))
    return max(0.0, raw)


def _check_box(ref: ReferencePair, box: WeightBox, n: int) -> None:
    if box.n != n:
        raise ValueError(f"box is over {box.n} instances, dataset has {n}")
    if box.delta != ref.delta:
        raise ValueError(
            f"reference was built for delta={ref.delta}, screening box has delta={box.delta}"
        )


def _all_bounds(ref: ReferencePair, dataset: Dataset, box: WeightBox) -> tuple[np.ndarray, np.ndarray]:
    _check_box(ref, box, dataset.n)
    if ref.alpha_star.shape != (dataset.n,):
        raise ValueError("reference and dataset disagree on the number of instances")
    nu = nu_constant(ref.loss_kind)
    first = ref.q * np.abs(dataset.x.T @ ref.alpha_star)
    gbar = _gbar_max(ref, box)
    wsq = worst_case_weights(box) ** 2
    xsq_sorted = np.sort(dataset.x * dataset.x, axis=0)
    nmax_sq = wsq @ xsq_sorted
    root = np.sqrt(nmax_sq * (2.0 * nu / (1.0 - box.delta)) * gbar)
    return first, first + root


def dr_upper_bound(j: int, ref: ReferencePair, dataset: Dataset, box: WeightBox) -> float:
    """The shift-robust bound for one feature; see screen() for all at once."""
    if not 0 <= j < dataset.d:
        raise IndexError(f"feature index {j} out of range for d={dataset.d}")
    _, bounds = _all_bounds(ref, dataset, box)
    return float(bounds[j])


def ub_for_weight(j: int, w, ref: ReferencePair, dataset: Dataset, box: WeightBox) -> float:
    """Single-environment bound at a concrete weight vector.

    Uses the rescaled dual point q * alpha / w, whose feature correlations
    are weight-independent, and the duality gap actually attained at w.
    Always dominated by dr_upper_bound over the box.
    """
    if not 0 <= j < dataset.d:
        raise IndexError(f"feature index {j} out of range for d={dataset.d}")
    _check_box(ref, box, dataset.n)
    w = np.asarray(w, dtype=float)
    if not contains(box, w):
        raise ValueError("weight vector is not in the box")
    alpha_hat = ref.q * ref.alpha_star / w
    if ref.loss_kind is LossKind.LOGISTIC:
        # true values are inside the domain by the choice of q; rounding only
        alpha_hat = ref.y * np.clip(ref.y * alpha_hat, 0.0, 1.0)
    gap = duality_gap(dataset, w, ref.loss_kind, ref.lam, ref.b, ref.b0, alpha_hat)
    col = dataset.x[:, j]
    first = abs(float(np.dot(w * alpha_hat, col)))
    nu = nu_constant(ref.loss_kind)
    norm_sq = float(np.dot(w * w, col * col))
    return first + math.sqrt(norm_sq * (2.0 * nu / (1.0 - box.delta)) * gap)


def screen(dataset: Dataset, ref: ReferencePair, box: WeightBox) -> ScreeningReport:
    """Bound every feature and mark the ones that can never become active.

    Work is O(d n log n): the sorted-rho maximization and the regularizer
    term are shared, each feature adds one column sort and two dot products.

    Removal uses the strict rule bounds_j < lambda * (1 - 1e-12), except at
    the all-removed endpoint: when delta = 0 and the reference coefficient
    vector is exactly zero, the reference pair is the intercept-only optimum
    whose duality gap vanishes in exact arithmetic, so the true bound equals
    the correlation term and is <= lambda for every feature.  That case
    accepts on the correlation term with a relative 1e-10 band, which is
    what realizes "all features removed at lambda_max" despite the exact
    floating-point tie at the argmax feature.
    """
    first, bounds = _all_bounds(ref, dataset, box)
    lam = ref.lam
    if box.delta == 0.0 and not np.any(ref.b):
        removed = first <= lam * (1.0 + ZERO_REFERENCE_BAND)
    else:
        removed = bounds < lam * (1.0 - STRICT_BAND)
    return ScreeningReport(
        bounds=bounds,
        removed=removed,
        lam=lam,
        box=box,
        gap_at_reference=ref.gap,
        q=ref.q,
        nu=nu_constant(ref.loss_kind),
    )
