"""
Maximum-likelihood recovery of Werner parameters from Bell outcome counts.

Closed forms cover direct probes, two-link star probes sharing the monitor's
own link, and longer routes once every other link on the route is known. The
numeric oracle maximizes the joint multinomial likelihood by grid refinement
and finishes each link on the root of its score.
"""

from dataclasses import dataclass, field
from math import sqrt
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import xlogy

from qtomo.config import settings
from qtomo.logging_config import logger
from qtomo.core.errors import DegenerateLikelihood, EstimationError
from qtomo.core.ilp import MonitoringPlan
from qtomo.core.simulation import MeasurementRecord


@dataclass(frozen=True)
class LinkEstimate:
    link: int
    value: float
    clamped: bool = False


@dataclass
class EstimationResult:
    """Per-link estimates with boundary-clamp flags."""

    estimates: Dict[int, float] = field(default_factory=dict)
    clamped: Dict[int, bool] = field(default_factory=dict)

    def add(self, estimate: LinkEstimate) -> None:
        self.estimates[estimate.link] = estimate.value
        self.clamped[estimate.link] = estimate.clamped

    def squared_errors(self, truth: Sequence[float]) -> Dict[int, float]:
        return {link: (value - truth[link]) ** 2 for link, value in self.estimates.items()}


def k_statistic(n00: float, N: float) -> float:
    """Unbiased moment estimate (4 N00 - N) / (3 N) of the probe's W."""
    return (4.0 * n00 - N) / (3.0 * N)


def _clamp_unit(value: float) -> Tuple[float, bool]:
    if value < 0.0:
        return 0.0, True
    if value > 1.0:
        return 1.0, True
    return value, False


def mle_direct(record: MeasurementRecord) -> LinkEstimate:
    """Closed-form estimate from a single-link probe."""
    if len(record.path) != 1:
        raise EstimationError(f"Direct estimate needs a single-link probe, got {len(record.path)} links")
    radicand, clamped = _clamp_unit(k_statistic(record.n00, record.N))
    return LinkEstimate(record.target_link, sqrt(radicand), clamped)


def _log_likelihood(records: Iterable[MeasurementRecord], weights: Mapping[int, float]) -> float:
    total = 0.0
    for record in records:
        W = float(np.prod([weights[h] ** 2 for h in record.path.link_sequence]))
        other = (1.0 - W) / 4.0
        probabilities = np.array([(1.0 + 3.0 * W) / 4.0, other, other, other])
        total += float(np.sum(xlogy(np.asarray(record.counts), probabilities)))
    return total


def _indirect_terms(n00: float, N: float, k: float) -> float:
    first = 24.0 * n00 * k / (1.0 + 3.0 * k) if 1.0 + 3.0 * k != 0.0 else 0.0
    second = 8.0 * (N - n00) * k / (1.0 - k) if 1.0 - k != 0.0 else 0.0
    return first - second


def mle_indirect(
    direct_record: MeasurementRecord,
    indirect_records: Sequence[MeasurementRecord],
) -> EstimationResult:
    """
    Joint estimate of the monitor's own link i and the links j it probes through i.

    Args:
        direct_record: Single-link probe on link i
        indirect_records: Two-link probes [i, j] from the same monitor

    Returns:
        EstimationResult covering i and every j
    """
    i = direct_record.target_link
    for record in indirect_records:
        if len(record.path) != 2 or record.path.link_sequence[0] != i:
            raise EstimationError(
                f"Probe {list(record.path.link_sequence)} does not route through link {i}",
                {"link": i},
            )

    N, n00 = float(direct_record.N), float(direct_record.n00)
    ks = [k_statistic(r.n00, r.N) for r in indirect_records]
    c = sum(_indirect_terms(float(r.n00), float(r.N), k) for r, k in zip(indirect_records, ks))
    a = -3.0 * c - 24.0 * n00 - 24.0 * (N - n00)
    b = 24.0 * n00 - 8.0 * (N - n00) + 2.0 * c

    discriminant = b * b - 4.0 * a * c
    root = sqrt(max(discriminant, 0.0))
    roots = [(-b + root) / (2.0 * a), (-b - root) / (2.0 * a)]
    admissible = [x for x in roots if -1e-12 <= x <= 1.0 + 1e-12]

    k_direct = k_statistic(n00, N)

    def completion(x: float) -> Tuple[EstimationResult, float]:
        if abs(x) <= 1e-12:
            x = 0.0
        x, clamped_i = _clamp_unit(x)
        clamped_i = clamped_i or (x == 0.0 and k_direct < 0.0)
        w_i = sqrt(x)
        result = EstimationResult()
        result.add(LinkEstimate(i, w_i, clamped_i))
        for record, k in zip(indirect_records, ks):
            k_clamped, flag = _clamp_unit(k) if k < 0 else (k, False)
            if w_i == 0.0:
                if k_clamped > 0.0:
                    raise DegenerateLikelihood(
                        f"Link {i} estimated at 0; link {record.target_link} is not identifiable",
                        {"link": i, "target": record.target_link, "k": k},
                    )
                result.add(LinkEstimate(record.target_link, 0.0, True))
                continue
            w_j, clamped_j = _clamp_unit(sqrt(k_clamped) / w_i)
            result.add(LinkEstimate(record.target_link, w_j, flag or clamped_j))
        weights = dict(result.estimates)
        return result, _log_likelihood([direct_record, *indirect_records], weights)

    if len(admissible) == 2:
        scored = []
        for x in admissible:
            try:
                scored.append(completion(x))
            except DegenerateLikelihood:
                continue
        if scored:
            return max(scored, key=lambda item: item[1])[0]
        return completion(admissible[0])[0]
    if len(admissible) == 1:
        return completion(admissible[0])[0]

    nearest = min(roots, key=lambda x: min(abs(x), abs(x - 1.0)))
    logger.debug(f"No admissible root for link {i}; clipping {nearest}")
    result, _ = completion(nearest)
    result.clamped[i] = True
    return result


def mle_path(record: MeasurementRecord, known: Mapping[int, float]) -> LinkEstimate:
    """Estimate the target of a probe whose other links are already estimated."""
    others = record.path.link_sequence[:-1]
    missing = [h for h in others if h not in known]
    if missing:
        raise EstimationError(f"Links {missing} must be estimated before link {record.target_link}")

    k = k_statistic(record.n00, record.N)
    product = float(np.prod([known[h] ** 2 for h in others]))
    k_clamped, flag = _clamp_unit(k) if k < 0 else (k, False)
    if product == 0.0:
        if k_clamped > 0.0:
            raise DegenerateLikelihood(
                f"Route to link {record.target_link} passes a link estimated at 0",
                {"target": record.target_link},
            )
        return LinkEstimate(record.target_link, 0.0, True)

    value, clamped = _clamp_unit(sqrt(k_clamped / product))
    return LinkEstimate(record.target_link, value, flag or clamped)


def estimate_plan(plan: MonitoringPlan, records: Mapping[int, MeasurementRecord]) -> EstimationResult:
    """
    Estimate every link of a plan from one record per link.

    Direct links whose monitor also probes two-link routes through them are
    solved jointly; other direct links use the direct form; remaining routes
    are resolved once their other links are known.
    """
    result = EstimationResult()
    direct_links = {a.link for a in plan.direct}

    groups: Dict[int, List[MeasurementRecord]] = {}
    pending: List[MeasurementRecord] = []
    for a in plan.indirect:
        record = records[a.link]
        head = record.path.link_sequence[0]
        if len(record.path) == 2 and head in direct_links and plan.monitor_of(head) == a.monitor:
            groups.setdefault(head, []).append(record)
        else:
            pending.append(record)

    for link in sorted(direct_links):
        if link in groups:
            joint = mle_indirect(records[link], groups[link])
            for target, value in joint.estimates.items():
                result.add(LinkEstimate(target, value, joint.clamped[target]))
        else:
            result.add(mle_direct(records[link]))

    while pending:
        ready = [r for r in pending if all(h in result.estimates for h in r.path.link_sequence[:-1])]
        if not ready:
            raise EstimationError(
                f"Cannot resolve links {[r.target_link for r in pending]} from the plan's probes"
            )
        for record in ready:
            result.add(mle_path(record, result.estimates))
            pending.remove(record)
    return result


# ============= Numeric oracle =============

def _maximize_on_grid(objective, lo: float, hi: float, points: int, width: float = 1e-12) -> float:
    """Argmax of a vectorized unimodal objective on [lo, hi] by repeated grid zoom."""
    bottom, top = lo, hi
    best = lo
    while True:
        grid = np.linspace(bottom, top, points)
        values = objective(grid)
        best = float(grid[int(np.argmax(values))])
        if top - bottom <= width:
            return best
        step = (top - bottom) / (points - 1)
        bottom, top = max(lo, best - step), min(hi, best + step)


def _record_terms(records: Sequence[MeasurementRecord], link: int, weights: Mapping[int, float]):
    involved = [r for r in records if link in r.path.link_sequence]
    rest = [
        float(np.prod([weights[h] ** 2 for h in r.path.link_sequence if h != link])) for r in involved
    ]
    counts = [np.asarray(r.counts, dtype=float) for r in involved]

    def objective(grid: np.ndarray) -> np.ndarray:
        total = np.zeros_like(grid)
        for factor, c in zip(rest, counts):
            W = grid ** 2 * factor
            other = (1.0 - W) / 4.0
            total += xlogy(c[0], (1.0 + 3.0 * W) / 4.0) + xlogy(c[1] + c[2] + c[3], other)
        return total

    return objective


def _coordinate_argmax(records: Sequence[MeasurementRecord], link: int, weights: Mapping[int, float]) -> float:
    """
    Exact maximizer in one link with the others held fixed.

    The derivative in w is 2w times a score that decreases in w, so the
    maximizer is 0, the score's root, or the top of the range.
    """
    terms = []
    for r in records:
        if link not in r.path.link_sequence:
            continue
        factor = float(np.prod([weights[h] ** 2 for h in r.path.link_sequence if h != link]))
        if factor > 0.0:
            terms.append((factor, float(r.counts[0]), float(r.N - r.counts[0])))
    if not terms:
        return weights[link]

    def score(w: float) -> float:
        total = 0.0
        for factor, n00, rest in terms:
            W = factor * w * w
            total += factor * (3.0 * n00 / (1.0 + 3.0 * W) - rest / (1.0 - W))
        return total

    top = 1.0 - 1e-12
    if score(0.0) <= 0.0:
        return 0.0
    if score(top) >= 0.0:
        return 1.0
    return float(brentq(score, 0.0, top, xtol=1e-16, rtol=4.0 * np.finfo(float).eps))


def mle_numeric_oracle(
    records: Sequence[MeasurementRecord],
    points: Optional[int] = None,
    max_sweeps: int = 500,
) -> Dict[int, float]:
    """
    Maximize the joint multinomial log-likelihood over every link the records touch.

    Coordinate ascent with a grid-refined 1-D search per link, plus a pattern
    move along each sweep's displacement. Exact per-link maximizers then
    polish the result.
    """
    points = points or settings.oracle_grid_points
    links = sorted({h for r in records for h in r.path.link_sequence})
    weights = {h: 0.5 for h in links}
    current = _log_likelihood(records, weights)

    for sweep in range(max_sweeps):
        previous = dict(weights)
        for link in links:
            weights[link] = _maximize_on_grid(_record_terms(records, link, weights), 0.0, 1.0, points)

        direction = {h: weights[h] - previous[h] for h in links}
        if any(direction.values()):
            base = dict(weights)

            def along(grid: np.ndarray) -> np.ndarray:
                values = np.empty_like(grid)
                for position, t in enumerate(grid):
                    trial = {h: min(1.0, max(0.0, base[h] + t * direction[h])) for h in links}
                    values[position] = _log_likelihood(records, trial)
                return values

            t = _maximize_on_grid(along, 0.0, 4.0, 33, width=1e-6)
            candidate = {h: min(1.0, max(0.0, base[h] + t * direction[h])) for h in links}
            if _log_likelihood(records, candidate) > _log_likelihood(records, weights):
                weights = candidate

        updated = _log_likelihood(records, weights)
        change = max(abs(weights[h] - previous[h]) for h in links)
        # improvements below this are floating-point noise on the log-likelihood
        if change < 1e-10 or updated - current <= 1e-15 * max(1.0, abs(current)):
            break
        current = updated

    # grid steps stall on the flat top; finish on the score roots
    for polish in range(max_sweeps):
        change = 0.0
        for link in links:
            value = _coordinate_argmax(records, link, weights)
            change = max(change, abs(value - weights[link]))
            weights[link] = value
        if change <= 1e-14:
            break

    logger.debug(f"Numeric likelihood oracle converged after {sweep + 1} sweeps and {polish + 1} polish rounds")
    return weights
