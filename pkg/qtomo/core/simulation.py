"""
Bell-measurement sampling on Werner-state probes.

Outcome order is (phi00, phi01, phi10, phi11). For a probe with effective
parameter W the first outcome has probability (1 + 3W)/4 and each of the
others (1 - W)/4.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from qtomo.core.errors import DomainError, EstimationError
from qtomo.core.network import MonitorPath, Network, path_product


def outcome_probabilities(W: float) -> np.ndarray:
    """Bell outcome law of a Werner state with parameter W."""
    if not 0.0 <= W <= 1.0:
        raise DomainError(f"Werner parameter {W} outside [0, 1]", {"W": W})
    other = (1.0 - W) / 4.0
    return np.array([(1.0 + 3.0 * W) / 4.0, other, other, other])


def probe_rng(seed: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """Counter-based generator for one (seed, stream) pair."""
    sequence = np.random.SeedSequence(seed, spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(sequence))


@dataclass(frozen=True)
class MeasurementRecord:
    """Bell outcome counts of N shots of one probe."""

    path: MonitorPath
    N: int
    counts: Tuple[float, float, float, float]
    seed: Optional[int] = None

    def __post_init__(self):
        if len(self.counts) != 4:
            raise EstimationError(f"Expected 4 outcome counts, got {len(self.counts)}")
        if min(self.counts) < 0:
            raise EstimationError(f"Negative outcome count in {self.counts}")
        if abs(sum(self.counts) - self.N) > 1e-9 * max(1, self.N):
            raise EstimationError(f"Counts {self.counts} do not sum to N={self.N}")

    @property
    def n00(self) -> float:
        return self.counts[0]

    @property
    def target_link(self) -> int:
        return self.path.target_link


def simulate_probe(
    net: Network,
    path: MonitorPath,
    N: int,
    seed: int,
    stream: Sequence[int] = (),
) -> MeasurementRecord:
    """
    Draw N Bell measurements of the probe routed along `path`.

    Args:
        net: Network holding the true Werner parameters
        path: Probe route
        N: Shots (>= 1)
        seed: Root seed
        stream: Stream key, e.g. (grid index, trial, probe index)
    """
    if N < 1:
        raise DomainError(f"Shot count must be positive, got {N}")
    probabilities = outcome_probabilities(path_product(net, path))
    counts = probe_rng(seed, stream).multinomial(N, probabilities)
    return MeasurementRecord(path=path, N=int(N), counts=tuple(int(c) for c in counts), seed=seed)


def expected_record(net: Network, path: MonitorPath, N: int) -> MeasurementRecord:
    """Noiseless record holding the expected (fractional) counts."""
    probabilities = outcome_probabilities(path_product(net, path))
    return MeasurementRecord(path=path, N=int(N), counts=tuple(float(c) for c in N * probabilities))
