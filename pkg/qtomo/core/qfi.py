"""
Quantum Fisher information of Werner-state probes.

A probe routed along a path of links carries the Werner state with effective
parameter W = prod(w_l^2). Its per-shot information about W is

    g(W) = 3 / ((1 + 3W)(1 - W))

and, through the chain rule, its information matrix over the link parameters
on the path is the rank-1 block N * g(W) * s s^T with s_l = dW/dw_l.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from qtomo.config import settings
from qtomo.logging_config import logger
from qtomo.core.errors import DomainError, EmptyProbeSet, ModeArityMismatch, SingularQfim
from qtomo.core.network import MonitorPath, Network, TopologyClass


class IndirectMode(str, Enum):
    """How the objective scores an indirect measurement."""

    # Off-diagonal entry of the probe block between target and monitor-side link
    CROSS_TERM = "cross-term"
    # Closed form for two-hop star paths, 12 w_h^2 w_t^4 / ((1+3W)(1-W))
    TWO_HOP = "two-hop"
    # Diagonal entry of the probe block for the target link
    CHAIN_RULE = "chain-rule"

    @classmethod
    def _missing_(cls, value):
        if isinstance(value, str):
            key = value.strip().lower().replace("_", "-")
            return _MODE_ALIASES.get(key) or _MODE_ALIASES.get(key.replace("-", ""))
        return None


_MODE_ALIASES = {
    "papereq2": IndirectMode.CROSS_TERM,
    "lemmaform": IndirectMode.TWO_HOP,
    "chainrule": IndirectMode.CHAIN_RULE,
    "cross-term": IndirectMode.CROSS_TERM,
    "two-hop": IndirectMode.TWO_HOP,
    "chain-rule": IndirectMode.CHAIN_RULE,
}


def default_mode(topology: TopologyClass) -> IndirectMode:
    """TWO_HOP on stars, CHAIN_RULE on everything else."""
    return IndirectMode.TWO_HOP if topology.is_star else IndirectMode.CHAIN_RULE


def _check_weight(w: float) -> None:
    if not (0.0 <= w < 1.0):
        raise DomainError(f"Werner parameter {w} outside [0, 1)", {"w": w})


def werner_qfi(W: float) -> float:
    """Per-shot QFI of a Werner state with respect to its own parameter W."""
    _check_weight(W)
    return 3.0 / ((1.0 + 3.0 * W) * (1.0 - W))


def direct_qfi(w: float) -> float:
    """QFI of one direct probe on a link with Werner parameter w."""
    _check_weight(w)
    w2 = w * w
    return 12.0 * w2 / ((1.0 + 3.0 * w2) * (1.0 - w2))


def sensitivities(weights: Sequence[float]) -> np.ndarray:
    """dW/dw_l = 2 w_l prod_{h != l} w_h^2 for every position on the path."""
    weights = np.asarray(weights, dtype=float)
    squares = weights ** 2
    out = np.empty_like(weights)
    for position in range(len(weights)):
        others = np.delete(squares, position)
        out[position] = 2.0 * weights[position] * float(np.prod(others))
    return out


def indirect_qfi(path_weights: Sequence[float], target: int, mode: IndirectMode) -> float:
    """
    Objective contribution of measuring the link at position `target` via a path.

    Args:
        path_weights: Werner parameters along the path, monitor side first
        target: Position of the target link within the path
        mode: Scoring rule (see IndirectMode)

    Returns:
        Nonnegative information value
    """
    mode = IndirectMode(mode)
    for w in path_weights:
        _check_weight(w)
    if not 0 <= target < len(path_weights):
        raise DomainError(f"Target position {target} outside path of length {len(path_weights)}")

    if mode == IndirectMode.TWO_HOP and len(path_weights) != 2:
        raise ModeArityMismatch(
            f"Mode {mode.value} needs a two-link path, got {len(path_weights)} links",
            {"mode": mode.value, "links": len(path_weights)},
        )

    W = float(np.prod(np.asarray(path_weights, dtype=float) ** 2))
    g = werner_qfi(W)

    if len(path_weights) == 1:
        return direct_qfi(path_weights[0])

    if mode == IndirectMode.TWO_HOP:
        w_t = path_weights[target]
        w_c = path_weights[1 - target]
        return 4.0 * w_c ** 2 * w_t ** 4 * g

    s = sensitivities(path_weights)
    if mode == IndirectMode.CHAIN_RULE:
        return float(s[target] ** 2 * g)

    companion = 1 if target == 0 else 0
    return float(s[target] * s[companion] * g)


# ============= Probe contributions and QFIM =============

@dataclass(frozen=True)
class ProbeContribution:
    """A probe path with its shot budget and per-link sensitivities."""

    path: MonitorPath
    sample_count: int
    sensitivities: Tuple[Tuple[int, float], ...]
    werner: float

    @property
    def links(self) -> List[int]:
        return [link for link, _ in self.sensitivities]

    def block(self) -> np.ndarray:
        """Rank-1 information block over `links`."""
        s = np.array([value for _, value in self.sensitivities])
        return self.sample_count * werner_qfi(self.werner) * np.outer(s, s)


def probe_contribution(net: Network, path: MonitorPath, sample_count: int = 1) -> ProbeContribution:
    """Build the contribution of `sample_count` shots of the probe along `path`."""
    if sample_count < 1:
        raise DomainError(f"Sample count must be positive, got {sample_count}")

    weights = net.werner[list(path.link_sequence)]
    s = sensitivities(weights)
    return ProbeContribution(
        path=path,
        sample_count=int(sample_count),
        sensitivities=tuple((link, float(v)) for link, v in zip(path.link_sequence, s)),
        werner=float(np.prod(weights ** 2)),
    )


@dataclass
class QfimModel:
    """Symmetric information matrix over a set of link parameters."""

    parameters: Tuple[int, ...]
    matrix: np.ndarray
    provenance: Tuple[ProbeContribution, ...] = field(default_factory=tuple)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    @property
    def min_eigenvalue(self) -> float:
        return float(linalg.eigvalsh(self.matrix)[0])

    @property
    def is_psd(self) -> bool:
        return self.min_eigenvalue >= -settings.psd_tolerance

    def __add__(self, other: "QfimModel") -> "QfimModel":
        if self.parameters != other.parameters:
            raise DomainError("Cannot add QFIMs over different parameter sets")
        return QfimModel(self.parameters, self.matrix + other.matrix, self.provenance + other.provenance)


def assemble_qfim(
    probes: Iterable[ProbeContribution],
    parameters: Optional[Sequence[int]] = None,
) -> QfimModel:
    """
    Sum the rank-1 blocks of all probes into one QFIM.

    Args:
        probes: Probe contributions over the same network
        parameters: Link indices spanning the matrix (default: links touched by probes)

    Returns:
        QfimModel with rows/columns ordered as `parameters`
    """
    probes = tuple(probes)
    if not probes:
        raise EmptyProbeSet("No probes to assemble")

    if parameters is None:
        parameters = sorted({link for probe in probes for link in probe.links})
    parameters = tuple(int(p) for p in parameters)
    position = {link: row for row, link in enumerate(parameters)}

    matrix = np.zeros((len(parameters), len(parameters)))
    for probe in probes:
        try:
            rows = [position[link] for link in probe.links]
        except KeyError as e:
            raise DomainError(f"Probe touches link {e.args[0]} outside the parameter set") from None
        matrix[np.ix_(rows, rows)] += probe.block()

    return QfimModel(parameters=parameters, matrix=matrix, provenance=probes)


@dataclass(frozen=True)
class QcrbResult:
    """Per-parameter variance lower bounds and their sum."""

    bounds: Dict[int, float]
    inverse_trace: float


def qcrb(model: QfimModel) -> QcrbResult:
    """
    Invert the QFIM and report diag(F^-1) and Tr(F^-1).

    Raises:
        SingularQfim: listing the links spanned by the numerical null space
    """
    eigenvalues, eigenvectors = linalg.eigh(model.matrix)
    scale = max(float(eigenvalues[-1]), 0.0) if len(eigenvalues) else 0.0
    null = eigenvalues <= settings.singular_tolerance * scale if scale > 0 else np.ones_like(eigenvalues, dtype=bool)

    if null.any():
        support = np.abs(eigenvectors[:, null]).max(axis=1)
        links = sorted(model.parameters[row] for row in np.flatnonzero(support > 1e-8))
        logger.debug(f"QFIM singular: {int(null.sum())} null directions over links {links}")
        raise SingularQfim(f"QFIM is singular; links not estimable: {links}", links)

    inverse = (eigenvectors / eigenvalues) @ eigenvectors.T
    bounds = {link: float(inverse[row, row]) for row, link in enumerate(model.parameters)}
    return QcrbResult(bounds=bounds, inverse_trace=float(np.sum(1.0 / eigenvalues)))


# ============= Independent oracle =============

_PHI_PLUS = np.array([1.0, 0.0, 0.0, 1.0]) / np.sqrt(2.0)


def werner_qfi_oracle(W: float) -> float:
    """
    QFI of rho(W) = W |phi+><phi+| + (1 - W) I/4, computed spectrally.

    Uses the SLD eigenbasis sum 2 |<k|d rho|l>|^2 / (lambda_k + lambda_l).
    """
    _check_weight(W)
    projector = np.outer(_PHI_PLUS, _PHI_PLUS)
    identity = np.eye(4)
    rho = W * projector + (1.0 - W) * identity / 4.0
    d_rho = projector - identity / 4.0

    eigenvalues, basis = linalg.eigh(rho)
    d_rho_eig = basis.T @ d_rho @ basis

    total = 0.0
    for k in range(4):
        for l in range(4):
            denominator = eigenvalues[k] + eigenvalues[l]
            if denominator > 1e-300:
                total += 2.0 * d_rho_eig[k, l] ** 2 / denominator
    return float(total)
