"""
MSE-vs-QCRB studies: repeated simulation and estimation of a monitoring plan.
"""

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from qtomo.config import settings
from qtomo.logging_config import logger
from qtomo.core.ilp import MonitoringPlan, plan_probes
from qtomo.core.network import Network
from qtomo.core.qfi import assemble_qfim, qcrb
from qtomo.core.estimation import estimate_plan
from qtomo.core.simulation import simulate_probe

STUDY_COLUMNS = ["link", "N", "mse", "qcrb", "trials", "clamp_rate"]


@dataclass(frozen=True)
class StudyRow:
    link: int
    N: int
    mse: float
    qcrb: float
    trials: int
    clamp_rate: float


@dataclass
class StudyTable:
    rows: List[StudyRow]

    def for_link(self, link: int) -> List[StudyRow]:
        return [row for row in self.rows if row.link == link]

    def lookup(self, link: int, N: int) -> StudyRow:
        for row in self.rows:
            if row.link == link and row.N == N:
                return row
        raise KeyError((link, N))

    def to_tsv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, delimiter="\t", lineterminator="\n")
        writer.writerow(STUDY_COLUMNS)
        for row in self.rows:
            writer.writerow([row.link, row.N, repr(row.mse), repr(row.qcrb), row.trials, repr(row.clamp_rate)])
        return buffer.getvalue()

    def write_tsv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_tsv(), encoding="utf-8")
        logger.info(f"Wrote study table to {path}")
        return path

    @classmethod
    def read_tsv(cls, path: Union[str, Path]) -> "StudyTable":
        with open(path, "r", encoding="utf-8", newline="") as f:
            reader = csv.DictReader(f, delimiter="\t")
            rows = [
                StudyRow(
                    link=int(r["link"]), N=int(r["N"]), mse=float(r["mse"]), qcrb=float(r["qcrb"]),
                    trials=int(r["trials"]), clamp_rate=float(r["clamp_rate"]),
                )
                for r in reader
            ]
        return cls(rows)


def _run_trials(
    net: Network,
    plan: MonitoringPlan,
    N: int,
    seed: int,
    grid_index: int,
    trials: Sequence[int],
) -> List[Tuple[Dict[int, float], Dict[int, bool]]]:
    """Simulate and estimate the given trials; results in trial order."""
    probes = plan_probes(net, plan)
    truth = list(net.werner)
    out = []
    for trial in trials:
        records = {
            probe.path.target_link: simulate_probe(net, probe.path, N, seed, (grid_index, trial, q))
            for q, probe in enumerate(probes)
        }
        result = estimate_plan(plan, records)
        out.append((result.squared_errors(truth), dict(result.clamped)))
    return out


def _chunks(trials: int, workers: int) -> List[range]:
    size = max(1, math.ceil(trials / workers))
    return [range(start, min(trials, start + size)) for start in range(0, trials, size)]


def mse_study(
    net: Network,
    plan: MonitoringPlan,
    n_grid: Optional[Sequence[int]] = None,
    trials: Optional[int] = None,
    seed: int = 0,
    workers: Optional[int] = None,
) -> StudyTable:
    """
    Empirical per-link MSE of the closed-form estimators against the QCRB.

    Args:
        net: Network with the true Werner parameters
        plan: Monitoring plan defining one probe per link
        n_grid: Shots per probe to evaluate
        trials: Monte-Carlo repetitions per grid point
        seed: Root seed; stream keys are (grid index, trial, probe index)
        workers: Worker processes (results do not depend on this)

    Returns:
        StudyTable with one row per (link, N)
    """
    n_grid = list(n_grid if n_grid is not None else settings.default_n_grid)
    trials = trials if trials is not None else settings.default_trials
    workers = workers if workers is not None else settings.study_workers

    per_shot = qcrb(assemble_qfim(plan_probes(net, plan), parameters=range(net.n_links)))
    logger.info(
        f"MSE study: {len(n_grid)} grid points x {trials} trials, {net.n_links} links, workers={workers}"
    )

    rows: List[StudyRow] = []
    for grid_index, N in enumerate(n_grid):
        chunks = _chunks(trials, workers)
        if workers > 1 and len(chunks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_run_trials, net, plan, N, seed, grid_index, chunk) for chunk in chunks
                ]
                results = [item for future in futures for item in future.result()]
        else:
            results = _run_trials(net, plan, N, seed, grid_index, range(trials))

        for link in range(net.n_links):
            squared = [sq[link] for sq, _ in results]
            clamps = sum(1 for _, clamped in results if clamped[link])
            rows.append(StudyRow(
                link=link,
                N=int(N),
                mse=math.fsum(squared) / trials,
                qcrb=per_shot.bounds[link] / N,
                trials=trials,
                clamp_rate=clamps / trials,
            ))
        logger.debug(f"Finished N={N}")

    return StudyTable(rows)
