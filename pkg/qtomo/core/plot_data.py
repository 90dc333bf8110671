"""
Plot-ready CSV series derived from a report bundle.

Every file has the columns x, y, series and is written under <bundle>/plot/.
"""

import csv
from pathlib import Path
from typing import Any, Dict, Iterable, List, Tuple, Union

from qtomo.logging_config import logger
from qtomo.core.errors import MissingReport
from qtomo.core.scenario import read_json

Point = Tuple[float, float, str]


class PlotDataEmitter:
    """Turns metrics.json of a bundle into x/y/series tables."""

    @staticmethod
    def load_metrics(bundle_dir: Path) -> Dict[str, Any]:
        path = bundle_dir / "metrics.json"
        if not path.exists() or path.stat().st_size == 0:
            raise MissingReport(f"No metrics.json in {bundle_dir}", {"bundle": str(bundle_dir)})
        metrics = read_json(path)
        if not metrics or "kind" not in metrics:
            raise MissingReport(f"metrics.json in {bundle_dir} is empty", {"bundle": str(bundle_dir)})
        return metrics

    @staticmethod
    def write_series(path: Path, points: Iterable[Point]) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["x", "y", "series"])
            for x, y, series in points:
                writer.writerow([x, repr(float(y)), series])
        return path

    @staticmethod
    def plan_series(entries: List[Dict[str, Any]]) -> Dict[str, List[Point]]:
        inverse_trace = [(e["m"], e["metrics"]["inverse_trace"], e["objective"]) for e in entries]
        max_load = [(e["m"], e["metrics"]["max_load"], e["objective"]) for e in entries]
        return {"inverse_trace.csv": inverse_trace, "max_load.csv": max_load}

    @staticmethod
    def assignment_series(entries: List[Dict[str, Any]]) -> Dict[str, List[Point]]:
        """Indirect-set size of every monitor against m, one file per objective."""
        tables: Dict[str, List[Point]] = {}
        for entry in entries:
            points = tables.setdefault(f"assignment_{entry['objective']}.csv", [])
            for j, links in enumerate(entry["indirect_sets"]):
                points.append((entry["m"], len(links), f"monitor{j}"))
        return tables

    @staticmethod
    def study_series(rows: List[Dict[str, Any]]) -> Dict[str, List[Point]]:
        qcrb = [(r["N"], r["qcrb"], f"link{r['link']}") for r in rows]
        mse = [(r["N"], r["mse"], f"link{r['link']}") for r in rows]
        return {"qcrb.csv": qcrb, "mse.csv": mse}

    def emit(self, bundle_dir: Union[str, Path]) -> List[Path]:
        """
        Write the plot tables of a bundle.

        Args:
            bundle_dir: Directory produced by run_scenario

        Returns:
            Paths of the CSV files written
        """
        bundle_dir = Path(bundle_dir)
        metrics = self.load_metrics(bundle_dir)
        kind = metrics["kind"]

        tables: Dict[str, List[Point]] = {}
        if kind == "mse-study":
            tables.update(self.study_series(metrics["rows"]))
        elif "entries" in metrics:
            tables.update(self.plan_series(metrics["entries"]))
            if kind == "sweep-monitors":
                tables.update(self.assignment_series(metrics["entries"]))
        else:
            logger.warning(f"Bundle kind {kind} has no plot series")

        written = [self.write_series(bundle_dir / "plot" / name, points) for name, points in sorted(tables.items())]
        logger.info(f"Wrote {len(written)} plot tables for {kind} bundle {bundle_dir}")
        return written


plot_data_emitter = PlotDataEmitter()


def emit_plot_data(bundle_dir: Union[str, Path]) -> List[Path]:
    return plot_data_emitter.emit(bundle_dir)
