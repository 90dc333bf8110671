"""
Scenario documents and the runner that turns them into report bundles.

A bundle directory holds:
    scenario.json   resolved scenario
    plan_*.json     one document per computed plan
    metrics.json    task summary (field `kind` names the task)
    study.tsv       mse-study table
    model.lp        export-lp output
    run.log         log of the run
"""

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, model_validator

from qtomo.config import settings
from qtomo.logging_config import add_run_log, logger
from qtomo.core.errors import BudgetExhausted, ConfigError, Infeasible, ModelError
from qtomo.core.ilp import (
    MonitoringPlan,
    Objective,
    PathSemantics,
    build_model,
    evaluate_plan,
    feasible_capacity_floor,
    plan_assignment,
)
from qtomo.core.lp_export import export_lp, read_lp_summary
from qtomo.core.network import Network, classify_topology, read_network
from qtomo.core.qfi import IndirectMode
from qtomo.core.solver import solve
from qtomo.core.star import star_optimal_plan
from qtomo.core.study import mse_study


class Task(str, Enum):
    OPTIMIZE = "optimize"
    STAR_FAST = "star-fast"
    EVALUATE = "evaluate"
    MSE_STUDY = "mse-study"
    SWEEP_MONITORS = "sweep-monitors"
    EXPORT_LP = "export-lp"


Capacity = Union[int, List[int], Literal["minimal"], None]


class Scenario(BaseModel):
    """One run of the toolkit; unknown fields are rejected."""

    model_config = ConfigDict(extra="forbid")

    network: Path
    task: Task
    objective: Literal["QF", "QMF", "both"] = "QF"
    monitors: Optional[int] = None
    max_monitors: Optional[int] = None
    capacity: Capacity = None
    mode: Optional[IndirectMode] = None
    semantics: PathSemantics = PathSemantics.LEARNABLE
    n_grid: Optional[List[int]] = None
    trials: Optional[int] = None
    seed: Optional[int] = None
    workers: Optional[int] = None
    plan: Optional[Path] = None
    output_dir: Optional[Path] = None

    @model_validator(mode="after")
    def _check_combination(self) -> "Scenario":
        if self.task == Task.MSE_STUDY and self.seed is None:
            raise ValueError("mse-study needs an explicit seed")
        needs_m = {Task.OPTIMIZE, Task.STAR_FAST, Task.EXPORT_LP}
        if self.task in needs_m and self.monitors is None:
            raise ValueError(f"{self.task.value} needs `monitors`")
        if self.task in (Task.EVALUATE, Task.MSE_STUDY) and self.plan is None and self.monitors is None:
            raise ValueError(f"{self.task.value} needs `monitors` or `plan`")
        if self.monitors is not None and self.monitors < 1:
            raise ValueError("monitors must be positive")
        if self.trials is not None and self.trials < 1:
            raise ValueError("trials must be positive")
        if self.n_grid is not None and (not self.n_grid or min(self.n_grid) < 1):
            raise ValueError("n_grid must list positive shot counts")
        if self.task in (Task.OPTIMIZE, Task.EXPORT_LP, Task.MSE_STUDY) and self.objective == "both":
            raise ValueError(f"{self.task.value} runs a single objective")
        return self

    @property
    def objectives(self) -> List[Objective]:
        if self.objective == "both":
            return [Objective.QF, Objective.QMF]
        return [Objective(self.objective)]

    def bundle_dir(self) -> Path:
        if self.output_dir is not None:
            return self.output_dir
        return settings.reports_root / f"{self.network.stem}_{self.task.value}"


def load_scenario(document: Dict[str, Any], base_dir: Optional[Path] = None) -> Scenario:
    """Validate a scenario mapping; relative network/plan paths resolve against `base_dir`."""
    try:
        scenario = Scenario.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"Invalid scenario: {e}") from e

    if base_dir is not None:
        updates = {}
        for name in ("network", "plan"):
            value = getattr(scenario, name)
            if value is not None and not value.is_absolute():
                updates[name] = base_dir / value
        scenario = scenario.model_copy(update=updates)
    return scenario


def read_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Scenario file not found: {path}", {"path": str(path)})
    with open(path, "r", encoding="utf-8") as f:
        document = yaml.safe_load(f)
    if not isinstance(document, dict):
        raise ConfigError(f"Scenario file is not a mapping: {path}", {"path": str(path)})
    return load_scenario(document, base_dir=path.parent)


def write_json(path: Path, document: Any) -> Path:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return path


def read_json(path: Path) -> Any:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


@dataclass
class ReportBundle:
    directory: Path
    kind: str
    files: List[str] = field(default_factory=list)

    @property
    def metrics_path(self) -> Path:
        return self.directory / "metrics.json"


class ScenarioRunner:
    """Runs scenarios task by task and writes their report bundles."""

    @staticmethod
    def run(scenario: Scenario) -> ReportBundle:
        """
        Execute a scenario.

        Args:
            scenario: Validated scenario

        Returns:
            ReportBundle listing the files written
        """
        directory = scenario.bundle_dir()
        directory.mkdir(parents=True, exist_ok=True)
        handler = add_run_log(directory / "run.log")
        bundle = ReportBundle(directory=directory, kind=scenario.task.value)
        try:
            logger.info(f"Running {scenario.task.value} on {scenario.network} into {directory}")
            write_json(directory / "scenario.json", scenario.model_dump(mode="json"))
            bundle.files.append("scenario.json")

            net = read_network(scenario.network)
            handlers = {
                Task.OPTIMIZE: ScenarioRunner._optimize,
                Task.STAR_FAST: ScenarioRunner._star_fast,
                Task.EVALUATE: ScenarioRunner._evaluate,
                Task.MSE_STUDY: ScenarioRunner._mse_study,
                Task.SWEEP_MONITORS: ScenarioRunner._sweep,
                Task.EXPORT_LP: ScenarioRunner._export_lp,
            }
            metrics = handlers[scenario.task](scenario, net, bundle)
            metrics["kind"] = scenario.task.value
            metrics["network"] = net.name or scenario.network.stem
            write_json(directory / "metrics.json", metrics)
            bundle.files.append("metrics.json")
            logger.info(f"Wrote {len(bundle.files)} report files to {directory}")
            return bundle
        except Exception as e:
            logger.error(f"Scenario failed: {type(e).__name__}: {e}")
            raise
        finally:
            logger.remove(handler)

    # ----- helpers -----

    @staticmethod
    def _solve(
        scenario: Scenario, net: Network, m: int, objective: Objective
    ) -> Tuple[MonitoringPlan, Optional[Union[int, List[int]]]]:
        """Solve one instance; `minimal` capacity searches upward from the feasible floor."""
        capacity = scenario.capacity
        if objective == Objective.QMF and capacity in (None, "minimal"):
            for L in range(feasible_capacity_floor(net.n_links, m), net.n_links + 1):
                try:
                    return ScenarioRunner._solve_once(scenario, net, m, objective, L), L
                except Infeasible:
                    logger.debug(f"QMF m={m} infeasible at L*={L}")
            raise Infeasible(f"No feasible monitoring-overhead for m={m}", {"m": m})
        if objective == Objective.QF:
            capacity = None
        return ScenarioRunner._solve_once(scenario, net, m, objective, capacity), capacity

    @staticmethod
    def _solve_once(scenario: Scenario, net: Network, m: int, objective: Objective, capacity) -> MonitoringPlan:
        model = build_model(
            net, m, objective, L_star=capacity, semantics=scenario.semantics, mode=scenario.mode
        )
        try:
            return solve(model)
        except BudgetExhausted as e:
            if e.incumbent is None:
                raise
            logger.warning(f"Using best-effort plan for {objective.value} m={m}: {e}")
            return e.incumbent

    @staticmethod
    def _validate(scenario: Scenario, net: Network, plan: MonitoringPlan) -> None:
        objective = Objective.QMF if plan.capacities is not None else Objective.QF
        capacities = list(plan.capacities) if plan.capacities is not None else None
        model = build_model(
            net, plan.m, objective, L_star=capacities, semantics=scenario.semantics, mode=plan.mode,
            candidates=sorted(set(plan.placements) | set(ScenarioRunner._default_candidates(net))),
        )
        violations = model.check(plan_assignment(model, plan))
        if violations:
            raise ModelError(
                f"Plan violates {len(violations)} model rows", {"violations": violations[:10]}
            )

    @staticmethod
    def _default_candidates(net: Network) -> List[int]:
        topology = classify_topology(net)
        return [k for k in range(net.n_nodes) if not topology.is_star or k != topology.hub]

    @staticmethod
    def _entry(
        scenario: Scenario,
        net: Network,
        bundle: ReportBundle,
        plan: MonitoringPlan,
        label: str,
        capacity: Any = None,
    ) -> Dict[str, Any]:
        ScenarioRunner._validate(scenario, net, plan)
        filename = f"plan_{label}_m{plan.m}.json"
        write_json(bundle.directory / filename, plan.to_document(net))
        bundle.files.append(filename)
        metrics = evaluate_plan(net, plan, scenario.mode)
        return {
            "objective": label,
            "m": plan.m,
            "L_star": capacity,
            "plan": filename,
            "optimal": plan.optimal,
            "metrics": metrics.to_document(),
            "indirect_sets": [list(s) for s in plan.indirect_sets()],
        }

    # ----- tasks -----

    @staticmethod
    def _optimize(scenario: Scenario, net: Network, bundle: ReportBundle) -> Dict[str, Any]:
        objective = scenario.objectives[0]
        plan, capacity = ScenarioRunner._solve(scenario, net, scenario.monitors, objective)
        return {"entries": [ScenarioRunner._entry(scenario, net, bundle, plan, objective.value, capacity)]}

    @staticmethod
    def _star_fast(scenario: Scenario, net: Network, bundle: ReportBundle) -> Dict[str, Any]:
        m = scenario.monitors
        capacity = scenario.capacity
        if capacity == "minimal":
            capacity = feasible_capacity_floor(net.n_links, m)
        if isinstance(capacity, list):
            raise ConfigError("star-fast takes a single uniform capacity")
        plan = star_optimal_plan(net, m, capacity)
        return {"entries": [ScenarioRunner._entry(scenario, net, bundle, plan, "star-fast", capacity)]}

    @staticmethod
    def _evaluate(scenario: Scenario, net: Network, bundle: ReportBundle) -> Dict[str, Any]:
        if scenario.plan is not None:
            plan = MonitoringPlan.from_document(read_json(scenario.plan), net)
            capacity = list(plan.capacities) if plan.capacities is not None else None
            entry = ScenarioRunner._entry(scenario, net, bundle, plan, plan.formulation, capacity)
            return {"entries": [entry]}

        entries = []
        for objective in scenario.objectives:
            plan, capacity = ScenarioRunner._solve(scenario, net, scenario.monitors, objective)
            entries.append(ScenarioRunner._entry(scenario, net, bundle, plan, objective.value, capacity))
        return {"entries": entries}

    @staticmethod
    def _mse_study(scenario: Scenario, net: Network, bundle: ReportBundle) -> Dict[str, Any]:
        if scenario.plan is not None:
            plan = MonitoringPlan.from_document(read_json(scenario.plan), net)
            entry = ScenarioRunner._entry(scenario, net, bundle, plan, plan.formulation)
        else:
            objective = scenario.objectives[0]
            plan, capacity = ScenarioRunner._solve(scenario, net, scenario.monitors, objective)
            entry = ScenarioRunner._entry(scenario, net, bundle, plan, objective.value, capacity)

        table = mse_study(
            net, plan, n_grid=scenario.n_grid, trials=scenario.trials,
            seed=scenario.seed, workers=scenario.workers,
        )
        table.write_tsv(bundle.directory / "study.tsv")
        bundle.files.append("study.tsv")
        return {
            "entries": [entry],
            "study": "study.tsv",
            "seed": scenario.seed,
            "rows": [
                {"link": r.link, "N": r.N, "mse": r.mse, "qcrb": r.qcrb, "trials": r.trials, "clamp_rate": r.clamp_rate}
                for r in table.rows
            ],
        }

    @staticmethod
    def _sweep(scenario: Scenario, net: Network, bundle: ReportBundle) -> Dict[str, Any]:
        limit = scenario.max_monitors or min(net.n_links, len(ScenarioRunner._default_candidates(net)))
        entries = []
        for objective in scenario.objectives:
            for m in range(1, limit + 1):
                plan, capacity = ScenarioRunner._solve(scenario, net, m, objective)
                entries.append(ScenarioRunner._entry(scenario, net, bundle, plan, objective.value, capacity))
        return {"entries": entries, "max_monitors": limit}

    @staticmethod
    def _export_lp(scenario: Scenario, net: Network, bundle: ReportBundle) -> Dict[str, Any]:
        objective = scenario.objectives[0]
        capacity = scenario.capacity
        if capacity == "minimal":
            capacity = feasible_capacity_floor(net.n_links, scenario.monitors)
        model = build_model(
            net, scenario.monitors, objective, L_star=capacity,
            semantics=scenario.semantics, mode=scenario.mode,
        )
        text = export_lp(model, bundle.directory / "model.lp")
        bundle.files.append("model.lp")
        summary = read_lp_summary(text)
        return {
            "model": "model.lp",
            "objective": objective.value,
            "m": scenario.monitors,
            "rows": summary.n_rows,
            "variables": summary.n_variables,
            "binaries": len(summary.binaries),
        }


scenario_runner = ScenarioRunner()


def run_scenario(scenario: Scenario) -> ReportBundle:
    return scenario_runner.run(scenario)
