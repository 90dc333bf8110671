"""
QF / QMF integer linear programs for monitor placement.

The model is kept solver-agnostic: named variables with bounds, named linear
rows and a linear objective. `solver.py` searches it exactly, `lp_export.py`
writes it as LP text, and `IlpModel.check` re-validates any assignment.
"""

from dataclasses import dataclass, field
from enum import Enum
from math import ceil
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse

from qtomo.logging_config import logger
from qtomo.core.errors import CapacityInfeasible, ConfigError, TooManyMonitors
from qtomo.core.network import (
    MonitorPath,
    Network,
    classify_topology,
    entanglement_fidelity,
    monitor_paths,
)
from qtomo.core.qfi import (
    IndirectMode,
    ProbeContribution,
    assemble_qfim,
    default_mode,
    direct_qfi,
    indirect_qfi,
    probe_contribution,
    qcrb,
)


class Objective(str, Enum):
    QF = "QF"
    QMF = "QMF"


class PathSemantics(str, Enum):
    # Links on the route only need to be learnable by some monitor
    LEARNABLE = "learnable"
    # Every link on the route must be measured by the same monitor
    STRICT = "strict-same-monitor"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str
    key: Tuple[int, ...]
    lower: float = 0.0
    upper: float = 1.0
    integer: bool = True

    @property
    def binary(self) -> bool:
        return self.integer and self.lower == 0.0 and self.upper <= 1.0


@dataclass(frozen=True)
class Constraint:
    name: str
    coefs: Dict[str, float]
    sense: str
    rhs: float


def feasible_capacity_floor(n_links: int, m: int) -> int:
    """Smallest uniform monitoring-overhead that can cover every link."""
    return ceil((n_links - m) / m) + 1


class IlpModel:
    """Variables, rows and objective of one QF or QMF instance."""

    def __init__(
        self,
        net: Network,
        m: int,
        objective: Objective,
        semantics: PathSemantics,
        mode: IndirectMode,
        candidates: Sequence[int],
        capacities: Optional[Sequence[int]],
        uniform_capacity: bool,
    ):
        self.net = net
        self.m = m
        self.objective = objective
        self.semantics = semantics
        self.mode = mode
        self.candidates = tuple(candidates)
        self.capacities = tuple(capacities) if capacities is not None else None
        self.uniform_capacity = uniform_capacity
        self.paths: Dict[Tuple[int, int], MonitorPath] = monitor_paths(net)

        self.variables: List[Variable] = []
        self.index: Dict[str, int] = {}
        self.constraints: List[Constraint] = []
        self.objective_coefs: Dict[str, float] = {}

        self.direct_coef = np.array([direct_qfi(w) for w in net.werner])
        self.indirect_coef: Dict[Tuple[int, int], float] = {}
        self._matrix: Optional[sparse.csr_matrix] = None

    # ----- variable names -----

    @staticmethod
    def x(i: int, j: int) -> str:
        return f"x_e{i}_m{j}"

    @staticmethod
    def p(i: int, j: int) -> str:
        return f"p_e{i}_m{j}"

    @staticmethod
    def mv(k: int, j: int) -> str:
        return f"m_n{k}_m{j}"

    @staticmethod
    def b(i: int) -> str:
        return f"b_e{i}"

    @staticmethod
    def y(i: int, j: int) -> str:
        return f"y_e{i}_m{j}"

    @staticmethod
    def z(i: int, j: int, k: int) -> str:
        return f"z_e{i}_m{j}_n{k}"

    @staticmethod
    def d(i: int) -> str:
        return f"d_e{i}"

    @staticmethod
    def load(j: int) -> str:
        return f"l_m{j}"

    # ----- construction -----

    def add_variable(self, name: str, kind: str, key: Tuple[int, ...], lower: float = 0.0,
                     upper: float = 1.0, integer: bool = True) -> None:
        self.index[name] = len(self.variables)
        self.variables.append(Variable(name, kind, key, lower, upper, integer))

    def add_constraint(self, name: str, coefs: Mapping[str, float], sense: str, rhs: float) -> None:
        merged: Dict[str, float] = {}
        for var, coef in coefs.items():
            merged[var] = merged.get(var, 0.0) + coef
        self.constraints.append(Constraint(name, {k: v for k, v in merged.items() if v != 0.0}, sense, rhs))

    @property
    def n_links(self) -> int:
        return self.net.n_links

    @property
    def has_loads(self) -> bool:
        return self.objective == Objective.QMF

    def variable_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for var in self.variables:
            counts[var.kind] = counts.get(var.kind, 0) + 1
        return counts

    def is_endpoint(self, k: int, i: int) -> bool:
        return k in self.net.links[i].endpoints

    # ----- evaluation -----

    def _vector(self, values: Union[np.ndarray, Mapping[str, float]]) -> np.ndarray:
        if isinstance(values, Mapping):
            vector = np.zeros(len(self.variables))
            for name, value in values.items():
                vector[self.index[name]] = value
            return vector
        return np.asarray(values, dtype=float)

    def objective_value(self, values: Union[np.ndarray, Mapping[str, float]]) -> float:
        vector = self._vector(values)
        return float(sum(coef * vector[self.index[name]] for name, coef in self.objective_coefs.items()))

    def check(self, values: Union[np.ndarray, Mapping[str, float]], tol: float = 1e-9) -> List[str]:
        """
        Independent constraint evaluator.

        Returns:
            Names of violated rows, bounds and integrality requirements (empty if feasible)
        """
        vector = self._vector(values)
        if self._matrix is None:
            rows, cols, data = [], [], []
            for r, row in enumerate(self.constraints):
                for var, coef in row.coefs.items():
                    rows.append(r)
                    cols.append(self.index[var])
                    data.append(coef)
            self._matrix = sparse.csr_matrix(
                (data, (rows, cols)), shape=(len(self.constraints), len(self.variables))
            )

        lhs = self._matrix @ vector
        violations = []
        for row, value in zip(self.constraints, lhs):
            if row.sense == "<=" and value > row.rhs + tol:
                violations.append(row.name)
            elif row.sense == ">=" and value < row.rhs - tol:
                violations.append(row.name)
            elif row.sense == "=" and abs(value - row.rhs) > tol:
                violations.append(row.name)

        for var, value in zip(self.variables, vector):
            if value < var.lower - tol or value > var.upper + tol:
                violations.append(f"bound:{var.name}")
            if var.integer and abs(value - round(value)) > tol:
                violations.append(f"integrality:{var.name}")
        return violations

    def __repr__(self) -> str:
        return (
            f"IlpModel({self.objective.value}, m={self.m}, variables={len(self.variables)}, "
            f"constraints={len(self.constraints)})"
        )


def _resolve_capacities(
    net: Network, m: int, objective: Objective, L_star: Union[None, int, Sequence[int]]
) -> Tuple[Optional[Tuple[int, ...]], bool]:
    n = net.n_links
    if objective == Objective.QF:
        return None, True

    if L_star is None:
        return tuple([n] * m), True

    if isinstance(L_star, (int, np.integer)):
        floor = feasible_capacity_floor(n, m)
        if not floor <= L_star <= n:
            raise CapacityInfeasible(
                f"Monitoring-overhead {L_star} outside feasible range [{floor}, {n}] for m={m}",
                {"L_star": L_star, "min": floor, "max": n, "m": m},
            )
        return tuple([L_star] * m), True

    capacities = tuple(int(c) for c in L_star)
    if len(capacities) != m:
        raise ConfigError(f"Expected {m} capacities, got {len(capacities)}")
    for c in capacities:
        if not 1 <= c <= n:
            raise CapacityInfeasible(
                f"Monitor capacity {c} outside [1, {n}]", {"capacity": c, "max": n}
            )
    return capacities, len(set(capacities)) == 1


def build_model(
    net: Network,
    m: int,
    objective: Union[Objective, str] = Objective.QF,
    L_star: Union[None, int, Sequence[int]] = None,
    semantics: Union[PathSemantics, str] = PathSemantics.LEARNABLE,
    mode: Union[IndirectMode, str, None] = None,
    candidates: Optional[Sequence[int]] = None,
) -> IlpModel:
    """
    Build the QF or QMF placement program.

    Args:
        net: Network to monitor
        m: Number of monitors
        objective: QF (no capacities) or QMF (per-monitor capacities)
        L_star: Uniform capacity or one capacity per monitor (QMF only)
        semantics: Learnable-path or strict same-monitor routing rule
        mode: Indirect scoring rule (default depends on topology)
        candidates: Nodes allowed to host monitors (default: leaves on stars, all nodes otherwise)

    Returns:
        IlpModel ready for solve() or export_lp()
    """
    objective = Objective(objective)
    semantics = PathSemantics(semantics)
    topology = classify_topology(net)
    mode = IndirectMode(mode) if mode is not None else default_mode(topology)

    if candidates is None:
        if topology.is_star:
            candidates = [k for k in range(net.n_nodes) if k != topology.hub]
            candidate_set = "star leaves (hub excluded)"
        else:
            candidates = list(range(net.n_nodes))
            candidate_set = "all nodes"
    else:
        candidate_set = "caller-supplied"
    candidates = sorted(set(int(k) for k in candidates))

    if m < 1:
        raise ConfigError(f"Monitor count must be positive, got {m}")
    if m > len(candidates):
        raise TooManyMonitors(
            f"{m} monitors but only {len(candidates)} candidate nodes ({candidate_set})",
            {"m": m, "candidates": len(candidates), "candidate_set": candidate_set, "n_nodes": net.n_nodes},
        )

    capacities, uniform = _resolve_capacities(net, m, objective, L_star)
    model = IlpModel(net, m, objective, semantics, mode, candidates, capacities, uniform)
    _add_variables(model)
    _add_rows(model)
    _add_objective(model)

    logger.info(
        f"Built {objective.value} model: m={m}, {len(model.variables)} variables, "
        f"{len(model.constraints)} constraints, mode={mode.value}, semantics={semantics.value}"
    )
    return model


def _add_variables(model: IlpModel) -> None:
    net, M = model.net, range(model.m)
    candidate_set = set(model.candidates)

    for i in range(net.n_links):
        for j in M:
            model.add_variable(model.x(i, j), "x", (i, j))
    for i in range(net.n_links):
        for j in M:
            model.add_variable(model.p(i, j), "p", (i, j))
    for k in range(net.n_nodes):
        for j in M:
            model.add_variable(model.mv(k, j), "m", (k, j), upper=1.0 if k in candidate_set else 0.0)
    for i in range(net.n_links):
        model.add_variable(model.b(i), "b", (i,))
    for i in range(net.n_links):
        for j in M:
            model.add_variable(model.y(i, j), "y", (i, j))
    for i in range(net.n_links):
        model.add_variable(model.d(i), "d", (i,))
    for i in range(net.n_links):
        for j in M:
            for k in model.candidates:
                if not model.is_endpoint(k, i):
                    model.add_variable(model.z(i, j, k), "z", (i, j, k))
    if model.has_loads:
        for j in M:
            model.add_variable(model.load(j), "l", (j,), upper=float(model.capacities[j]))


def _add_rows(model: IlpModel) -> None:
    net, M = model.net, range(model.m)
    n_monitors = model.m

    for i, link in enumerate(net.links):
        k1, k2 = link.endpoints
        model.add_constraint(
            f"link_once_e{i}",
            {**{model.x(i, j): 1.0 for j in M}, **{model.p(i, j): 1.0 for j in M}},
            "=", 1.0,
        )
        for j in M:
            model.add_constraint(
                f"direct_at_endpoint_e{i}_m{j}",
                {model.x(i, j): 1.0, model.mv(k1, j): -1.0, model.mv(k2, j): -1.0},
                "<=", 0.0,
            )
        # min(1, sum m) linearized: forced when any endpoint hosts a monitor, capped by the endpoint count
        for k in (k1, k2):
            for j_prime in M:
                coefs = {model.x(i, j): 1.0 for j in M}
                coefs[model.mv(k, j_prime)] = -1.0
                model.add_constraint(f"direct_forced_e{i}_n{k}_m{j_prime}", coefs, ">=", 0.0)
        cap = {model.x(i, j): 1.0 for j in M}
        for j in M:
            cap[model.mv(k1, j)] = -1.0
            cap[model.mv(k2, j)] = -1.0
        model.add_constraint(f"direct_cap_e{i}", cap, "<=", 0.0)
        model.add_constraint(
            f"direct_flag_e{i}", {model.d(i): 1.0, **{model.x(i, j): -1.0 for j in M}}, "=", 0.0
        )

    if model.semantics == PathSemantics.LEARNABLE:
        for i in range(net.n_links):
            coefs = {model.b(i): 2.0 * n_monitors}
            for j in M:
                coefs[model.x(i, j)] = -1.0
                coefs[model.y(i, j)] = -1.0
            model.add_constraint(f"learn_link_e{i}", coefs, ">=", 0.0)
        for i in range(net.n_links):
            for j in M:
                for k in model.candidates:
                    path = model.paths[(k, i)]
                    size = float(len(path))
                    coefs = {model.y(i, j): size, model.p(i, j): -size, model.mv(k, j): size}
                    for h in path.link_sequence:
                        coefs[model.b(h)] = coefs.get(model.b(h), 0.0) - 1.0
                    model.add_constraint(f"learn_path_e{i}_m{j}_n{k}", coefs, "<=", size)
    else:
        for i in range(net.n_links):
            for j in M:
                for k in model.candidates:
                    path = model.paths[(k, i)]
                    size = float(len(path))
                    coefs: Dict[str, float] = {model.p(i, j): size, model.mv(k, j): size}
                    for h in path.link_sequence:
                        coefs[model.x(h, j)] = coefs.get(model.x(h, j), 0.0) - 1.0
                        coefs[model.p(h, j)] = coefs.get(model.p(h, j), 0.0) - 1.0
                    model.add_constraint(f"strict_path_e{i}_m{j}_n{k}", coefs, "<=", size)

    for i in range(net.n_links):
        model.add_constraint(f"estimable_e{i}", {model.b(i): 1.0}, "=", 1.0)
        for j in M:
            model.add_constraint(
                f"indirect_learnable_e{i}_m{j}", {model.p(i, j): 1.0, model.y(i, j): -1.0}, "<=", 0.0
            )

    for j in M:
        model.add_constraint(
            f"monitor_placed_m{j}", {model.mv(k, j): 1.0 for k in range(net.n_nodes)}, "=", 1.0
        )
    for k in range(net.n_nodes):
        model.add_constraint(f"node_once_n{k}", {model.mv(k, j): 1.0 for j in M}, "<=", 1.0)

    if model.has_loads:
        for j in M:
            coefs = {model.load(j): 1.0}
            for i in range(net.n_links):
                coefs[model.x(i, j)] = -1.0
                coefs[model.p(i, j)] = -1.0
            model.add_constraint(f"load_def_m{j}", coefs, "=", 0.0)
            model.add_constraint(f"load_cap_m{j}", {model.load(j): 1.0}, "<=", float(model.capacities[j]))

    for i in range(net.n_links):
        for j in M:
            for k in model.candidates:
                if model.is_endpoint(k, i):
                    continue
                z = model.z(i, j, k)
                model.add_constraint(f"and_p_e{i}_m{j}_n{k}", {z: 1.0, model.p(i, j): -1.0}, "<=", 0.0)
                model.add_constraint(f"and_m_e{i}_m{j}_n{k}", {z: 1.0, model.mv(k, j): -1.0}, "<=", 0.0)
                model.add_constraint(
                    f"and_both_e{i}_m{j}_n{k}",
                    {z: 1.0, model.p(i, j): -1.0, model.mv(k, j): -1.0},
                    ">=", -1.0,
                )


def _add_objective(model: IlpModel) -> None:
    net = model.net
    for i in range(net.n_links):
        for k in model.candidates:
            if model.is_endpoint(k, i):
                continue
            path = model.paths[(k, i)]
            weights = [net.links[h].werner for h in path.link_sequence]
            model.indirect_coef[(i, k)] = indirect_qfi(weights, len(weights) - 1, model.mode)

    for i in range(net.n_links):
        for j in range(model.m):
            model.objective_coefs[model.x(i, j)] = float(model.direct_coef[i])
            for k in model.candidates:
                if not model.is_endpoint(k, i):
                    model.objective_coefs[model.z(i, j, k)] = model.indirect_coef[(i, k)]


# ============= Plans =============

@dataclass(frozen=True)
class DirectAssignment:
    link: int
    monitor: int


@dataclass(frozen=True)
class IndirectAssignment:
    link: int
    monitor: int
    path: MonitorPath


@dataclass(frozen=True)
class MonitoringPlan:
    """Monitor placement plus per-link measurement assignment."""

    placements: Tuple[int, ...]
    direct: Tuple[DirectAssignment, ...]
    indirect: Tuple[IndirectAssignment, ...]
    objective: float
    formulation: str
    mode: IndirectMode
    capacities: Optional[Tuple[int, ...]] = None
    optimal: bool = True

    @property
    def m(self) -> int:
        return len(self.placements)

    @property
    def loads(self) -> Tuple[int, ...]:
        counts = [0] * self.m
        for a in self.direct:
            counts[a.monitor] += 1
        for a in self.indirect:
            counts[a.monitor] += 1
        return tuple(counts)

    @property
    def max_load(self) -> int:
        return max(self.loads) if self.placements else 0

    def monitor_of(self, link: int) -> int:
        for a in self.direct + self.indirect:
            if a.link == link:
                return a.monitor
        raise KeyError(link)

    def indirect_sets(self) -> Tuple[Tuple[int, ...], ...]:
        """Indirectly measured links per monitor."""
        sets: List[List[int]] = [[] for _ in range(self.m)]
        for a in self.indirect:
            sets[a.monitor].append(a.link)
        return tuple(tuple(sorted(s)) for s in sets)

    def canonicalize(self) -> "MonitoringPlan":
        """Relabel monitors in ascending placed-node order (uniform capacities only)."""
        if self.capacities is not None and len(set(self.capacities)) > 1:
            return self
        order = sorted(range(self.m), key=lambda j: self.placements[j])
        relabel = {old: new for new, old in enumerate(order)}
        return MonitoringPlan(
            placements=tuple(self.placements[j] for j in order),
            direct=tuple(sorted(
                (DirectAssignment(a.link, relabel[a.monitor]) for a in self.direct),
                key=lambda a: a.link,
            )),
            indirect=tuple(sorted(
                (IndirectAssignment(a.link, relabel[a.monitor], a.path) for a in self.indirect),
                key=lambda a: a.link,
            )),
            objective=self.objective,
            formulation=self.formulation,
            mode=self.mode,
            capacities=self.capacities,
            optimal=self.optimal,
        )

    def to_document(self, net: Network) -> Dict[str, Any]:
        assignments = []
        for a in self.direct:
            assignments.append({"link": a.link, "monitor": a.monitor, "kind": "direct", "path": [a.link]})
        for a in self.indirect:
            assignments.append({
                "link": a.link, "monitor": a.monitor, "kind": "indirect", "path": list(a.path.link_sequence),
            })
        assignments.sort(key=lambda entry: entry["link"])
        document: Dict[str, Any] = {
            "formulation": self.formulation,
            "mode": self.mode.value,
            "objective": self.objective,
            "optimal": self.optimal,
            "capacities": list(self.capacities) if self.capacities is not None else None,
            "placements": [
                {"monitor": j, "node": net.node_ids[k]} for j, k in enumerate(self.placements)
            ],
            "assignments": assignments,
            "loads": list(self.loads),
            "max_load": self.max_load,
            "indirect_sets": [list(s) for s in self.indirect_sets()],
        }
        return document

    @classmethod
    def from_document(cls, document: Mapping[str, Any], net: Network) -> "MonitoringPlan":
        try:
            placements = tuple(net.node_index(p["node"]) for p in document["placements"])
            direct, indirect = [], []
            for entry in document["assignments"]:
                link, monitor = int(entry["link"]), int(entry["monitor"])
                if entry["kind"] == "direct":
                    direct.append(DirectAssignment(link, monitor))
                else:
                    path = MonitorPath(placements[monitor], link, tuple(int(h) for h in entry["path"]))
                    indirect.append(IndirectAssignment(link, monitor, path))
            capacities = document.get("capacities")
            return cls(
                placements=placements,
                direct=tuple(direct),
                indirect=tuple(indirect),
                objective=float(document["objective"]),
                formulation=str(document["formulation"]),
                mode=IndirectMode(document["mode"]),
                capacities=tuple(capacities) if capacities is not None else None,
                optimal=bool(document.get("optimal", True)),
            )
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise ConfigError(f"Invalid plan document: {e}") from e


def plan_assignment(model: IlpModel, plan: MonitoringPlan) -> np.ndarray:
    """Full variable vector of `model` realising `plan`."""
    values = np.zeros(len(model.variables))

    def put(name: str, value: float) -> None:
        values[model.index[name]] = value

    for j, k in enumerate(plan.placements):
        put(model.mv(k, j), 1.0)
    for i in range(model.n_links):
        put(model.b(i), 1.0)
    for a in plan.direct:
        put(model.x(a.link, a.monitor), 1.0)
        put(model.d(a.link), 1.0)
    for a in plan.indirect:
        put(model.p(a.link, a.monitor), 1.0)
        put(model.y(a.link, a.monitor), 1.0)
        k = plan.placements[a.monitor]
        if model.z(a.link, a.monitor, k) in model.index:
            put(model.z(a.link, a.monitor, k), 1.0)
    if model.has_loads:
        for j, load in enumerate(plan.loads):
            put(model.load(j), float(load))
    return values


# ============= Evaluation =============

@dataclass(frozen=True)
class PlanMetrics:
    trace: float
    qfim_trace: float
    inverse_trace: float
    qcrb: Dict[int, float] = field(default_factory=dict)
    max_load: int = 0
    loads: Tuple[int, ...] = ()
    # Bell-state fidelity of the probe measured for each link
    probe_fidelity: Dict[int, float] = field(default_factory=dict)

    def to_document(self) -> Dict[str, Any]:
        return {
            "trace": self.trace,
            "qfim_trace": self.qfim_trace,
            "inverse_trace": self.inverse_trace,
            "qcrb": {str(link): bound for link, bound in sorted(self.qcrb.items())},
            "max_load": self.max_load,
            "loads": list(self.loads),
            "probe_fidelity": {str(link): value for link, value in sorted(self.probe_fidelity.items())},
        }


def plan_probes(net: Network, plan: MonitoringPlan, sample_count: int = 1) -> List[ProbeContribution]:
    """One probe per assignment, ordered by link."""
    probes = []
    for a in sorted(plan.direct + plan.indirect, key=lambda a: a.link):
        if isinstance(a, DirectAssignment):
            path = MonitorPath(plan.placements[a.monitor], a.link, (a.link,))
        else:
            path = a.path
        probes.append(probe_contribution(net, path, sample_count))
    return probes


def evaluate_plan(
    net: Network,
    plan: MonitoringPlan,
    mode: Union[IndirectMode, str, None] = None,
) -> PlanMetrics:
    """
    Assemble the full QFIM of a plan and report trace, QCRB and load metrics.

    Args:
        net: Network the plan was computed for
        plan: Plan to evaluate
        mode: Scoring rule for `trace` (default: the plan's own mode)
    """
    mode = IndirectMode(mode) if mode is not None else plan.mode
    trace = sum(direct_qfi(net.links[a.link].werner) for a in plan.direct)
    for a in plan.indirect:
        weights = [net.links[h].werner for h in a.path.link_sequence]
        trace += indirect_qfi(weights, len(weights) - 1, mode)

    probes = plan_probes(net, plan)
    model = assemble_qfim(probes, parameters=range(net.n_links))
    bounds = qcrb(model)
    logger.debug(
        f"Evaluated {plan.formulation} plan (m={plan.m}): trace={trace:.6f}, "
        f"inverse_trace={bounds.inverse_trace:.6f}, max_load={plan.max_load}"
    )
    return PlanMetrics(
        trace=float(trace),
        qfim_trace=model.trace,
        inverse_trace=bounds.inverse_trace,
        qcrb=bounds.bounds,
        max_load=plan.max_load,
        loads=plan.loads,
        probe_fidelity={p.path.target_link: entanglement_fidelity(p.werner) for p in probes},
    )
