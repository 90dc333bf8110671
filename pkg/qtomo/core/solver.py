"""
Exact depth-first branch-and-bound for placement models.

The search enumerates monitor placements, then assigns links in index order.
A link with a monitor at one of its endpoints is measured directly; every other
link is measured indirectly by one monitor over the pre-computed route. The
remaining-assignment bound is the optimal value of the rectangular assignment
problem between unassigned links and free capacity slots.
"""

import itertools
import time
from dataclasses import dataclass
from math import ceil, inf
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from qtomo.config import settings
from qtomo.logging_config import logger
from qtomo.core.errors import BudgetExhausted, Infeasible
from qtomo.core.ilp import (
    DirectAssignment,
    IlpModel,
    IndirectAssignment,
    MonitoringPlan,
    PathSemantics,
    plan_assignment,
)

_DISALLOWED = -1e12


@dataclass
class _Placement:
    node_of: Tuple[int, ...]
    capacities: Tuple[int, ...]
    options: List[List[Tuple[float, int, str]]]
    profit: np.ndarray
    allowed: np.ndarray
    suffix: np.ndarray
    bound: float = -inf


class BranchAndBound:
    """Exact search over one IlpModel."""

    def __init__(self, model: IlpModel, node_limit: Optional[int] = None, time_limit: Optional[float] = None):
        self.model = model
        self.n = model.n_links
        self.m = model.m
        self.qmf = model.has_loads
        self.strict = model.semantics == PathSemantics.STRICT
        self.capacities = model.capacities if model.capacities is not None else tuple([self.n] * self.m)
        self.node_limit = node_limit if node_limit is not None else settings.solver_node_limit
        self.time_limit = time_limit if time_limit is not None else settings.solver_time_limit
        self.load_floor = ceil(self.n / self.m)

        self.nodes = 0
        self.best_value = -inf
        self.best_load = self.n + 1
        self.best_plan: Optional[MonitoringPlan] = None
        self._started = 0.0
        self._limit_hit: Optional[str] = None

    # ----- placements -----

    def _monitor_layouts(self):
        """Yield (node of monitor j, capacity of monitor j) tuples."""
        for nodes in itertools.combinations(self.model.candidates, self.m):
            if self.model.uniform_capacity:
                yield nodes, self.capacities
                continue
            for perm in sorted(set(itertools.permutations(self.capacities))):
                node_of = [0] * self.m
                used = set()
                for node, cap in zip(nodes, perm):
                    j = min(j for j in range(self.m) if j not in used and self.capacities[j] == cap)
                    used.add(j)
                    node_of[j] = node
                yield tuple(node_of), self.capacities

    def _prepare(self, node_of: Tuple[int, ...], capacities: Tuple[int, ...]) -> _Placement:
        model = self.model
        profit = np.full((self.n, self.m), _DISALLOWED)
        options: List[List[Tuple[float, int, str]]] = []
        for i, link in enumerate(model.net.links):
            forced = [j for j in range(self.m) if node_of[j] in link.endpoints]
            if forced:
                opts = [(float(model.direct_coef[i]), j, "direct") for j in forced]
            else:
                opts = [(model.indirect_coef[(i, node_of[j])], j, "indirect") for j in range(self.m)]
            opts.sort(key=lambda o: (-o[0], o[1]))
            for value, j, _ in opts:
                profit[i, j] = value
            options.append(opts)

        best = np.array([opts[0][0] for opts in options])
        suffix = np.concatenate([np.cumsum(best[::-1])[::-1], [0.0]])
        return _Placement(node_of, capacities, options, profit, profit > _DISALLOWED / 2, suffix)

    # ----- bounds -----

    def _remaining_bound(self, place: _Placement, t: int, loads: List[int]) -> float:
        rows = self.n - t
        if rows == 0:
            return 0.0
        if not self.qmf:
            return float(place.suffix[t])

        slots = [max(0, min(place.capacities[j] - loads[j], rows)) for j in range(self.m)]
        if sum(slots) < rows:
            return -inf
        cols = np.repeat(np.arange(self.m), slots)
        profit = place.profit[t:, cols]
        r, c = linear_sum_assignment(profit, maximize=True)
        if not place.allowed[t:][r, cols[c]].all():
            return -inf
        return float(profit[r, c].sum())

    def _tolerance(self) -> float:
        return settings.solver_tolerance * max(1.0, abs(self.best_value))

    def _can_improve(self, bound: float, max_load: int) -> bool:
        if bound == -inf:
            return False
        if self.best_plan is None:
            return True
        tol = self._tolerance()
        if bound > self.best_value + tol:
            return True
        if self.qmf and bound >= self.best_value - tol:
            return max(max_load, self.load_floor) < self.best_load
        return False

    # ----- search -----

    def _tick(self) -> bool:
        self.nodes += 1
        if self.nodes > self.node_limit:
            self._limit_hit = f"node limit {self.node_limit}"
        elif self.nodes % 256 == 0 and time.monotonic() - self._started > self.time_limit:
            self._limit_hit = f"time limit {self.time_limit}s"
        return self._limit_hit is None

    def _search(
        self,
        place: _Placement,
        t: int,
        value: float,
        loads: List[int],
        assign: List[Optional[Tuple[int, str]]],
        required: Dict[int, int],
    ) -> None:
        if not self._tick():
            return
        if t == self.n:
            self._leaf(place, value, loads, assign)
            return

        bound = value + self._remaining_bound(place, t, loads)
        if not self._can_improve(bound, max(loads)):
            return

        options = [
            o for o in place.options[t]
            if loads[o[1]] < place.capacities[o[1]] and required.get(t, o[1]) == o[1]
        ]
        if self.qmf:
            options.sort(key=lambda o: (-o[0], loads[o[1]], o[1]))

        for coef, j, kind in options:
            added: List[int] = []
            if self.strict and kind == "indirect":
                if not self._require_route(place, t, j, assign, required, added):
                    for h in added:
                        del required[h]
                    continue
            assign[t] = (j, kind)
            loads[j] += 1
            self._search(place, t + 1, value + coef, loads, assign, required)
            loads[j] -= 1
            assign[t] = None
            for h in added:
                del required[h]
            if self._limit_hit:
                return

    def _require_route(
        self,
        place: _Placement,
        i: int,
        j: int,
        assign: List[Optional[Tuple[int, str]]],
        required: Dict[int, int],
        added: List[int],
    ) -> bool:
        """Every link on monitor j's route to link i must also belong to j."""
        path = self.model.paths[(place.node_of[j], i)]
        for h in path.link_sequence[:-1]:
            if assign[h] is not None:
                if assign[h][0] != j:
                    return False
            elif h in required:
                if required[h] != j:
                    return False
            else:
                required[h] = j
                added.append(h)
        return True

    def _leaf(self, place: _Placement, value: float, loads: List[int], assign) -> None:
        max_load = max(loads)
        if self.best_plan is not None:
            tol = self._tolerance()
            better = value > self.best_value + tol
            lighter = self.qmf and value >= self.best_value - tol and max_load < self.best_load
            if not (better or lighter):
                return

        plan = self._plan(place, value, assign)
        violations = self.model.check(plan_assignment(self.model, plan))
        if violations:
            logger.error(f"Rejected leaf violating {len(violations)} rows, first: {violations[0]}")
            return

        logger.debug(f"Incumbent {value:.9f} (max load {max_load}) at placement {place.node_of}")
        self.best_value = value
        self.best_load = max_load
        self.best_plan = plan

    def _plan(self, place: _Placement, value: float, assign, optimal: bool = True) -> MonitoringPlan:
        direct, indirect = [], []
        for i, (j, kind) in enumerate(assign):
            if kind == "direct":
                direct.append(DirectAssignment(i, j))
            else:
                indirect.append(IndirectAssignment(i, j, self.model.paths[(place.node_of[j], i)]))
        return MonitoringPlan(
            placements=place.node_of,
            direct=tuple(direct),
            indirect=tuple(indirect),
            objective=float(value),
            formulation=self.model.objective.value,
            mode=self.model.mode,
            capacities=self.model.capacities,
            optimal=optimal,
        )

    def run(self) -> MonitoringPlan:
        self._started = time.monotonic()
        placements = []
        for node_of, caps in self._monitor_layouts():
            place = self._prepare(node_of, caps)
            place.bound = self._remaining_bound(place, 0, [0] * self.m)
            placements.append(place)
        placements.sort(key=lambda p: (-p.bound, sorted(p.node_of), p.node_of))
        logger.debug(f"Searching {len(placements)} placements")

        for place in placements:
            if not self._can_improve(place.bound, 0):
                break
            self._search(place, 0, 0.0, [0] * self.m, [None] * self.n, {})
            if self._limit_hit:
                break

        elapsed = time.monotonic() - self._started
        if self._limit_hit:
            incumbent = None
            if self.best_plan is not None:
                incumbent = self._finish(self.best_plan, optimal=False)
            logger.warning(f"Solver stopped at {self._limit_hit} after {self.nodes} nodes")
            raise BudgetExhausted(
                f"Solver stopped at {self._limit_hit}",
                incumbent=incumbent,
                context={"nodes": self.nodes, "objective": self.best_value if incumbent else None},
            )

        if self.best_plan is None:
            raise Infeasible(
                f"No feasible assignment for {self.model!r}",
                {"m": self.m, "capacities": list(self.capacities) if self.qmf else None},
            )

        logger.info(
            f"Solved {self.model.objective.value} m={self.m}: objective={self.best_value:.9f}, "
            f"max_load={self.best_load}, nodes={self.nodes}, {elapsed:.2f}s"
        )
        return self._finish(self.best_plan, optimal=True)

    def _finish(self, plan: MonitoringPlan, optimal: bool) -> MonitoringPlan:
        if not optimal:
            plan = MonitoringPlan(
                placements=plan.placements, direct=plan.direct, indirect=plan.indirect,
                objective=plan.objective, formulation=plan.formulation, mode=plan.mode,
                capacities=plan.capacities, optimal=False,
            )
        return plan.canonicalize()


def solve(model: IlpModel, node_limit: Optional[int] = None, time_limit: Optional[float] = None) -> MonitoringPlan:
    """
    Solve a placement model to proven optimality.

    Raises:
        Infeasible: no assignment satisfies the model
        BudgetExhausted: a limit fired; `incumbent` holds the best plan found
    """
    return BranchAndBound(model, node_limit=node_limit, time_limit=time_limit).run()
