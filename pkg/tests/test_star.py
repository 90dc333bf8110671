"""
Tests for the closed-form star strategy.
"""

import numpy as np
import pytest

from qtomo.core.errors import NotAStar, PartitionInfeasible
from qtomo.core.ilp import Objective, build_model, evaluate_plan
from qtomo.core.qfi import IndirectMode, direct_qfi, indirect_qfi
from qtomo.core.solver import solve
from qtomo.core.star import feasible_overhead_range, sorted_links, star_optimal_plan, star_partition
from tests.conftest import make_star


def test_feasible_overhead_range():
    assert feasible_overhead_range(9, 2) == (5, 9)
    assert feasible_overhead_range(9, 9) == (1, 9)
    assert feasible_overhead_range(9, 1) == (9, 9)
    with pytest.raises(PartitionInfeasible):
        feasible_overhead_range(9, 10)


def test_partition_sizes():
    assert star_partition(9, 2, 5).set_sizes == (4, 3)
    assert star_partition(9, 3, 3).set_sizes == (2, 2, 2)
    assert star_partition(9, 1, 9).set_sizes == (8,)


def test_partition_all_direct():
    partition = star_partition(9, 9, 1)
    assert partition.sets == ((),) * 9
    assert partition.C_ind == 0 and partition.C_star == 0


def test_partition_follows_order():
    order = (4, 0, 3, 1, 2)
    partition = star_partition(5, 1, 5, order)
    assert partition.sets == ((0, 3, 1, 2),)


def test_partition_out_of_range():
    with pytest.raises(PartitionInfeasible):
        star_partition(9, 2, 4)


def test_partition_not_coverable():
    """A single indirect link cannot fill the sets a per-monitor overhead of two demands."""
    with pytest.raises(PartitionInfeasible) as info:
        star_partition(5, 4, 2)
    assert info.value.context["M_star"] == 3


def test_sorted_links_ties_by_index():
    assert sorted_links([0.8, 0.9, 0.8, 0.95]) == (3, 1, 0, 2)


def test_rejects_non_star(tree10):
    with pytest.raises(NotAStar):
        star_optimal_plan(tree10, 2)


def test_single_monitor(star10_heterogeneous):
    plan = star_optimal_plan(star10_heterogeneous, 1)

    assert len(plan.direct) == 1 and len(plan.indirect) == 8
    assert plan.placements == (1,)
    assert plan.capacities is None
    assert plan.formulation == "star-fast"


def test_all_monitors_sum_direct(star10_heterogeneous):
    plan = star_optimal_plan(star10_heterogeneous, 9)
    assert plan.indirect == ()
    assert plan.objective == pytest.approx(sum(direct_qfi(w) for w in star10_heterogeneous.werner))


def test_capacities_recorded(star10_heterogeneous):
    plan = star_optimal_plan(star10_heterogeneous, 3, 3)
    assert plan.capacities == (3, 3, 3)
    assert plan.max_load == 3


def test_objective_matches_evaluation(star10_heterogeneous):
    plan = star_optimal_plan(star10_heterogeneous, 2, 5)
    metrics = evaluate_plan(star10_heterogeneous, plan)
    assert metrics.trace == pytest.approx(plan.objective, rel=1e-12)


def test_matches_solver_on_random_stars():
    """The closed form equals the ILP optimum for every m and every overhead the partition allows."""
    rng = np.random.default_rng(42)
    checked = 0
    for _ in range(200):
        n = int(rng.integers(3, 8))
        net = make_star([float(w) for w in rng.uniform(0.0, 0.999, n)])
        for m in range(1, n + 1):
            qf = solve(build_model(net, m, Objective.QF))
            assert star_optimal_plan(net, m).objective == pytest.approx(qf.objective, rel=1e-9)

            low, high = feasible_overhead_range(n, m)
            for L in range(low, high + 1):
                try:
                    star = star_optimal_plan(net, m, L)
                except PartitionInfeasible:
                    continue
                qmf = solve(build_model(net, m, Objective.QMF, L_star=L))
                assert star.objective == pytest.approx(qmf.objective, rel=1e-9)
                checked += 1
    assert checked > 200


def test_no_improving_swap(star10_heterogeneous):
    """Exchanging two indirect links between monitors never raises the objective."""
    net = star10_heterogeneous
    plan = star_optimal_plan(net, 3, 3)
    w = net.werner
    monitor_link = {a.monitor: a.link for a in plan.direct}

    def value(j, i):
        return indirect_qfi([w[monitor_link[j]], w[i]], 1, IndirectMode.TWO_HOP)

    for a in plan.indirect:
        for b in plan.indirect:
            if a.monitor == b.monitor:
                continue
            before = value(a.monitor, a.link) + value(b.monitor, b.link)
            after = value(a.monitor, b.link) + value(b.monitor, a.link)
            assert after <= before + 1e-12
