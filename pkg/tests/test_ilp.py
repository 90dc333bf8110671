"""
Tests for placement-model construction, the constraint checker and plan documents.
"""

import math

import numpy as np
import pytest

from qtomo.core.errors import CapacityInfeasible, ConfigError, TooManyMonitors
from qtomo.core.ilp import (
    DirectAssignment,
    IndirectAssignment,
    MonitoringPlan,
    Objective,
    PathSemantics,
    build_model,
    evaluate_plan,
    feasible_capacity_floor,
    plan_assignment,
    plan_probes,
)
from qtomo.core.network import shortest_monitor_path
from qtomo.core.qfi import IndirectMode, direct_qfi
from qtomo.core.star import star_optimal_plan


def test_variable_counts_star4(star4):
    """x, p, y per (link, monitor); m per (node, monitor); b, d per link; z off the endpoints."""
    model = build_model(star4, 1, Objective.QF)
    counts = model.variable_counts()

    assert counts == {"x": 3, "p": 3, "m": 4, "b": 3, "y": 3, "d": 3, "z": 6}
    assert model.mode == IndirectMode.TWO_HOP
    assert model.candidates == (1, 2, 3)


def test_qmf_adds_loads(star10_heterogeneous):
    model = build_model(star10_heterogeneous, 2, Objective.QMF, L_star=5)
    names = [row.name for row in model.constraints]

    assert model.variable_counts()["l"] == 2
    assert "load_cap_m0" in names and "load_def_m1" in names
    assert model.capacities == (5, 5)
    assert all(row.rhs == 5 for row in model.constraints if row.name.startswith("load_cap"))


def test_qf_has_no_load_rows(star10_heterogeneous):
    model = build_model(star10_heterogeneous, 2, Objective.QF, L_star=5)
    assert not any(row.name.startswith("load") for row in model.constraints)
    assert model.capacities is None


def test_hub_cannot_host_monitor(star4):
    model = build_model(star4, 2)
    hub_vars = [v for v in model.variables if v.kind == "m" and v.key[0] == 0]
    assert hub_vars and all(v.upper == 0.0 for v in hub_vars)


def test_tree_allows_every_node(tree10):
    model = build_model(tree10, 1)
    assert model.candidates == tuple(range(10))
    assert model.mode == IndirectMode.CHAIN_RULE


def test_objective_coefficients_nonnegative(tree10):
    model = build_model(tree10, 2, Objective.QMF, L_star=9)
    values = list(model.objective_coefs.values())
    assert all(math.isfinite(v) and v >= 0 for v in values)


def test_capacity_floor():
    assert feasible_capacity_floor(9, 1) == 9
    assert feasible_capacity_floor(9, 2) == 5
    assert feasible_capacity_floor(9, 9) == 1


def test_capacity_below_floor(star10_heterogeneous):
    with pytest.raises(CapacityInfeasible) as info:
        build_model(star10_heterogeneous, 2, Objective.QMF, L_star=4)
    assert info.value.context["min"] == 5


def test_capacity_above_links(star10_heterogeneous):
    with pytest.raises(CapacityInfeasible):
        build_model(star10_heterogeneous, 2, Objective.QMF, L_star=10)


def test_capacity_list_length(star10_heterogeneous):
    with pytest.raises(ConfigError):
        build_model(star10_heterogeneous, 2, Objective.QMF, L_star=[5, 5, 5])


def test_heterogeneous_capacities(star10_heterogeneous):
    model = build_model(star10_heterogeneous, 2, Objective.QMF, L_star=[6, 3])
    assert model.capacities == (6, 3)
    assert not model.uniform_capacity


def test_too_many_monitors(star4):
    """A star offers only its leaves as monitor sites."""
    with pytest.raises(TooManyMonitors) as info:
        build_model(star4, 4)
    assert info.value.context == {
        "m": 4, "candidates": 3, "candidate_set": "star leaves (hub excluded)", "n_nodes": 4,
    }


def test_too_many_monitors_general(tree10):
    with pytest.raises(TooManyMonitors) as info:
        build_model(tree10, 11)
    assert info.value.context["candidate_set"] == "all nodes"
    assert info.value.context["candidates"] == 10


def test_non_positive_monitor_count(star4):
    with pytest.raises(ConfigError):
        build_model(star4, 0)


def test_strict_semantics_rows(tree10):
    learnable = build_model(tree10, 2, semantics=PathSemantics.LEARNABLE)
    strict = build_model(tree10, 2, semantics="strict-same-monitor")

    assert any(r.name.startswith("learn_path") for r in learnable.constraints)
    assert not any(r.name.startswith("strict_path") for r in learnable.constraints)
    assert any(r.name.startswith("strict_path") for r in strict.constraints)
    assert not any(r.name.startswith("learn_") for r in strict.constraints)


def test_star_plan_satisfies_model(star10_heterogeneous):
    """The closed-form star plan is a feasible point of the QMF model."""
    plan = star_optimal_plan(star10_heterogeneous, 3, 3)
    model = build_model(star10_heterogeneous, 3, Objective.QMF, L_star=3)
    values = plan_assignment(model, plan)

    assert model.check(values) == []
    assert model.objective_value(values) == pytest.approx(plan.objective, rel=1e-12)


def test_checker_reports_violations(star10_heterogeneous):
    plan = star_optimal_plan(star10_heterogeneous, 3, 3)
    model = build_model(star10_heterogeneous, 3, Objective.QMF, L_star=3)
    values = plan_assignment(model, plan)

    broken = values.copy()
    broken[model.index[model.b(0)]] = 0.0
    assert "estimable_e0" in model.check(broken)

    overloaded = values.copy()
    overloaded[model.index[model.load(0)]] = 4.0
    assert "load_cap_m0" in model.check(overloaded)

    fractional = values.copy()
    fractional[model.index[model.x(0, 0)]] = 0.5
    violations = model.check(fractional)
    assert f"integrality:{model.x(0, 0)}" in violations
    assert "link_once_e0" in violations


def test_checker_rejects_indirect_link_with_endpoint_monitor(star4):
    """A link whose endpoint hosts a monitor must be measured directly."""
    path = shortest_monitor_path(star4, 2, 0)
    plan = MonitoringPlan(
        placements=(1, 2),
        direct=(DirectAssignment(1, 1),),
        indirect=(IndirectAssignment(0, 1, path), IndirectAssignment(2, 1, shortest_monitor_path(star4, 2, 2))),
        objective=0.0,
        formulation="QF",
        mode=IndirectMode.TWO_HOP,
    )
    model = build_model(star4, 2)
    violations = model.check(plan_assignment(model, plan))
    assert any(name.startswith("direct_forced_e0") for name in violations)


def test_canonicalize_orders_monitors(star4):
    plan = MonitoringPlan(
        placements=(3, 1),
        direct=(DirectAssignment(2, 0), DirectAssignment(0, 1)),
        indirect=(IndirectAssignment(1, 1, shortest_monitor_path(star4, 1, 1)),),
        objective=1.0,
        formulation="QF",
        mode=IndirectMode.TWO_HOP,
    )
    canonical = plan.canonicalize()

    assert canonical.placements == (1, 3)
    assert canonical.monitor_of(0) == 0
    assert canonical.monitor_of(1) == 0
    assert canonical.monitor_of(2) == 1
    assert canonical.loads == (2, 1)
    assert canonical.indirect_sets() == ((1,), ())


def test_plan_document_round_trip(star10_heterogeneous):
    plan = star_optimal_plan(star10_heterogeneous, 2, 5)
    document = plan.to_document(star10_heterogeneous)
    restored = MonitoringPlan.from_document(document, star10_heterogeneous)

    assert restored == plan
    assert document["placements"] == [{"monitor": 0, "node": "v1"}, {"monitor": 1, "node": "v2"}]
    assert document["max_load"] == 5
    assert [len(s) for s in document["indirect_sets"]] == [4, 3]


def test_plan_document_invalid(star4):
    with pytest.raises(ConfigError):
        MonitoringPlan.from_document({"placements": []}, star4)


def test_all_direct_inverse_trace(star4):
    """Every link measured directly: inverse trace is the sum of reciprocals."""
    plan = star_optimal_plan(star4, 3)
    metrics = evaluate_plan(star4, plan)

    assert plan.indirect == ()
    assert metrics.inverse_trace == pytest.approx(3 / direct_qfi(0.9))
    assert metrics.trace == pytest.approx(3 * direct_qfi(0.9))
    assert metrics.qfim_trace == pytest.approx(metrics.trace)
    assert metrics.max_load == 1


def test_two_monitor_star_bounds(star4):
    """Links 1 and 2 share the same bound; the indirectly probed link 3 is much worse."""
    plan = star_optimal_plan(star4, 2)
    metrics = evaluate_plan(star4, plan)
    direct = 1 / direct_qfi(0.9)

    assert metrics.qcrb[0] == pytest.approx(metrics.qcrb[1], abs=1e-12)
    assert metrics.qcrb[0] == pytest.approx(direct)
    assert metrics.qcrb[2] > metrics.qcrb[0]
    assert metrics.qcrb[2] == pytest.approx(0.2271, abs=1e-3)


def test_plan_probes_one_per_link(star10_heterogeneous):
    plan = star_optimal_plan(star10_heterogeneous, 2)
    probes = plan_probes(star10_heterogeneous, plan, sample_count=10)

    assert [p.path.target_link for p in probes] == list(range(9))
    assert all(p.sample_count == 10 for p in probes)
    assert sum(1 for p in probes if p.path.is_direct) == 2


def test_metrics_document(star4):
    metrics = evaluate_plan(star4, star_optimal_plan(star4, 2))
    document = metrics.to_document()

    assert set(document) == {"trace", "qfim_trace", "inverse_trace", "qcrb", "max_load", "loads", "probe_fidelity"}
    assert list(document["qcrb"]) == ["0", "1", "2"]
    assert np.isclose(document["inverse_trace"], sum(document["qcrb"].values()))


def test_metrics_probe_fidelity(star4):
    """Direct probes carry the link's own fidelity, two-hop probes the fidelity of the product."""
    plan = star_optimal_plan(star4, 2)
    metrics = evaluate_plan(star4, plan)

    direct = {a.link for a in plan.direct}
    for link, value in metrics.probe_fidelity.items():
        W = 0.81 if link in direct else 0.81 ** 2
        assert value == pytest.approx((1 + 3 * W) / 4)
    assert sorted(metrics.probe_fidelity) == [0, 1, 2]
