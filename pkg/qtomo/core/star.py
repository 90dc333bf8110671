"""
Closed-form optimal monitoring strategy for star networks.

Links are sorted by decreasing Werner parameter. Monitors sit on the leaves of
the m best links and measure those links directly. The remaining links are
split, best first, into indirect sets of size L* - 1, each handled by the next
best monitor over its two-hop route through the hub.
"""

from dataclasses import dataclass
from math import ceil
from typing import List, Optional, Tuple

from qtomo.logging_config import logger
from qtomo.core.errors import NotAStar, PartitionInfeasible
from qtomo.core.ilp import DirectAssignment, IndirectAssignment, MonitoringPlan
from qtomo.core.network import Network, classify_topology, shortest_monitor_path
from qtomo.core.qfi import IndirectMode, direct_qfi, indirect_qfi


@dataclass(frozen=True)
class StarPartition:
    order: Tuple[int, ...]
    m: int
    L_star: int
    M_star: int
    C_ind: int
    C_star: int
    sets: Tuple[Tuple[int, ...], ...]

    @property
    def set_sizes(self) -> Tuple[int, ...]:
        return tuple(len(s) for s in self.sets)


def feasible_overhead_range(n: int, m: int) -> Tuple[int, int]:
    """Inclusive range of uniform monitoring-overhead values for n links and m monitors."""
    if not 1 <= m <= n:
        raise PartitionInfeasible(f"Monitor count {m} outside [1, {n}]", {"n": n, "m": m})
    return ceil((n - m) / m) + 1, n


def sorted_links(weights) -> Tuple[int, ...]:
    """Link indices by decreasing Werner parameter, ties by lower index."""
    return tuple(sorted(range(len(weights)), key=lambda i: (-weights[i], i)))


def star_partition(
    n: int,
    m: int,
    L_star: int,
    order: Optional[Tuple[int, ...]] = None,
) -> StarPartition:
    """
    Split the n - m indirectly measured links into per-monitor sets.

    Args:
        n: Number of links
        m: Number of monitors
        L_star: Uniform monitoring-overhead
        order: Links sorted best first (default: 0..n-1)
    """
    low, high = feasible_overhead_range(n, m)
    counts = {"n": n, "m": m, "L_star": L_star}
    if not low <= L_star <= high:
        raise PartitionInfeasible(f"L*={L_star} outside feasible range [{low}, {high}]", counts)

    M_star = ceil(n / L_star)
    C_ind = L_star - 1
    C_star = n - m
    counts.update({"M_star": M_star, "C_ind": C_ind, "C_star": C_star})
    if M_star > m:
        raise PartitionInfeasible(f"M*={M_star} exceeds the {m} deployed monitors", counts)
    if not C_ind * (M_star - 1) <= C_star <= C_ind * M_star:
        raise PartitionInfeasible(
            f"C*={C_star} not coverable by {M_star} sets of capacity {C_ind}", counts
        )

    if order is None:
        order = tuple(range(n))
    indirect = order[m:]
    sets: List[Tuple[int, ...]] = []
    for position in range(M_star):
        start = position * C_ind
        stop = C_star if position == M_star - 1 else start + C_ind
        sets.append(tuple(indirect[start:stop]))

    return StarPartition(tuple(order), m, L_star, M_star, C_ind, C_star, tuple(sets))


def star_optimal_plan(net: Network, m: int, L_star: Optional[int] = None) -> MonitoringPlan:
    """
    Optimal plan on a star without solving the ILP.

    Args:
        net: Star network
        m: Number of monitors (1..n)
        L_star: Uniform monitoring-overhead; None means unconstrained (L* = n)

    Returns:
        Canonicalized MonitoringPlan scored with the two-hop form
    """
    topology = classify_topology(net)
    if not topology.is_star:
        raise NotAStar(f"Network is {topology.kind.value}, not a star", {"topology": topology.kind.value})

    n = net.n_links
    order = sorted_links(list(net.werner))
    constrained = L_star is not None
    if L_star is None:
        L_star = n
    partition = star_partition(n, m, L_star, order)

    leaves = [net.links[i].other(topology.hub) for i in order[:m]]
    direct = [DirectAssignment(order[j], j) for j in range(m)]
    indirect = []
    objective = sum(direct_qfi(net.links[i].werner) for i in order[:m])
    for j, links in enumerate(partition.sets):
        for i in links:
            path = shortest_monitor_path(net, leaves[j], i)
            indirect.append(IndirectAssignment(i, j, path))
            weights = [net.links[h].werner for h in path.link_sequence]
            objective += indirect_qfi(weights, 1, IndirectMode.TWO_HOP)

    plan = MonitoringPlan(
        placements=tuple(leaves),
        direct=tuple(direct),
        indirect=tuple(indirect),
        objective=float(objective),
        formulation="star-fast",
        mode=IndirectMode.TWO_HOP,
        capacities=tuple([L_star] * m) if constrained else None,
    )
    logger.info(
        f"Star plan m={m}, L*={L_star}: objective={objective:.9f}, indirect sets {list(partition.set_sizes)}"
    )
    return plan.canonicalize()
