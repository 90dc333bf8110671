"""
Tests for network loading, topology classification and monitoring paths.
"""

import networkx as nx
import numpy as np
import pytest
import yaml

from qtomo.core.errors import (
    ConfigError,
    DisconnectedGraph,
    DuplicateLink,
    SelfLoop,
    UnknownNode,
    WernerOutOfRange,
)
from qtomo.core.network import (
    MonitorPath,
    TopologyKind,
    classify_topology,
    entanglement_fidelity,
    load_network,
    monitor_paths,
    path_product,
    read_network,
    shortest_monitor_path,
)
from tests.conftest import make_graph, make_star


def test_load_star_network():
    """A 3-leaf star loads with links in input order and a hub at v0."""
    net = load_network({
        "nodes": ["v0", "v1", "v2", "v3"],
        "links": [
            {"a": "v0", "b": "v1", "w": 0.9},
            {"a": "v0", "b": "v2", "w": 0.9},
            {"a": "v0", "b": "v3", "w": 0.9},
        ],
    })

    assert net.n_nodes == 4
    assert net.n_links == 3
    assert [link.endpoints for link in net.links] == [(0, 1), (0, 2), (0, 3)]
    topology = classify_topology(net)
    assert topology.kind == TopologyKind.STAR
    assert topology.hub == 0


@pytest.mark.parametrize("w", [1.0, 1.0 - 1e-10, -0.1, 1.5])
def test_werner_out_of_range(w):
    """Werner parameters outside [0, 1 - 1e-9) are rejected."""
    with pytest.raises(WernerOutOfRange):
        make_star([0.9, w])


def test_werner_boundary_zero_accepted():
    """w = 0 is a valid (fully depolarized) link."""
    net = make_star([0.0, 0.5])
    assert net.werner[0] == 0.0


def test_duplicate_link_rejected():
    """The same endpoint pair in either order is a duplicate."""
    with pytest.raises(DuplicateLink):
        make_graph(3, [(0, 1), (1, 0), (1, 2)], [0.9, 0.8, 0.7])


def test_self_loop_rejected():
    with pytest.raises(SelfLoop):
        make_graph(2, [(0, 1), (1, 1)], [0.9, 0.8])


def test_unknown_node_rejected():
    with pytest.raises(UnknownNode):
        load_network({"nodes": ["a", "b"], "links": [{"a": "a", "b": "c", "w": 0.5}]})


def test_disconnected_graph_rejected():
    with pytest.raises(DisconnectedGraph) as info:
        make_graph(4, [(0, 1), (2, 3)], [0.9, 0.9])
    assert info.value.context["components"] == 2


def test_unknown_field_rejected():
    """The document schema forbids unknown fields."""
    with pytest.raises(ConfigError):
        load_network({
            "nodes": ["a", "b"],
            "links": [{"a": "a", "b": "b", "w": 0.5, "loss": 0.1}],
        })


def test_empty_and_duplicate_nodes_rejected():
    with pytest.raises(ConfigError):
        load_network({"nodes": ["a"], "links": []})
    with pytest.raises(ConfigError):
        load_network({"nodes": ["a", "a", "b"], "links": [{"a": "a", "b": "b", "w": 0.5}]})


def test_integer_node_ids_coerced():
    net = load_network({"nodes": [0, 1], "links": [{"a": 0, "b": 1, "w": 0.7}]})
    assert net.node_ids == ("0", "1")
    assert net.node_index(1) == 1


def test_werner_array_read_only(star4):
    with pytest.raises(ValueError):
        star4.werner[0] = 0.5


def test_read_network_round_trip(tmp_path, star10_heterogeneous):
    """Writing to_document and reading it back gives the same network."""
    path = tmp_path / "net.yaml"
    path.write_text(yaml.safe_dump(star10_heterogeneous.to_document()), encoding="utf-8")
    loaded = read_network(path)

    assert loaded.name == "star10_heterogeneous"
    assert loaded.node_ids == star10_heterogeneous.node_ids
    np.testing.assert_array_equal(loaded.werner, star10_heterogeneous.werner)


def test_read_network_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_network(tmp_path / "missing.yaml")


def test_classify_tree(tree10):
    """A 10-node spanning tree has 9 links and is tagged Tree."""
    assert tree10.n_links == tree10.n_nodes - 1 == 9
    assert classify_topology(tree10).kind == TopologyKind.TREE


def test_classify_path_and_cycle():
    path4 = make_graph(4, [(0, 1), (1, 2), (2, 3)], [0.9, 0.9, 0.9])
    cycle4 = make_graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)], [0.9, 0.9, 0.9, 0.9])

    assert classify_topology(path4).kind == TopologyKind.TREE
    assert classify_topology(cycle4).kind == TopologyKind.GENERAL


def test_star_two_hop_path(star4):
    """Leaf v1 reaches link (h, v3) through the hub."""
    path = shortest_monitor_path(star4, 1, 2)

    assert path.link_sequence == (0, 2)
    assert len(path) == 2
    assert not path.is_direct


def test_endpoint_path_is_direct(star4):
    path = shortest_monitor_path(star4, 3, 2)
    assert path.link_sequence == (2,)
    assert path.is_direct


def test_equal_hop_tie_prefers_smaller_node():
    """Two routes 0-1-3 and 0-2-3; the route via node 1 wins regardless of link order."""
    net = make_graph(5, [(0, 2), (2, 3), (0, 1), (1, 3), (3, 4)], [0.9] * 5)
    path = shortest_monitor_path(net, 0, 4)
    assert path.link_sequence == (2, 3, 4)


def test_nearer_endpoint_tie_prefers_smaller_node():
    """Link (1, 2) in a triangle seen from 0: both endpoints at distance 1, node 1 is used."""
    net = make_graph(3, [(0, 2), (0, 1), (1, 2)], [0.9] * 3)
    path = shortest_monitor_path(net, 0, 2)
    assert path.link_sequence == (1, 2)


def test_tree_paths_match_bfs():
    """Path length equals BFS distance to the nearer endpoint plus one, on random trees."""
    rng = np.random.default_rng(7)
    for _ in range(1000):
        size = int(rng.integers(2, 13))
        edges = [(int(rng.integers(0, t)), t) for t in range(1, size)]
        net = make_graph(size, edges, rng.uniform(0.1, 0.99, size - 1))
        graph = nx.Graph(edges)

        k = int(rng.integers(0, size))
        i = int(rng.integers(0, size - 1))
        path = shortest_monitor_path(net, k, i)

        a, b = net.links[i].endpoints
        nearest = min(nx.shortest_path_length(graph, k, a), nx.shortest_path_length(graph, k, b))
        assert len(path) == nearest + 1
        assert path.link_sequence[-1] == i

        # consecutive links share a node and the walk starts at k
        current = k
        for h in path.link_sequence[:-1]:
            assert current in net.links[h].endpoints
            current = net.links[h].other(current)
        assert current in net.links[i].endpoints


def test_tree_long_path(tree10):
    """Node 4 reaches link (8, 9) through nodes 1, 0, 3, 8."""
    path = shortest_monitor_path(tree10, 4, 8)
    assert path.link_sequence == (3, 0, 2, 7, 8)
    assert len(path) == nx.shortest_path_length(nx.Graph([link.endpoints for link in tree10.links]), 4, 8) + 1


def test_monitor_paths_table(tree10):
    table = monitor_paths(tree10)
    assert len(table) == tree10.n_nodes * tree10.n_links
    assert table[(4, 8)] is shortest_monitor_path(tree10, 4, 8)


def test_monitor_path_document_round_trip():
    path = MonitorPath(monitor_node=3, target_link=5, link_sequence=(1, 4, 5))
    assert MonitorPath.from_document(path.to_document()) == path


def test_path_product():
    """Effective parameter is the product of squared link parameters."""
    net = make_graph(3, [(0, 1), (1, 2)], [0.9, 0.8])
    zero = make_graph(3, [(0, 1), (1, 2)], [0.9, 0.0])

    assert path_product(net, MonitorPath(0, 0, (0,))) == pytest.approx(0.81)
    assert path_product(net, MonitorPath(0, 1, (0, 1))) == pytest.approx(0.5184)
    assert path_product(zero, MonitorPath(0, 1, (0, 1))) == 0.0


def test_path_product_monotone(tree10):
    """Appending links never increases the effective parameter."""
    for (k, i), path in monitor_paths(tree10).items():
        values = [
            path_product(tree10, MonitorPath(k, path.link_sequence[t], path.link_sequence[: t + 1]))
            for t in range(len(path))
        ]
        assert all(b <= a for a, b in zip(values, values[1:]))


def test_entanglement_fidelity():
    assert entanglement_fidelity(1.0) == 1.0
    assert entanglement_fidelity(0.0) == 0.25
