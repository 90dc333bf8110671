"""
Shared network fixtures.
"""

from pathlib import Path
from typing import Optional, Sequence, Tuple

import pytest
import yaml

from qtomo.core.network import Network, load_network

HETEROGENEOUS_STAR = [0.99, 0.97, 0.95, 0.93, 0.91, 0.89, 0.87, 0.85, 0.83]
TREE_EDGES = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (2, 6), (2, 7), (3, 8), (8, 9)]
TREE_WEIGHTS = [0.97, 0.95, 0.93, 0.91, 0.89, 0.85, 0.82, 0.79, 0.75]


def make_star(weights: Sequence[float], name: Optional[str] = None) -> Network:
    """Star with hub `h` (node 0) and leaves v1..vn; link i joins h and v{i+1}."""
    leaves = [f"v{i + 1}" for i in range(len(weights))]
    return load_network({
        "name": name,
        "nodes": ["h", *leaves],
        "links": [{"a": "h", "b": leaf, "w": w} for leaf, w in zip(leaves, weights)],
    })


def make_graph(n_nodes: int, edges: Sequence[Tuple[int, int]], weights: Sequence[float]) -> Network:
    return load_network({
        "nodes": [f"n{k}" for k in range(n_nodes)],
        "links": [{"a": f"n{a}", "b": f"n{b}", "w": w} for (a, b), w in zip(edges, weights)],
    })


@pytest.fixture
def star4():
    """4-node star, every link at 0.9."""
    return make_star([0.9, 0.9, 0.9], "star4")


@pytest.fixture
def star10_homogeneous():
    return make_star([0.9] * 9, "star10_homogeneous")


@pytest.fixture
def star10_heterogeneous():
    return make_star(HETEROGENEOUS_STAR, "star10_heterogeneous")


@pytest.fixture
def tree10():
    """10-node tree; node 8 hangs below node 3 so the vertex cover needs 4 nodes."""
    return make_graph(10, TREE_EDGES, TREE_WEIGHTS)


@pytest.fixture
def star_file(tmp_path):
    """Writes a star network document and returns its path."""
    def write(weights: Sequence[float], name: str = "star") -> Path:
        leaves = [f"v{i + 1}" for i in range(len(weights))]
        document = {
            "name": name,
            "nodes": ["h", *leaves],
            "links": [{"a": "h", "b": leaf, "w": w} for leaf, w in zip(leaves, weights)],
        }
        path = tmp_path / f"{name}.yaml"
        path.write_text(yaml.safe_dump(document), encoding="utf-8")
        return path

    return write
