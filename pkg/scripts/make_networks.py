#!/usr/bin/env python3
"""
Write the reference network files used by the bundled scenarios.
"""

import sys
from pathlib import Path

import yaml

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from qtomo.logging_config import logger


def star(name: str, weights):
    leaves = [f"v{i + 1}" for i in range(len(weights))]
    return {
        "name": name,
        "nodes": ["hub", *leaves],
        "links": [{"a": "hub", "b": leaf, "w": w} for leaf, w in zip(leaves, weights)],
    }


def tree10():
    edges = [(0, 1), (0, 2), (0, 3), (1, 4), (1, 5), (2, 6), (2, 7), (3, 8), (8, 9)]
    weights = [0.97, 0.95, 0.93, 0.91, 0.89, 0.85, 0.82, 0.79, 0.75]
    return {
        "name": "tree10",
        "nodes": [f"n{k}" for k in range(10)],
        "links": [{"a": f"n{a}", "b": f"n{b}", "w": w} for (a, b), w in zip(edges, weights)],
    }


NETWORKS = {
    "star4": star("star4", [0.9, 0.9, 0.8]),
    "star10_homogeneous": star("star10_homogeneous", [0.9] * 9),
    "star10_heterogeneous": star("star10_heterogeneous", [0.99, 0.97, 0.95, 0.93, 0.91, 0.89, 0.87, 0.85, 0.83]),
    "tree10": tree10(),
}


def main(target: Path) -> None:
    target.mkdir(parents=True, exist_ok=True)
    for name, document in NETWORKS.items():
        path = target / f"{name}.yaml"
        path.write_text(yaml.safe_dump(document, sort_keys=False), encoding="utf-8")
        logger.info(f"Wrote {path}")
        print(f"✓ {path}")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent.parent / "networks")
