"""
Network topology model, validation and monitoring-path pre-processing.

Networks are loaded from a structured document (YAML or JSON):

    name: optional label
    nodes: [v0, v1, ...]
    links:
      - {a: v0, b: v1, w: 0.9}

Nodes are referred to internally by their position in `nodes`; links by their
position in `links`. Both orders are stable for the lifetime of the network.
"""

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx
import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from qtomo.config import settings
from qtomo.logging_config import logger
from qtomo.core.errors import (
    ConfigError,
    DisconnectedGraph,
    DuplicateLink,
    SelfLoop,
    UnknownNode,
    WernerOutOfRange,
)


# ============= Documents =============

class LinkSpec(BaseModel):
    """One link of a network document."""

    model_config = ConfigDict(extra="forbid")

    a: str
    b: str
    w: float

    @field_validator("a", "b", mode="before")
    @classmethod
    def _coerce_node_id(cls, value: Any) -> str:
        return str(value)


class NetworkDocument(BaseModel):
    """Schema of a network file; unknown fields are rejected."""

    model_config = ConfigDict(extra="forbid")

    name: Optional[str] = None
    nodes: List[str]
    links: List[LinkSpec]

    @field_validator("nodes", mode="before")
    @classmethod
    def _coerce_node_ids(cls, value: Any) -> Any:
        if isinstance(value, (list, tuple)):
            return [str(v) for v in value]
        return value


# ============= Domain types =============

@dataclass(frozen=True)
class Link:
    """An undirected link between two node indices with its Werner parameter."""

    index: int
    a: int
    b: int
    werner: float

    @property
    def endpoints(self) -> Tuple[int, int]:
        return (self.a, self.b)

    def other(self, node: int) -> int:
        return self.b if node == self.a else self.a


@dataclass(frozen=True)
class MonitorPath:
    """Routing path from a monitor node to the far endpoint of a target link."""

    monitor_node: int
    target_link: int
    link_sequence: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.link_sequence)

    @property
    def is_direct(self) -> bool:
        return len(self.link_sequence) == 1

    def to_document(self) -> Dict[str, Any]:
        return {
            "monitor_node": self.monitor_node,
            "target_link": self.target_link,
            "links": list(self.link_sequence),
        }

    @classmethod
    def from_document(cls, document: Mapping[str, Any]) -> "MonitorPath":
        return cls(
            monitor_node=int(document["monitor_node"]),
            target_link=int(document["target_link"]),
            link_sequence=tuple(int(i) for i in document["links"]),
        )


class TopologyKind(str, Enum):
    STAR = "star"
    TREE = "tree"
    GENERAL = "general"


@dataclass(frozen=True)
class TopologyClass:
    kind: TopologyKind
    hub: Optional[int] = None

    @property
    def is_star(self) -> bool:
        return self.kind == TopologyKind.STAR


class Network:
    """Connected simple weighted graph. Immutable after construction."""

    def __init__(self, node_ids: Sequence[str], links: Sequence[Link], name: Optional[str] = None):
        self.name = name
        self.node_ids: Tuple[str, ...] = tuple(node_ids)
        self.links: Tuple[Link, ...] = tuple(links)
        self._node_index = {node_id: k for k, node_id in enumerate(self.node_ids)}
        self._link_lookup = {frozenset(link.endpoints): link.index for link in self.links}

        self._graph = nx.Graph()
        self._graph.add_nodes_from(range(len(self.node_ids)))
        for link in self.links:
            self._graph.add_edge(link.a, link.b, index=link.index, werner=link.werner)

        self._werner = np.array([link.werner for link in self.links], dtype=float)
        self._werner.setflags(write=False)
        self._distances: Dict[int, Dict[int, int]] = {}
        self._paths: Dict[Tuple[int, int], MonitorPath] = {}
        self._topology: Optional[TopologyClass] = None

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def werner(self) -> np.ndarray:
        """Werner parameters indexed by link (read-only view)."""
        return self._werner

    def node_index(self, node_id: str) -> int:
        try:
            return self._node_index[str(node_id)]
        except KeyError:
            raise UnknownNode(f"Unknown node: {node_id}", {"node": str(node_id)}) from None

    def link_between(self, u: int, v: int) -> int:
        return self._link_lookup[frozenset((u, v))]

    def neighbors(self, k: int) -> List[int]:
        return sorted(self._graph.neighbors(k))

    def degree(self, k: int) -> int:
        return self._graph.degree(k)

    def incident_links(self, k: int) -> List[int]:
        return sorted(self._graph.edges[k, n]["index"] for n in self._graph.neighbors(k))

    def distances_from(self, k: int) -> Dict[int, int]:
        """Hop distances from node k (cached)."""
        if k not in self._distances:
            self._distances[k] = nx.single_source_shortest_path_length(self._graph, k)
        return self._distances[k]

    def to_document(self) -> Dict[str, Any]:
        document: Dict[str, Any] = {
            "nodes": list(self.node_ids),
            "links": [
                {"a": self.node_ids[link.a], "b": self.node_ids[link.b], "w": link.werner}
                for link in self.links
            ],
        }
        if self.name:
            document["name"] = self.name
        return document

    def __repr__(self) -> str:
        return f"Network(name={self.name!r}, nodes={self.n_nodes}, links={self.n_links})"


# ============= Operations =============

def load_network(document: Mapping[str, Any]) -> Network:
    """
    Validate a parsed network document and build a Network.

    Args:
        document: Mapping with `nodes` and `links` (and optionally `name`)

    Returns:
        Network with link indices in input order
    """
    try:
        parsed = NetworkDocument.model_validate(document)
    except ValidationError as e:
        raise ConfigError(f"Invalid network document: {e}") from e

    if not parsed.links:
        raise ConfigError("Network document has no links")

    node_index: Dict[str, int] = {}
    for node_id in parsed.nodes:
        if node_id in node_index:
            raise ConfigError(f"Duplicate node id: {node_id}", {"node": node_id})
        node_index[node_id] = len(node_index)

    links: List[Link] = []
    seen: Dict[frozenset, int] = {}
    for position, spec in enumerate(parsed.links):
        for endpoint in (spec.a, spec.b):
            if endpoint not in node_index:
                raise UnknownNode(
                    f"Link {position} references unknown node {endpoint}",
                    {"link": position, "node": endpoint},
                )
        a, b = node_index[spec.a], node_index[spec.b]
        if a == b:
            raise SelfLoop(f"Link {position} is a self-loop on {spec.a}", {"link": position})
        key = frozenset((a, b))
        if key in seen:
            raise DuplicateLink(
                f"Link {position} duplicates link {seen[key]} ({spec.a}, {spec.b})",
                {"link": position, "duplicate_of": seen[key]},
            )
        if not (0.0 <= spec.w < settings.werner_ceiling):
            raise WernerOutOfRange(
                f"Werner parameter {spec.w} of link {position} outside [0, {settings.werner_ceiling})",
                {"link": position, "werner": spec.w},
            )
        seen[key] = position
        links.append(Link(index=position, a=a, b=b, werner=float(spec.w)))

    net = Network(parsed.nodes, links, name=parsed.name)
    if not nx.is_connected(net._graph):
        components = nx.number_connected_components(net._graph)
        raise DisconnectedGraph(
            f"Network has {components} connected components",
            {"components": components},
        )

    logger.info(f"Loaded network {net.name or '<unnamed>'}: {net.n_nodes} nodes, {net.n_links} links")
    return net


def read_network(path: Union[str, Path]) -> Network:
    """Read a network document (YAML or JSON) from disk."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Network file not found: {path}", {"path": str(path)})

    with open(path, "r", encoding="utf-8") as f:
        document = yaml.safe_load(f)
    if not isinstance(document, Mapping):
        raise ConfigError(f"Network file is not a mapping: {path}", {"path": str(path)})

    logger.debug(f"Reading network from {path}")
    return load_network(document)


def shortest_monitor_path(net: Network, k: int, i: int) -> MonitorPath:
    """
    Routing path from node k through the nearer endpoint u of link i, then i.

    The k→u part is hop-shortest; among equal-length candidates the one with
    the lexicographically smallest node-index sequence is chosen. The nearer
    endpoint is the one with smaller hop distance, then smaller node index.
    """
    cached = net._paths.get((k, i))
    if cached is not None:
        return cached

    link = net.links[i]
    dist_k = net.distances_from(k)
    u = min(link.endpoints, key=lambda node: (dist_k[node], node))

    # Walk towards u, always taking the smallest neighbor that stays on a shortest path
    dist_u = net.distances_from(u)
    sequence: List[int] = []
    current = k
    while current != u:
        step = min(n for n in net.neighbors(current) if dist_u[n] == dist_u[current] - 1)
        sequence.append(net.link_between(current, step))
        current = step
    sequence.append(i)

    path = MonitorPath(monitor_node=k, target_link=i, link_sequence=tuple(sequence))
    net._paths[(k, i)] = path
    return path


def monitor_paths(net: Network) -> Dict[Tuple[int, int], MonitorPath]:
    """Pre-processing table of routing paths for every (node, link) pair."""
    return {
        (k, i): shortest_monitor_path(net, k, i)
        for k in range(net.n_nodes)
        for i in range(net.n_links)
    }


def classify_topology(net: Network) -> TopologyClass:
    """Tag the network as Star(hub), Tree or General."""
    if net._topology is not None:
        return net._topology

    n = net.n_links
    topology = TopologyClass(TopologyKind.GENERAL)
    if nx.is_tree(net._graph):
        topology = TopologyClass(TopologyKind.TREE)
        degrees = [net.degree(k) for k in range(net.n_nodes)]
        hubs = [k for k, d in enumerate(degrees) if d == n]
        if n >= 2 and len(hubs) == 1 and degrees.count(1) == n:
            topology = TopologyClass(TopologyKind.STAR, hub=hubs[0])

    net._topology = topology
    return topology


def path_product(net: Network, path: MonitorPath) -> float:
    """Effective Werner parameter W of the probe routed along `path`."""
    weights = net.werner[list(path.link_sequence)]
    return float(np.prod(weights ** 2))


def entanglement_fidelity(W: float) -> float:
    """Fidelity of a Werner state with parameter W to its Bell state."""
    return (1.0 + 3.0 * W) / 4.0
