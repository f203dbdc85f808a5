"""The JSON network file format and its conversions to core objects.

Node ids are 1-based in files (and converted to 0-based internally). Edges
are undirected except for SE(2) inputs, where the listed direction is kept.
"""

import json
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import InputError
from .formation import TargetFormation
from .graph import Graph, build_graph
from .localization import AnchoredNetwork, anchored_network
from .rigidity import Network, SE2Network

ROLES = ("anchor", "leader", "follower", "agent")
BEARING_NORM_TOL = 1e-6


class NodeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    id: int = Field(ge=1)
    position: list[float] | None = None
    role: str = "agent"
    heading: float | None = None

    @model_validator(mode="after")
    def _check_role(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")
        return self


class EdgeBearing(BaseModel):
    model_config = ConfigDict(extra="forbid")

    edge: tuple[int, int]
    g: list[float]


class NetworkFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dimension: int = Field(ge=2)
    nodes: list[NodeSpec]
    edges: list[tuple[int, int]] = []
    bearings: list[EdgeBearing] | None = None
    target_bearings: list[EdgeBearing] | None = None

    @model_validator(mode="after")
    def _validate(self):
        ids = [node.id for node in self.nodes]
        if sorted(ids) != list(range(1, len(ids) + 1)):
            raise ValueError("node ids must be unique and contiguous from 1")
        for node in self.nodes:
            if node.position is not None and len(node.position) != self.dimension:
                raise ValueError(
                    f"node {node.id}: position length {len(node.position)} != dimension {self.dimension}"
                )
        idset = set(ids)
        for i, j in self.edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            if i not in idset or j not in idset:
                raise ValueError(f"edge [{i}, {j}] references an unknown node id")
        for label, entries in (("bearings", self.bearings), ("target_bearings", self.target_bearings)):
            if entries is None:
                continue
            for entry in entries:
                i, j = entry.edge
                if i not in idset or j not in idset:
                    raise ValueError(f"{label}: edge [{i}, {j}] references an unknown node id")
                if len(entry.g) != self.dimension:
                    raise ValueError(f"{label}: bearing on [{i}, {j}] has wrong length")
                norm = float(np.linalg.norm(entry.g))
                if abs(norm - 1.0) > BEARING_NORM_TOL:
                    raise ValueError(
                        f"{label}: bearing on [{i}, {j}] has norm {norm:.8f}, expected 1"
                    )
        return self

    @property
    def n(self) -> int:
        return len(self.nodes)

    def nodes_by_id(self) -> list[NodeSpec]:
        return sorted(self.nodes, key=lambda node: node.id)

    def roles(self, *wanted: str) -> tuple[int, ...]:
        """0-based indices of the nodes whose role is in ``wanted``."""
        return tuple(node.id - 1 for node in self.nodes_by_id() if node.role in wanted)


def load_network_file(path) -> NetworkFile:
    try:
        raw = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    return parse_network_file(raw, source=str(path))


def parse_network_file(text: str, source: str = "<string>") -> NetworkFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    try:
        return NetworkFile.model_validate(data)
    except ValidationError as exc:
        details = "; ".join(
            f"{'.'.join(str(x) for x in err['loc'])}: {err['msg']}" for err in exc.errors()
        )
        raise InputError(f"{source}: {details}") from exc


def dump_network_file(nf: NetworkFile, path) -> None:
    Path(path).write_text(network_file_json(nf), encoding="utf-8")


def network_file_json(nf: NetworkFile) -> str:
    return json.dumps(nf.model_dump(exclude_none=True), indent=2) + "\n"


# -- conversions ---------------------------------------------------------------


def to_graph(nf: NetworkFile) -> Graph:
    return build_graph(nf.n, [(i - 1, j - 1) for i, j in nf.edges])


def to_network(nf: NetworkFile) -> Network:
    positions = []
    for node in nf.nodes_by_id():
        if node.position is None:
            raise InputError(f"node {node.id} has no position")
        positions.append(node.position)
    return Network(to_graph(nf), nf.dimension, np.array(positions, dtype=float))


def _bearing_array(nf: NetworkFile, graph: Graph, entries: list[EdgeBearing]) -> np.ndarray:
    """Per-canonical-edge bearings; an entry for [i, j] points from i to j."""
    index = graph.edge_index()
    out = np.full((graph.m, nf.dimension), np.nan)
    for entry in entries:
        i, j = entry.edge[0] - 1, entry.edge[1] - 1
        g = np.asarray(entry.g, dtype=float)
        g = g / np.linalg.norm(g)
        if (i, j) in index:
            out[index[(i, j)]] = g
        elif (j, i) in index:
            out[index[(j, i)]] = -g
        else:
            raise InputError(f"bearing given for non-edge [{i + 1}, {j + 1}]")
    missing = np.flatnonzero(np.isnan(out[:, 0]))
    if missing.size:
        i, j = graph.edges[missing[0]]
        raise InputError(f"no bearing supplied for edge [{i + 1}, {j + 1}]")
    return out


def to_anchored_network(nf: NetworkFile) -> AnchoredNetwork:
    """Anchors come from the node roles; bearings from the file when present,
    otherwise from the true configuration."""
    anchors = nf.roles("anchor")
    if not anchors:
        raise InputError("localization needs at least one node with role 'anchor'")
    graph = to_graph(nf)
    if nf.bearings is None:
        return anchored_network(to_network(nf), anchors)
    measured = _bearing_array(nf, graph, nf.bearings)
    # Followers may omit positions when bearings are supplied; anchors cannot.
    positions = []
    for node in nf.nodes_by_id():
        if node.position is None:
            if node.role == "anchor":
                raise InputError(f"anchor {node.id} has no position")
            positions.append([0.0] * nf.dimension)
        else:
            positions.append(node.position)
    net = Network(graph, nf.dimension, np.array(positions, dtype=float))
    return anchored_network(net, anchors, measured_bearings=measured)


def to_target_formation(nf: NetworkFile) -> TargetFormation:
    if nf.target_bearings is None:
        raise InputError("formation control needs a 'target_bearings' section")
    graph = to_graph(nf)
    bearings = _bearing_array(nf, graph, nf.target_bearings)
    leaders = nf.roles("leader")
    return TargetFormation(graph, nf.dimension, bearings, leaders)


def to_se2_network(nf: NetworkFile) -> SE2Network:
    """Directed edges are kept as listed; missing headings default to 0."""
    if nf.dimension != 2:
        raise InputError("SE(2) networks are planar (dimension 2)")
    positions, headings = [], []
    for node in nf.nodes_by_id():
        if node.position is None:
            raise InputError(f"node {node.id} has no position")
        positions.append(node.position)
        headings.append(0.0 if node.heading is None else node.heading)
    edges = tuple((i - 1, j - 1) for i, j in nf.edges)
    return SE2Network(nf.n, edges, np.array(positions, dtype=float), np.array(headings))


def initial_positions(nf: NetworkFile) -> np.ndarray:
    """(n, d) positions for simulation initial conditions."""
    return to_network(nf).p


def graph_to_file(graph: Graph, dimension: int = 2) -> NetworkFile:
    """Graph-only file: nodes without positions, 1-based edges."""
    return NetworkFile(
        dimension=dimension,
        nodes=[NodeSpec(id=i + 1) for i in range(graph.n)],
        edges=[(i + 1, j + 1) for i, j in graph.edges],
    )
