"""Road network model, file ingestion and per-edge (time, energy) costs.

Graph files are UTF-8 text with two sections::

    #nodes
    id,lat,lon
    #edges
    from,to,length_m,speed_kmh

Station files hold ``node_id,num_points,p_max_kw`` rows. Node ids in files are
arbitrary integers; after loading they are renumbered densely and the original
ids are kept in :attr:`RoadGraph.source_ids`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

MAX_SPEED_KMH = 350.0


class GraphFormatError(ValueError):
    """Raised for malformed graph or station files."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


@dataclass(frozen=True)
class Node:
    id: int
    lat: float | None = None
    lon: float | None = None


@dataclass(frozen=True)
class Edge:
    source: int
    target: int
    length: float  # meters
    speed: float  # km/h


@dataclass(frozen=True)
class EdgeCosts:
    time: float  # seconds
    energy: float  # kWh


@dataclass
class RoadGraph:
    nodes: list[Node]
    edges: list[Edge]
    source_ids: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.source_ids:
            self.source_ids = [n.id for n in self.nodes]
        self._index = {sid: i for i, sid in enumerate(self.source_ids)}

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    def index_of(self, source_id: int) -> int:
        try:
            return self._index[source_id]
        except KeyError:
            raise KeyError(f"unknown node {source_id}") from None

    def validate(self) -> None:
        n = len(self.nodes)
        for i, node in enumerate(self.nodes):
            if node.id != i:
                raise GraphFormatError(f"node ids are not dense: position {i} holds {node.id}")
        if not self.edges:
            raise GraphFormatError("graph has no edges")
        for e in self.edges:
            for end in (e.source, e.target):
                if not 0 <= end < n:
                    raise GraphFormatError(f"edge references unknown node {end}")
            _check_edge_values(e.length, e.speed)


def _check_edge_values(length: float, speed: float, line: int | None = None, path: str | None = None) -> None:
    if not (length > 0 and math.isfinite(length)):
        raise GraphFormatError(f"non-positive length {length}", line, path)
    if not (0 < speed <= MAX_SPEED_KMH):
        raise GraphFormatError(f"speed {speed} outside (0, {MAX_SPEED_KMH}]", line, path)


def _opt_float(text: str) -> float | None:
    text = text.strip()
    return float(text) if text else None


def parse_graph(lines: Iterable[str], path: str | None = None) -> RoadGraph:
    section = None
    raw_nodes: list[tuple[int, float | None, float | None]] = []
    raw_edges: list[tuple[int, int, float, float, int]] = []
    seen: set[int] = set()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            tag = line[1:].strip().lower()
            if tag in ("nodes", "edges"):
                section = tag
            continue
        parts = [p.strip() for p in line.split(",")]
        if section is None:
            raise GraphFormatError("data before '#nodes' section header", lineno, path)
        try:
            if section == "nodes":
                if len(parts) not in (1, 3):
                    raise ValueError(f"expected id,lat,lon but got {len(parts)} fields")
                nid = int(parts[0])
                if nid in seen:
                    raise ValueError(f"duplicate node {nid}")
                seen.add(nid)
                lat = _opt_float(parts[1]) if len(parts) == 3 else None
                lon = _opt_float(parts[2]) if len(parts) == 3 else None
                raw_nodes.append((nid, lat, lon))
            else:
                if len(parts) != 4:
                    raise ValueError(f"expected from,to,length_m,speed_kmh but got {len(parts)} fields")
                raw_edges.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]), lineno))
        except ValueError as exc:
            raise GraphFormatError(str(exc), lineno, path) from None

    if not raw_edges:
        raise GraphFormatError("graph has no edges", path=path)
    index = {nid: i for i, (nid, _, _) in enumerate(raw_nodes)}
    nodes = [Node(i, lat, lon) for i, (_, lat, lon) in enumerate(raw_nodes)]
    edges = []
    for u, v, length, speed, lineno in raw_edges:
        for end in (u, v):
            if end not in index:
                raise GraphFormatError(f"edge references undeclared node {end}", lineno, path)
        _check_edge_values(length, speed, lineno, path)
        edges.append(Edge(index[u], index[v], length, speed))
    return RoadGraph(nodes, edges, [nid for nid, _, _ in raw_nodes])


def load_graph(path: str | Path) -> RoadGraph:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        return parse_graph(fh, str(path))


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def dump_graph(graph: RoadGraph) -> str:
    out = ["#nodes"]
    for node, sid in zip(graph.nodes, graph.source_ids):
        out.append(f"{sid},{_fmt(node.lat)},{_fmt(node.lon)}")
    out.append("#edges")
    for e in graph.edges:
        out.append(f"{graph.source_ids[e.source]},{graph.source_ids[e.target]},{_fmt(e.length)},{_fmt(e.speed)}")
    return "\n".join(out) + "\n"


def write_graph(graph: RoadGraph, path: str | Path) -> None:
    Path(path).write_text(dump_graph(graph), encoding="utf-8")


@dataclass(frozen=True)
class StationSpec:
    """A charging station as listed in a stations file."""

    id: int  # position in the stations file
    node: int  # dense road-graph node id
    num_points: int
    p_max: float  # kW per charge point


def load_stations(path: str | Path, graph: RoadGraph) -> list[StationSpec]:
    path = Path(path)
    stations: list[StationSpec] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or line.lower().startswith("node_id"):
                continue
            parts = [p.strip() for p in line.split(",")]
            try:
                if len(parts) != 3:
                    raise ValueError(f"expected node_id,num_points,p_max_kw but got {len(parts)} fields")
                sid, points, p_max = int(parts[0]), int(parts[1]), float(parts[2])
                node = graph.index_of(sid)
            except (ValueError, KeyError) as exc:
                raise GraphFormatError(str(exc).strip("'\""), lineno, str(path)) from None
            if points < 1:
                raise GraphFormatError(f"station needs at least one charge point, got {points}", lineno, str(path))
            if not p_max > 0:
                raise GraphFormatError(f"non-positive charging power {p_max}", lineno, str(path))
            stations.append(StationSpec(len(stations), node, points, p_max))
    if not stations:
        raise GraphFormatError("no stations listed", path=str(path))
    return stations


def write_stations(stations: Sequence[StationSpec], graph: RoadGraph, path: str | Path) -> None:
    rows = ["node_id,num_points,p_max_kw"]
    rows += [f"{graph.source_ids[s.node]},{s.num_points},{_fmt(s.p_max)}" for s in stations]
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


@dataclass
class CostedGraph:
    """Road graph whose edges carry (time, energy) costs.

    ``time_ms`` and ``energy_wh`` are the integer costs used by every search;
    ``costs`` keeps the unrounded SI values.
    """

    num_nodes: int
    sources: list[int]
    targets: list[int]
    time_ms: list[int]
    energy_wh: list[int]
    costs: list[EdgeCosts]
    graph: RoadGraph | None = None

    @property
    def num_edges(self) -> int:
        return len(self.sources)

    @classmethod
    def from_costs(cls, num_nodes: int, edges: Iterable[tuple[int, int, int, int]]) -> "CostedGraph":
        """Build directly from integer ``(u, v, time_ms, energy_wh)`` tuples."""
        su, sv, st, se = [], [], [], []
        for u, v, t, e in edges:
            if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                raise GraphFormatError(f"edge ({u},{v}) references unknown node")
            if t <= 0 or e < 0:
                raise GraphFormatError(f"edge ({u},{v}) needs time > 0 and energy >= 0")
            su.append(u)
            sv.append(v)
            st.append(int(t))
            se.append(int(e))
        costs = [EdgeCosts(t / 1000.0, e / 1000.0) for t, e in zip(st, se)]
        return cls(num_nodes, su, sv, st, se, costs)

    def edge_lengths(self) -> list[float]:
        if self.graph is None:
            return [0.0] * self.num_edges
        return [e.length for e in self.graph.edges]


def annotate_costs(graph: RoadGraph, consumption: Callable[[float], float]) -> CostedGraph:
    """Derive per-edge costs: time = length/speed, energy = km x consumption(speed)."""
    costs = []
    for e in graph.edges:
        time_s = e.length / (e.speed / 3.6)
        energy = (e.length / 1000.0) * consumption(e.speed)
        costs.append(EdgeCosts(time_s, energy))
    time_ms = [max(1, round(c.time * 1000.0)) for c in costs]
    energy_wh = [max(0, round(c.energy * 1000.0)) for c in costs]
    return CostedGraph(
        graph.num_nodes,
        [e.source for e in graph.edges],
        [e.target for e in graph.edges],
        time_ms,
        energy_wh,
        costs,
        graph,
    )


def grid_network(
    cols: int,
    rows: int,
    spacing_m: float,
    highway_rows: Sequence[int] = (),
    highway_speed: float = 130.0,
    road_speed: float = 80.0,
    jitter: float = 0.2,
    seed: int = 0,
) -> RoadGraph:
    """Synthetic two-way grid: fast straight rows through a mesh of slower roads.

    Lengths of the slow roads are scaled by a random factor in
    ``[1, 1 + jitter]``; highway segments keep the exact spacing.
    """
    import random

    if cols < 2 or rows < 1:
        raise ValueError("grid needs at least 2 columns and 1 row")
    rng = random.Random(seed)
    nodes = []
    for r in range(rows):
        for c in range(cols):
            nodes.append(Node(r * cols + c, 48.0 + r * spacing_m / 111_000.0, 8.0 + c * spacing_m / 74_000.0))
    edges = []
    fast = set(highway_rows)

    def link(u: int, v: int, length: float, speed: float) -> None:
        edges.append(Edge(u, v, length, speed))
        edges.append(Edge(v, u, length, speed))

    for r in range(rows):
        for c in range(cols - 1):
            u = r * cols + c
            if r in fast:
                link(u, u + 1, spacing_m, highway_speed)
            else:
                link(u, u + 1, round(spacing_m * (1 + jitter * rng.random()), 1), road_speed)
    for r in range(rows - 1):
        for c in range(cols):
            u = r * cols + c
            link(u, u + cols, round(spacing_m * (1 + jitter * rng.random()), 1), road_speed)
    return RoadGraph(nodes, edges)
