from __future__ import annotations

import random
from pathlib import Path

import pytest

from evroute.mcsp import contract
from evroute.models import consumption
from evroute.planner import Router
from evroute.roadnet import CostedGraph, StationSpec, annotate_costs, grid_network, load_graph, load_stations
from evroute.sptrees import build_lookup, build_station_trees

DATA = Path(__file__).resolve().parents[1] / "src" / "evroute" / "data"

# A..G of the worked example; costs are (time, energy)
TOY_NAMES = "ABCDEFG"
TOY_EDGES = [
    ("A", "B", 1, 2),
    ("A", "C", 4, 1),
    ("A", "E", 5, 2),
    ("B", "D", 3, 4),
    ("B", "C", 1, 3),
    ("C", "D", 1, 2),
    ("D", "G", 1, 6),
    ("D", "F", 2, 4),
    ("E", "F", 2, 3),
    ("F", "G", 1, 1),
]


def toy_graph() -> CostedGraph:
    idx = {c: i for i, c in enumerate(TOY_NAMES)}
    return CostedGraph.from_costs(len(TOY_NAMES), [(idx[u], idx[v], t, e) for u, v, t, e in TOY_EDGES])


def node(name: str) -> int:
    return TOY_NAMES.index(name)


def names(path) -> str:
    return "-".join(TOY_NAMES[v] for v in path)


def random_costed(rng: random.Random, n: int, out_degree: int = 3, max_cost: int = 100) -> CostedGraph:
    edges = []
    for u in range(n):
        for _ in range(out_degree):
            v = rng.randrange(n)
            if v != u:
                edges.append((u, v, rng.randint(1, max_cost), rng.randint(0, max_cost)))
    return CostedGraph.from_costs(n, edges)


def brute_front(g: CostedGraph, s: int, t: int, cap: int) -> list[tuple[int, int]]:
    """Pareto front s->t by label correction with a plain FIFO queue.

    Every node keeps its nondominated (time, energy) pairs in a list that is
    filtered from scratch on each change. Slow but shares no code with the
    library.
    """
    adj = [[] for _ in range(g.num_nodes)]
    for u, v, ct, ce in zip(g.sources, g.targets, g.time_ms, g.energy_wh):
        adj[u].append((v, ct, ce))
    labels = [set() for _ in range(g.num_nodes)]
    labels[s].add((0, 0))
    queue = [(s, 0, 0)]
    while queue:
        v, ct, ce = queue.pop(0)
        if (ct, ce) not in labels[v]:
            continue
        for w, dt, de in adj[v]:
            nt, ne = ct + dt, ce + de
            if ne > cap:
                continue
            if any(a <= nt and b <= ne for a, b in labels[w]):
                continue
            labels[w] = {(a, b) for a, b in labels[w] if not (nt <= a and ne <= b)}
            labels[w].add((nt, ne))
            queue.append((w, nt, ne))
    return sorted(labels[t])


class Desk:
    """The committed congested scenario with its routing artifacts."""

    def __init__(self):
        self.graph = load_graph(DATA / "desk_graph.csv")
        self.stations = load_stations(DATA / "desk_stations.csv", self.graph)
        self.costed = annotate_costs(self.graph, consumption)
        self.ch = contract(self.costed)
        fwd, bwd = build_station_trees(self.ch, [s.node for s in self.stations], 40_000)
        self.table = build_lookup(fwd, bwd)
        self.router = Router(self.costed, self.ch, self.stations, self.table)


@pytest.fixture(scope="session")
def desk() -> Desk:
    return Desk()


class Corridor:
    """Straight two-way road with stations every 50 km, for hand-checkable plans."""

    def __init__(self, cols: int = 11, spacing: float = 25_000.0, every: int = 2, points: int = 1, p_max: float = 50.0):
        self.graph = grid_network(cols, 1, spacing, highway_rows=(0,), highway_speed=100.0)
        self.costed = annotate_costs(self.graph, consumption)
        self.ch = contract(self.costed)
        self.stations = [StationSpec(i, v, points, p_max) for i, v in enumerate(range(every, cols - 1, every))]
        fwd, bwd = build_station_trees(self.ch, [s.node for s in self.stations], 100_000)
        self.table = build_lookup(fwd, bwd)
        self.router = Router(self.costed, self.ch, self.stations, self.table)


@pytest.fixture(scope="session")
def corridor() -> Corridor:
    return Corridor()


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def verdict():
    """Record one PASS/FAIL line per acceptance criterion; printed in the summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.append(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
