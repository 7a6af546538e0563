"""Charging and routing plans: A* over origin, stations and destination.

Every edge a->b of the station graph bundles the charge at a, the drive
to b, the expected wait at b and, as a stand-in for the charge at b, the
time for a full recharge there. The stand-in is dropped once b is expanded
and the real charge at b is known. Edges start out with a cheap lower
bound (utopia point of the Pareto front); the exact weight is only
computed when such an entry reaches the top of the open list.

All times in this module are integer seconds, matching the simulator clock.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Sequence

from .csdb import CSDB
from .mcsp import BACKWARD, FORWARD, CHGraph, FrontLabel, QueryResult, merge_spaces
from .models import TERMINAL_SOC, ChargeCurve, Protocol, charge_time
from .roadnet import CostedGraph, StationSpec
from .sptrees import LookupTable, SPTree, build_tree

CHARGE_POLICIES = ("adaptive", "min", "pct80", "full")
ROUTE_POLICIES = ("adaptive", "fastest", "economic")
STRATEGIES = {
    "adaptive": ("adaptive", "adaptive"),
    "min-charge": ("min", "adaptive"),
    "80-charge": ("pct80", "adaptive"),
    "full-charge": ("full", "adaptive"),
    "fastest-route": ("adaptive", "fastest"),
    "economic-route": ("adaptive", "economic"),
}
LEVEL3_THRESHOLD_S = 60.0
_EPS = 1e-12


class Infeasible(RuntimeError):
    """No chain of stations brings the vehicle to its destination."""


@dataclass(frozen=True)
class VehicleSpec:
    capacity: float  # kWh
    soc: float = TERMINAL_SOC
    protocol: Protocol = Protocol.CP_CV

    def __post_init__(self) -> None:
        if not self.capacity > 0:
            raise ValueError(f"capacity must be positive, got {self.capacity}")
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError(f"soc must lie in [0, 1], got {self.soc}")
        object.__setattr__(self, "protocol", Protocol(self.protocol))


@dataclass(frozen=True)
class Strategy:
    charge: str = "adaptive"
    route: str = "adaptive"
    level: int = 0
    statistics: bool = False
    reserve_soc: float = 0.0

    def __post_init__(self) -> None:
        if self.charge not in CHARGE_POLICIES:
            raise ValueError(f"unknown charge policy {self.charge!r}")
        if self.route not in ROUTE_POLICIES:
            raise ValueError(f"unknown route policy {self.route!r}")
        if self.level not in (0, 1, 2, 3):
            raise ValueError(f"level must be 0..3, got {self.level}")
        if not 0.0 <= self.reserve_soc < TERMINAL_SOC:
            raise ValueError(f"reserve_soc must lie in [0, {TERMINAL_SOC}), got {self.reserve_soc}")
        if self.level == 0 and self.statistics:
            object.__setattr__(self, "statistics", False)

    @classmethod
    def named(cls, name: str, level: int = 0, statistics: bool = False, reserve_soc: float = 0.0) -> "Strategy":
        try:
            charge, route = STRATEGIES[name]
        except KeyError:
            raise ValueError(f"unknown strategy {name!r}; pick one of {', '.join(STRATEGIES)}") from None
        return cls(charge, route, level, statistics, reserve_soc)

    @property
    def name(self) -> str:
        for key, pair in STRATEGIES.items():
            if pair == (self.charge, self.route):
                return key
        return f"{self.charge}/{self.route}"


def drive_seconds(time_ms: int) -> int:
    return -(-time_ms // 1000)


def charge_seconds(curve: ChargeCurve, capacity: float, soc_from: float, soc_to: float) -> int:
    if soc_to <= soc_from + _EPS:
        return 0
    return math.ceil(charge_time(curve, capacity, soc_from, soc_to) - 1e-9)


def crossover_soc(p_here: float, p_next: float | None) -> float:
    """Highest SOC at which charging here is still faster than at the next stop."""
    if p_next is None or p_next >= p_here:
        return -math.inf
    return 1.0 - (1.0 - 0.8) * p_next / p_here


def charge_target_adaptive(
    soc_arrival: float,
    need_kwh: float,
    p_max_here: float,
    p_max_next: float | None,
    curve: ChargeCurve | None = None,
    capacity: float = 1.0,
    reserve_soc: float = 0.0,
) -> float:
    """Charge at least the energy to the next stop, and on while this point beats the next one."""
    if need_kwh > capacity * (TERMINAL_SOC - reserve_soc) + 1e-9:
        raise Infeasible(f"leg needs {need_kwh:.3f} kWh, battery holds {capacity} kWh")
    need = need_kwh / capacity + reserve_soc
    return min(TERMINAL_SOC, max(soc_arrival, need, crossover_soc(p_max_here, p_max_next)))


def charge_target(policy: str, soc: float, need: float, p_here: float, p_next: float | None) -> float:
    """Target SOC at a station; ``need`` is the SOC required for the next leg."""
    if policy == "min":
        t = need
    elif policy == "pct80":
        t = max(need, 0.8)
    elif policy == "full":
        t = TERMINAL_SOC
    else:
        t = max(need, crossover_soc(p_here, p_next))
    return min(TERMINAL_SOC, max(soc, t))


# ---------------------------------------------------------------- routing data


def _sssp(adj: list[list[tuple[int, int]]], root: int) -> list[float]:
    dist = [math.inf] * len(adj)
    dist[root] = 0
    heap = [(0, root)]
    while heap:
        d, v = heapq.heappop(heap)
        if d > dist[v]:
            continue
        for w, c in adj[v]:
            nd = d + c
            if nd < dist[w]:
                dist[w] = nd
                heapq.heappush(heap, (nd, w))
    return dist


class Router:
    """Read-only routing snapshot with memoized trees, fronts and bounds."""

    def __init__(self, graph: CostedGraph, ch: CHGraph, stations: Sequence[StationSpec], table: LookupTable, protocol: Protocol = Protocol.CP_CV):
        if [s.node for s in stations] != list(table.nodes):
            raise ValueError("lookup table was built for different stations")
        self.graph = graph
        self.ch = ch
        self.stations = list(stations)
        self.table = table
        self.cap = table.fwd[0].cap if table.fwd else 0
        self.curves = [ChargeCurve(s.p_max, protocol) for s in self.stations]
        self._fwd: dict[int, SPTree] = {}
        self._bwd: dict[int, SPTree] = {}
        self._fronts: dict[tuple[int, int, int, int], QueryResult] = {}
        self._dist: dict[tuple[int, str, int], list[float]] = {}
        n = graph.num_nodes
        self._adj = {
            (FORWARD, 0): [[] for _ in range(n)],
            (FORWARD, 1): [[] for _ in range(n)],
            (BACKWARD, 0): [[] for _ in range(n)],
            (BACKWARD, 1): [[] for _ in range(n)],
        }
        for u, v, t, e in zip(graph.sources, graph.targets, graph.time_ms, graph.energy_wh):
            self._adj[(FORWARD, 0)][u].append((v, t))
            self._adj[(FORWARD, 1)][u].append((v, e))
            self._adj[(BACKWARD, 0)][v].append((u, t))
            self._adj[(BACKWARD, 1)][v].append((u, e))

    def fwd_tree(self, node: int, station: int | None = None) -> SPTree:
        if station is not None:
            return self.table.fwd[station]
        t = self._fwd.get(node)
        if t is None:
            t = self._fwd[node] = build_tree(self.ch, node, FORWARD, self.cap)
        return t

    def bwd_tree(self, node: int, station: int | None = None) -> SPTree:
        if station is not None:
            return self.table.bwd[station]
        t = self._bwd.get(node)
        if t is None:
            t = self._bwd[node] = build_tree(self.ch, node, BACKWARD, self.cap)
        return t

    def front(self, a_node: int, a_station: int | None, b_node: int, b_station: int | None) -> QueryResult:
        if a_station is not None and b_station is not None:
            return self.table.result(a_station, b_station)
        key = (a_node, -1 if a_station is None else a_station, b_node, -1 if b_station is None else b_station)
        res = self._fronts.get(key)
        if res is None:
            fwd = self.fwd_tree(a_node, a_station)
            bwd = self.bwd_tree(b_node, b_station)
            res = self._fronts[key] = QueryResult(a_node, b_node, merge_spaces(fwd, bwd), fwd, bwd)
        return res

    def distances(self, node: int, direction: str, criterion: str) -> list[float]:
        """Single-criterion costs from ``node`` (forward) or to ``node`` (backward)."""
        k = 0 if criterion == "time" else 1
        key = (node, direction, k)
        d = self._dist.get(key)
        if d is None:
            d = self._dist[key] = _sssp(self._adj[(direction, k)], node)
        return d

    def bounds(self, a_node: int, a_station: int | None, b_node: int, b_station: int | None) -> tuple[float, float]:
        """Utopia point (min time ms, min energy Wh) of a->b."""
        if a_station is not None and b_station is not None:
            labs = self.table.entries[(a_station, b_station)]
            if not labs:
                return math.inf, math.inf
            return labs[0].time, labs[-1].energy
        if a_station is None:
            return self.distances(a_node, FORWARD, "time")[b_node], self.distances(a_node, FORWARD, "energy")[b_node]
        return self.distances(b_node, BACKWARD, "time")[a_node], self.distances(b_node, BACKWARD, "energy")[a_node]

    def heuristic(self, node: int, dest: int) -> float:
        """Fastest driving time node->dest in seconds (inf when unreachable)."""
        return self.distances(dest, BACKWARD, "time")[node] / 1000.0


def heuristic(router: Router, node: int, dest: int) -> float:
    return router.heuristic(node, dest)


# ---------------------------------------------------------------- plans


@dataclass
class Leg:
    start_station: int | None  # None: origin
    end_station: int | None  # None: destination
    path: list[int]
    time_ms: int
    energy_wh: int
    label: FrontLabel | None
    charge_to: float  # SOC when leaving the start
    charge_s: int  # charging at the start
    start_wait_s: int  # expected wait at the start (charged legs only)
    t_depart: int
    t_arrive: int
    soc_arrive: float
    end_wait_s: int  # expected wait at the end station
    drive_s: int = 0
    edges: list[int] = field(default_factory=list)  # original edge ids

    @property
    def energy_kwh(self) -> float:
        return self.energy_wh / 1000.0


@dataclass
class Plan:
    origin: int
    dest: int
    depart: int
    soc: float
    legs: list[Leg]
    weight: float
    capacity: float

    @property
    def arrival(self) -> int:
        return self.legs[-1].t_arrive if self.legs else self.depart

    def stops(self) -> list[tuple[int, int, int]]:
        """Announceable charge stops ``(station, t_arr, t_chr)`` ahead of the vehicle."""
        out = []
        for prev, leg in zip(self.legs, self.legs[1:]):
            if leg.charge_s > 0:
                out.append((leg.start_station, prev.t_arrive, leg.charge_s))
        return out

    def stations(self) -> list[int]:
        return [leg.start_station for leg in self.legs[1:]]

    def charges_at_origin(self) -> bool:
        return bool(self.legs) and self.legs[0].charge_s > 0


@dataclass
class _Node:
    g: float  # exact cost up to arrival, waiting included
    soc: float
    t_arr: int
    wait: int
    parent: int
    choice: "_Choice | None"


@dataclass
class _Choice:
    weight: float
    label: FrontLabel | None
    result: QueryResult | None
    target: float
    charge_s: int
    extra_wait: int
    drive_s: int
    t_arr: int
    soc_b: float
    wait_b: int
    placeholder: int


@dataclass
class _Search:
    router: Router
    origin: int
    dest: int
    vehicle: VehicleSpec
    strategy: Strategy
    depart: int
    soc: float
    csdb: CSDB | None
    origin_station: int | None
    origin_wait: int
    now: int
    evaluations: int = 0
    refinements: int = 0
    _h: dict[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.S = len(self.router.stations)
        self.dest_pid = self.S + 1

    # pid 0 = origin, 1..S = stations, S+1 = destination
    def node_of(self, pid: int) -> int:
        if pid == 0:
            return self.origin
        if pid == self.dest_pid:
            return self.dest
        return self.router.stations[pid - 1].node

    def station_of(self, pid: int) -> int | None:
        if pid == 0:
            return self.origin_station
        if pid == self.dest_pid:
            return None
        return pid - 1

    def h(self, pid: int) -> float:
        v = self._h.get(pid)
        if v is None:
            v = self._h[pid] = self.router.heuristic(self.node_of(pid), self.dest)
        return v

    def _evaluate(self, a: _Node, a_pid: int, b_pid: int, t_ms: int, e_wh: int) -> _Choice | None:
        cap = self.vehicle.capacity
        e_soc = e_wh / 1000.0 / cap
        need = e_soc + self.strategy.reserve_soc
        a_st = self.station_of(a_pid)
        b_st = self.station_of(b_pid)
        if a_st is None:
            if need > a.soc + 1e-9:
                return None
            target = a.soc
            charge_s = 0
        else:
            if need > TERMINAL_SOC + 1e-9:
                return None
            p_here = self.router.stations[a_st].p_max
            p_next = None if b_st is None else self.router.stations[b_st].p_max
            target = charge_target(self.strategy.charge, a.soc, need, p_here, p_next)
            charge_s = charge_seconds(self.router.curves[a_st], cap, a.soc, target)
        extra = self.origin_wait if (a_pid == 0 and charge_s > 0) else 0
        drive = drive_seconds(t_ms)
        t_b = a.t_arr + a.wait + extra + charge_s + drive
        soc_b = target - e_soc
        wait_b = 0
        placeholder = 0
        if b_st is not None:
            if self.csdb is not None and self.strategy.level >= 1:
                w, _ = self.csdb.estimate_wait(b_st, t_b, self.now, self.strategy.statistics)
                wait_b = math.ceil(w - 1e-9)
            placeholder = charge_seconds(self.router.curves[b_st], cap, max(0.0, soc_b), TERMINAL_SOC)
        weight = extra + charge_s + drive + wait_b + placeholder
        return _Choice(weight, None, None, target, charge_s, extra, drive, t_b, soc_b, wait_b, placeholder)

    def edge_weight(self, a: _Node, a_pid: int, b_pid: int) -> _Choice | None:
        """Best Pareto label for a->b under the strategy, or None if none is feasible."""
        self.evaluations += 1
        a_st, b_st = self.station_of(a_pid), self.station_of(b_pid)
        res = self.router.front(self.node_of(a_pid), a_st, self.node_of(b_pid), b_st)
        labels = res.labels
        route = self.strategy.route
        if route == "economic":
            labels = labels[::-1]
        best = None
        for lab in labels:
            c = self._evaluate(a, a_pid, b_pid, lab.time, lab.energy)
            if c is None:
                continue
            if route != "adaptive":
                c.label, c.result = lab, res
                return c
            if best is None or c.weight < best.weight:
                c.label, c.result = lab, res
                best = c
        return best

    def lower_bound(self, a: _Node, a_pid: int, b_pid: int) -> float | None:
        t, e = self.router.bounds(self.node_of(a_pid), self.station_of(a_pid), self.node_of(b_pid), self.station_of(b_pid))
        if math.isinf(t):
            return None
        c = self._evaluate(a, a_pid, b_pid, int(t), int(e))
        return None if c is None else c.weight

    def successors(self, closed: dict[int, _Node]) -> list[int]:
        return [p for p in range(1, self.dest_pid + 1) if p not in closed and not (p - 1 == self.origin_station and p != self.dest_pid)]

    def run(self, lazy: bool = True) -> dict[int, _Node]:
        closed: dict[int, _Node] = {}
        heap: list[tuple[float, int, int, int]] = []
        choices: dict[tuple[int, int], _Choice] = {}

        def expand(a_pid: int, a: _Node) -> None:
            for b in self.successors(closed):
                hb = self.h(b)
                if math.isinf(hb):
                    continue
                if lazy:
                    lb = self.lower_bound(a, a_pid, b)
                    if lb is not None:
                        heapq.heappush(heap, (a.g + lb + hb, b, a_pid, 0))
                else:
                    c = self.edge_weight(a, a_pid, b)
                    if c is not None:
                        choices[(a_pid, b)] = c
                        heapq.heappush(heap, (a.g + c.weight + hb, b, a_pid, 1))

        start = _Node(0.0, self.soc, self.depart, 0, -1, None)
        closed[0] = start
        expand(0, start)
        while heap:
            key, b, a_pid, exact = heapq.heappop(heap)
            if b in closed:
                continue
            a = closed[a_pid]
            if not exact:
                self.refinements += 1
                c = self.edge_weight(a, a_pid, b)
                if c is None:
                    continue
                choices[(a_pid, b)] = c
                heapq.heappush(heap, (a.g + c.weight + self.h(b), b, a_pid, 1))
                continue
            c = choices[(a_pid, b)]
            node = _Node(a.g + c.weight - c.placeholder, c.soc_b, c.t_arr, c.wait_b, a_pid, c)
            closed[b] = node
            if b == self.dest_pid:
                return closed
            expand(b, node)
        raise Infeasible(f"no feasible charging chain from node {self.origin} to node {self.dest}")

    def build_plan(self, closed: dict[int, _Node]) -> Plan:
        chain = []
        pid = self.dest_pid
        while pid != 0:
            chain.append(pid)
            pid = closed[pid].parent
        chain.reverse()
        legs = []
        prev = 0
        for pid in chain:
            a, node = closed[prev], closed[pid]
            c = node.choice
            lab = c.label
            legs.append(
                Leg(
                    start_station=self.station_of(prev),
                    end_station=self.station_of(pid),
                    path=c.result.path(lab),
                    time_ms=lab.time,
                    energy_wh=lab.energy,
                    label=lab,
                    charge_to=c.target,
                    charge_s=c.charge_s,
                    start_wait_s=(c.extra_wait if prev == 0 else a.wait) if c.charge_s > 0 else 0,
                    t_depart=c.t_arr - c.drive_s,
                    t_arrive=c.t_arr,
                    soc_arrive=c.soc_b,
                    end_wait_s=c.wait_b,
                    drive_s=c.drive_s,
                    edges=c.result.original_edges(lab),
                )
            )
            prev = pid
        g = closed[self.dest_pid].g
        return Plan(self.origin, self.dest, self.depart, self.soc, legs, g, self.vehicle.capacity)


def plan(
    router: Router,
    origin: int,
    dest: int,
    vehicle: VehicleSpec,
    strategy: Strategy,
    depart: int,
    csdb: CSDB | None = None,
    soc: float | None = None,
    origin_station: int | None = None,
    origin_wait: int = 0,
    lazy: bool = True,
    now: int | None = None,
) -> Plan:
    """Cheapest station chain from ``origin`` to ``dest`` under the strategy's weights.

    ``origin_station`` marks the origin as a charging station the vehicle is
    already at; charging there costs ``origin_wait`` extra seconds. ``now``
    is the time the database is queried at (defaults to ``depart``).
    """
    n = router.graph.num_nodes
    if not (0 <= origin < n and 0 <= dest < n):
        raise ValueError(f"origin/destination must be nodes 0..{n - 1}")
    soc = vehicle.soc if soc is None else soc
    if origin_station is not None and router.stations[origin_station].node != origin:
        raise ValueError("origin_station is not located at the origin node")
    now = depart if now is None else now
    if now > depart:
        raise ValueError(f"query time {now} lies after the departure {depart}")
    db = csdb if strategy.level >= 1 else None
    search = _Search(router, origin, dest, vehicle, strategy, int(depart), soc, db, origin_station, int(origin_wait), int(now))
    closed = search.run(lazy)
    return search.build_plan(closed)


def replan_policy(level: int, event: str) -> bool:
    """Should a vehicle at ``level`` replan on ``event``?

    Events: ``"arrive_station"`` and ``"estimate_changed"``.
    """
    if event not in ("arrive_station", "estimate_changed"):
        raise ValueError(f"unknown event {event!r}")
    if level <= 1:
        return False
    if level == 2:
        return event == "arrive_station"
    return True
