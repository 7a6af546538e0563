"""Discrete-event simulation of a fleet of long-distance electric vehicles over one day.

The clock runs in integer seconds. Charge points serve physically present
vehicles first-come-first-served; a vehicle that joins a queue is bound to
the point that frees up first, so its start and end of charging are known
on arrival and reported to the database right away.
"""
from __future__ import annotations

import csv
import heapq
import itertools
import math
import random
import statistics as stats
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .csdb import CSDB, UtilizationProfile, compile_stats
from .models import ChargeCurve, Protocol, charged_soc
from .planner import LEVEL3_THRESHOLD_S, Infeasible, Plan, Router, Strategy, VehicleSpec, charge_seconds, drive_seconds, plan, replan_policy

# (start hour, end hour, density per hour) read off the weekday trip distribution
DEPARTURE_SLABS = ((0, 9, 0.0267), (9, 12, 0.05), (12, 17, 0.078), (17, 19, 0.07), (19, 24, 0.016))

# Same-timestamp processing order.
_PRIO = {"finish_charge": 0, "start_charge": 1, "arrive_dest": 2, "arrive_station": 3, "waypoint": 4, "depart": 5, "replan_trigger": 6}


def slab_masses(slabs=DEPARTURE_SLABS) -> list[float]:
    raw = [(b - a) * d for a, b, d in slabs]
    total = sum(raw)
    if not total > 0:
        raise ValueError("departure density has no mass")
    return [m / total for m in raw]


def sample_departure(rng: random.Random, slabs=DEPARTURE_SLABS) -> int:
    """Departure second of the day from the piecewise-constant hourly density."""
    masses = slab_masses(slabs)
    u = rng.random()
    acc = 0.0
    chosen = slabs[-1]
    for slab, m in zip(slabs, masses):
        acc += m
        if u < acc:
            chosen = slab
            break
    a, b, _ = chosen
    return int(a * 3600 + rng.random() * (b - a) * 3600)


@dataclass
class Scenario:
    vehicles: int = 300
    trip_km: float = 150.0
    trip_tolerance: float = 0.05
    battery_min: float = 20.0
    battery_max: float = 40.0
    initial_soc: float = 0.99
    penetration: float = 0.0
    level_mix: str = "thirds"  # "thirds" or a single level "1", "2", "3"
    strategy: str = "adaptive"
    statistics: bool = False
    seed: int = 0
    reserve_soc: float = 0.0
    protocol: str = "cp-cv"
    level3_threshold: float = LEVEL3_THRESHOLD_S

    def __post_init__(self) -> None:
        if self.vehicles < 1:
            raise ValueError("need at least one vehicle")
        if not 0.0 <= self.penetration <= 1.0:
            raise ValueError(f"penetration must lie in [0, 1], got {self.penetration}")
        if not 0 < self.battery_min <= self.battery_max:
            raise ValueError("need 0 < battery_min <= battery_max")
        if not self.trip_km > 0 or not 0 <= self.trip_tolerance < 1:
            raise ValueError("trip distance must be positive, tolerance in [0, 1)")
        if str(self.level_mix) not in ("thirds", "1", "2", "3"):
            raise ValueError(f"level_mix must be 'thirds' or 1, 2, 3; got {self.level_mix!r}")
        self.level_mix = str(self.level_mix)
        Strategy.named(self.strategy)
        Protocol(self.protocol)


@dataclass(frozen=True)
class Trip:
    vehicle: int
    origin: int
    dest: int
    depart: int
    capacity: float


class TripSampler:
    """Origin/destination pairs whose fastest route length is close to a target."""

    def __init__(self, router: Router):
        self.router = router
        g = router.graph
        self.adj: list[list[tuple[int, int, float]]] = [[] for _ in range(g.num_nodes)]
        lengths = g.edge_lengths()
        for eid, (u, v) in enumerate(zip(g.sources, g.targets)):
            self.adj[u].append((v, g.time_ms[eid], lengths[eid]))
        self._lengths: dict[int, list[float]] = {}
        self._cands: dict[tuple[int, float, float], list[int]] = {}

    def lengths_from(self, origin: int) -> list[float]:
        """Length in meters of the fastest route to every node (ties: shorter)."""
        got = self._lengths.get(origin)
        if got is not None:
            return got
        n = len(self.adj)
        best = [(math.inf, math.inf)] * n
        best[origin] = (0, 0.0)
        heap = [(0, 0.0, origin)]
        while heap:
            t, d, v = heapq.heappop(heap)
            if (t, d) > best[v]:
                continue
            for w, ct, cl in self.adj[v]:
                cand = (t + ct, d + cl)
                if cand < best[w]:
                    best[w] = cand
                    heapq.heappush(heap, (cand[0], cand[1], w))
        out = [b[1] for b in best]
        self._lengths[origin] = out
        return out

    def candidates(self, origin: int, target_m: float, tol: float) -> list[int]:
        key = (origin, target_m, tol)
        c = self._cands.get(key)
        if c is None:
            lo, hi = target_m * (1 - tol), target_m * (1 + tol)
            c = self._cands[key] = [v for v, d in enumerate(self.lengths_from(origin)) if lo <= d <= hi]
        return c

    def sample(self, rng: random.Random, target_m: float, tol: float, max_tries: int = 10_000) -> tuple[int, int]:
        n = len(self.adj)
        for _ in range(max_tries):
            o = rng.randrange(n)
            cands = self.candidates(o, target_m, tol)
            if cands:
                return o, rng.choice(cands)
        raise ValueError(f"no node pair has a fastest route of {target_m / 1000:.0f} km +- {tol:.0%}")


def make_trips(sampler: TripSampler, scenario: Scenario) -> list[Trip]:
    rng = random.Random(f"trips-{scenario.seed}")
    trips = []
    for i in range(scenario.vehicles):
        o, d = sampler.sample(rng, scenario.trip_km * 1000.0, scenario.trip_tolerance)
        cap = rng.uniform(scenario.battery_min, scenario.battery_max)
        trips.append(Trip(i, o, d, sample_departure(rng), cap))
    return trips


def assign_levels(scenario: Scenario) -> list[int]:
    """CSDB level per vehicle. Participant sets are nested across penetration rates."""
    order = list(range(scenario.vehicles))
    random.Random(f"participants-{scenario.seed}").shuffle(order)
    k = round(scenario.penetration * scenario.vehicles)
    levels = [0] * scenario.vehicles
    for pos, v in enumerate(order[:k]):
        levels[v] = pos % 3 + 1 if scenario.level_mix == "thirds" else int(scenario.level_mix)
    return levels


@dataclass
class VehicleMetrics:
    vehicle: int
    level: int
    strategy: str
    drive_s: int = 0
    charge_s: int = 0
    wait_s: int = 0
    total_s: int = 0
    stops: int = 0
    stranded: int = 0
    replans: int = 0
    soc_start: float = 0.0
    soc_end: float = 0.0
    charged_kwh: float = 0.0
    consumed_kwh: float = 0.0
    capacity: float = 0.0


@dataclass
class Metrics:
    vehicles: list[VehicleMetrics]
    intervals: list[tuple[int, int, int, int]]  # station, point, start, end
    station_points: list[int]
    events: list[tuple] = field(default_factory=list)

    def completed(self) -> list[VehicleMetrics]:
        return [v for v in self.vehicles if not v.stranded]

    def mean(self, attr: str, level: int | None = None) -> float:
        rows = [v for v in self.completed() if level is None or v.level == level]
        return stats.fmean(getattr(v, attr) for v in rows) if rows else math.nan

    def station_hours(self) -> list[tuple[int, int, float]]:
        """Fraction of occupied point-seconds per station and absolute hour."""
        busy: dict[tuple[int, int], float] = {}
        last = 0
        for s, _c, a, b in self.intervals:
            last = max(last, b)
            t = a
            while t < b:
                h = t // 3600
                stop = min(b, (h + 1) * 3600)
                busy[(s, h)] = busy.get((s, h), 0) + stop - t
                t = stop
        hours = max(24, -(-last // 3600))
        return [
            (s, h, busy.get((s, h), 0) / (3600.0 * n))
            for s, n in enumerate(self.station_points)
            for h in range(hours)
        ]

    def profile(self, stations) -> UtilizationProfile:
        return compile_stats(self.intervals, stations)

    def write(self, out_dir: str | Path, prefix: str = "") -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / f"{prefix}vehicles.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["vehicle", "level", "strategy", "drive_s", "charge_s", "wait_s", "total_s", "stops", "stranded"])
            for v in self.vehicles:
                w.writerow([v.vehicle, v.level, v.strategy, v.drive_s, v.charge_s, v.wait_s, v.total_s, v.stops, v.stranded])
        with open(out / f"{prefix}stations.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["station", "hour", "utilization"])
            for s, h, u in self.station_hours():
                w.writerow([s, h, f"{u:.6f}"])


@dataclass
class _Vehicle:
    trip: Trip
    spec: VehicleSpec
    strategy: Strategy
    m: VehicleMetrics
    soc: float
    plan: Plan | None = None
    leg: int = 0  # index of the leg being driven or about to start
    epoch: int = 0
    state: str = "parked"
    seg_start: int = 0
    seg_soc: float = 0.0
    seg_nodes: list[int] = field(default_factory=list)
    seg_cum_s: list[int] = field(default_factory=list)
    seg_cum_wh: list[int] = field(default_factory=list)
    seg_is_leg: bool = True
    target: float = 0.0
    last_replan: int = -1


class Simulation:
    def __init__(self, router: Router, scenario: Scenario, trips: Sequence[Trip] | None = None, profile: UtilizationProfile | None = None, record_events: bool = False):
        self.router = router
        self.sc = scenario
        self.trips = list(trips) if trips is not None else make_trips(TripSampler(router), scenario)
        self.levels = assign_levels(scenario)
        self.csdb = CSDB(router.stations, profile if scenario.statistics else None)
        protocol = Protocol(scenario.protocol)
        self.curves = [ChargeCurve(s.p_max, protocol) for s in router.stations]
        self.free_at = [[0] * s.num_points for s in router.stations]
        self.heap: list[tuple] = []
        self.seq = itertools.count()
        self.intervals: list[tuple[int, int, int, int]] = []
        self.record = record_events
        self.log: list[tuple] = []
        g = router.graph
        self.edge_ms, self.edge_wh, self.edge_dst = g.time_ms, g.energy_wh, g.targets
        self.fleet: list[_Vehicle] = []
        for trip, level in zip(self.trips, self.levels):
            strat = Strategy.named(scenario.strategy, level, scenario.statistics and level > 0, scenario.reserve_soc)
            spec = VehicleSpec(trip.capacity, scenario.initial_soc, protocol)
            m = VehicleMetrics(trip.vehicle, level, strat.name, soc_start=spec.soc, capacity=trip.capacity)
            self.fleet.append(_Vehicle(trip, spec, strat, m, spec.soc))
        self.level3 = [v for v in self.fleet if v.strategy.level == 3]

    # -- event plumbing

    def push(self, t: int, kind: str, v: _Vehicle, payload=None) -> None:
        heapq.heappush(self.heap, (t, _PRIO[kind], v.trip.vehicle, next(self.seq), kind, v.epoch, payload))

    def emit(self, *rec) -> None:
        if self.record:
            self.log.append(rec)

    def run(self) -> Metrics:
        for v in self.fleet:
            self.push(v.trip.depart, "depart", v)
        while self.heap:
            t, _prio, vid, _seq, kind, epoch, payload = heapq.heappop(self.heap)
            v = self.fleet[vid]
            if epoch != v.epoch:
                continue
            self.emit(t, kind, vid, payload)
            getattr(self, "_on_" + kind)(v, t, payload)
            if self.level3:
                self._check_estimates(t)
        return self.metrics()

    # -- helpers

    def _plan(self, v: _Vehicle, origin: int, depart: int, now: int, soc: float, origin_station: int | None = None, origin_wait: int = 0) -> Plan:
        return plan(
            self.router,
            origin,
            v.trip.dest,
            v.spec,
            v.strategy,
            depart,
            self.csdb,
            soc=soc,
            origin_station=origin_station,
            origin_wait=origin_wait,
            now=now,
        )

    def _announce(self, v: _Vehicle, now: int) -> None:
        if v.strategy.level >= 1:
            self.csdb.announce(v.trip.vehicle, v.plan.stops(), now)

    def _set_segment(self, v: _Vehicle, now: int, nodes: list[int], edges: list[int], is_leg: bool) -> None:
        cum_ms = cum_wh = 0
        cs, cw = [0], [0]
        for eid in edges:
            cum_ms += self.edge_ms[eid]
            cum_wh += self.edge_wh[eid]
            cs.append(drive_seconds(cum_ms))
            cw.append(cum_wh)
        v.seg_start, v.seg_soc = now, v.soc
        v.seg_nodes, v.seg_cum_s, v.seg_cum_wh, v.seg_is_leg = nodes, cs, cw, is_leg
        v.state = "driving"

    def _start_leg(self, v: _Vehicle, now: int) -> None:
        leg = v.plan.legs[v.leg]
        self._set_segment(v, now, leg.path, leg.edges, True)
        kind = "arrive_dest" if leg.end_station is None else "arrive_station"
        self.push(now + v.seg_cum_s[-1], kind, v)

    def _finish_segment(self, v: _Vehicle, now: int) -> None:
        used = v.seg_cum_wh[-1] / 1000.0
        v.m.consumed_kwh += used
        v.m.drive_s += now - v.seg_start
        v.soc = v.seg_soc - used / v.spec.capacity
        if v.soc < -1e-9:
            v.m.stranded = 1
            v.state = "done"

    # -- handlers

    def _on_depart(self, v: _Vehicle, now: int, _payload) -> None:
        try:
            v.plan = self._plan(v, v.trip.origin, now, now, v.soc)
        except Infeasible:
            v.m.stranded = 1
            v.state = "done"
            return
        v.leg = 0
        self._announce(v, now)
        self._start_leg(v, now)

    def _on_arrive_dest(self, v: _Vehicle, now: int, _payload) -> None:
        self._finish_segment(v, now)
        v.state = "done"
        v.m.total_s = now - v.trip.depart
        v.m.soc_end = v.soc
        self.csdb.retract(v.trip.vehicle)

    def _on_arrive_station(self, v: _Vehicle, now: int, _payload) -> None:
        self._finish_segment(v, now)
        if v.state == "done":
            return
        s = v.plan.legs[v.leg].end_station
        if replan_policy(v.strategy.level, "arrive_station"):
            self._replan_here(v, s, now)
        else:
            v.leg += 1
        nxt = v.plan.legs[v.leg]
        dur = charge_seconds(self.curves[s], v.spec.capacity, v.soc, nxt.charge_to)
        if dur == 0:
            self._start_leg(v, now)
            return
        pts = self.free_at[s]
        c = min(range(len(pts)), key=lambda i: (pts[i], i))
        start = max(now, pts[c])
        end = start + dur
        pts[c] = end
        self.csdb.report_occupancy(s, c, end)
        v.m.wait_s += start - now
        v.state = "queued"
        v.target = nxt.charge_to
        self.intervals.append((s, c, start, end))
        self.push(start, "start_charge", v, (s, c, dur))
        self.push(end, "finish_charge", v, (s, c, dur))

    def _replan_here(self, v: _Vehicle, s: int, now: int) -> None:
        """Replan on arrival at station ``s``, before joining its queue."""
        vid = v.trip.vehicle
        old = [(p.station, p.t_arr, p.t_chr) for p in self.csdb.stops_of(vid) if p.t_arr > now]
        self.csdb.retract(vid)
        wait, _ = self.csdb.estimate_wait(s, now, now, v.strategy.statistics)
        try:
            new = self._plan(v, self.router.stations[s].node, now, now, v.soc, origin_station=s, origin_wait=math.ceil(wait - 1e-9))
        except Infeasible:
            self.csdb.announce(vid, old, now)
            v.leg += 1
            return
        v.plan, v.leg = new, 0
        v.m.replans += 1
        v.last_replan = now
        self._announce(v, now)

    def _on_start_charge(self, v: _Vehicle, now: int, payload) -> None:
        v.state = "charging"

    def _on_finish_charge(self, v: _Vehicle, now: int, payload) -> None:
        s, c, dur = payload
        before = v.soc
        v.soc = charged_soc(self.curves[s], v.spec.capacity, before, dur)
        v.m.charged_kwh += (v.soc - before) * v.spec.capacity
        v.m.charge_s += dur
        v.m.stops += 1
        busy = self.free_at[s][c]
        self.csdb.report_occupancy(s, c, busy if busy > now else None)
        self._start_leg(v, now)

    def _on_replan_trigger(self, v: _Vehicle, now: int, _payload) -> None:
        if v.state != "driving" or v.last_replan == now:
            return
        cum = v.seg_cum_s
        i = 1
        while v.seg_start + cum[i] < now:
            i += 1
        if i >= len(v.seg_nodes) - 1:
            return
        t_i = v.seg_start + cum[i]
        soc_i = v.seg_soc - v.seg_cum_wh[i] / 1000.0 / v.spec.capacity
        vid = v.trip.vehicle
        old = [(p.station, p.t_arr, p.t_chr) for p in self.csdb.stops_of(vid) if p.t_arr > now]
        self.csdb.retract(vid)
        v.last_replan = now
        try:
            new = self._plan(v, v.seg_nodes[i], t_i, now, soc_i)
        except Infeasible:
            self.csdb.announce(vid, old, now)
            return
        v.epoch += 1
        v.seg_nodes = v.seg_nodes[: i + 1]
        v.seg_cum_s = cum[: i + 1]
        v.seg_cum_wh = v.seg_cum_wh[: i + 1]
        v.seg_is_leg = False
        v.plan, v.leg = new, 0
        v.m.replans += 1
        self._announce(v, now)
        self.push(t_i, "waypoint", v)

    def _on_waypoint(self, v: _Vehicle, now: int, _payload) -> None:
        self._finish_segment(v, now)
        if v.state != "done":
            self._start_leg(v, now)

    def _check_estimates(self, now: int) -> None:
        dirty = self.csdb.pop_dirty()
        if not dirty:
            return
        for v in self.level3:
            if v.state != "driving" or v.last_replan == now:
                continue
            legs = v.plan.legs
            for k in range(v.leg, len(legs) - 1):
                leg = legs[k]
                s = leg.end_station
                if s not in dirty or legs[k + 1].charge_s == 0 or leg.t_arrive <= now:
                    continue
                w, _ = self.csdb.estimate_wait(s, leg.t_arrive, now, v.strategy.statistics)
                if abs(w - leg.end_wait_s) > self.sc.level3_threshold:
                    self.push(now, "replan_trigger", v)
                    break

    def metrics(self) -> Metrics:
        return Metrics([v.m for v in self.fleet], sorted(self.intervals), [s.num_points for s in self.router.stations], self.log)


SUMMARY_FIELDS = ("drive_s", "charge_s", "wait_s", "total_s", "stops", "stranded")


@dataclass
class Summary:
    """Per-quantity mean and population sd over replications, overall and per level."""

    replications: int
    rows: list[tuple[str, str, float, float]]  # (group, quantity, mean, sd)

    def get(self, quantity: str, group: str = "all") -> tuple[float, float]:
        for g, q, mu, sd in self.rows:
            if g == group and q == quantity:
                return mu, sd
        raise KeyError((group, quantity))

    def write(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["group", "quantity", "mean", "sd", "replications"])
            for g, q, mu, sd in self.rows:
                w.writerow([g, q, repr(mu), repr(sd), self.replications])


def aggregate(replications: Sequence[Metrics]) -> Summary:
    """Average each replication's per-vehicle means across replications.

    Stranded counts are totals per replication; the other quantities are
    means over completed vehicles. Groups with no vehicles in a replication
    are skipped for that replication.
    """
    if not replications:
        raise ValueError("need at least one replication")
    groups = ["all"] + [f"L{lv}" for lv in sorted({v.level for m in replications for v in m.vehicles})]
    rows = []
    for g in groups:
        level = None if g == "all" else int(g[1:])
        for q in SUMMARY_FIELDS:
            vals = []
            for m in replications:
                if q == "stranded":
                    vals.append(float(sum(v.stranded for v in m.vehicles if level is None or v.level == level)))
                else:
                    x = m.mean(q, level)
                    if not math.isnan(x):
                        vals.append(x)
            if vals:
                rows.append((g, q, stats.fmean(vals), stats.pstdev(vals)))
    return Summary(len(replications), rows)
