"""Charging station database: occupancy, announced stops and waiting-time estimates.

For a query made at time ``now`` the stops of a station are processed in
arrival order. Each stop goes to the charge point that is free soonest
(lowest point id on ties) and starts at ``max(arrival, free time)``. The
estimate for an arrival ``t`` is read off the state after every stop that
arrives strictly before ``t``. Only the running minimum of the point free
times matters for that, so one pass stores it per prefix and every query
is a bisection.
"""
from __future__ import annotations

import csv
import heapq
import math
from bisect import bisect_left
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .roadnet import StationSpec

HOURS = 24
STAT_CHARGE_S = 60.0
STAT_OWNER = -1


@dataclass
class ChargePoint:
    id: int
    t_dep: float | None = None  # None means free


@dataclass
class PlannedStop:
    owner: int
    station: int
    t_arr: float
    t_chr: float
    index: int = 0  # position within the owner's announcement
    kind: str = "announced"
    point: int = -1
    t_start: float = math.nan
    t_dep: float = math.nan

    @property
    def key(self) -> tuple:
        return (self.t_arr, self.owner, self.index)


@dataclass
class UtilizationProfile:
    """Mean fraction of occupied points per station and hour of day."""

    values: dict[int, list[float]] = field(default_factory=dict)
    t_chr: float = STAT_CHARGE_S

    def utilization(self, station: int, hour: int) -> float:
        row = self.values.get(station)
        return 0.0 if row is None else row[hour % HOURS]

    def period(self, station: int, hour: int, num_points: int) -> float | None:
        """Spacing of statistical stops, or None when the station is idle."""
        u = self.utilization(station, hour)
        if u <= 0:
            return None
        return self.t_chr / (u * num_points)

    def save(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["station_id", "hour", "utilization"])
            for s in sorted(self.values):
                for h, u in enumerate(self.values[s]):
                    w.writerow([s, h, repr(float(u))])

    @classmethod
    def load(cls, path: str | Path, t_chr: float = STAT_CHARGE_S) -> "UtilizationProfile":
        values: dict[int, list[float]] = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for lineno, row in enumerate(csv.DictReader(fh), start=2):
                try:
                    s, h, u = int(row["station_id"]), int(row["hour"]), float(row["utilization"])
                except (KeyError, TypeError, ValueError) as exc:
                    raise ValueError(f"{path}:{lineno}: bad profile row ({exc})") from None
                if not 0 <= h < HOURS or not 0.0 <= u <= 1.0:
                    raise ValueError(f"{path}:{lineno}: hour or utilization out of range")
                values.setdefault(s, [0.0] * HOURS)[h] = u
        return cls(values, t_chr)

    @classmethod
    def mean(cls, profiles: Sequence["UtilizationProfile"]) -> "UtilizationProfile":
        if not profiles:
            raise ValueError("need at least one profile")
        keys = sorted(set().union(*(p.values for p in profiles)))
        values = {s: [sum(p.utilization(s, h) for p in profiles) / len(profiles) for h in range(HOURS)] for s in keys}
        return cls(values, profiles[0].t_chr)


def statistical_arrivals(period_of, t_from: float, t_to: float = math.inf) -> Iterator[float]:
    """Arrival times of virtual stops in ``(t_from, t_to)``.

    ``period_of(hour)`` gives the spacing for an absolute hour (None = no
    stops). Stops sit on a grid anchored at the start of each hour.
    """
    hour = math.floor(t_from / 3600.0)
    idle = 0
    while hour * 3600.0 < t_to:
        period = period_of(hour)
        # the profile repeats daily, so a full idle day means no more stops
        idle = idle + 1 if period is None else 0
        if idle > HOURS:
            return
        if period is not None:
            base = hour * 3600.0
            k = max(0, math.floor((t_from - base) / period))
            while True:
                t = base + k * period
                if t >= base + 3600.0 or t >= t_to:
                    break
                if t > t_from:
                    yield t
                k += 1
        hour += 1


def synth_statistical_stops(station: StationSpec, profile: UtilizationProfile, t_from: float, t_to: float) -> list[PlannedStop]:
    def period_of(hour: int) -> float | None:
        return profile.period(station.id, hour, station.num_points)

    return [
        PlannedStop(STAT_OWNER, station.id, t, profile.t_chr, i, "statistical")
        for i, t in enumerate(statistical_arrivals(period_of, t_from, t_to))
    ]


class _Schedule:
    """Arrival-ordered assignment for one station at one query time, built lazily."""

    def __init__(self, free: list[float], stops: Iterator[PlannedStop]):
        self.initial = tuple(free)
        self.heap = [(f, c) for c, f in enumerate(free)]
        heapq.heapify(self.heap)
        self.arrivals: list[float] = []
        self.prefix_min: list[float] = [self.heap[0][0]]
        self.assigned: list[PlannedStop] = []
        self.stops = stops
        self.pending: PlannedStop | None = next(stops, None)

    def _advance(self) -> None:
        p = self.pending
        free, c = heapq.heappop(self.heap)
        start = max(p.t_arr, free)
        dep = start + p.t_chr
        heapq.heappush(self.heap, (dep, c))
        if p.kind == "announced":
            p.point, p.t_start, p.t_dep = c, start, dep
        self.arrivals.append(p.t_arr)
        self.prefix_min.append(self.heap[0][0])
        self.assigned.append(p)
        self.pending = next(self.stops, None)

    def start_time(self, t_arr: float) -> float:
        while self.pending is not None and self.pending.t_arr < t_arr:
            self._advance()
        k = bisect_left(self.arrivals, t_arr)
        return max(t_arr, self.prefix_min[k])

    def free_times(self, t_arr: float) -> list[float]:
        """Per-point free time seen by an arrival at ``t_arr``."""
        self.start_time(t_arr)
        k = bisect_left(self.arrivals, t_arr)
        free = list(self.initial)
        for p in self.assigned[:k]:
            c = min(range(len(free)), key=lambda i: (free[i], i))
            free[c] = max(p.t_arr, free[c]) + p.t_chr
        return free


class CSDB:
    """Central estimator; single writer, any number of readers between writes."""

    def __init__(self, stations: Sequence[StationSpec], profile: UtilizationProfile | None = None):
        self.stations = list(stations)
        for i, s in enumerate(self.stations):
            if s.id != i:
                raise ValueError(f"station ids must be 0..n-1 in order, got {s.id} at {i}")
        self.points = [[ChargePoint(c) for c in range(s.num_points)] for s in self.stations]
        self.profile = profile
        self._stops: list[list[PlannedStop]] = [[] for _ in self.stations]
        self._by_owner: dict[int, list[PlannedStop]] = {}
        self._version = [0] * len(self.stations)
        self._cache: dict[tuple[int, bool], tuple[float, int, _Schedule]] = {}
        self._dirty: set[int] = set()

    # -- mutations

    def _touch(self, station: int) -> None:
        self._version[station] += 1
        self._dirty.add(station)

    def _check_station(self, station: int) -> None:
        if not 0 <= station < len(self.stations):
            raise KeyError(f"unknown station {station}")

    def report_occupancy(self, station: int, point: int, t_dep: float | None) -> None:
        self._check_station(station)
        if not 0 <= point < len(self.points[station]):
            raise KeyError(f"station {station} has no charge point {point}")
        cp = self.points[station][point]
        if cp.t_dep != t_dep:
            cp.t_dep = t_dep
            self._touch(station)

    def announce(self, vehicle: int, stops: Iterable[tuple[int, float, float]], now: float) -> list[PlannedStop]:
        """Replace ``vehicle``'s planned stops by ``(station, t_arr, t_chr)`` triples."""
        new = []
        for i, (station, t_arr, t_chr) in enumerate(stops):
            self._check_station(station)
            if not t_arr > now:
                raise ValueError(f"stop arrival {t_arr} is not after the current time {now}")
            if t_chr < 0:
                raise ValueError(f"negative charging time {t_chr}")
            new.append(PlannedStop(vehicle, station, t_arr, t_chr, i))
        self.retract(vehicle)
        for p in new:
            keys = [q.key for q in self._stops[p.station]]
            self._stops[p.station].insert(bisect_left(keys, p.key), p)
            self._touch(p.station)
        if new:
            self._by_owner[vehicle] = new
        return new

    def retract(self, vehicle: int) -> None:
        for p in self._by_owner.pop(vehicle, []):
            self._stops[p.station].remove(p)
            self._touch(p.station)

    def pop_dirty(self) -> set[int]:
        """Stations whose estimates may have changed since the last call."""
        out, self._dirty = self._dirty, set()
        return out

    # -- queries

    def planned_stops(self, station: int) -> list[PlannedStop]:
        return list(self._stops[station])

    def stops_of(self, vehicle: int) -> list[PlannedStop]:
        return list(self._by_owner.get(vehicle, []))

    def _initial_free(self, station: int, now: float) -> list[float]:
        return [now if cp.t_dep is None else max(cp.t_dep, now) for cp in self.points[station]]

    def _stop_stream(self, station: int, now: float, statistics: bool) -> Iterator[PlannedStop]:
        announced = (p for p in self._stops[station] if p.t_arr > now)
        if not statistics or self.profile is None:
            return announced
        spec = self.stations[station]
        profile = self.profile

        def period_of(hour: int) -> float | None:
            return profile.period(station, hour, spec.num_points)

        stats = (
            PlannedStop(STAT_OWNER, station, t, profile.t_chr, i, "statistical")
            for i, t in enumerate(statistical_arrivals(period_of, now))
        )
        return heapq.merge(stats, announced, key=lambda p: p.key)

    def schedule(self, station: int, now: float, statistics: bool = False) -> _Schedule:
        self._check_station(station)
        ck = (station, statistics)
        hit = self._cache.get(ck)
        if hit is not None and hit[0] == now and hit[1] == self._version[station]:
            return hit[2]
        free = self._initial_free(station, now)
        sched = _Schedule(free, self._stop_stream(station, now, statistics))
        self._cache[ck] = (now, self._version[station], sched)
        return sched

    def estimate_wait(self, station: int, t_arr: float, now: float, statistics: bool = False) -> tuple[float, float]:
        """``(t_wait, t_start)`` for a vehicle arriving at ``t_arr``."""
        if t_arr < now:
            raise ValueError(f"arrival {t_arr} lies before the query time {now}")
        start = self.schedule(station, now, statistics).start_time(t_arr)
        return start - t_arr, start

    def free_times(self, station: int, t_arr: float, now: float, statistics: bool = False) -> list[float]:
        """t_free of every point as seen by an arrival at ``t_arr``."""
        return self.schedule(station, now, statistics).free_times(t_arr)

    def assign_point(self, station: int, t_arr: float, now: float, statistics: bool = False) -> int:
        """Point a stop arriving at ``t_arr`` would get: soonest free, lowest id on ties."""
        if not t_arr > now:
            raise ValueError(f"stop arrival {t_arr} is not after the current time {now}")
        free = self.free_times(station, t_arr, now, statistics)
        return min(range(len(free)), key=lambda c: (free[c], c))

    def resolve(self, station: int, now: float, statistics: bool = False) -> list[PlannedStop]:
        """Announced stops of ``station`` with their point, start and departure filled in."""
        sched = self.schedule(station, now, statistics)
        last = max((p.t_arr for p in self._stops[station]), default=now)
        sched.start_time(math.nextafter(last, math.inf))
        return [p for p in self._stops[station] if p.t_arr > now]


def compile_stats(intervals: Iterable[tuple[int, int, float, float]], stations: Sequence[StationSpec], days: int = 1) -> UtilizationProfile:
    """Profile from charging intervals ``(station, point, start, end)``.

    Occupied point-seconds are folded onto the hour of day and divided by
    ``days * 3600 * num_points``; values are clipped to [0, 1].
    """
    if days < 1:
        raise ValueError("need at least one day of history")
    busy = {s.id: [0.0] * HOURS for s in stations}
    for station, _point, start, end in intervals:
        t = float(start)
        while t < end:
            hour = math.floor(t / 3600.0)
            stop = min(end, (hour + 1) * 3600.0)
            busy[station][hour % HOURS] += stop - t
            t = stop
    values = {}
    for s in stations:
        denom = days * 3600.0 * s.num_points
        values[s.id] = [min(1.0, max(0.0, b / denom)) for b in busy[s.id]]
    return UtilizationProfile(values)

