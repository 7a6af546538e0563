"""Command-line front end.

Subcommands: config, preprocess, plan, simulate, report. Every command
reads one INI file (``evroute config --example`` prints a documented one).
Exit codes: 0 ok, 1 usage, 2 invalid input, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import multiprocessing
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .csdb import UtilizationProfile
from .fleetsim import Metrics, Scenario, Simulation, TripSampler, aggregate, make_trips
from .mcsp import contract, load_ch, save_ch
from .models import ConsumptionModel, Protocol
from .planner import STRATEGIES, Infeasible, Plan, Router, Strategy, VehicleSpec, plan
from .roadnet import GraphFormatError, StationSpec, annotate_costs, load_graph, load_stations
from .sptrees import build_lookup, build_station_trees, cache_key, load_lookup, save_lookup

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2, 3

EXAMPLE_CONFIG = """\
# evroute configuration. Relative paths are resolved against this file;
# "package:NAME" refers to a file shipped with evroute.

[paths]
# road graph: "#nodes" lines id,lat,lon then "#edges" lines from,to,length_m,speed_kmh
graph = package:desk_graph.csv
# stations: node_id,num_points,p_max_kw
stations = package:desk_stations.csv
cache_dir = evroute-cache
output_dir = evroute-out

[model]
# consumption in kWh/km: a + b*v^2 + c/v for speed v in km/h
consumption_a = 0.05
consumption_b = 1.1111111111111112e-05
consumption_c = 2.0
# cc-cv or cp-cv
protocol = cp-cv
# fraction of nodes contracted; the rest forms the core graph
contract_fraction = 1.0
witness_limit = 400

[scenario]
vehicles = 300
trip_km = 320
trip_tolerance = 0.05
battery_min_kwh = 20
battery_max_kwh = 40
initial_soc = 0.99
reserve_soc = 0.0
# comma-separated lists span the simulation matrix
penetration = 0.0, 0.1, 0.3, 0.5, 1.0
# thirds (equal split of participants over levels 1-3) or a single level 1, 2, 3
level_mix = thirds
strategy = adaptive
statistics = false
seeds = 10
first_seed = 0
level3_threshold_s = 60
# worker processes for replications
jobs = 1
"""


class ConfigError(ValueError):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class Config:
    path: Path
    graph: Path
    stations: Path
    cache_dir: Path
    output_dir: Path
    consumption: ConsumptionModel
    protocol: str
    contract_fraction: float
    witness_limit: int
    scenario: dict
    penetration: list[float]
    level_mix: list[str]
    strategy: list[str]
    statistics: list[bool]
    seeds: int
    first_seed: int
    jobs: int
    raw: dict = field(default_factory=dict)


def _resolve(base: Path, value: str) -> Path:
    if value.startswith("package:"):
        return Path(str(resources.files("evroute") / "data" / value[len("package:") :]))
    p = Path(value)
    return p if p.is_absolute() else base / p


def _split(value: str) -> list[str]:
    return [x.strip() for x in value.split(",") if x.strip()]


def _bool(value: str) -> bool:
    v = value.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def load_config(path: str | Path) -> Config:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: config file not found")
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(EXAMPLE_CONFIG)
        with path.open(encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    base = path.parent

    def get(section: str, key: str, conv):
        raw = cp.get(section, key)
        try:
            return conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{path}: [{section}] {key} = {raw!r}: {exc}") from None

    def check(ok: bool, section: str, key: str, what: str) -> None:
        if not ok:
            raise ConfigError(f"{path}: [{section}] {key} = {cp.get(section, key)!r}: {what}")

    graph = _resolve(base, cp.get("paths", "graph"))
    stations = _resolve(base, cp.get("paths", "stations"))
    check(graph.is_file(), "paths", "graph", "file not found")
    check(stations.is_file(), "paths", "stations", "file not found")

    cons = ConsumptionModel(get("model", "consumption_a", float), get("model", "consumption_b", float), get("model", "consumption_c", float))
    check(cons.a >= 0 and cons.b >= 0 and cons.c >= 0, "model", "consumption_a", "consumption coefficients must be >= 0")
    protocol = cp.get("model", "protocol").strip().lower()
    check(protocol in (p.value for p in Protocol), "model", "protocol", "expected cc-cv or cp-cv")
    fraction = get("model", "contract_fraction", float)
    check(0.0 <= fraction <= 1.0, "model", "contract_fraction", "must lie in [0, 1]")
    witness = get("model", "witness_limit", int)
    check(witness >= 1, "model", "witness_limit", "must be >= 1")

    sc = {
        "vehicles": get("scenario", "vehicles", int),
        "trip_km": get("scenario", "trip_km", float),
        "trip_tolerance": get("scenario", "trip_tolerance", float),
        "battery_min": get("scenario", "battery_min_kwh", float),
        "battery_max": get("scenario", "battery_max_kwh", float),
        "initial_soc": get("scenario", "initial_soc", float),
        "reserve_soc": get("scenario", "reserve_soc", float),
        "level3_threshold": get("scenario", "level3_threshold_s", float),
        "protocol": protocol,
    }
    check(sc["vehicles"] >= 1, "scenario", "vehicles", "need at least one vehicle")
    check(sc["trip_km"] > 0, "scenario", "trip_km", "must be positive")
    check(0 <= sc["trip_tolerance"] < 1, "scenario", "trip_tolerance", "must lie in [0, 1)")
    check(0 < sc["battery_min"], "scenario", "battery_min_kwh", "must be positive")
    check(sc["battery_min"] <= sc["battery_max"], "scenario", "battery_max_kwh", "must be >= battery_min_kwh")
    check(0 < sc["initial_soc"] <= 1, "scenario", "initial_soc", "must lie in (0, 1]")
    check(0 <= sc["reserve_soc"] < 1, "scenario", "reserve_soc", "must lie in [0, 1)")
    check(sc["level3_threshold"] >= 0, "scenario", "level3_threshold_s", "must be >= 0")

    pens = get("scenario", "penetration", lambda v: [float(x) for x in _split(v)])
    check(bool(pens) and all(0 <= p <= 1 for p in pens), "scenario", "penetration", "values must lie in [0, 1]")
    mixes = _split(cp.get("scenario", "level_mix"))
    check(bool(mixes) and all(m in ("thirds", "1", "2", "3") for m in mixes), "scenario", "level_mix", "expected thirds, 1, 2 or 3")
    strategies = _split(cp.get("scenario", "strategy"))
    check(bool(strategies) and all(s in STRATEGIES for s in strategies), "scenario", "strategy", f"expected one of {', '.join(STRATEGIES)}")
    stats_flags = get("scenario", "statistics", lambda v: [_bool(x) for x in _split(v)])
    check(bool(stats_flags), "scenario", "statistics", "need at least one value")
    seeds = get("scenario", "seeds", int)
    check(seeds >= 1, "scenario", "seeds", "need at least one replication")
    first = get("scenario", "first_seed", int)
    jobs = get("scenario", "jobs", int)
    check(jobs >= 1, "scenario", "jobs", "must be >= 1")

    return Config(
        path,
        graph,
        stations,
        _resolve(base, cp.get("paths", "cache_dir")),
        _resolve(base, cp.get("paths", "output_dir")),
        cons,
        protocol,
        fraction,
        witness,
        sc,
        pens,
        mixes,
        strategies,
        stats_flags,
        seeds,
        first,
        jobs,
        {s: dict(cp[s]) for s in cp.sections()},
    )


# ---------------------------------------------------------------- preprocessing


@dataclass
class Workspace:
    router: Router
    stations: list[StationSpec]
    ch_hit: bool
    table_hit: bool

    def node_of(self, source_id: int) -> int:
        g = self.router.graph.graph
        try:
            return g.index_of(source_id)
        except KeyError:
            raise ConfigError(f"unknown node id {source_id}") from None


def preprocess(cfg: Config, log=None) -> Workspace:
    """Load inputs and the CH / lookup table, rebuilding only what changed."""
    graph = load_graph(cfg.graph)
    stations = load_stations(cfg.stations, graph)
    costed = annotate_costs(graph, cfg.consumption)
    cap = int(math.ceil(cfg.scenario["battery_max"] * 1000))
    c = cfg.consumption
    ch_key = cache_key(cfg.graph.read_bytes(), repr((c.a, c.b, c.c, cfg.contract_fraction, cfg.witness_limit)))
    table_key = cache_key(ch_key, cfg.stations.read_bytes(), str(cap))
    cfg.cache_dir.mkdir(parents=True, exist_ok=True)
    ch_path = cfg.cache_dir / f"ch-{ch_key}.txt"
    table_path = cfg.cache_dir / f"lookup-{table_key}.json.gz"

    ch_hit = ch_path.is_file()
    ch = None
    if ch_hit:
        try:
            ch = load_ch(ch_path)
        except (ValueError, IndexError):
            ch_hit = False
    if ch is None:
        ch = contract(costed, contract_fraction=cfg.contract_fraction, witness_limit=cfg.witness_limit)
        save_ch(ch, ch_path)
    table_hit = table_path.is_file()
    table = None
    if table_hit:
        try:
            table = load_lookup(table_path, ch, table_key)
        except (ValueError, OSError):
            table_hit = False
    if table is None:
        fwd, bwd = build_station_trees(ch, [s.node for s in stations], cap)
        table = build_lookup(fwd, bwd)
        save_lookup(table, table_path, table_key)
    if log is not None:
        log(f"ch: {'cache hit' if ch_hit else 'built'} ({ch_path.name})")
        log(f"lookup table: {'cache hit' if table_hit else 'built'} ({table_path.name}), {len(table.unreachable())} unreachable pairs")
    router = Router(costed, ch, stations, table, Protocol(cfg.protocol))
    return Workspace(router, stations, ch_hit, table_hit)


# ---------------------------------------------------------------- plan output


def _hms(seconds: float) -> str:
    s = int(round(seconds))
    return f"{s // 3600:d}:{s % 3600 // 60:02d}:{s % 60:02d}"


def plan_document(p: Plan, ws: Workspace, strategy: Strategy) -> dict:
    g = ws.router.graph.graph
    sid = g.source_ids

    def where(st: int | None, node: int) -> dict:
        return {"node": sid[node], "station": st}

    legs = []
    for leg in p.legs:
        legs.append(
            {
                "from": where(leg.start_station, leg.path[0]),
                "to": where(leg.end_station, leg.path[-1]),
                "charge_to_soc": round(leg.charge_to, 6),
                "charge_s": leg.charge_s,
                "wait_at_start_s": leg.start_wait_s,
                "depart": leg.t_depart,
                "drive_s": leg.drive_s,
                "energy_kwh": round(leg.energy_kwh, 3),
                "arrive": leg.t_arrive,
                "soc_arrive": round(leg.soc_arrive, 6),
                "expected_wait_s": leg.end_wait_s,
                "path": [sid[v] for v in leg.path],
            }
        )
    return {
        "origin": sid[p.origin],
        "dest": sid[p.dest],
        "strategy": strategy.name,
        "level": strategy.level,
        "capacity_kwh": p.capacity,
        "soc": p.soc,
        "depart": p.depart,
        "arrival": p.arrival,
        "total_s": p.arrival - p.depart,
        "stations": p.stations(),
        "legs": legs,
    }


def plan_text(doc: dict) -> str:
    out = [
        f"plan {doc['origin']} -> {doc['dest']}  strategy {doc['strategy']}  battery {doc['capacity_kwh']:g} kWh at soc {doc['soc']:.2f}",
        f"depart {_hms(doc['depart'])}  arrive {_hms(doc['arrival'])}  total {_hms(doc['total_s'])}  stops {len(doc['stations'])}",
    ]
    for i, leg in enumerate(doc["legs"]):
        src = "origin" if leg["from"]["station"] is None else f"station {leg['from']['station']}"
        dst = "destination" if leg["to"]["station"] is None else f"station {leg['to']['station']}"
        charge = f"charge to {leg['charge_to_soc']:.3f} in {leg['charge_s']} s, " if leg["charge_s"] else ""
        out.append(
            f"  leg {i}: {src} (node {leg['from']['node']}) -> {dst} (node {leg['to']['node']}): "
            f"{charge}depart {_hms(leg['depart'])}, drive {leg['drive_s']} s, {leg['energy_kwh']:.3f} kWh, "
            f"arrive {_hms(leg['arrive'])} at soc {leg['soc_arrive']:.3f}, expected wait {leg['expected_wait_s']} s"
        )
    return "\n".join(out)


# ---------------------------------------------------------------- simulation


@dataclass(frozen=True)
class Cell:
    penetration: float
    level_mix: str
    strategy: str
    statistics: bool

    @property
    def name(self) -> str:
        return f"p{round(self.penetration * 100):03d}-{self.level_mix}-{self.strategy}-{'stats' if self.statistics else 'nostats'}"


def matrix(cfg: Config) -> list[Cell]:
    cells = []
    for p in cfg.penetration:
        for mix in cfg.level_mix:
            for strat in cfg.strategy:
                for st in cfg.statistics:
                    c = Cell(p, mix, strat, st if p > 0 else False)
                    if c not in cells:
                        cells.append(c)
    return cells


_WORKER: dict = {}


def _run_one(args: tuple) -> tuple[int, Metrics | str]:
    cell, seed = args
    w = _WORKER
    sc = Scenario(
        penetration=cell.penetration,
        level_mix=cell.level_mix,
        strategy=cell.strategy,
        statistics=cell.statistics,
        seed=seed,
        **w["scenario"],
    )
    try:
        trips = w["trips"].get(seed)
        return seed, Simulation(w["router"], sc, trips, profile=w.get("profile")).run()
    except Exception as exc:  # reported per replication
        return seed, f"{type(exc).__name__}: {exc}"


def _run_cell(cell: Cell, seeds: list[int], jobs: int) -> list[tuple[int, Metrics | str]]:
    work = [(cell, s) for s in seeds]
    if jobs <= 1 or len(work) == 1:
        return [_run_one(a) for a in work]
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(min(jobs, len(work))) as pool:
        return pool.map(_run_one, work)


def simulate(cfg: Config, ws: Workspace, log=print) -> tuple[list[tuple[Cell, dict]], int]:
    """Run the replication matrix and write per-replication and summary CSVs."""
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    seeds = list(range(cfg.first_seed, cfg.first_seed + cfg.seeds))
    base = dict(cfg.scenario)
    sampler = TripSampler(ws.router)
    trips = {s: make_trips(sampler, Scenario(seed=s, **base)) for s in seeds}
    _WORKER.clear()
    _WORKER.update(router=ws.router, scenario=base, trips=trips)

    cells = matrix(cfg)
    failures = 0
    done: dict[Cell, list[Metrics]] = {}
    if any(c.statistics for c in cells):
        # profile from runs without any database participants
        base_cell = Cell(0.0, "thirds", "adaptive", False)
        runs = _run_cell(base_cell, seeds, cfg.jobs)
        good = [m for _, m in runs if isinstance(m, Metrics)]
        if not good:
            raise RuntimeError("every baseline replication failed; cannot compile utilization statistics")
        profile = UtilizationProfile.mean([m.profile(ws.stations) for m in good])
        profile.save(out / "profile.csv")
        _WORKER["profile"] = profile
        done[base_cell] = good
        log(f"compiled utilization profile from {len(good)} baseline runs")

    results = []
    rows = []
    for cell in cells:
        if cell in done and cell.strategy == "adaptive" and cell.level_mix == "thirds":
            runs = [(s, m) for s, m in zip(seeds, done[cell])]
        else:
            runs = _run_cell(cell, seeds, cfg.jobs)
        good = []
        cell_dir = out / cell.name
        for seed, m in runs:
            if isinstance(m, str):
                failures += 1
                log(f"{cell.name} seed {seed}: FAILED {m}")
                continue
            m.write(cell_dir, prefix=f"seed{seed}-")
            good.append(m)
        if not good:
            continue
        summ = aggregate(good)
        summ.write(cell_dir / "summary.csv")
        results.append((cell, {"summary": summ, "runs": len(good)}))
        for g, q, mu, sd in summ.rows:
            rows.append([cell.name, cell.penetration, cell.level_mix, cell.strategy, int(cell.statistics), len(good), g, q, repr(mu), repr(sd)])
        log(f"{cell.name}: {len(good)} runs, mean wait {summ.get('wait_s')[0]:.0f} s, mean total {summ.get('total_s')[0]:.0f} s")
    with open(out / "summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["cell", "penetration", "level_mix", "strategy", "statistics", "replications", "group", "quantity", "mean", "sd"])
        w.writerows(rows)
    return results, failures


# ---------------------------------------------------------------- reports


def report(metrics_dir: str | Path) -> dict[str, list[list]]:
    """Plot-ready tables from a simulate output directory."""
    d = Path(metrics_dir)
    summary = d / "summary.csv"
    if not summary.is_file():
        raise ConfigError(f"{d}: no summary.csv; run 'simulate' first")
    with summary.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigError(f"{summary}: no metrics rows")
    cells: dict[str, dict] = {}
    for r in rows:
        c = cells.setdefault(r["cell"], {"meta": r, "vals": {}})
        c["vals"][(r["group"], r["quantity"])] = float(r["mean"])

    order = sorted(cells, key=lambda n: (cells[n]["meta"]["strategy"], cells[n]["meta"]["level_mix"], cells[n]["meta"]["statistics"], float(cells[n]["meta"]["penetration"])))
    decomposition = [["cell", "penetration", "strategy", "statistics", "drive_s", "charge_s", "wait_s", "total_s"]]
    by_level = [["cell", "penetration", "strategy", "statistics", "wait_all_s", "wait_L0_s", "wait_L1_s", "wait_L2_s", "wait_L3_s"]]
    for n in order:
        m, v = cells[n]["meta"], cells[n]["vals"]
        parts = [v.get(("all", q), math.nan) for q in ("drive_s", "charge_s", "wait_s")]
        decomposition.append([n, m["penetration"], m["strategy"], m["statistics"]] + [f"{x:.1f}" for x in parts] + [f"{sum(parts):.1f}"])
        by_level.append(
            [n, m["penetration"], m["strategy"], m["statistics"]]
            + ["" if (g, "wait_s") not in v else f"{v[(g, 'wait_s')]:.1f}" for g in ("all", "L0", "L1", "L2", "L3")]
        )

    utilization = [["cell", "rank", "station", "mean_utilization"]]
    for n in order:
        per: dict[int, list[float]] = {}
        for f in sorted((d / n).glob("seed*-stations.csv")):
            with f.open(newline="", encoding="utf-8") as fh:
                acc: dict[int, list[float]] = {}
                for r in csv.DictReader(fh):
                    if int(r["hour"]) < 24:
                        acc.setdefault(int(r["station"]), []).append(float(r["utilization"]))
            for s, us in acc.items():
                per.setdefault(s, []).append(sum(us) / 24.0)
        ranked = sorted(((sum(u) / len(u), s) for s, u in per.items()), key=lambda x: (-x[0], x[1]))
        for rank, (u, s) in enumerate(ranked, start=1):
            utilization.append([n, rank, s, f"{u:.6f}"])
    return {"decomposition": decomposition, "wait_by_level": by_level, "utilization": utilization}


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="evroute", description="EV route planning with charging-station waiting-time estimates.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    c = sub.add_parser("config", help="print configuration")
    c.add_argument("--example", action="store_true", help="print a documented example config")
    c.add_argument("config", nargs="?", help="validate and print this config")

    pre = sub.add_parser("preprocess", help="build or reuse the CH and lookup-table cache")
    pre.add_argument("config")

    pl = sub.add_parser("plan", help="plan one trip")
    pl.add_argument("config")
    pl.add_argument("--origin", type=int, required=True, help="origin node id")
    pl.add_argument("--dest", type=int, required=True, help="destination node id")
    pl.add_argument("--capacity", type=float, default=30.0, help="battery capacity in kWh")
    pl.add_argument("--soc", type=float, default=None, help="initial SOC (default: scenario initial_soc)")
    pl.add_argument("--strategy", default="adaptive", choices=sorted(STRATEGIES))
    pl.add_argument("--depart", type=int, default=0, help="departure, seconds of the day")
    pl.add_argument("--json", dest="json_out", default=None, help="also write the plan as JSON here ('-' for stdout only)")

    sim = sub.add_parser("simulate", help="run the replication matrix")
    sim.add_argument("config")
    sim.add_argument("--jobs", type=int, default=None, help="override worker processes")

    rep = sub.add_parser("report", help="summary tables from simulate output")
    rep.add_argument("metrics_dir")
    rep.add_argument("--out", default=None, help="directory for report CSVs (default: metrics_dir)")
    return p


def _write_csv(path: Path, table: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerows(table)


def _main(argv: list[str] | None) -> int:
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError("evroute: a subcommand is required (config, preprocess, plan, simulate, report)")

    if args.command == "config":
        if args.example:
            sys.stdout.write(EXAMPLE_CONFIG)
            return EXIT_OK
        if not args.config:
            raise UsageError("evroute config: give --example or a config file")
        cfg = load_config(args.config)
        for section, values in cfg.raw.items():
            print(f"[{section}]")
            for k, v in values.items():
                print(f"{k} = {v}")
            print()
        return EXIT_OK

    if args.command == "report":
        tables = report(args.metrics_dir)
        out = Path(args.out) if args.out else Path(args.metrics_dir)
        out.mkdir(parents=True, exist_ok=True)
        for name, table in tables.items():
            _write_csv(out / f"report-{name}.csv", table)
            print(f"# {name}")
            for row in table:
                print(",".join(str(x) for x in row))
        return EXIT_OK

    cfg = load_config(args.config)
    ws = preprocess(cfg, log=lambda m: print(m, file=sys.stderr))
    if args.command == "preprocess":
        print(f"ch {'hit' if ws.ch_hit else 'built'}, lookup table {'hit' if ws.table_hit else 'built'}")
        return EXIT_OK

    if args.command == "plan":
        soc = cfg.scenario["initial_soc"] if args.soc is None else args.soc
        if not 0 <= soc <= 1 or not args.capacity > 0:
            raise ConfigError("need 0 <= soc <= 1 and capacity > 0")
        strategy = Strategy.named(args.strategy, 0, False, cfg.scenario["reserve_soc"])
        vehicle = VehicleSpec(args.capacity, soc, Protocol(cfg.protocol))
        p = plan(ws.router, ws.node_of(args.origin), ws.node_of(args.dest), vehicle, strategy, args.depart)
        doc = plan_document(p, ws, strategy)
        if args.json_out == "-":
            print(json.dumps(doc, indent=2))
        else:
            print(plan_text(doc))
            if args.json_out:
                Path(args.json_out).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        return EXIT_OK

    if args.command == "simulate":
        if args.jobs is not None:
            if args.jobs < 1:
                raise UsageError("evroute simulate: --jobs must be >= 1")
            cfg.jobs = args.jobs
        _, failures = simulate(cfg, ws, log=lambda m: print(m, file=sys.stderr))
        print(f"wrote {cfg.output_dir}")
        return EXIT_RUNTIME if failures else EXIT_OK
    raise UsageError(f"unknown command {args.command}")


def main(argv: list[str] | None = None) -> int:
    try:
        return _main(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, GraphFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (FileNotFoundError, OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
