"""Electric-vehicle route planning with charging-station waiting-time estimates."""
from .csdb import CSDB, PlannedStop, UtilizationProfile, compile_stats, synth_statistical_stops
from .mcsp import CHGraph, Label, ParetoSet, contract, dominates, mc_query, pareto_insert, sc_query
from .models import Battery, ChargeCurve, ConsumptionModel, Protocol, charge_power, charge_time, charged_soc, consumption
from .planner import Infeasible, Plan, Router, Strategy, VehicleSpec, plan
from .roadnet import CostedGraph, GraphFormatError, RoadGraph, StationSpec, annotate_costs, load_graph, load_stations
from .sptrees import LookupTable, build_lookup, build_tree, reconstruct_path, tree_query

__all__ = [
    "CSDB",
    "PlannedStop",
    "UtilizationProfile",
    "compile_stats",
    "synth_statistical_stops",
    "CHGraph",
    "Label",
    "ParetoSet",
    "contract",
    "dominates",
    "mc_query",
    "pareto_insert",
    "sc_query",
    "Battery",
    "ChargeCurve",
    "ConsumptionModel",
    "Protocol",
    "charge_power",
    "charge_time",
    "charged_soc",
    "consumption",
    "Infeasible",
    "Plan",
    "Router",
    "Strategy",
    "VehicleSpec",
    "plan",
    "CostedGraph",
    "GraphFormatError",
    "RoadGraph",
    "StationSpec",
    "annotate_costs",
    "load_graph",
    "load_stations",
    "LookupTable",
    "build_lookup",
    "build_tree",
    "reconstruct_path",
    "tree_query",
]
