"""Precomputed shortest-path trees rooted at charging stations.

A forward tree from the origin and a backward tree from the destination are
merged at their common nodes (sumset + dominance filter) to get the exact
origin-destination Pareto front without exploring the graph again.
"""
from __future__ import annotations

import gzip
import hashlib
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .mcsp import (
    BACKWARD,
    FORWARD,
    CHGraph,
    FrontLabel,
    QueryResult,
    SearchSpace,
    StaleHandleError,
    TreeLabel,
    explore,
    merge_spaces,
)

CACHE_VERSION = 1

SPTree = SearchSpace

_generation = itertools.count(1)


def build_tree(ch: CHGraph, root: int, direction: str, energy_cap: int) -> SPTree:
    if not 0 <= root < ch.num_nodes:
        raise ValueError(f"unknown root node {root}")
    return explore(ch, root, direction, energy_cap)


def tree_query(fwd: SPTree, bwd: SPTree) -> QueryResult:
    if fwd.direction != FORWARD or bwd.direction != BACKWARD:
        raise ValueError("tree_query needs a forward tree and a backward tree")
    return QueryResult(fwd.root, bwd.root, merge_spaces(fwd, bwd), fwd, bwd)


@dataclass
class LookupTable:
    """Pareto fronts between every ordered pair of station nodes."""

    nodes: list[int]
    fwd: list[SPTree]
    bwd: list[SPTree]
    entries: dict[tuple[int, int], list[FrontLabel]]
    generation: int = field(default_factory=lambda: next(_generation))

    def front(self, i: int, j: int) -> list[FrontLabel]:
        return self.entries[(i, j)]

    def result(self, i: int, j: int) -> QueryResult:
        res = QueryResult(self.nodes[i], self.nodes[j], self.entries[(i, j)], self.fwd[i], self.bwd[j])
        res.generation = self.generation
        return res

    def unreachable(self) -> list[tuple[int, int]]:
        return sorted(k for k, v in self.entries.items() if not v)


def build_lookup(fwd: Sequence[SPTree], bwd: Sequence[SPTree]) -> LookupTable:
    if len(fwd) != len(bwd):
        raise ValueError("need one forward and one backward tree per station")
    caps = {t.cap for t in list(fwd) + list(bwd)}
    if len(caps) > 1:
        raise ValueError(f"trees were built with different caps: {sorted(caps)}")
    entries = {}
    for i, f in enumerate(fwd):
        for j, b in enumerate(bwd):
            entries[(i, j)] = merge_spaces(f, b)
    return LookupTable([t.root for t in fwd], list(fwd), list(bwd), entries)


def build_station_trees(ch: CHGraph, nodes: Sequence[int], energy_cap: int) -> tuple[list[SPTree], list[SPTree]]:
    fwd = [build_tree(ch, v, FORWARD, energy_cap) for v in nodes]
    bwd = [build_tree(ch, v, BACKWARD, energy_cap) for v in nodes]
    return fwd, bwd


def reconstruct_path(result: QueryResult, label: FrontLabel, table: LookupTable | None = None) -> list[int]:
    """Node sequence of ``label`` with all shortcuts unpacked."""
    gen = getattr(result, "generation", None)
    if table is not None and gen is not None and gen != table.generation:
        raise StaleHandleError("trees rebuilt since this front was produced")
    return result.path(label)


# ---------------------------------------------------------------- cache files


def cache_key(*parts: bytes | str) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(p.encode() if isinstance(p, str) else p)
        h.update(b"\0")
    return h.hexdigest()[:32]


def _tree_to_json(t: SPTree) -> dict:
    return {
        "root": t.root,
        "direction": t.direction,
        "cap": t.cap,
        "labels": {str(v): [list(lab) for lab in labs] for v, labs in t.labels.items()},
    }


def _tree_from_json(ch: CHGraph, d: dict) -> SPTree:
    t = SearchSpace(ch, d["root"], d["direction"], d["cap"])
    t.labels = {int(v): [TreeLabel(*lab) for lab in labs] for v, labs in d["labels"].items()}
    return t


def save_lookup(table: LookupTable, path: str | Path, key: str) -> None:
    doc = {
        "version": CACHE_VERSION,
        "key": key,
        "nodes": table.nodes,
        "fwd": [_tree_to_json(t) for t in table.fwd],
        "bwd": [_tree_to_json(t) for t in table.bwd],
        "entries": [[i, j, [list(lab) for lab in labs]] for (i, j), labs in sorted(table.entries.items())],
    }
    with gzip.open(path, "wt", encoding="utf-8") as fh:
        json.dump(doc, fh, separators=(",", ":"))


def load_lookup(path: str | Path, ch: CHGraph, key: str | None = None) -> LookupTable:
    """Load a cached table; raises ValueError on version or key mismatch."""
    with gzip.open(path, "rt", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("version") != CACHE_VERSION:
        raise ValueError(f"{path}: cache version {doc.get('version')} != {CACHE_VERSION}")
    if key is not None and doc.get("key") != key:
        raise ValueError(f"{path}: cache key mismatch")
    fwd = [_tree_from_json(ch, d) for d in doc["fwd"]]
    bwd = [_tree_from_json(ch, d) for d in doc["bwd"]]
    entries = {(i, j): [FrontLabel(*lab) for lab in labs] for i, j, labs in doc["entries"]}
    return LookupTable(doc["nodes"], fwd, bwd, entries)
