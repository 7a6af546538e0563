"""Bi-criterion (time, energy) label-setting search over contraction hierarchies.

All costs are integers: time in milliseconds, energy in watt-hours. Labels
are extracted from the queue in lexicographic (time, energy) order, so a
settled label can never be dominated by a later one.
"""
from __future__ import annotations

import heapq
import itertools
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from .roadnet import CostedGraph

FORWARD = "forward"
BACKWARD = "backward"
CH_FORMAT_VERSION = 1

_uid = itertools.count(1)


class Label(NamedTuple):
    time: int
    energy: int
    pred: int = -1
    via: int = -1


def dominates(a, b) -> bool:
    """True iff ``a`` is no worse than ``b`` in both criteria and better in one."""
    return a[0] <= b[0] and a[1] <= b[1] and (a[0] < b[0] or a[1] < b[1])


class ParetoSet:
    """Duplicate-free 2D Pareto set kept sorted by time (energy strictly falls)."""

    __slots__ = ("times", "energies", "items")

    def __init__(self, labels: Iterable = ()):
        self.times: list[int] = []
        self.energies: list[int] = []
        self.items: list = []
        for lab in labels:
            self.insert(lab)

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)

    def costs(self) -> list[tuple[int, int]]:
        return list(zip(self.times, self.energies))

    def covers(self, t: int, e: int) -> bool:
        """True if some member weakly dominates (t, e)."""
        i = bisect_right(self.times, t)
        return i > 0 and self.energies[i - 1] <= e

    def insert(self, label) -> bool:
        return self.insert_cost(label[0], label[1], label) is not None

    def insert_cost(self, t: int, e: int, item) -> list | None:
        """Insert unless dominated or equal; returns the removed items, or None."""
        times, energies = self.times, self.energies
        i = bisect_right(times, t)
        if i > 0 and energies[i - 1] <= e:
            return None
        lo = bisect_left(times, t)
        hi = lo
        n = len(times)
        while hi < n and energies[hi] >= e:
            hi += 1
        removed = self.items[lo:hi]
        times[lo:hi] = [t]
        energies[lo:hi] = [e]
        self.items[lo:hi] = [item]
        return removed


def pareto_insert(pset: ParetoSet, label) -> bool:
    return pset.insert(label)


def pareto_filter(costs: Iterable[tuple]) -> list[tuple]:
    """Non-dominated, duplicate-free subset; first occurrence wins ties."""
    ordered = sorted(enumerate(costs), key=lambda p: (p[1][0], p[1][1], p[0]))
    out = []
    best_e = None
    for _, c in ordered:
        if best_e is None or c[1] < best_e:
            out.append(c)
            best_e = c[1]
    return out


@dataclass
class CHGraph:
    num_nodes: int
    rank: list[int]
    num_contracted: int
    src: list[int]
    dst: list[int]
    time: list[int]
    energy: list[int]
    children: list[tuple[int, int] | None]
    num_original: int
    uid: int = field(default_factory=lambda: next(_uid))

    def __post_init__(self) -> None:
        n = self.num_nodes
        self.up_out: list[list[tuple[int, int, int, int]]] = [[] for _ in range(n)]
        self.up_in: list[list[tuple[int, int, int, int]]] = [[] for _ in range(n)]
        for eid in range(len(self.src)):
            u, v = self.src[eid], self.dst[eid]
            if u == v:
                continue
            t, e = self.time[eid], self.energy[eid]
            if self.upward(u, v):
                self.up_out[u].append((v, t, e, eid))
            if self.upward(v, u):
                self.up_in[v].append((u, t, e, eid))

    def is_core(self, v: int) -> bool:
        return self.rank[v] >= self.num_contracted

    def upward(self, u: int, v: int) -> bool:
        """May a search currently at ``u`` move on to ``v``?"""
        return self.rank[v] > self.rank[u] or (self.is_core(u) and self.is_core(v))

    @property
    def num_shortcuts(self) -> int:
        return len(self.src) - self.num_original

    def shortcuts(self) -> list[int]:
        return list(range(self.num_original, len(self.src)))

    def unpack(self, eid: int) -> list[int]:
        """Original edge ids making up edge ``eid``, in driving order."""
        out = []
        stack = [eid]
        while stack:
            x = stack.pop()
            kids = self.children[x]
            if kids is None:
                out.append(x)
            else:
                stack.append(kids[1])
                stack.append(kids[0])
        return out

    def path_nodes(self, eids: Sequence[int], start: int) -> list[int]:
        nodes = [start]
        for eid in eids:
            for oid in self.unpack(eid):
                nodes.append(self.dst[oid])
        return nodes

    def path_cost(self, eids: Sequence[int]) -> tuple[int, int]:
        t = e = 0
        for eid in eids:
            for oid in self.unpack(eid):
                t += self.time[oid]
                e += self.energy[oid]
        return t, e


# ---------------------------------------------------------------- contraction


class _Dyn:
    """Mutable adjacency among uncontracted nodes; parallel edges kept Pareto-filtered."""

    def __init__(self, n: int):
        self.out: list[dict[int, ParetoSet]] = [dict() for _ in range(n)]
        self.inc: list[dict[int, ParetoSet]] = [dict() for _ in range(n)]

    def add(self, u: int, v: int, t: int, e: int, eid: int) -> bool:
        ps = self.out[u].get(v)
        if ps is None:
            ps = ParetoSet()
            self.out[u][v] = ps
            self.inc[v][u] = ps
        return ps.insert_cost(t, e, eid) is not None

    def remove_node(self, v: int) -> None:
        for w in self.out[v]:
            del self.inc[w][v]
        for u in self.inc[v]:
            del self.out[u][v]
        self.out[v] = {}
        self.inc[v] = {}


def _witness_search(dyn: _Dyn, source: int, avoid: int, max_t: int, max_e: int, limit: int) -> tuple[dict[int, ParetoSet], bool]:
    """Bounded Pareto search from ``source`` that never enters ``avoid``."""
    fronts: dict[int, ParetoSet] = {source: ParetoSet()}
    fronts[source].insert_cost(0, 0, 0)
    heap = [(0, 0, source)]
    settled = 0
    while heap:
        t, e, v = heapq.heappop(heap)
        fv = fronts[v]
        # Skip labels that were displaced after being queued.
        i = bisect_left(fv.times, t)
        if i >= len(fv.times) or fv.times[i] != t or fv.energies[i] != e:
            continue
        settled += 1
        if settled > limit:
            return fronts, False
        for w, ps in dyn.out[v].items():
            if w == avoid:
                continue
            for ct, ce in zip(ps.times, ps.energies):
                nt, ne = t + ct, e + ce
                if nt > max_t or ne > max_e:
                    continue
                fw = fronts.get(w)
                if fw is None:
                    fw = fronts[w] = ParetoSet()
                if fw.insert_cost(nt, ne, 0) is not None:
                    heapq.heappush(heap, (nt, ne, w))
    return fronts, True


def _needed_shortcuts(dyn: _Dyn, v: int, limit: int) -> list[tuple[int, int, int, int, int, int]]:
    """Shortcuts (u, w, t, e, e_in, e_out) required when ``v`` is removed."""
    needed = []
    outs = dyn.out[v]
    for u, in_ps in dyn.inc[v].items():
        cands: dict[int, list[tuple[int, int, int, int]]] = {}
        max_t = max_e = 0
        for w, out_ps in outs.items():
            if w == u:
                continue
            pairs = []
            for t1, e1, id1 in zip(in_ps.times, in_ps.energies, in_ps.items):
                for t2, e2, id2 in zip(out_ps.times, out_ps.energies, out_ps.items):
                    pairs.append((t1 + t2, e1 + e2, id1, id2))
            pairs = pareto_filter(pairs)
            cands[w] = pairs
            for c in pairs:
                max_t = max(max_t, c[0])
                max_e = max(max_e, c[1])
        if not cands:
            continue
        fronts, _complete = _witness_search(dyn, u, v, max_t, max_e, limit)
        for w, pairs in cands.items():
            fw = fronts.get(w)
            for t, e, id1, id2 in pairs:
                if fw is not None and fw.covers(t, e):
                    continue
                needed.append((u, w, t, e, id1, id2))
    return needed


def contract(graph: CostedGraph, order_policy="edge-difference", contract_fraction: float = 1.0, witness_limit: int = 400) -> CHGraph:
    """Build a (possibly core-restricted) contraction hierarchy.

    ``order_policy`` is either ``"edge-difference"`` (lazy re-evaluation, ties
    by node id) or an explicit sequence of node ids giving the contraction order.
    """
    if not 0.0 <= contract_fraction <= 1.0:
        raise ValueError(f"contract_fraction must lie in [0, 1], got {contract_fraction}")
    n = graph.num_nodes
    src = list(graph.sources)
    dst = list(graph.targets)
    tim = list(graph.time_ms)
    eng = list(graph.energy_wh)
    children: list[tuple[int, int] | None] = [None] * len(src)
    dyn = _Dyn(n)
    for eid, (u, v) in enumerate(zip(src, dst)):
        if u != v:
            dyn.add(u, v, tim[eid], eng[eid], eid)

    budget = int(contract_fraction * n + 1e-9)
    rank = [-1] * n
    deleted_nbrs = [0] * n

    def priority(v: int) -> tuple[int, list]:
        needed = _needed_shortcuts(dyn, v, witness_limit)
        removed = sum(len(ps) for ps in dyn.out[v].values()) + sum(len(ps) for ps in dyn.inc[v].values())
        return len(needed) - removed + deleted_nbrs[v], needed

    def do_contract(v: int, level: int, needed: list | None = None) -> None:
        if needed is None:
            needed = _needed_shortcuts(dyn, v, witness_limit)
        for u, w, t, e, id1, id2 in needed:
            eid = len(src)
            src.append(u)
            dst.append(w)
            tim.append(t)
            eng.append(e)
            children.append((id1, id2))
            dyn.add(u, w, t, e, eid)
        for x in set(dyn.out[v]) | set(dyn.inc[v]):
            deleted_nbrs[x] += 1
        dyn.remove_node(v)
        rank[v] = level

    if isinstance(order_policy, str):
        if order_policy != "edge-difference":
            raise ValueError(f"unknown order policy {order_policy!r}")
        heap = [(priority(v)[0], v) for v in range(n)] if budget else []
        heapq.heapify(heap)
        level = 0
        while heap and level < budget:
            _, v = heapq.heappop(heap)
            p, needed = priority(v)
            if heap and (p, v) > heap[0]:
                heapq.heappush(heap, (p, v))
                continue
            # the graph has not changed since the priority check
            do_contract(v, level, needed)
            level += 1
    else:
        order = list(order_policy)
        if len(set(order)) != len(order) or any(not 0 <= v < n for v in order):
            raise ValueError("explicit order must list distinct, valid node ids")
        for level, v in enumerate(order[:budget]):
            do_contract(v, level)
        level = min(budget, len(order))

    num_contracted = sum(1 for r in rank if r >= 0)
    nxt = num_contracted
    for v in range(n):
        if rank[v] < 0:
            rank[v] = nxt
            nxt += 1
    return CHGraph(n, rank, num_contracted, src, dst, tim, eng, children, graph.num_edges)


# ---------------------------------------------------------------- CH file format


def save_ch(ch: CHGraph, path: str | Path) -> None:
    lines = [f"# evroute-ch {CH_FORMAT_VERSION}", f"nodes,{ch.num_nodes},contracted,{ch.num_contracted},original,{ch.num_original}", "#ranks"]
    lines += [str(r) for r in ch.rank]
    lines.append("#edges")
    for eid in range(len(ch.src)):
        kids = ch.children[eid]
        c1, c2 = kids if kids is not None else (-1, -1)
        lines.append(f"{ch.src[eid]},{ch.dst[eid]},{ch.time[eid]},{ch.energy[eid]},{c1},{c2}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_ch(path: str | Path) -> CHGraph:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0].strip() != f"# evroute-ch {CH_FORMAT_VERSION}":
        raise ValueError(f"{path}: not a version {CH_FORMAT_VERSION} CH file")
    head = text[1].split(",")
    n, k, m = int(head[1]), int(head[3]), int(head[5])
    i = 3
    rank = [int(x) for x in text[i : i + n]]
    i += n
    if text[i].strip() != "#edges":
        raise ValueError(f"{path}: malformed CH file")
    src, dst, tim, eng, children = [], [], [], [], []
    for row in text[i + 1 :]:
        if not row.strip():
            continue
        a, b, t, e, c1, c2 = (int(x) for x in row.split(","))
        src.append(a)
        dst.append(b)
        tim.append(t)
        eng.append(e)
        children.append(None if c1 < 0 else (c1, c2))
    return CHGraph(n, rank, k, src, dst, tim, eng, children, m)


# ---------------------------------------------------------------- label search


class SearchSpace:
    """Settled labels of one upward exploration, indexable for path rebuilding.

    ``labels[v]`` lists the labels settled at ``v`` in extraction order, i.e.
    sorted by time with strictly falling energy. Each entry is a
    ``TreeLabel(time, energy, pred, edge, parent)`` where ``parent`` indexes
    ``labels[pred]``.
    """

    def __init__(self, ch: CHGraph, root: int, direction: str, cap: int):
        if direction not in (FORWARD, BACKWARD):
            raise ValueError(f"direction must be {FORWARD!r} or {BACKWARD!r}")
        self.ch = ch
        self.root = root
        self.direction = direction
        self.cap = cap
        self.labels: dict[int, list[TreeLabel]] = {}
        self.uid = next(_uid)


class TreeLabel(NamedTuple):
    time: int
    energy: int
    pred: int
    edge: int
    parent: int


class _Explorer:
    """Incremental label-setting search (one direction)."""

    def __init__(self, ch: CHGraph, root: int, direction: str, cap: int):
        self.space = SearchSpace(ch, root, direction, cap)
        self.adj = ch.up_out if direction == FORWARD else ch.up_in
        self.cap = cap
        self.fronts: dict[int, ParetoSet] = {}
        # label record: [time, energy, node, pred, edge, parent_node_index, alive]
        self.heap: list[tuple[int, int, int, int]] = []
        self._seq = itertools.count()
        if cap >= 0:
            self._offer(root, 0, 0, -1, -1, -1)

    def _offer(self, v: int, t: int, e: int, pred: int, edge: int, parent: int) -> None:
        fv = self.fronts.get(v)
        if fv is None:
            fv = self.fronts[v] = ParetoSet()
        rec = [t, e, v, pred, edge, parent, True]
        removed = fv.insert_cost(t, e, rec)
        if removed is None:
            return
        for old in removed:
            old[6] = False
        heapq.heappush(self.heap, (t, e, next(self._seq), rec))

    def top(self):
        while self.heap and not self.heap[0][3][6]:
            heapq.heappop(self.heap)
        return self.heap[0] if self.heap else None

    def pop(self):
        """Settle the next label; returns (node, index) or None when exhausted."""
        if self.top() is None:
            return None
        t, e, _, rec = heapq.heappop(self.heap)
        rec[6] = False  # settled labels leave the queue for good
        v = rec[2]
        settled = self.space.labels.setdefault(v, [])
        idx = len(settled)
        settled.append(TreeLabel(t, e, rec[3], rec[4], rec[5]))
        return v, idx

    def relax(self, v: int, idx: int) -> None:
        lab = self.space.labels[v][idx]
        cap = self.cap
        for w, ct, ce, eid in self.adj[v]:
            ne = lab.energy + ce
            if ne > cap:
                continue
            self._offer(w, lab.time + ct, ne, v, eid, idx)

    def run(self) -> SearchSpace:
        while True:
            got = self.pop()
            if got is None:
                return self.space
            self.relax(*got)


def explore(ch: CHGraph, root: int, direction: str, cap: int) -> SearchSpace:
    """Exhaustive upward exploration from ``root`` truncated at energy ``cap``."""
    return _Explorer(ch, root, direction, cap).run()


class FrontLabel(NamedTuple):
    time: int
    energy: int
    meet: int
    fwd: int  # index into fwd.labels[meet]
    bwd: int  # index into bwd.labels[meet]


class StaleHandleError(RuntimeError):
    pass


@dataclass
class QueryResult:
    """An origin-destination Pareto front plus what is needed to rebuild paths."""

    source: int
    target: int
    labels: list[FrontLabel]
    fwd: SearchSpace
    bwd: SearchSpace

    def costs(self) -> list[tuple[int, int]]:
        return [(lab.time, lab.energy) for lab in self.labels]

    def __len__(self) -> int:
        return len(self.labels)

    def edges(self, label: FrontLabel) -> list[int]:
        return _label_edges(self.fwd, self.bwd, label)

    def path(self, label: FrontLabel) -> list[int]:
        return self.fwd.ch.path_nodes(self.edges(label), self.source)

    def original_edges(self, label: FrontLabel) -> list[int]:
        ch = self.fwd.ch
        return [o for eid in self.edges(label) for o in ch.unpack(eid)]


def _label_edges(fwd: SearchSpace, bwd: SearchSpace, label: FrontLabel) -> list[int]:
    head = []
    v, idx = label.meet, label.fwd
    while True:
        lab = fwd.labels[v][idx]
        if lab.pred < 0:
            break
        head.append(lab.edge)
        v, idx = lab.pred, lab.parent
    head.reverse()
    v, idx = label.meet, label.bwd
    while True:
        lab = bwd.labels[v][idx]
        if lab.pred < 0:
            break
        head.append(lab.edge)
        v, idx = lab.pred, lab.parent
    return head


def merge_spaces(fwd: SearchSpace, bwd: SearchSpace, cap: int | None = None) -> list[FrontLabel]:
    """Sumset at every common node, per-node dominance filter, then a global one."""
    if cap is None:
        cap = min(fwd.cap, bwd.cap)
    small, large = (fwd.labels, bwd.labels) if len(fwd.labels) <= len(bwd.labels) else (bwd.labels, fwd.labels)
    common = sorted(v for v in small if v in large)
    pool: list[FrontLabel] = []
    for v in common:
        fl, bl = fwd.labels[v], bwd.labels[v]
        local = ParetoSet()
        for i, a in enumerate(fl):
            for j, b in enumerate(bl):
                e = a.energy + b.energy
                if e > cap:
                    continue
                t = a.time + b.time
                local.insert_cost(t, e, FrontLabel(t, e, v, i, j))
        pool.extend(local.items)
    result = ParetoSet()
    # Deterministic tie-break: lowest meeting node wins between equal costs.
    for lab in sorted(pool, key=lambda x: (x.time, x.energy, x.meet)):
        result.insert_cost(lab.time, lab.energy, lab)
    return list(result.items)


def mc_query(ch: CHGraph, s: int, t: int, energy_cap: int) -> QueryResult:
    """Exact Pareto front of s->t paths with energy <= ``energy_cap``.

    Both upward searches run interleaved; a label weakly dominated by the
    front assembled so far is dropped, since extending it cannot help.
    """
    if energy_cap < 0:
        raise ValueError("energy_cap must be non-negative")
    fwd = _Explorer(ch, s, FORWARD, energy_cap)
    bwd = _Explorer(ch, t, BACKWARD, energy_cap)
    front = ParetoSet()

    def meet(v: int, idx: int, mine: SearchSpace, other: SearchSpace, forward: bool) -> None:
        lab = mine.labels[v][idx]
        for j, o in enumerate(other.labels.get(v, ())):
            e = lab.energy + o.energy
            if e > energy_cap:
                continue
            tt = lab.time + o.time
            fl = FrontLabel(tt, e, v, idx, j) if forward else FrontLabel(tt, e, v, j, idx)
            front.insert_cost(tt, e, fl)

    while True:
        a, b = fwd.top(), bwd.top()
        if a is None and b is None:
            break
        side, other, forward = (fwd, bwd, True) if b is None or (a is not None and a[:2] <= b[:2]) else (bwd, fwd, False)
        top = side.top()
        if front.covers(top[0], top[1]):
            heapq.heappop(side.heap)
            top[3][6] = False
            continue
        v, idx = side.pop()
        meet(v, idx, side.space, other.space, forward)
        side.relax(v, idx)
    labels = sorted(front.items, key=lambda x: (x.time, x.energy))
    return QueryResult(s, t, labels, fwd.space, bwd.space)


@dataclass
class SingleResult:
    cost: int
    path: list[int]
    edges: list[int]


def sc_query(ch: CHGraph, s: int, t: int, criterion: str = "time") -> SingleResult | None:
    """Single-criterion bidirectional CH Dijkstra; None when unreachable."""
    if criterion not in ("time", "energy"):
        raise ValueError(f"criterion must be 'time' or 'energy', got {criterion!r}")
    k = 1 if criterion == "time" else 2
    if s == t:
        return SingleResult(0, [s], [])
    dist = ({s: 0}, {t: 0})
    parent: tuple[dict[int, tuple[int, int]], dict[int, tuple[int, int]]] = ({}, {})
    heaps = ([(0, s)], [(0, t)])
    done = (set(), set())
    adjs = (ch.up_out, ch.up_in)
    best = None
    best_node = -1
    while heaps[0] or heaps[1]:
        d = 0 if (heaps[0] and (not heaps[1] or heaps[0][0][0] <= heaps[1][0][0])) else 1
        if best is not None and heaps[d][0][0] >= best:
            # The other side's top is no smaller, so both are exhausted usefully.
            other = 1 - d
            if not heaps[other] or heaps[other][0][0] >= best:
                break
        c, v = heapq.heappop(heaps[d])
        if v in done[d] or c > dist[d].get(v, c):
            continue
        done[d].add(v)
        od = dist[1 - d].get(v)
        if od is not None and (best is None or c + od < best):
            best, best_node = c + od, v
        for w, ct, ce, eid in adjs[d][v]:
            nc = c + (ct if k == 1 else ce)
            if nc < dist[d].get(w, nc + 1):
                dist[d][w] = nc
                parent[d][w] = (v, eid)
                heapq.heappush(heaps[d], (nc, w))
    if best is None:
        return None
    head = []
    v = best_node
    while v in parent[0] and v != s:
        v, eid = parent[0][v]
        head.append(eid)
    head.reverse()
    v = best_node
    while v in parent[1] and v != t:
        v, eid = parent[1][v]
        head.append(eid)
    orig = [o for eid in head for o in ch.unpack(eid)]
    return SingleResult(best, ch.path_nodes(orig, s), orig)
