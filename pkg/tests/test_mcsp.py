import random

import pytest
from conftest import brute_front, toy_graph, names, node, random_costed
from hypothesis import given, settings
from hypothesis import strategies as st

from evroute.mcsp import (
    Label,
    ParetoSet,
    contract,
    dominates,
    load_ch,
    mc_query,
    pareto_filter,
    pareto_insert,
    save_ch,
    sc_query,
)
from evroute.roadnet import CostedGraph

BIG = 10**9


def test_dominates_examples():
    assert dominates((3, 7), (4, 13))
    assert not dominates((3, 7), (3, 7))
    assert not dominates((3, 7), (5, 3))
    assert dominates(Label(3, 7), Label(3, 8))


def test_pareto_insert_examples():
    s = ParetoSet([(4, 13), (5, 12), (6, 9)])
    assert not pareto_insert(s, (6, 12))
    assert s.costs() == [(4, 13), (5, 12), (6, 9)]
    s = ParetoSet([(8, 8)])
    assert pareto_insert(s, (8, 6))
    assert s.costs() == [(8, 6)]
    assert pareto_insert(ParetoSet(), (1, 1))
    assert not pareto_insert(ParetoSet([(1, 1)]), (1, 1))


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), max_size=40))
def test_pareto_set_invariant(pairs):
    s = ParetoSet()
    for p in pairs:
        before = s.costs()
        inserted = s.insert(p)
        assert inserted == (not any(a <= p[0] and b <= p[1] for a, b in before))
    got = s.costs()
    for a in got:
        assert not any(dominates(b, a) or (b == a and b is not a) for b in got if b is not a)
    assert got == sorted(set(pareto_filter(pairs)))
    assert got == [p for p in sorted(set(pairs)) if not any(dominates(q, p) for q in pairs)]


def test_toy_graph_queries():
    g = toy_graph()
    ch = contract(g)
    a, d = node("A"), node("D")
    assert mc_query(ch, a, d, BIG).costs() == [(3, 7), (4, 6), (5, 3)]
    assert sc_query(ch, a, d, "time").cost == 3
    assert sc_query(ch, a, d, "energy").cost == 3
    assert sc_query(ch, a, a, "time").cost == 0
    assert mc_query(ch, a, a, BIG).costs() == [(0, 0)]
    # cheapest A->D energy is 3, so a cap of 2 leaves nothing
    assert mc_query(ch, a, d, 2).costs() == []
    assert sc_query(ch, node("G"), a, "time") is None


def test_toy_graph_paths_match_labels():
    g = toy_graph()
    ch = contract(g)
    res = mc_query(ch, node("A"), node("G"), BIG)
    assert res.costs() == [(4, 13), (5, 12), (6, 9), (8, 6)]
    paths = {lab[:2]: names(res.path(lab)) for lab in res.labels}
    assert paths[(8, 6)] == "A-E-F-G"
    assert paths[(6, 9)] == "A-C-D-G"
    for lab in res.labels:
        eids = res.original_edges(lab)
        assert (sum(g.time_ms[e] for e in eids), sum(g.energy_wh[e] for e in eids)) == (lab.time, lab.energy)


def test_fraction_zero_adds_no_shortcuts():
    g = random_costed(random.Random(3), 30)
    ch = contract(g, contract_fraction=0.0)
    assert ch.num_shortcuts == 0
    for s, t in [(0, 5), (7, 2), (11, 29)]:
        assert mc_query(ch, s, t, BIG).costs() == brute_front(g, s, t, BIG)


def test_path_graph_single_shortcut():
    g = CostedGraph.from_costs(3, [(0, 1, 2, 5), (1, 2, 3, 7)])
    ch = contract(g)
    # whichever node goes first, only the middle one needs a shortcut
    sc = ch.shortcuts()
    if ch.rank[1] < min(ch.rank[0], ch.rank[2]):
        assert len(sc) == 1
        assert (ch.src[sc[0]], ch.dst[sc[0]], ch.time[sc[0]], ch.energy[sc[0]]) == (0, 2, 5, 12)
    else:
        assert sc == []
    assert mc_query(ch, 0, 2, BIG).costs() == [(5, 12)]


def test_shortcut_costs_are_sums():
    g = random_costed(random.Random(5), 60)
    ch = contract(g)
    assert ch.num_shortcuts > 0
    for eid in ch.shortcuts():
        a, b = ch.children[eid]
        assert ch.time[eid] == ch.time[a] + ch.time[b]
        assert ch.energy[eid] == ch.energy[a] + ch.energy[b]
        assert ch.dst[a] == ch.src[b] and ch.src[eid] == ch.src[a] and ch.dst[eid] == ch.dst[b]


@pytest.mark.parametrize("fraction", [1.0, 0.8])
def test_random_graph_matches_oracle(fraction):
    rng = random.Random(int(fraction * 100))
    g = random_costed(rng, 50)
    ch = contract(g, contract_fraction=fraction)
    for _ in range(100):
        s, t = rng.randrange(50), rng.randrange(50)
        cap = rng.choice([BIG, 150])
        res = mc_query(ch, s, t, cap)
        assert res.costs() == brute_front(g, s, t, cap)
        for lab in res.labels:
            p = res.path(lab)
            assert p[0] == s and p[-1] == t
            assert ch.path_cost(res.edges(lab)) == (lab.time, lab.energy)
        front = res.costs()
        for crit, k in (("time", 0), ("energy", 1)):
            r = sc_query(ch, s, t, crit)
            if cap == BIG:
                assert (r is None) == (not front)
                if front:
                    assert r.cost == min(c[k] for c in front)


def test_ch_file_round_trip(tmp_path):
    g = random_costed(random.Random(9), 40)
    ch = contract(g)
    save_ch(ch, tmp_path / "ch.txt")
    back = load_ch(tmp_path / "ch.txt")
    assert (back.rank, back.src, back.dst, back.time, back.energy, back.children) == (ch.rank, ch.src, ch.dst, ch.time, ch.energy, ch.children)
    assert back.num_contracted == ch.num_contracted and back.num_original == ch.num_original
    assert mc_query(back, 1, 17, BIG).costs() == mc_query(ch, 1, 17, BIG).costs()
    (tmp_path / "bad.txt").write_text("not a ch file\n")
    with pytest.raises(ValueError):
        load_ch(tmp_path / "bad.txt")
