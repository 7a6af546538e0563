import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evroute.models import ConsumptionModel, consumption
from evroute.roadnet import (
    Edge,
    GraphFormatError,
    Node,
    RoadGraph,
    StationSpec,
    annotate_costs,
    dump_graph,
    grid_network,
    load_graph,
    load_stations,
    parse_graph,
    write_graph,
    write_stations,
)

FIVE_NODES = """\
#nodes
10,48.0,8.0
11,48.1,8.1
12,48.1,8.2
13,48.0,8.3
14,47.9,8.1
#edges
10,11,1000,100
10,12,4000,50
10,14,5000,80
11,13,3000,100
11,12,1000,60
12,13,1000,70
"""


def test_load_small_graph(tmp_path):
    p = tmp_path / "g.csv"
    p.write_text(FIVE_NODES)
    g = load_graph(p)
    assert g.num_nodes == 5 and len(g.edges) == 6
    assert [n.id for n in g.nodes] == [0, 1, 2, 3, 4]
    assert g.source_ids == [10, 11, 12, 13, 14]
    assert g.edges[0] == Edge(0, 1, 1000.0, 100.0)
    assert g.index_of(13) == 3
    g.validate()


def test_no_edges_is_an_error():
    with pytest.raises(GraphFormatError, match="graph has no edges"):
        parse_graph(["#nodes", "1,0,0", "#edges"])


def test_dangling_endpoint_names_the_node():
    with pytest.raises(GraphFormatError, match="99") as exc:
        parse_graph(["#nodes", "1,,", "2,,", "#edges", "1,2,10,50", "1,99,10,50"])
    assert exc.value.line == 6


@pytest.mark.parametrize(
    "row, message",
    [
        ("1,2,0,50", "length"),
        ("1,2,-5,50", "length"),
        ("1,2,10,0", "speed"),
        ("1,2,10,351", "speed"),
        ("1,2,ten,50", "could not convert"),
        ("1,2,10", "expected from,to"),
    ],
)
def test_bad_edge_rows(row, message):
    with pytest.raises(GraphFormatError, match=message) as exc:
        parse_graph(["#nodes", "1", "2", "#edges", row], path="x.csv")
    assert exc.value.line == 5
    assert str(exc.value).startswith("x.csv:5:")


def test_duplicate_node_and_missing_header():
    with pytest.raises(GraphFormatError, match="duplicate"):
        parse_graph(["#nodes", "1", "1", "#edges", "1,1,1,1"])
    with pytest.raises(GraphFormatError, match="before"):
        parse_graph(["1,2,3"])


def test_annotate_costs_examples():
    g = RoadGraph([Node(0), Node(1)], [Edge(0, 1, 1000.0, 100.0), Edge(1, 0, 3000.0, 30.0)])
    cg = annotate_costs(g, consumption)
    assert cg.costs[0].time == pytest.approx(36.0)
    assert cg.costs[0].energy == pytest.approx(0.05 + 100**2 / 90000 + 2 / 100, abs=1e-12)
    assert cg.costs[0].energy == pytest.approx(0.18111, abs=1e-5)
    assert cg.costs[1].time == pytest.approx(360.0)
    assert cg.costs[1].energy == pytest.approx(0.38, abs=1e-9)
    assert cg.time_ms == [36000, 360000]
    assert cg.energy_wh == [181, 380]


def test_zero_consumption_stub():
    g = grid_network(3, 2, 1000.0)
    cg = annotate_costs(g, lambda v: 0.0)
    assert all(c.energy == 0 for c in cg.costs)
    assert all(e == 0 for e in cg.energy_wh)


def test_consumption_model():
    m = ConsumptionModel()
    assert m(100) == pytest.approx(0.181111, abs=1e-6)
    # minimum of a + b v^2 + c/v is at v = (c / 2b)^(1/3)
    v = m.optimal_speed()
    assert m(v) <= m(v * 0.99) and m(v) <= m(v * 1.01)
    with pytest.raises(ValueError):
        m(0)


def test_round_trip(tmp_path):
    g = grid_network(5, 4, 2500.0, highway_rows=(1,), seed=3)
    p = tmp_path / "g.csv"
    write_graph(g, p)
    h = load_graph(p)
    assert h.nodes == g.nodes and h.edges == g.edges and h.source_ids == g.source_ids
    assert dump_graph(h) == dump_graph(g)


def test_station_round_trip_and_errors(tmp_path):
    g = parse_graph(FIVE_NODES.splitlines())
    st = [StationSpec(0, 0, 2, 150.0), StationSpec(1, 3, 1, 50.0)]
    p = tmp_path / "s.csv"
    write_stations(st, g, p)
    assert p.read_text().splitlines()[1] == "10,2,150.0"
    assert load_stations(p, g) == st
    for body, message in [("42,1,50", "unknown node 42"), ("10,0,50", "at least one"), ("10,1,-1", "non-positive"), ("10,1", "expected")]:
        p.write_text("node_id,num_points,p_max_kw\n" + body + "\n")
        with pytest.raises(GraphFormatError, match=message):
            load_stations(p, g)
    p.write_text("node_id,num_points,p_max_kw\n")
    with pytest.raises(GraphFormatError, match="no stations"):
        load_stations(p, g)


def test_grid_generator_shape():
    g = grid_network(4, 3, 1000.0, highway_rows=(1,), seed=0)
    assert g.num_nodes == 12
    # two directions per horizontal and vertical link
    assert len(g.edges) == 2 * (3 * 3 + 4 * 2)
    fast = [e for e in g.edges if e.speed == 130.0]
    assert len(fast) == 6 and all(e.length == 1000.0 for e in fast)
    assert all(1000.0 <= e.length <= 1200.0 for e in g.edges)
    g.validate()


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(1.0, 1e5), st.floats(1.0, 350.0)), min_size=1, max_size=20), st.randoms())
def test_costs_are_per_edge_and_order_independent(rows, rnd):
    nodes = [Node(0), Node(1)]
    edges = [Edge(0, 1, length, speed) for length, speed in rows]
    perm = list(range(len(edges)))
    rnd.shuffle(perm)
    a = annotate_costs(RoadGraph(nodes, edges), consumption)
    b = annotate_costs(RoadGraph(nodes, [edges[i] for i in perm]), consumption)
    assert [b.costs[k] for k in range(len(perm))] == [a.costs[i] for i in perm]
    for c, (length, speed) in zip(a.costs, rows):
        assert c.time > 0 and c.energy > 0
        assert math.isclose(c.time, length / (speed / 3.6))
