import json

import pytest

from dqcroute.topology import (
    CouplingGraph, build, build_guadalupe, build_line, from_dict, unify,
)


def test_guadalupe_counts():
    g = build_guadalupe()
    assert g.num_nodes == 16
    assert len(g.edges_p) == 16
    assert len(g.edges_n) == 0
    assert g.num_qpus == 1


def test_guadalupe_degree_sequence():
    g = build_guadalupe()
    deg = [len(g.adj_p[v]) for v in range(16)]
    assert set(deg) <= {1, 2, 3}
    assert sum(deg) == 2 * 16


def test_guadalupe_single_qpu():
    g = build_guadalupe()
    assert set(g.qpu_of) == {0}


def test_line_basics():
    g = build_line(2)
    assert g.num_nodes == 2 and g.edges_p == ((0, 1),)
    g4 = build_line(4)
    assert g4.edges_p == ((0, 1), (1, 2), (2, 3))
    g1 = build_line(1)
    assert g1.num_nodes == 1 and g1.edges_p == ()


def test_line_rejects_zero():
    with pytest.raises(ValueError):
        build_line(0)


def test_unify_two_guadalupe():
    g, offsets = unify([build_guadalupe(), build_guadalupe()], [(0, 15, 1, 0)])
    assert g.num_nodes == 32
    assert len(g.edges_p) == 32
    assert len(g.edges_n) == 1
    assert g.edges_n[0] == (15, 16)
    assert offsets == [0, 16]
    assert g.capacities == {0: 16, 1: 16}


def test_unify_two_lines():
    g, _ = unify([build_line(2), build_line(2)], [(0, 1, 1, 0)])
    assert g.num_nodes == 4
    assert len(g.edges_p) == 2 and len(g.edges_n) == 1


def test_unify_identity():
    base = build_line(2)
    g, offsets = unify([base], [])
    assert offsets == [0]
    assert g.edges_p == base.edges_p and g.edges_n == ()


def test_unify_preserves_adjacency():
    qpus = [build_guadalupe(), build_line(5)]
    g, off = unify(qpus, [(0, 2, 1, 0)])
    for i, qpu in enumerate(qpus):
        for u, v in qpu.edges_p:
            assert (off[i] + u, off[i] + v) in g.edge_p_set


def test_unify_rejects_dangling_and_duplicate_links():
    with pytest.raises(ValueError):
        unify([build_line(2), build_line(2)], [(0, 7, 1, 0)])
    with pytest.raises(ValueError):
        unify([build_line(2), build_line(2)], [(0, 1, 1, 0), (0, 1, 1, 0)])


def test_disconnected_rejected():
    # two QPUs with no link between them
    with pytest.raises(ValueError):
        unify([build_line(2), build_line(2)], [])


def test_invariants_enforced():
    with pytest.raises(ValueError):
        CouplingGraph(2, (0, 0), ((0, 0),), ())  # self loop
    with pytest.raises(ValueError):
        CouplingGraph(2, (0, 1), ((0, 1),), ())  # intra edge across QPUs
    with pytest.raises(ValueError):
        CouplingGraph(2, (0, 0), ((0, 1),), ((0, 1),))  # duplicate + intra link


def test_file_roundtrip(tmp_path):
    data = {"qpus": [{"nodes": 2, "edges": [[0, 1]]}, {"nodes": 2, "edges": [[0, 1]]}],
            "quantum_links": [[0, 1, 1, 0]]}
    path = tmp_path / "topo.json"
    path.write_text(json.dumps(data))
    g = build(f"file:{path}")
    assert g.num_nodes == 4 and len(g.edges_n) == 1
    assert from_dict(data).edges_p == g.edges_p


def test_build_spec_names():
    assert build("guadalupe").num_nodes == 16
    assert build("line:3").num_nodes == 3
    with pytest.raises(ValueError):
        build("ring:5")
