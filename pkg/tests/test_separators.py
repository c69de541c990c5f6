import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import floyd_warshall, random_graph, union_find_labels, virtual_vertex_fields
from sepastar.graph import Graph, gate_vertices, generate_bottleneck, generate_grid, reverse, symmetrize
from sepastar.search import dijkstra_one_to_all
from sepastar.separators import (
    SEP,
    PolylineSpec,
    Separator,
    SeparatorError,
    SeparatorHeuristic,
    axis_cuts,
    cost_diameter,
    label_components,
    preprocess_sh,
    separator_from_polyline,
    sh_h,
    sh_to_target,
    side_labels,
    signed_field,
    validate_separator,
    write_signed_field_csv,
)

TOL = 1e-9
X15 = PolylineSpec([(1.5, -5.0), (1.5, 5.0)])


def _random_separators(rng, g, count):
    seps = []
    for _ in range(count):
        size = int(rng.integers(1, max(2, g.n // 4) + 1))
        seps.append(Separator(rng.choice(g.n, size=size, replace=False).tolist()))
    return seps


# -- geometry ----------------------------------------------------------------


def test_polyline_x15_on_d7(d7):
    s = separator_from_polyline(d7, X15)
    assert s.vertices == (1, 2)
    # reversing the traversal direction picks the other side
    assert separator_from_polyline(d7, PolylineSpec([(1.5, 5.0), (1.5, -5.0)])).vertices == (3,)


def test_polyline_missing_graph_gives_invalid_separator(d7):
    s = separator_from_polyline(d7, PolylineSpec([(10, 10), (11, 12)]))
    assert len(s) == 0
    assert not validate_separator(d7, s).valid
    with pytest.raises(SeparatorError):
        preprocess_sh(d7, [s])


def test_polyline_degenerate():
    with pytest.raises(SeparatorError):
        PolylineSpec([(0, 0), (0, 0), (1, 1)])
    with pytest.raises(SeparatorError):
        PolylineSpec([(0, 0)])


def test_grid_line_picks_column():
    g = generate_grid(6, 6, (1, 1), seed=0)
    s = separator_from_polyline(g, PolylineSpec([(0.5, -1), (0.5, 7)]))
    assert s.vertices == tuple(v for v in range(g.n) if g.positions[v, 0] == 0)


def test_polyline_bend():
    g = generate_grid(6, 6, (1, 1), seed=0)
    # an L-shaped cut around the lower-left 3x3 block, traversed so the block is on the left
    spec = PolylineSpec([(2.5, -1), (2.5, 2.5), (-1, 2.5)])
    s = separator_from_polyline(g, spec)
    lab = label_components(g, s)
    assert validate_separator(g, s).valid and lab.count == 2
    assert _crossing_free(g, side_labels(g, spec, s))


def _crossing_free(g, labels):
    lt, lh = labels.label[g.tails], labels.label[g.heads]
    return not np.any((lt != SEP) & (lh != SEP) & (lt != lh))


def test_axis_cuts_positions():
    g = Graph.from_arcs([(0, 0), (2, 2)], [(0, 1, 1.0)])
    (spec,) = axis_cuts(g, 1, 0)
    assert {p[0] for p in spec.points} == {1.0}
    assert spec.points[0][1] < 0 and spec.points[1][1] > 2
    (spec,) = axis_cuts(g, 0, 1)
    assert {p[1] for p in spec.points} == {1.0}
    assert axis_cuts(g, 0, 0) == []
    with pytest.raises(ValueError):
        axis_cuts(g, -1, 0)


def test_axis_cuts_validate_on_grid():
    g = generate_grid(64, 64, (0.5, 2.0), 0.1, seed=1)
    specs = axis_cuts(g, 3, 3)
    assert len(specs) == 6
    for spec in specs:
        s = separator_from_polyline(g, spec)
        assert len(s) == 64
        rep = validate_separator(g, s)
        assert rep.valid and rep.crossing_arcs == 0 and len(rep.component_sizes) == 2
        assert _crossing_free(g, side_labels(g, spec, s))


# -- labels and validation ---------------------------------------------------


def test_label_components_d7(d7):
    lab = label_components(d7, Separator([1, 2]))
    assert lab.label.tolist() == [0, SEP, SEP, 1]
    assert lab.count == 2 and lab.sizes() == [1, 1]


def test_label_components_all_nodes(d7):
    lab = label_components(d7, Separator(range(4)))
    assert lab.count == 0 and np.all(lab.label == SEP)
    rep = validate_separator(d7, Separator(range(4)))
    assert rep.valid and rep.component_sizes == []
    assert rep.cost_diameter == floyd_warshall(symmetrize(d7)).max()


def test_label_components_matches_union_find():
    rng = np.random.default_rng(8)
    for _ in range(50):
        g = random_graph(rng, int(rng.integers(2, 40)), p=0.08)
        (s,) = _random_separators(rng, g, 1)
        lab = label_components(g, s)
        ref = union_find_labels(g, set(s.vertices))
        for u in range(g.n):
            for v in range(g.n):
                if ref[u] is None or ref[v] is None:
                    continue
                assert (lab.label[u] == lab.label[v]) == (ref[u] == ref[v])
        assert np.all(lab.label[list(s.vertices)] == SEP)
        assert lab == label_components(g, s)


def test_bottleneck_gate_labels():
    g = generate_bottleneck(32, 3, (0.5, 2.0), seed=3)
    lab = label_components(g, Separator(gate_vertices(g)))
    assert lab.count == 2
    assert sum(lab.sizes()) == g.n - 3


def test_validate_d7(d7):
    rep = validate_separator(d7, Separator([1, 2]))
    assert rep.valid and rep.crossing_arcs == 0
    assert rep.component_sizes == [1, 1]
    assert rep.cost_diameter == 1.5 == floyd_warshall(symmetrize(d7))[1, 2]
    assert set(rep.witness) == {1, 2} and not rep.approximate
    text = rep.format()
    assert "crossing_arcs: 0" in text and "cost_diameter: 1.5" in text


def test_validate_rejects_partial_separator(d7):
    # S={2} (1-based) leaves arcs 3<->4 joining the two sides of x=1.5
    s = Separator([1])
    rep = validate_separator(d7, s, side_labels(d7, X15, s))
    assert rep.crossing_arcs == 2 and not rep.valid


def test_cost_diameter_sampled_flag():
    g = generate_grid(30, 30, (1, 1), seed=0)
    s = Separator(range(600))
    d, w, approx = cost_diameter(g, s)
    assert approx and d <= _manhattan_extent(g)
    assert w is not None


def _manhattan_extent(g):
    x0, y0, x1, y1 = g.bounding_box
    return (x1 - x0) + (y1 - y0)


# -- SH preprocessing and queries --------------------------------------------


def test_preprocess_sh_d7(d7):
    d = preprocess_sh(d7, [Separator([1, 2])])
    assert d.from_sep[0].tolist() == [1.0, 0.0, 0.0, 1.0]
    assert d.to_sep[0].tolist() == [1.0, 0.0, 0.0, 0.5]


def test_sh_h_d7(d7):
    d = preprocess_sh(d7, [Separator([1, 2])])
    fw = floyd_warshall(d7)
    assert sh_h(d, 0, 3) == 2.0 == fw[0, 3]
    assert sh_h(d, 3, 0) == 1.5 == fw[3, 0]
    for t in range(4):
        assert sh_h(d, t, t) == 0.0
        assert sh_to_target(d, t).tolist() == [sh_h(d, v, t) for v in range(4)]


def test_preprocess_sh_rejects_empty_separator(d7):
    with pytest.raises(SeparatorError):
        preprocess_sh(d7, [Separator([])])


def test_virtual_vertex_equivalence():
    rng = np.random.default_rng(21)
    for _ in range(100):
        n = int(rng.integers(2, 51))
        g = random_graph(rng, n)
        seps = _random_separators(rng, g, 2)
        d = preprocess_sh(g, seps)
        rev = reverse(g)
        for i, s in enumerate(seps):
            src = list(s.vertices)
            # literal virtual node n joined to S, searched from once
            pos = np.vstack([g.positions, [[0.0, 0.0]]])
            out_g = Graph.from_arcs(pos, g.arc_multiset() + [(n, v, 0.0) for v in src])
            in_g = Graph.from_arcs(pos, g.arc_multiset() + [(v, n, 0.0) for v in src])
            assert np.array_equal(d.from_sep[i], dijkstra_one_to_all(out_g, n).cost[:n])
            assert np.array_equal(d.to_sep[i], dijkstra_one_to_all(reverse(in_g), n).cost[:n])
            # per-vertex minimum over single-source fields
            assert np.array_equal(d.from_sep[i], np.min([dijkstra_one_to_all(g, v).cost for v in src], axis=0))
            assert np.array_equal(d.to_sep[i], np.min([dijkstra_one_to_all(rev, v).cost for v in src], axis=0))
            # and an all-pairs oracle sharing no search code
            frm, to = virtual_vertex_fields(g, src)
            assert np.allclose(d.from_sep[i], frm, rtol=1e-12, atol=0, equal_nan=False)
            assert np.allclose(d.to_sep[i], to, rtol=1e-12, atol=0)
            assert np.all(d.from_sep[i][src] == 0) and np.all(d.to_sep[i][src] == 0)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 40), k=st.integers(1, 4))
def test_sh_admissible_and_consistent(seed, n, k):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n, p=float(rng.uniform(0.03, 0.3)))
    d = preprocess_sh(g, _random_separators(rng, g, k))
    fw = floyd_warshall(g)
    for t in range(n):
        ht = sh_to_target(d, t)
        assert ht[t] == 0 and np.all(ht >= 0)
        fin = np.isfinite(fw[:, t])
        assert np.all(ht[fin] <= fw[fin, t] * (1 + TOL) + TOL)
        ok = fin[g.heads]
        rhs = g.weights[ok] + ht[g.heads][ok]
        assert np.all(ht[g.tails][ok] <= rhs + TOL * np.maximum(1.0, rhs))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 100_000), n=st.integers(2, 40))
def test_sh_monotone_in_separators(seed, n):
    rng = np.random.default_rng(seed)
    g = random_graph(rng, n)
    seps = _random_separators(rng, g, 3)
    small = preprocess_sh(g, seps[:1])
    big = preprocess_sh(g, seps)
    for t in range(n):
        assert np.all(sh_to_target(big, t) >= sh_to_target(small, t))


def test_sh_evaluator_binding(d7):
    h = SeparatorHeuristic(preprocess_sh(d7, [Separator([1, 2]), Separator([0])]))
    for t in range(4):
        bound = h.bind(t)
        assert [bound(v) for v in range(4)] == [h.estimate(v, t) for v in range(4)]


def test_cross_component_slack_bounded_by_diameter():
    g = symmetrize(generate_bottleneck(16, 1, (0.5, 2.0), seed=2))
    s = Separator(gate_vertices(g))
    d = preprocess_sh(g, [s])
    diam = validate_separator(g, s).cost_diameter
    lab = d.labels[0]
    fw_rows = {}
    rng = np.random.default_rng(0)
    for _ in range(200):
        v, t = (int(x) for x in rng.integers(g.n, size=2))
        if lab[v] == SEP or lab[t] == SEP or lab[v] == lab[t]:
            continue
        if v not in fw_rows:
            fw_rows[v] = dijkstra_one_to_all(g, v).cost
        assert fw_rows[v][t] - sh_h(d, v, t) <= diam + TOL


# -- signed field --------------------------------------------------------------


def test_signed_field_d7(d7):
    g = symmetrize(d7)
    s = Separator([1, 2])
    sf = signed_field(g, s)
    assert sf.value[0] == 1.0
    assert sf.value[3] == -0.5  # symmetrized 3-4 (1-based) weight is min(2.5, 0.5)
    assert sf.value[1] == sf.value[2] == 0.0
    d = preprocess_sh(g, [s])
    assert abs(sf.value[0] - sf.value[3]) == sh_h(d, 0, 3) == sh_h(d, 3, 0)


def test_signed_field_errors(d7):
    with pytest.raises(SeparatorError):
        signed_field(d7, Separator([1, 2]))
    with pytest.raises(SeparatorError):
        signed_field(symmetrize(d7), Separator([0]))


def test_signed_field_sign_per_component():
    g = symmetrize(generate_bottleneck(8, 2, (0.5, 2.0), seed=4))
    s = Separator(gate_vertices(g))
    sf = signed_field(g, s)
    lab = label_components(g, s).label
    assert np.all(sf.value[lab == 0] > 0) and np.all(sf.value[lab == 1] < 0)
    ms = np.abs(sf.value)
    for v in range(0, g.n, 5):
        assert ms[v] == pytest.approx(min(dijkstra_one_to_all(g, u).cost[v] for u in s.vertices), rel=1e-12)


def test_write_signed_field_csv(d7):
    g = symmetrize(d7)
    buf = io.StringIO()
    write_signed_field_csv(g, signed_field(g, Separator([1, 2])), buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "node,x,y,signed_cost"
    assert lines[1] == "1,0.0,0.0,1.0" and lines[4] == "4,2.0,0.0,-0.5"
