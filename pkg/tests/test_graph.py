import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import dense, graph_from_pairs, random_digraph
from statusnet.errors import ParseError, ValidationError
from statusnet.graph import (SocialGraph, load_graph, load_npz, neighbors, save_graph, save_npz,
                             transpose)


def write(tmp_path, text, name="edges.tsv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoad:
    def test_small_file(self, tmp_path):
        g = load_graph(write(tmp_path, "a\tb\nb\ta\nb\tc\n"))
        assert g.n_nodes == 3
        assert g.n_edges == 3
        a = g.index["a"]
        assert [g.ids[v] for v in g.neighbors(a, "recip")] == ["b"]

    def test_self_loop_dropped_with_warning(self, tmp_path):
        with pytest.warns(UserWarning, match="1 self-loop"):
            g = load_graph(write(tmp_path, "a\ta\n"))
        assert g.n_nodes == 1
        assert g.n_edges == 0

    def test_comments_and_blank_lines(self, tmp_path):
        g = load_graph(write(tmp_path, "# header\n\na\tb\n# x\tz\n"))
        assert g.ids == ("a", "b")
        assert g.n_edges == 1

    def test_indices_by_first_appearance(self, tmp_path):
        g = load_graph(write(tmp_path, "z\ty\nx\tz\n"))
        assert g.ids == ("z", "y", "x")

    def test_deterministic(self, tmp_path):
        p = write(tmp_path, "q\tr\nr\ts\ns\tq\nr\tq\n")
        assert load_graph(p) == load_graph(p)

    def test_malformed_line_reports_line_number(self, tmp_path):
        with pytest.raises(ParseError) as exc:
            load_graph(write(tmp_path, "a\tb\nc d\n"))
        assert exc.value.line == 2

    def test_three_columns_rejected(self, tmp_path):
        with pytest.raises(ParseError):
            load_graph(write(tmp_path, "a\tb\tc\n"))

    def test_duplicates(self, tmp_path):
        p = write(tmp_path, "a\tb\na\tb\n")
        with pytest.raises(ValidationError):
            load_graph(p)
        assert load_graph(p, dedupe=True).n_edges == 1

    def test_unicode_ids(self, tmp_path):
        g = load_graph(write(tmp_path, "用户一\t用户二\n"))
        assert g.ids == ("用户一", "用户二")


class TestNeighbors:
    def test_path(self):
        g = graph_from_pairs([(0, 1), (1, 2)])
        np.testing.assert_array_equal(neighbors(g, 1, "in"), [0])
        np.testing.assert_array_equal(neighbors(g, 1, "out"), [2])
        assert neighbors(g, 1, "recip").size == 0

    def test_reciprocal_pair(self):
        g = graph_from_pairs([(0, 1), (1, 0)])
        np.testing.assert_array_equal(neighbors(g, 0, "recip"), [1])

    def test_isolated_node(self):
        g = graph_from_pairs([(0, 1)], n=3)
        for kind in ("out", "in", "recip"):
            assert neighbors(g, 2, kind).size == 0

    @pytest.mark.parametrize("u", [-1, 5])
    def test_bad_index(self, u):
        g = graph_from_pairs([(0, 1)], n=5)
        with pytest.raises(IndexError):
            neighbors(g, u, "out")

    def test_recip_matches_brute_force(self, rng):
        g, a = random_digraph(50, 0.08, rng, p_recip=0.03)
        for u in range(50):
            outs = set(np.flatnonzero(a[u]).tolist())
            ins = set(np.flatnonzero(a[:, u]).tolist())
            assert g.neighbors(u, "recip").tolist() == sorted(outs & ins)
            assert g.neighbors(u, "out").tolist() == sorted(outs)
            assert g.neighbors(u, "in").tolist() == sorted(ins)

    def test_recip_symmetric_and_sorted(self, rng):
        g, a = random_digraph(100, 0.05, rng, p_recip=0.02)
        mutual = a & a.T
        for u in range(100):
            row = g.neighbors(u, "recip")
            assert np.all(np.diff(row) > 0)
            np.testing.assert_array_equal(row, np.flatnonzero(mutual[u]))

    def test_degree_sums(self, rng):
        g, _ = random_digraph(60, 0.1, rng)
        assert g.out_degree().sum() == g.in_degree().sum() == g.n_edges


class TestTranspose:
    def test_single_edge(self):
        t = transpose(graph_from_pairs([(0, 1)]))
        src, dst = t.edges()
        assert list(zip(src.tolist(), dst.tolist())) == [(1, 0)]

    def test_involution(self, rng):
        g, _ = random_digraph(50, 0.1, rng, p_recip=0.02)
        assert transpose(transpose(g)) == g

    def test_recip_unchanged(self, rng):
        g, _ = random_digraph(50, 0.1, rng, p_recip=0.02)
        t = transpose(g)
        np.testing.assert_array_equal(t.recip_ptr, g.recip_ptr)
        np.testing.assert_array_equal(t.recip_idx, g.recip_idx)
        np.testing.assert_array_equal(dense(t), dense(g).T)


class TestFromEdges:
    def test_rejects_self_loop(self):
        with pytest.raises(ValidationError):
            SocialGraph.from_edges(2, [0], [0])

    def test_rejects_duplicate(self):
        with pytest.raises(ValidationError):
            SocialGraph.from_edges(2, [0, 0], [1, 1])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            SocialGraph.from_edges(2, [0], [2])

    def test_immutable_arrays(self):
        g = graph_from_pairs([(0, 1)])
        with pytest.raises(ValueError):
            g.out_idx[0] = 0

    @settings(max_examples=60, deadline=None)
    @given(st.sets(st.tuples(st.integers(0, 11), st.integers(0, 11)).filter(lambda e: e[0] != e[1]),
                   max_size=60))
    def test_invariants(self, pairs):
        g = graph_from_pairs(sorted(pairs), n=12)
        for u in range(12):
            assert set(g.neighbors(u, "out").tolist()) == {v for (x, v) in pairs if x == u}
            assert set(g.neighbors(u, "in").tolist()) == {x for (x, v) in pairs if v == u}
            assert set(g.neighbors(u, "recip").tolist()) == {
                v for (x, v) in pairs if x == u and (v, u) in pairs}
            for v in g.neighbors(u, "out").tolist():
                assert g.has_edge(u, v)


class TestRoundTrip:
    def test_tsv_round_trip(self, tmp_path, rng):
        # ER graph with n=100 and 500 edges
        a = np.zeros((100, 100), dtype=bool)
        flat = rng.choice(100 * 100, size=700, replace=False)
        a.flat[flat] = True
        np.fill_diagonal(a, False)
        src, dst = np.nonzero(a)
        keep = rng.permutation(src.size)[:500]
        g = SocialGraph.from_edges(100, src[keep], dst[keep], ids=[f"n{i}" for i in range(100)])
        save_graph(g, tmp_path / "g.tsv")
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            h = load_graph(tmp_path / "g.tsv")
        by_id = {(g.ids[s], g.ids[d]) for s, d in zip(*g.edges())}
        assert {(h.ids[s], h.ids[d]) for s, d in zip(*h.edges())} == by_id
        for u in range(h.n_nodes):
            gu = g.index[h.ids[u]]
            assert sorted(g.ids[v] for v in g.neighbors(gu, "recip")) == \
                sorted(h.ids[v] for v in h.neighbors(u, "recip"))

    def test_npz_round_trip_is_exact(self, tmp_path, rng):
        g, _ = random_digraph(80, 0.07, rng, p_recip=0.02)
        save_npz(g, tmp_path / "g.npz")
        h = load_npz(tmp_path / "g.npz")
        assert h == g
        assert h.ids == g.ids
        for name in ("out_ptr", "out_idx", "in_ptr", "in_idx", "recip_ptr", "recip_idx"):
            assert getattr(h, name).dtype == getattr(g, name).dtype
