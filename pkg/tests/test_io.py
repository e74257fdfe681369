import json

import numpy as np
import pytest

from helpers import graph_from_pairs
from statusnet import io
from statusnet.centrality import StatusScores
from statusnet.errors import ParseError, ValidationError
from statusnet.graph import SocialGraph


@pytest.fixture
def g():
    return SocialGraph.from_edges(4, [0, 1, 2], [1, 2, 3], ids=["a", "b", "c", "d"])


class TestLabels:
    def test_multi_membership_and_order(self, tmp_path, g):
        p = tmp_path / "l.tsv"
        p.write_text("# comment\nb\tred\na\tblue\nb\tblue\n", encoding="utf-8")
        cat, member = io.load_labels(p, g)
        assert cat.groups == ("red", "blue")
        np.testing.assert_array_equal(member, [[0, 1], [1, 1], [0, 0], [0, 0]])

    def test_unknown_node_warns(self, tmp_path, g):
        p = tmp_path / "l.tsv"
        p.write_text("a\tx\nzz\tx\n", encoding="utf-8")
        with pytest.warns(UserWarning, match="outside the graph"):
            io.load_labels(p, g)

    def test_malformed(self, tmp_path, g):
        p = tmp_path / "l.tsv"
        p.write_text("a\tx\nb x\n", encoding="utf-8")
        with pytest.raises(ParseError) as exc:
            io.load_labels(p, g)
        assert exc.value.line == 2

    def test_fixed_catalog(self, tmp_path, g):
        p = tmp_path / "l.tsv"
        p.write_text("a\ty\n", encoding="utf-8")
        cat, member = io.load_labels(p, g, groups=("x", "y"))
        assert cat.groups == ("x", "y") and member[0, 1]
        p.write_text("a\tz\n", encoding="utf-8")
        with pytest.raises(ParseError):
            io.load_labels(p, g, groups=("x", "y"))

    def test_empty(self, tmp_path, g):
        p = tmp_path / "l.tsv"
        p.write_text("# nothing\n", encoding="utf-8")
        with pytest.raises(ValidationError):
            io.load_labels(p, g)

    def test_round_trip(self, tmp_path, g):
        member = np.array([[1, 0], [1, 1], [0, 0], [0, 1]], dtype=bool)
        io.write_labels(member, g.ids, ("p", "q"), tmp_path / "l.tsv")
        _, back = io.load_labels(tmp_path / "l.tsv", g, groups=("p", "q"))
        np.testing.assert_array_equal(back, member)


class TestScores:
    def test_sorted_descending_round_trip(self, tmp_path, g):
        s = StatusScores("pagerank", np.array([0.1, 0.4, 0.4, 0.1]))
        io.write_scores(s, g.ids, tmp_path / "s.csv")
        lines = (tmp_path / "s.csv").read_text().splitlines()
        assert lines == ["node_id,score", "b,0.4", "c,0.4", "a,0.1", "d,0.1"]
        np.testing.assert_array_equal(io.read_scores(tmp_path / "s.csv", g), s.values)

    def test_missing_rows(self, tmp_path, g):
        (tmp_path / "s.csv").write_text("node_id,score\na,0.5\n")
        with pytest.raises(ValidationError):
            io.read_scores(tmp_path / "s.csv", g)

    def test_bad_header(self, tmp_path, g):
        (tmp_path / "s.csv").write_text("id,value\n")
        with pytest.raises(ParseError):
            io.read_scores(tmp_path / "s.csv", g)


class TestMembershipFiles:
    def test_q_round_trip_exact(self, tmp_path, g, rng):
        q = rng.random((4, 3))
        io.write_q(q, g.ids, ("x", "y", "z"), tmp_path / "q.csv")
        groups, back = io.read_q(tmp_path / "q.csv", g)
        assert groups == ("x", "y", "z")
        assert back.tobytes() == q.tobytes()

    def test_predictions_round_trip(self, tmp_path, g):
        pred = np.array([1, 0, -1, 1])
        io.write_predictions(pred, g.ids, ("x", "y"), tmp_path / "p.csv")
        back, listed = io.read_predictions(tmp_path / "p.csv", g, ("x", "y"))
        np.testing.assert_array_equal(back, pred)
        assert listed.all()

    def test_node_list(self, tmp_path, g):
        (tmp_path / "n.txt").write_text("c\n# skip\na\nc\n")
        np.testing.assert_array_equal(io.read_node_list(tmp_path / "n.txt", g), [0, 2])


class TestJSON:
    def test_sorted_keys_and_nan(self):
        text = io.dumps({"b": float("nan"), "a": np.float64(0.1), "c": np.arange(2)})
        assert list(json.loads(text)) == ["a", "b", "c"]
        assert json.loads(text) == {"a": 0.1, "b": None, "c": [0, 1]}

    def test_float_repr_round_trip(self):
        x = 0.1 + 0.2
        assert json.loads(io.dumps({"x": x}))["x"] == x

    def test_digest_stable(self):
        assert io.digest({"a": 1, "b": 2}) == io.digest({"b": 2, "a": 1})
        assert len(io.digest({})) == 64

    def test_label_map(self):
        g = graph_from_pairs([(0, 1)], n=3)
        m = np.array([[1, 1], [0, 0], [0, 1]], dtype=bool)
        assert io.label_map(m, g.ids, ("x", "y")) == {"0": ["x", "y"], "2": ["y"]}
