import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statusnet import synth
from statusnet.centrality import pagerank
from statusnet.group_status import group_status, pr_baseline, read_csv, write_csv


def double_loop(q, p):
    n, m = q.shape
    out = []
    for i in range(m):
        num = den = 0.0
        for v in range(n):
            num += q[v, i] * p[v]
            den += q[v, i]
        out.append(num / den if den > 0 else math.nan)
    return np.array(out)


class TestGroupStatus:
    def test_single_group_all_ones_is_mean(self, rng):
        p = rng.random(30)
        gs = group_status(np.ones((30, 1)), p)
        assert gs.pi[0] == pytest.approx(p.mean(), rel=1e-14)

    def test_exact_membership_is_member_mean(self, rng):
        p = rng.random(40)
        member = rng.random((40, 3)) < 0.4
        member[0] = True
        gs = group_status(member.astype(float), p)
        for i in range(3):
            assert gs.pi[i] == pytest.approx(p[member[:, i]].mean(), rel=1e-14)

    def test_double_loop_oracle(self, rng):
        q = rng.random((100, 5))
        p = rng.random(100)
        np.testing.assert_allclose(group_status(q, p).pi, double_loop(q, p), rtol=0, atol=1e-12)
        np.testing.assert_allclose(group_status(q, p).support, q.sum(axis=0), atol=1e-12)

    def test_zero_support_undefined(self):
        q = np.array([[1.0, 0.0], [1.0, 0.0]])
        gs = group_status(q, np.array([0.2, 0.4]))
        assert np.isnan(gs.pi[1])
        assert gs.ranking.tolist() == [0]
        rows = gs.rows(["a", "b"])
        assert rows[-1] == (None, "b", None, 0.0)

    def test_ranking_descending(self, rng):
        q = rng.random((50, 6))
        p = rng.random(50)
        gs = group_status(q, p)
        assert np.all(np.diff(gs.pi[gs.ranking]) <= 0)

    def test_restrict_matches_subset(self, rng):
        q = rng.random((60, 4))
        p = rng.random(60)
        keep = rng.random(60) < 0.5
        a = group_status(q, p, restrict=keep).pi
        b = group_status(q[keep], p[keep]).pi
        np.testing.assert_array_equal(a, b)
        c = group_status(q, p, restrict=np.flatnonzero(keep)).pi
        np.testing.assert_array_equal(a, c)

    def test_min_strength(self):
        q = np.array([[0.01], [1.0]])
        p = np.array([100.0, 1.0])
        assert group_status(q, p, min_strength=0.05).pi[0] == 1.0
        assert group_status(q, p).pi[0] > 1.0

    def test_size_invariance(self, rng):
        q = rng.random((20, 3))
        p = rng.random(20)
        a = group_status(q, p).pi
        b = group_status(np.vstack([q, q]), np.concatenate([p, p])).pi
        np.testing.assert_allclose(a, b, rtol=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.floats(0.01, 100), st.floats(-5, 5))
    def test_scale_and_affine(self, seed, c, shift):
        r = np.random.default_rng(seed)
        q = r.random((25, 4))
        p = r.random(25)
        gs = group_status(q, p)
        np.testing.assert_allclose(group_status(q, c * p).pi, c * gs.pi, rtol=1e-12)
        moved = group_status(q, c * p + shift)
        assert moved.ranking.tolist() == gs.ranking.tolist()

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_convexity(self, seed):
        r = np.random.default_rng(seed)
        q = r.random((15, 3)) * (r.random((15, 3)) < 0.6)
        p = r.random(15)
        gs = group_status(q, p)
        for i in np.flatnonzero(gs.defined):
            contrib = p[q[:, i] > 0]
            assert contrib.min() - 1e-15 <= gs.pi[i] <= contrib.max() + 1e-15

    def test_length_mismatch(self):
        from statusnet.errors import ValidationError
        with pytest.raises(ValidationError):
            group_status(np.ones((3, 1)), np.ones(4))


class TestPRBaseline:
    def test_two_known_members(self):
        member = np.array([[1], [1], [0]], dtype=bool)
        assert pr_baseline(member, np.array([0.1, 0.3, 0.9])).pi[0] == pytest.approx(0.2)

    def test_no_known_members(self):
        member = np.array([[1, 0], [1, 0]], dtype=bool)
        assert np.isnan(pr_baseline(member, np.array([0.1, 0.3])).pi[1])

    def test_matches_restricted_group_status(self):
        s = synth.generate(synth.preset("default", n_nodes=400, rng_seed=2))
        p = pagerank(s.graph)
        known = s.observed_labels.any(axis=1)
        a = pr_baseline(s.observed_labels, p)
        b = group_status(s.observed_labels.astype(float), p, restrict=known)
        np.testing.assert_array_equal(a.pi, b.pi)
        np.testing.assert_array_equal(a.support, b.support)


class TestCSV:
    def test_round_trip(self, tmp_path, rng):
        q = rng.random((20, 3))
        q[:, 2] = 0
        gs = group_status(q, rng.random(20))
        write_csv(gs, ["x", "y", "z"], tmp_path / "gs.csv")
        lines = (tmp_path / "gs.csv").read_text().splitlines()
        assert lines[0] == "rank,group,pi,support"
        assert lines[-1].startswith(",z,,")
        back = read_csv(tmp_path / "gs.csv")
        assert back["x"] == gs.pi[0] and back["y"] == gs.pi[1]
        assert math.isnan(back["z"])
