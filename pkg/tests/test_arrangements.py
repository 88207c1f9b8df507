"""Chamber walks: projections, kernels, stationary laws, and the urn sampler."""

import itertools
import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from lucewalks import (
    BlockOrderedSetPartition,
    ChamberChain,
    FaceWeightTable,
    Permutation,
    PreconditionError,
    RngStream,
    SignVector,
    ToleranceError,
    all_permutations,
    brown_diaconis_sample,
    brown_diaconis_sample_many,
    chamber_index,
    ehrenfest_face_weights,
    enumerate_chambers,
    graph_coloring_face_weights,
    graph_coloring_step,
    is_separating,
    luce_pmf,
    normalize,
    permutation_rank_many,
    project_boolean,
    project_braid,
    riffle_face_weights,
    stationary_exact,
    transition_matrix,
    tsetlin_face_weights,
    walk_step,
)

PATH4 = [(1, 2), (2, 3), (3, 4)]
PATH5 = [(1, 2), (2, 3), (3, 4), (4, 5)]


def empirical_boolean_hist(rows):
    bits = (rows > 0).astype(np.int64)
    d = rows.shape[1]
    idx = bits @ (1 << np.arange(d - 1, -1, -1))
    return np.bincount(idx, minlength=1 << d)


def empirical_braid_hist(rows, n):
    return np.bincount(permutation_rank_many(rows), minlength=math.factorial(n))


def random_sparse_table(kind, dim, gen):
    """A random separating table with a handful of positive faces."""
    while True:
        if kind == "boolean":
            m = int(gen.integers(3, 6))
            faces = []
            for _ in range(m):
                ent = gen.integers(-1, 2, size=dim)
                faces.append(SignVector(ent.tolist()))
        else:
            chambers = enumerate_chambers("braid", dim)
            m = int(gen.integers(3, 6))
            faces = []
            for _ in range(m):
                if gen.random() < 0.5:
                    perm = chambers[int(gen.integers(len(chambers)))]
                    faces.append(
                        BlockOrderedSetPartition([{lab} for lab in perm.mapping])
                    )
                else:
                    keep = int(gen.integers(1, dim))
                    labs = list(gen.permutation(dim) + 1)
                    faces.append(
                        BlockOrderedSetPartition(
                            [set(labs[:keep]), set(labs[keep:])]
                        )
                    )
            faces = list(dict.fromkeys(faces))
        w = gen.uniform(0.2, 1.0, size=len(faces))
        w /= w.sum()
        table = FaceWeightTable(kind, dim, list(zip(faces, w.tolist())))
        if is_separating(table):
            return table


class TestSignVector:
    def test_round_trip(self):
        v = SignVector.from_string("+-0")
        assert v.entries == (1, -1, 0)
        assert v.to_string() == "+-0"
        assert not v.is_chamber
        assert SignVector.from_string("-+").is_chamber

    def test_validation(self):
        with pytest.raises(PreconditionError):
            SignVector((2, 0))
        with pytest.raises(PreconditionError):
            SignVector(())
        with pytest.raises(PreconditionError):
            SignVector.from_string("+x")

    def test_hash_eq(self):
        assert SignVector((1, -1)) == SignVector([1, -1])
        assert len({SignVector((1, 0)), SignVector((1, 0))}) == 1


class TestBlockOrderedSetPartition:
    def test_round_trip(self):
        f = BlockOrderedSetPartition.from_string("1,3/2/4,5")
        assert f.blocks == (frozenset({1, 3}), frozenset({2}), frozenset({4, 5}))
        assert f.to_string() == "1,3/2/4,5"
        assert f.n == 5
        assert not f.is_chamber
        assert BlockOrderedSetPartition.from_string("2/1").is_chamber

    def test_block_ids(self):
        f = BlockOrderedSetPartition.from_string("1,3/2/4,5")
        np.testing.assert_array_equal(f.block_ids(), [0, 1, 0, 2, 2])

    def test_validation(self):
        with pytest.raises(PreconditionError):
            BlockOrderedSetPartition([{1, 2}, {2, 3}])
        with pytest.raises(PreconditionError):
            BlockOrderedSetPartition([{1}, set(), {2}])
        with pytest.raises(PreconditionError):
            BlockOrderedSetPartition([{1}, {3}])


class TestProjections:
    def test_boolean_identity_face(self):
        c = SignVector((1, 1, -1))
        assert project_boolean(c, SignVector((0, 0, 0))) == c

    def test_boolean_hand_trace(self):
        c = SignVector((1, 1, -1))
        f = SignVector((0, -1, 0))
        assert project_boolean(c, f) == SignVector((1, -1, -1))

    def test_boolean_chamber_face_overrides(self):
        c = SignVector((1, 1, 1))
        f = SignVector((-1, 1, -1))
        assert project_boolean(c, f) == f

    def test_boolean_errors(self):
        with pytest.raises(PreconditionError):
            project_boolean(SignVector((1, 0)), SignVector((1, 1)))
        with pytest.raises(PreconditionError):
            project_boolean(SignVector((1, 1)), SignVector((1, 1, 1)))

    def test_braid_center_face(self):
        c = Permutation((2, 4, 1, 5, 3))
        f = BlockOrderedSetPartition([{1, 2, 3, 4, 5}])
        assert project_braid(c, f) == c

    def test_braid_hand_trace(self):
        c = Permutation((2, 4, 1, 5, 3))
        f = BlockOrderedSetPartition.from_string("1,3/2/4,5")
        assert project_braid(c, f) == Permutation((1, 3, 2, 4, 5))

    def test_braid_chamber_face_overrides(self):
        c = Permutation((3, 1, 2))
        f = BlockOrderedSetPartition([{2}, {3}, {1}])
        assert project_braid(c, f) == Permutation((2, 3, 1))

    def test_braid_size_mismatch(self):
        with pytest.raises(PreconditionError):
            project_braid(Permutation((1, 2)), BlockOrderedSetPartition([{1}, {2}, {3}]))

    def test_boolean_idempotent(self, np_rng):
        for _ in range(50):
            c = SignVector(np_rng.choice([-1, 1], size=4).tolist())
            f = SignVector(np_rng.integers(-1, 2, size=4).tolist())
            once = project_boolean(c, f)
            assert project_boolean(once, f) == once

    def test_braid_idempotent(self, np_rng):
        for _ in range(50):
            c = Permutation((np_rng.permutation(5) + 1).tolist())
            ids = np_rng.integers(0, 3, size=5)
            blocks = [
                set((np.flatnonzero(ids == b) + 1).tolist())
                for b in range(3)
                if np.any(ids == b)
            ]
            f = BlockOrderedSetPartition(blocks)
            once = project_braid(c, f)
            assert project_braid(once, f) == once


@given(
    st.lists(st.sampled_from([-1, 1]), min_size=3, max_size=6),
    st.data(),
)
@settings(max_examples=40)
def test_boolean_projection_idempotence_property(chamber, data):
    d = len(chamber)
    face = data.draw(st.lists(st.sampled_from([-1, 0, 1]), min_size=d, max_size=d))
    c, f = SignVector(chamber), SignVector(face)
    once = project_boolean(c, f)
    assert project_boolean(once, f) == once
    # projection output is always a chamber
    assert once.is_chamber


class TestFaceWeightTable:
    def test_sum_must_be_one(self):
        f = SignVector((1, 0))
        with pytest.raises(PreconditionError):
            FaceWeightTable("boolean", 2, [(f, 0.5)])

    def test_negative_weight_rejected(self):
        f, g = SignVector((1, 0)), SignVector((0, 1))
        with pytest.raises(PreconditionError):
            FaceWeightTable("boolean", 2, [(f, 1.5), (g, -0.5)])

    def test_duplicates_merge(self):
        f, g = SignVector((1, 0)), SignVector((0, 1))
        t = FaceWeightTable("boolean", 2, [(f, 0.25), (g, 0.5), (f, 0.25)])
        assert t.m == 2
        assert t.weight_of(f) == pytest.approx(0.5)

    def test_zero_weight_dropped(self):
        f, g = SignVector((1, 0)), SignVector((0, 1))
        t = FaceWeightTable("boolean", 2, [(f, 1.0), (g, 0.0)])
        assert t.m == 1
        assert t.faces == (f,)

    def test_kind_checked(self):
        with pytest.raises(PreconditionError):
            FaceWeightTable("boolean", 2, [(BlockOrderedSetPartition([{1}, {2}]), 1.0)])

    def test_canonical_order(self, np_rng):
        faces = [SignVector((1, 0)), SignVector((0, 1)), SignVector((-1, -1))]
        pairs = list(zip(faces, (0.2, 0.3, 0.5)))
        t1 = FaceWeightTable("boolean", 2, pairs)
        t2 = FaceWeightTable("boolean", 2, list(reversed(pairs)))
        assert t1.faces == t2.faces
        np.testing.assert_array_equal(t1.weights, t2.weights)


class TestWalkStep:
    def test_identity_face_never_moves(self):
        d = 3
        table = FaceWeightTable("boolean", d, [(SignVector((0,) * d), 1.0)])
        chain = ChamberChain(table, SignVector((1, -1, 1)))
        rng = RngStream(3)
        for _ in range(20):
            assert walk_step(chain, rng) == SignVector((1, -1, 1))

    def test_tsetlin_one_step_moves_to_top(self):
        w = normalize([0.5, 0.3, 0.2])
        table = tsetlin_face_weights(w)
        rng = RngStream(5)
        counts = {1: 0, 2: 0, 3: 0}
        trials = 20_000
        for _ in range(trials):
            chain = ChamberChain(table, Permutation((2, 3, 1)))
            new = walk_step(chain, rng)
            top = new.mapping[0]
            counts[top] += 1
            # the rest keep their relative order
            rest = [lab for lab in (2, 3, 1) if lab != top]
            assert list(new.mapping[1:]) == rest
        for lab, th in zip((1, 2, 3), w.weights):
            assert abs(counts[lab] / trials - th) <= 0.02


class TheoremWalkKernel:
    """walk_step one-step frequencies match the transition matrix row."""


class TestWalkKernelTheorem:
    def test_chi_square_one_step(self):
        gen = np.random.default_rng(11)
        w = normalize(gen.uniform(0.3, 1.0, size=4))
        table = tsetlin_face_weights(w)
        start = Permutation((3, 1, 4, 2))
        row = transition_matrix(table)[chamber_index(start)]
        rng = RngStream(19)
        counts = np.zeros(row.size)
        trials = 100_000
        for _ in range(trials):
            chain = ChamberChain(table, start)
            counts[chamber_index(walk_step(chain, rng))] += 1
        mask = row > 0
        assert counts[~mask].sum() == 0
        stat = scipy.stats.chisquare(counts[mask], row[mask] * trials)
        assert stat.pvalue >= 0.001


class TestTransitionMatrix:
    def test_identity_face_only(self):
        table = FaceWeightTable("boolean", 2, [(SignVector((0, 0)), 1.0)])
        np.testing.assert_allclose(transition_matrix(table), np.eye(4))

    def test_braid_two_tsetlin(self):
        p = 0.7
        table = tsetlin_face_weights([p, 1 - p])
        k = transition_matrix(table)
        np.testing.assert_allclose(k, [[p, 1 - p], [p, 1 - p]], atol=1e-15)

    def test_rows_stochastic_random_tables(self, np_rng):
        for kind, dim in (("boolean", 4), ("braid", 4)):
            table = random_sparse_table(kind, dim, np_rng)
            k = transition_matrix(table)
            np.testing.assert_allclose(k.sum(axis=1), 1.0, atol=1e-12)
            assert np.all(k >= 0)

    def test_too_large(self):
        with pytest.raises(PreconditionError):
            transition_matrix(
                FaceWeightTable("boolean", 16, [(SignVector((0,) * 16), 1.0)])
            )


class TestIsSeparating:
    def test_identity_face_only(self):
        table = FaceWeightTable("braid", 3, [(BlockOrderedSetPartition([{1, 2, 3}]), 1.0)])
        assert not is_separating(table)

    def test_tsetlin_always(self):
        assert is_separating(tsetlin_face_weights(normalize([1.0, 2.0, 3.0])))

    def test_boolean_missing_coordinate(self):
        table = FaceWeightTable(
            "boolean", 2, [(SignVector((1, 0)), 0.5), (SignVector((-1, 0)), 0.5)]
        )
        assert not is_separating(table)


class TheoremUniqueStationary:
    """Separating weights give a one-dimensional eigenvalue-1 eigenspace."""


class TestUniqueStationaryTheorem:
    def test_rank_separating(self, np_rng):
        for kind, dim in (("braid", 4), ("boolean", 5), ("braid", 3)):
            table = random_sparse_table(kind, dim, np_rng)
            k = transition_matrix(table)
            nn = k.shape[0]
            rank = np.linalg.matrix_rank(k.T - np.eye(nn))
            assert rank == nn - 1

    def test_rank_identity_table(self):
        table = FaceWeightTable("boolean", 3, [(SignVector((0, 0, 0)), 1.0)])
        k = transition_matrix(table)
        assert np.linalg.matrix_rank(k.T - np.eye(8)) < 7

    def test_identity_matrix_rejected(self):
        with pytest.raises(ToleranceError):
            stationary_exact(np.eye(6))

    def test_non_stochastic_rejected(self):
        with pytest.raises(PreconditionError):
            stationary_exact(np.array([[0.5, 0.4], [0.5, 0.5]]))

    def test_stationary_fixed_point(self, np_rng):
        table = random_sparse_table("braid", 4, np_rng)
        k = transition_matrix(table)
        pi = stationary_exact(k)
        assert pi.sum() == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(pi @ k, pi, atol=1e-10)


class TheoremMoveToFrontStationary:
    """The move-to-front chain's stationary law is the sequential-draw pmf."""


class TestMoveToFrontStationaryTheorem:
    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_matches_luce(self, np_rng, n):
        for _ in range(20):
            w = normalize(np_rng.uniform(0.2, 2.0, size=n))
            pi = stationary_exact(transition_matrix(tsetlin_face_weights(w)))
            expected = np.array([luce_pmf(w, p) for p in all_permutations(n)])
            np.testing.assert_allclose(pi, expected, atol=1e-10)

    def test_half_third_sixth(self):
        w = np.array([1 / 2, 1 / 3, 1 / 6])
        pi = stationary_exact(transition_matrix(tsetlin_face_weights(w)))
        expected = np.array([luce_pmf(w, p) for p in all_permutations(3)])
        np.testing.assert_allclose(pi, expected, atol=1e-10)

    def test_requires_normalized(self):
        with pytest.raises(PreconditionError):
            tsetlin_face_weights([1.0, 2.0])


class TestRiffleEhrenfest:
    def test_riffle_single_card(self):
        t = riffle_face_weights(1)
        assert t.m == 1
        assert t.weights[0] == pytest.approx(1.0)

    def test_riffle_face_count(self):
        # 2^n coin outcomes collapse the two one-block outcomes together
        t = riffle_face_weights(4)
        assert t.m == 2**4 - 1
        assert t.weight_of(BlockOrderedSetPartition([{1, 2, 3, 4}])) == pytest.approx(2 / 16)

    def test_riffle_stationary_uniform(self):
        pi = stationary_exact(transition_matrix(riffle_face_weights(4)))
        np.testing.assert_allclose(pi, np.full(24, 1 / 24), atol=1e-10)

    def test_riffle_too_large(self):
        with pytest.raises(PreconditionError):
            riffle_face_weights(16)

    def test_ehrenfest_stationary_uniform(self):
        pi = stationary_exact(transition_matrix(ehrenfest_face_weights(3)))
        np.testing.assert_allclose(pi, np.full(8, 1 / 8), atol=1e-10)

    def test_ehrenfest_one_coordinate_mixes_in_one_step(self):
        k = transition_matrix(ehrenfest_face_weights(1))
        np.testing.assert_allclose(k, [[0.5, 0.5], [0.5, 0.5]])

    @pytest.mark.parametrize("d", [1, 2, 5])
    def test_ehrenfest_separating(self, d):
        assert is_separating(ehrenfest_face_weights(d))


class TheoremUrnSampler:
    """Drawing all faces without replacement and projecting in reverse
    order produces an exact stationary sample."""


class TestUrnSamplerTheorem:
    def test_braid_tsetlin(self):
        w = np.array([1 / 2, 1 / 3, 1 / 6])
        table = tsetlin_face_weights(w)
        rows = brown_diaconis_sample_many(table, 100_000, RngStream(23))
        hist = empirical_braid_hist(rows, 3)
        expected = np.array([luce_pmf(w, p) for p in all_permutations(3)])
        tv = 0.5 * np.abs(hist / hist.sum() - expected).sum()
        assert tv <= 0.01

    def test_boolean_ehrenfest(self):
        table = ehrenfest_face_weights(3)
        rows = brown_diaconis_sample_many(table, 100_000, RngStream(29))
        hist = empirical_boolean_hist(rows)
        tv = 0.5 * np.abs(hist / hist.sum() - 1 / 8).sum()
        assert tv <= 0.01

    def test_reference_independence(self):
        w = normalize([0.5, 0.3, 0.2])
        table = tsetlin_face_weights(w)
        a = brown_diaconis_sample_many(
            table, 100_000, RngStream(31), reference=Permutation((1, 2, 3))
        )
        b = brown_diaconis_sample_many(
            table, 100_000, RngStream(37), reference=Permutation((3, 2, 1))
        )
        ha = empirical_braid_hist(a, 3).astype(float)
        hb = empirical_braid_hist(b, 3).astype(float)
        tv = 0.5 * np.abs(ha / ha.sum() - hb / hb.sum()).sum()
        assert tv <= 0.01

    @pytest.mark.parametrize("kind,dim", [("boolean", 3), ("braid", 3)])
    def test_random_sparse_table(self, np_rng, kind, dim):
        table = random_sparse_table(kind, dim, np_rng)
        pi = stationary_exact(transition_matrix(table))
        rows = brown_diaconis_sample_many(table, 100_000, RngStream(41))
        if kind == "boolean":
            hist = empirical_boolean_hist(rows)
        else:
            hist = empirical_braid_hist(rows, dim)
        tv = 0.5 * np.abs(hist / hist.sum() - pi).sum()
        assert tv <= 0.01

    def test_single_chamber_face(self):
        f = SignVector((1, -1))
        table = FaceWeightTable("boolean", 2, [(f, 1.0)])
        got = brown_diaconis_sample(table, RngStream(2))
        assert got == f

    def test_non_separating_rejected(self):
        table = FaceWeightTable("boolean", 2, [(SignVector((1, 0)), 1.0)])
        with pytest.raises(PreconditionError):
            brown_diaconis_sample_many(table, 10, RngStream(0))


class TheoremColoringStationary:
    """Edge-repainting walk on path graphs: flip symmetry, impossible
    alternations, constant colorings dominate."""


class TestColoringStationaryTheorem:
    @pytest.mark.parametrize("edges,nv", [(PATH4, 4), (PATH5, 5)])
    def test_path_properties(self, edges, nv):
        table = graph_coloring_face_weights(edges, n_vertices=nv)
        pi = stationary_exact(transition_matrix(table))
        chambers = enumerate_chambers("boolean", nv)
        lookup = {c: pi[i] for i, c in enumerate(chambers)}

        # flip invariance
        for c in chambers:
            flipped = SignVector(tuple(-e for e in c.entries))
            assert abs(lookup[c] - lookup[flipped]) <= 1e-12

        # both alternating colorings are unreachable
        alt = SignVector(tuple(1 if i % 2 == 0 else -1 for i in range(nv)))
        alt2 = SignVector(tuple(-e for e in alt.entries))
        assert lookup[alt] <= 1e-12
        assert lookup[alt2] <= 1e-12

        # the constant colorings strictly dominate every other state
        const = lookup[SignVector((1,) * nv)]
        assert const == pytest.approx(lookup[SignVector((-1,) * nv)], abs=1e-12)
        for c in chambers:
            if len(set(c.entries)) > 1:
                assert const > lookup[c] + 1e-12

    def test_single_edge_constant_after_one_step(self):
        rng = RngStream(7)
        col = SignVector((1, -1))
        for _ in range(10):
            out = graph_coloring_step(col, [(1, 2)], rng)
            assert out in (SignVector((1, 1)), SignVector((-1, -1)))

    def test_step_changes_only_edge_endpoints(self):
        rng = RngStream(9)
        col = SignVector((1, -1, 1, -1))
        out = graph_coloring_step(col, PATH4, rng)
        diff = [i for i, (a, b) in enumerate(zip(col.entries, out.entries)) if a != b]
        assert len(diff) <= 2

    def test_graph_validation(self):
        with pytest.raises(PreconditionError):
            graph_coloring_face_weights([(1, 1)])
        with pytest.raises(PreconditionError):
            graph_coloring_face_weights([(1, 2), (2, 1)])
        with pytest.raises(PreconditionError):
            graph_coloring_face_weights([(1, 2), (3, 4)])
        with pytest.raises(PreconditionError):
            graph_coloring_face_weights([])


class TestEnumerationIndex:
    def test_boolean_round_trip(self):
        chambers = enumerate_chambers("boolean", 3)
        assert len(chambers) == 8
        for i, c in enumerate(chambers):
            assert chamber_index(c) == i

    def test_braid_round_trip(self):
        chambers = enumerate_chambers("braid", 4)
        assert len(chambers) == 24
        for i, c in enumerate(chambers):
            assert chamber_index(c) == i

    def test_too_large(self):
        with pytest.raises(PreconditionError):
            enumerate_chambers("braid", 9)
