import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import dirichlet_cov, random_psd_block_matrix
from mmspec.errors import InvalidParameterError, NotNonnegativeDefiniteError
from mmspec.model import (
    DEFAULT_B,
    GraphSample,
    ModelSpec,
    edge_probability,
    latent_positions,
    sample_dirichlet,
    sample_mmsbm,
    sample_rdpg,
    true_vertices,
)

# P(max coordinate > 0.9) for Dirichlet(0.1, 0.1, 0.1); frozen from 1e6
# beta stick-breaking draws, independent of numpy's dirichlet sampler.
SPARSE_MAX_FRACTION = 0.658622


def _check_graph(g):
    e = g.edges
    assert e.ndim == 2 and e.shape[1] == 2
    if len(e):
        assert np.all(e[:, 0] < e[:, 1])
        assert e.min() >= 0 and e.max() < g.n
        order = np.lexsort((e[:, 1], e[:, 0]))
        assert np.array_equal(order, np.arange(len(e)))
        assert len(np.unique(e, axis=0)) == len(e)
    a = g.to_dense()
    assert np.array_equal(a, a.T) and not a.diagonal().any()


class TestModelSpec:
    def test_default(self):
        s = ModelSpec.default()
        assert s.k == 3 and s.d == 3

    def test_rank_detected(self):
        v = np.array([[0.8, 0.1], [0.1, 0.8], [0.45, 0.45]])
        s = ModelSpec(v @ v.T, [1, 1, 1])
        assert s.d == 2

    @pytest.mark.parametrize(
        "b",
        [
            [[0.5, 0.2], [0.3, 0.5]],
            [[1.2, 0.0], [0.0, 0.5]],
            [[0.5, -0.1], [-0.1, 0.5]],
        ],
    )
    def test_rejects_bad_b(self, b):
        with pytest.raises(InvalidParameterError):
            ModelSpec(b, [1, 1])

    def test_not_nonnegative_definite_names_eigenvalue(self):
        with pytest.raises(NotNonnegativeDefiniteError) as info:
            ModelSpec([[0.1, 0.9], [0.9, 0.1]], [1, 1])
        assert info.value.eigenvalue == pytest.approx(-0.8)
        assert "-0.8" in str(info.value)

    @pytest.mark.parametrize("alpha", [[1, 0], [1, -1], [1]])
    def test_rejects_bad_alpha(self, alpha):
        with pytest.raises(InvalidParameterError):
            ModelSpec(np.eye(2) * 0.5, alpha)

    def test_rejects_wrong_d(self):
        with pytest.raises(InvalidParameterError):
            ModelSpec(DEFAULT_B, [1, 1, 1], d=2)


class TestSampleDirichlet:
    def test_mean(self, rng):
        n = 20_000
        pi = sample_dirichlet([1, 1, 1], n, rng)
        se = np.sqrt(np.diag(dirichlet_cov([1, 1, 1])) / n)
        assert np.all(np.abs(pi.mean(axis=0) - 1 / 3) < 3 * se)

    def test_on_simplex(self, rng):
        pi = sample_dirichlet([0.3, 2.0, 5.0, 0.05], 1000, rng)
        assert pi.min() >= 0
        assert np.max(np.abs(pi.sum(axis=1) - 1)) < 1e-12

    def test_concentrated(self, rng):
        pi = sample_dirichlet([1e6] * 3, 1000, rng)
        assert np.max(np.abs(pi - 1 / 3)) < 0.01

    def test_sparse_alpha_matches_oracle(self, rng):
        n = 100_000
        frac = (sample_dirichlet([0.1] * 3, n, rng).max(axis=1) > 0.9).mean()
        p = SPARSE_MAX_FRACTION
        se = np.sqrt(p * (1 - p) / n + p * (1 - p) / 1e6)
        assert abs(frac - p) < 3 * se

    def test_rejects_nonpositive(self, rng):
        with pytest.raises(InvalidParameterError):
            sample_dirichlet([1, 0, 1], 5, rng)


class TestSampleMMSBM:
    def test_density_default_model(self, spec, rng):
        n = 5000
        g = sample_mmsbm(spec, n, rng)
        _check_graph(g)
        p = DEFAULT_B.sum() / 9
        assert p == pytest.approx(4.7 / 9)
        # U-statistic variance: binomial part plus the membership-driven part
        r = DEFAULT_B.mean(axis=1)
        var_h = r @ dirichlet_cov(spec.alpha) @ r
        pairs = n * (n - 1) / 2
        se = np.sqrt(p * (1 - p) / pairs + 4 * var_h / n)
        assert abs(g.density - p) < 3 * se

    def test_erdos_renyi_reduction(self, rng):
        g = sample_mmsbm(ModelSpec([[0.5]], [2.0]), 1000, rng)
        pairs = 1000 * 999 / 2
        assert abs(g.density - 0.5) < 3 * np.sqrt(0.25 / pairs)

    def test_zero_b_is_empty(self, rng):
        g = sample_mmsbm(ModelSpec(np.zeros((3, 3)), [1, 1, 1]), 200, rng)
        assert g.n_edges == 0
        _check_graph(g)

    def test_deterministic(self, spec):
        a = sample_mmsbm(spec, 300, np.random.default_rng(5))
        b = sample_mmsbm(spec, 300, np.random.default_rng(5))
        np.testing.assert_array_equal(a.edges, b.edges)
        np.testing.assert_array_equal(a.truth.pi, b.truth.pi)

    def test_truth_positions(self, spec, rng):
        g = sample_mmsbm(spec, 50, rng)
        x = g.truth.x
        np.testing.assert_allclose(x @ x.T, g.truth.pi @ spec.B @ g.truth.pi.T, atol=1e-12)

    def test_rejects_small_n(self, spec, rng):
        with pytest.raises(InvalidParameterError):
            sample_mmsbm(spec, 1, rng)


class TestSampleRDPG:
    def test_complete(self, rng):
        x = np.zeros((20, 3))
        x[:, 0] = 1.0
        g = sample_rdpg(x, rng)
        assert g.n_edges == 20 * 19 // 2
        _check_graph(g)

    def test_empty(self, rng):
        assert sample_rdpg(np.zeros((30, 2)), rng).n_edges == 0

    def test_pair_frequencies(self, spec):
        rng = np.random.default_rng(3)
        pi = sample_dirichlet(spec.alpha, 5, rng)
        x = latent_positions(pi, spec)
        reps = 10_000
        counts = np.zeros((5, 5))
        for _ in range(reps):
            e = sample_rdpg(x, rng).edges
            counts[e[:, 0], e[:, 1]] += 1
        p = pi @ spec.B @ pi.T
        iu = np.triu_indices(5, 1)
        freq = counts[iu] / reps
        se = np.sqrt(p[iu] * (1 - p[iu]) / reps)
        assert np.all(np.abs(freq - p[iu]) < 3 * se + 1e-12)

    def test_deterministic(self, rng):
        x = np.random.default_rng(0).random((100, 2)) * 0.7
        a = sample_rdpg(x, np.random.default_rng(11))
        b = sample_rdpg(x, np.random.default_rng(11))
        np.testing.assert_array_equal(a.edges, b.edges)


class TestLatentPositions:
    def test_scalar(self):
        assert latent_positions([[1.0]], [[0.81]])[0, 0] == pytest.approx(0.9)

    def test_default_off_diagonal(self, spec):
        x = latent_positions(np.eye(3)[[0, 1]], spec)
        assert x[0] @ x[1] == pytest.approx(0.2, abs=1e-12)

    def test_identity(self, rng):
        pi = sample_dirichlet([1, 1, 1], 10, rng)
        x = latent_positions(pi, np.eye(3))
        # equal eigenvalues: columns of pi up to signed permutation
        cols = [int(np.argmin([np.abs(np.abs(x[:, c]) - pi[:, j]).max() for j in range(3)]))
                for c in range(3)]
        assert sorted(cols) == [0, 1, 2]
        for c, j in enumerate(cols):
            np.testing.assert_allclose(np.abs(x[:, c]), pi[:, j], atol=1e-12)

    def test_rejects_indefinite(self):
        with pytest.raises(NotNonnegativeDefiniteError):
            latent_positions(np.eye(2), [[0.1, 0.9], [0.9, 0.1]])

    def test_true_vertices_gram(self, spec):
        v = true_vertices(spec)
        np.testing.assert_allclose(v @ v.T, spec.B, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 5), n=st.integers(1, 50),
           rank=st.integers(1, 5))
    def test_mmsbm_rdpg_equivalence(self, seed, k, n, rank):
        rng = np.random.default_rng(seed)
        b = random_psd_block_matrix(k, rng, rank=min(rank, k))
        pi = rng.dirichlet(np.ones(k), n)
        x = latent_positions(pi, b)
        p = x @ x.T
        assert p.min() >= -1e-10 and p.max() <= 1 + 1e-10
        for i in range(n):
            for j in range(n):
                assert abs(edge_probability(pi[i], pi[j], b) - p[i, j]) < 1e-10


class TestEdgeProbability:
    def test_examples(self, spec):
        e = np.eye(3)
        assert edge_probability(e[0], e[1], spec.B) == pytest.approx(0.2)
        u = np.full(3, 1 / 3)
        assert edge_probability(u, u, spec.B) == pytest.approx(4.7 / 9)
        assert edge_probability(u, e[2], np.zeros((3, 3))) == 0.0


class TestGraphSample:
    def test_relabel_roundtrip(self, spec, rng):
        g = sample_mmsbm(spec, 40, rng)
        perm = rng.permutation(40)
        h = g.relabel(perm)
        _check_graph(h)
        back = h.relabel(np.argsort(perm))
        np.testing.assert_array_equal(back.edges, g.edges)
        np.testing.assert_array_equal(back.truth.pi, g.truth.pi)
        a, b = g.to_dense(), h.to_dense()
        np.testing.assert_array_equal(b[np.ix_(perm, perm)], a)

    def test_empty_edges_shape(self):
        g = GraphSample(4, [])
        assert g.edges.shape == (0, 2) and g.density == 0.0
