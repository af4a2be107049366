import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from morphforge import latent as lm
from morphforge.gates import cosine_distance


def axis(dim, i):
    n = np.zeros(dim)
    n[i] = 1.0
    return lm.SemanticDirection(attribute=f"e{i}", normal=n)


class TestFitDirection:
    def test_axis_separable_recovers_axis(self, rng):
        x1 = np.concatenate([rng.uniform(1, 3, 40), -rng.uniform(1, 3, 40)])
        x2 = rng.uniform(-0.3, 0.3, 80)
        X = np.column_stack([x1, x2])
        d = lm.fit_direction(list(X), (x1 > 0).astype(int))
        assert abs(d.normal @ np.array([1.0, 0.0])) >= 0.99
        assert abs(np.linalg.norm(d.normal) - 1.0) < 1e-9

    def test_single_class_is_degenerate(self):
        X = [np.array([1.0, 0.0]), np.array([2.0, 0.0])]
        with pytest.raises(ValueError, match="degenerate labels"):
            lm.fit_direction(X, [1, 1])

    def test_mean_distances_of_symmetric_classes(self):
        X = [np.array([2.0, 0.0])] * 2 + [np.array([-2.0, 0.0])] * 2
        d = lm.fit_direction(X, [1, 1, 0, 0])
        assert d.mean_distance_pos == pytest.approx(2.0, abs=1e-6)
        assert d.mean_distance_neg == pytest.approx(2.0, abs=1e-6)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            lm.fit_direction([np.zeros(2), np.zeros(3)], [0, 1])


class TestProjection:
    def test_orthogonal_latent_unchanged(self):
        d = axis(3, 0)
        w = np.array([0.0, 2.0, -1.0])
        assert np.allclose(lm.project_to_boundary(w, d), w)

    def test_hand_computed(self):
        out = lm.project_to_boundary(np.array([3.0, 4.0]), axis(2, 0))
        assert np.allclose(out, [0.0, 4.0])

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_idempotent_and_contracting(self, seed):
        rng = np.random.default_rng(seed)
        w = rng.standard_normal(8)
        n = rng.standard_normal(8)
        d = lm.SemanticDirection("r", n / np.linalg.norm(n))
        once = lm.project_to_boundary(w, d)
        twice = lm.project_to_boundary(once, d)
        assert np.allclose(once, twice, atol=1e-12)
        assert np.linalg.norm(once) <= np.linalg.norm(w) + 1e-12
        assert abs(once @ d.normal) <= 1e-6 * max(np.linalg.norm(w), 1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="dimension"):
            lm.project_to_boundary(np.zeros(3), axis(4, 0))


class TestShift:
    def test_zero_scale(self):
        w = np.array([1.0, 2.0, 3.0])
        assert np.array_equal(lm.shift_along(w, axis(3, 1), 0.0), w)

    def test_hand_computed(self):
        out = lm.shift_along(np.zeros(3), axis(3, 1), 5.0)
        assert np.allclose(out, [0.0, 5.0, 0.0])

    def test_additive_inverse(self, rng):
        w = rng.standard_normal(6)
        d = axis(6, 2)
        back = lm.shift_along(lm.shift_along(w, d, 1.7), d, -1.7)
        assert np.allclose(back, w, atol=1e-6)

    def test_non_finite_scale(self):
        with pytest.raises(ValueError):
            lm.shift_along(np.zeros(3), axis(3, 0), np.inf)


class TestNeutralize:
    def setup_method(self):
        self.pose = axis(4, 0)
        self.illum = axis(4, 1)
        self.expr = axis(4, 2)

    def test_orthogonal_latent_unchanged(self):
        w = np.array([0.0, 0.0, 0.0, 3.0])
        out = lm.neutralize(w, self.pose, self.illum, self.expr, 0.0)
        assert np.allclose(out, w)

    def test_stepwise_hand_evaluation(self):
        out = lm.neutralize(np.array([1.0, 1.0, 1.0, 0.0]),
                            self.pose, self.illum, self.expr, 0.5)
        assert np.allclose(out, [0.0, 0.0, -0.5, 0.0])

    def test_expression_dot_equals_minus_d(self, rng):
        # holds even for non-orthogonal normals
        for _ in range(20):
            w = rng.standard_normal(5)
            normals = rng.standard_normal((3, 5))
            dirs = [lm.SemanticDirection(f"d{i}", n / np.linalg.norm(n))
                    for i, n in enumerate(normals)]
            d_neutral = float(rng.uniform(-1, 1))
            out = lm.neutralize(w, dirs[0], dirs[1], dirs[2], d_neutral)
            assert out @ dirs[2].normal == pytest.approx(-d_neutral, abs=1e-9)

    def test_orthogonal_complement_untouched(self, rng):
        w = rng.standard_normal(6)
        pose, illum, expr = axis(6, 0), axis(6, 1), axis(6, 2)
        out = lm.neutralize(w, pose, illum, expr, 0.7)
        assert np.allclose(out[3:], w[3:], atol=1e-6)
        assert out @ pose.normal == pytest.approx(0.0, abs=1e-9)
        assert out @ illum.normal == pytest.approx(0.0, abs=1e-9)


class TestGridEdits:
    def test_ifgs_zero_scales(self, rng):
        w = rng.standard_normal(4)
        out = lm.edit_ifgs(w, axis(4, 0), axis(4, 1), 0.0, 0.0)
        assert np.allclose(out, w)

    def test_ifgs_hand_computed(self):
        out = lm.edit_ifgs(np.zeros(4), axis(4, 0), axis(4, 1), 2.0, 3.0)
        assert np.allclose(out, [2.0, 3.0, 0.0, 0.0])

    def test_ifgs_offset_independent_of_base(self, rng):
        w1, w2 = rng.standard_normal(4), rng.standard_normal(4)
        i, a = axis(4, 0), axis(4, 1)
        delta1 = lm.edit_ifgs(w1, i, a, 1.2, -0.7) - w1
        delta2 = lm.edit_ifgs(w2, i, a, 1.2, -0.7) - w2
        assert np.allclose(delta1, delta2)

    def test_ifgd_zero_recipe(self, rng):
        w = rng.standard_normal(4)
        recipe = lm.EditRecipe(terms=tuple((axis(4, i), 0.0) for i in range(4)))
        assert np.allclose(lm.edit_ifgd(w, recipe), w)

    def test_ifgd_hand_computed(self):
        recipe = lm.EditRecipe(terms=tuple((axis(4, i), float(i + 1)) for i in range(4)))
        assert np.allclose(lm.edit_ifgd(np.zeros(4), recipe), [1.0, 2.0, 3.0, 4.0])

    def test_ifgd_term_order_irrelevant(self, rng):
        w = rng.standard_normal(4)
        terms = [(axis(4, i), float(i) - 1.5) for i in range(4)]
        a = lm.edit_ifgd(w, lm.EditRecipe(terms=tuple(terms)))
        b = lm.edit_ifgd(w, lm.EditRecipe(terms=tuple(reversed(terms))))
        assert np.allclose(a, b)

    def test_ifgd_empty_recipe(self):
        with pytest.raises(ValueError):
            lm.EditRecipe(terms=())

    def test_affine_in_scales(self, rng):
        w = rng.standard_normal(4)
        i, a = axis(4, 0), axis(4, 1)
        r = lambda s: lm.edit_ifgs(w, i, a, s, 0.0)
        assert np.allclose(r(1.0 + 2.0) - r(1.0), r(2.0) - r(0.0))


class TestPCA:
    def test_line_recovers_axis(self):
        pts = [np.array([0.0, t, 0.0]) for t in np.linspace(-1, 1, 7)]
        d = lm.fit_pca(pts, 1)[0]
        assert min(np.linalg.norm(d.normal - [0, 1, 0]),
                   np.linalg.norm(d.normal + [0, 1, 0])) < 1e-6

    def test_identical_points_zero_variance(self):
        with pytest.raises(ValueError, match="zero variance"):
            lm.fit_pca([np.ones(3)] * 4, 1)

    def test_orthonormality_full_rank(self, rng):
        pts = list(rng.standard_normal((50, 3)))
        dirs = lm.fit_pca(pts, 3)
        M = np.array([d.normal for d in dirs])
        assert np.allclose(M @ M.T, np.eye(3), atol=1e-6)

    def test_k_exceeds_rank(self):
        pts = [np.array([t, 0.0, 0.0]) for t in range(4)]
        with pytest.raises(ValueError, match="rank"):
            lm.fit_pca(pts, 2)

    def test_reconstruction(self, rng):
        X = rng.standard_normal((30, 5))
        dirs = lm.fit_pca(list(X), 5)
        M = np.array([d.normal for d in dirs])
        Xc = X - X.mean(axis=0)
        recon = (Xc @ M.T) @ M
        assert np.linalg.norm(recon - Xc) <= 1e-5 * np.linalg.norm(Xc)

    def test_variances_non_increasing(self, rng):
        X = rng.standard_normal((40, 4)) * np.array([3.0, 2.0, 1.0, 0.5])
        dirs = lm.fit_pca(list(X), 4)
        Xc = X - X.mean(axis=0)
        variances = [np.var(Xc @ d.normal) for d in dirs]
        assert all(a >= b - 1e-12 for a, b in zip(variances, variances[1:]))


def _prefix_embed(w):
    v = w[:4]
    return v / np.linalg.norm(v)


class TestFRPCA:
    def test_zero_coefficients_error(self, rng):
        comps = [lm.SemanticDirection("c", np.eye(6)[i]) for i in range(3)]
        with pytest.raises(ValueError, match="ineffective directions"):
            lm.edit_frpca(rng.standard_normal(6), comps, seed=1,
                          embed=_prefix_embed, tau_id=0.3,
                          coefficients=np.zeros(3))

    def test_distance_within_bound_vs_brute_force(self):
        w = np.array([1.0, 0.2, 0.1, 0.05, 0.0, 0.0])
        comps = [lm.SemanticDirection("c1", np.eye(6)[1])]
        tau = 0.3
        out = lm.edit_frpca(w, comps, seed=9, embed=_prefix_embed, tau_id=tau)
        d_out = 1.0 - _prefix_embed(w) @ _prefix_embed(out)
        assert 0.0 < d_out <= tau
        # brute-force scale sweep: distance is monotone and the chosen scale
        # is within one search-resolution step of the largest admissible one
        rng = np.random.default_rng(9)
        coeff = rng.standard_normal(1)
        direction = coeff[0] * comps[0].normal
        scales = np.linspace(0.0, 10.0, 1000)
        dists = [1.0 - _prefix_embed(w) @ _prefix_embed(w + s * direction)
                 for s in scales]
        assert all(b >= a - 1e-12 for a, b in zip(dists, dists[1:]))
        best = max(s for s, d in zip(scales, dists) if d <= tau)
        assert d_out == pytest.approx(tau, abs=max(tau - dists[np.searchsorted(scales, best) - 1], 1e-6))

    def test_deterministic(self, rng):
        w = rng.standard_normal(6)
        comps = [lm.SemanticDirection("c", np.eye(6)[i]) for i in range(3)]
        a = lm.edit_frpca(w, comps, seed=42, embed=_prefix_embed, tau_id=0.4)
        b = lm.edit_frpca(w, comps, seed=42, embed=_prefix_embed, tau_id=0.4)
        assert np.array_equal(a, b)

    def test_empty_components(self, rng):
        with pytest.raises(ValueError):
            lm.edit_frpca(rng.standard_normal(4), [], seed=0,
                          embed=_prefix_embed, tau_id=0.3)
