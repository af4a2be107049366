import math

import numpy as np
import pytest

from morphforge.evaluation import (AttemptScore, compute_map, det_curve,
                                   kde_table, kl_divergence)


def brute_force_map(scores, thresholds, policy):
    """Independent naive enumerator over morphs / FRSs / attempt levels."""
    morphs = sorted({s.morph_id for s in scores})
    frss = sorted({s.frs_id for s in scores})
    slots = sorted({s.contributor_slot for s in scores})
    r_max = max(s.attempt_index for s in scores)
    cells = np.zeros((r_max, len(frss)))
    for r in range(1, r_max + 1):
        for c in range(1, len(frss) + 1):
            hits = 0
            for m in morphs:
                n_frs = 0
                for f in frss:
                    slot_ok = []
                    for slot in slots:
                        n_pass = sum(
                            1 for s in scores
                            if s.morph_id == m and s.frs_id == f
                            and s.contributor_slot == slot
                            and s.score >= thresholds[f])
                        slot_ok.append(n_pass >= r)
                    fooled = all(slot_ok) if policy == "both" else any(slot_ok)
                    if fooled:
                        n_frs += 1
                if n_frs >= c:
                    hits += 1
            cells[r - 1, c - 1] = hits / len(morphs)
    return cells


def random_instance(rng):
    n_morph = rng.integers(1, 5)
    n_frs = rng.integers(1, 4)
    n_att = rng.integers(1, 4)
    thresholds = {f"frs{f}": float(rng.uniform(0.3, 0.7)) for f in range(n_frs)}
    scores = []
    for m in range(n_morph):
        for f in range(n_frs):
            for slot in (1, 2):
                for a in range(1, n_att + 1):
                    scores.append(AttemptScore(f"m{m}", slot, a, f"frs{f}",
                                               float(rng.uniform(0, 1))))
    return scores, thresholds


class TestComputeMap:
    def test_all_above(self):
        scores, thr = random_instance(np.random.default_rng(0))
        thr = {k: -1.0 for k in thr}
        out = compute_map(scores, thr)
        assert np.all(out.cells == 1.0)

    def test_all_below(self):
        scores, thr = random_instance(np.random.default_rng(0))
        thr = {k: 2.0 for k in thr}
        out = compute_map(scores, thr)
        assert np.all(out.cells == 0.0)

    def test_hand_built_against_brute_force(self):
        thr = {"A": 0.5, "B": 0.5}
        scores = []
        table = {
            # (morph, frs, slot): attempt scores
            ("m1", "A", 1): [0.9, 0.8], ("m1", "A", 2): [0.7, 0.2],
            ("m1", "B", 1): [0.6, 0.6], ("m1", "B", 2): [0.4, 0.3],
            ("m2", "A", 1): [0.2, 0.1], ("m2", "A", 2): [0.9, 0.9],
            ("m2", "B", 1): [0.8, 0.7], ("m2", "B", 2): [0.6, 0.55],
        }
        for (m, f, slot), vals in table.items():
            for a, v in enumerate(vals, 1):
                scores.append(AttemptScore(m, slot, a, f, v))
        for policy in ("both", "either"):
            out = compute_map(scores, thr, policy=policy)
            assert np.array_equal(out.cells, brute_force_map(scores, thr, policy))

    @pytest.mark.parametrize("policy", ["both", "either"])
    def test_random_instances_match_brute_force(self, policy):
        rng = np.random.default_rng(42)
        for _ in range(100):
            scores, thr = random_instance(rng)
            out = compute_map(scores, thr, policy=policy)
            assert np.array_equal(out.cells, brute_force_map(scores, thr, policy))

    def test_monotone_both_axes(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            scores, thr = random_instance(rng)
            cells = compute_map(scores, thr).cells
            assert np.all(np.diff(cells, axis=0) <= 0)
            assert np.all(np.diff(cells, axis=1) <= 0)
            assert np.all(cells <= cells[0, 0])

    def test_either_dominates_both(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            scores, thr = random_instance(rng)
            both = compute_map(scores, thr, policy="both").cells
            either = compute_map(scores, thr, policy="either").cells
            assert np.all(either >= both)

    def test_unknown_frs_errors(self):
        scores = [AttemptScore("m", s, 1, "X", 0.5) for s in (1, 2)]
        with pytest.raises(ValueError, match="unknown frs_id"):
            compute_map(scores, {"Y": 0.5})

    def test_empty_input_errors(self):
        with pytest.raises(ValueError):
            compute_map([], {"A": 0.5})

    def test_missing_slot_errors(self):
        scores = [AttemptScore("m", 1, 1, "A", 0.5),
                  AttemptScore("m2", 1, 1, "A", 0.5),
                  AttemptScore("m2", 2, 1, "A", 0.5)]
        with pytest.raises(ValueError, match="missing attempts"):
            compute_map(scores, {"A": 0.5})


class TestDetCurve:
    def test_separable_has_zero_zero_point(self):
        curve = det_curve([0.9, 0.8], [0.1, 0.2])
        assert any(m == 0.0 and b == 0.0 for _, m, b in curve.points)

    def test_identical_sets_no_zero_zero(self):
        curve = det_curve([0.1, 0.5, 0.9], [0.1, 0.5, 0.9])
        assert not any(m == 0.0 and b == 0.0 for _, m, b in curve.points)
        # identical distributions: frac(>= t) + frac(< t) == 1 at every point
        for _, m, b in curve.points:
            assert m + b == pytest.approx(1.0)

    def test_endpoints(self):
        curve = det_curve([0.7], [0.3])
        assert (curve.points[0][1], curve.points[0][2]) == (1.0, 0.0)
        assert (curve.points[-1][1], curve.points[-1][2]) == (0.0, 1.0)

    def test_monotonicity(self, rng):
        bona = rng.uniform(0, 1, 30).tolist()
        attack = rng.uniform(0, 1, 40).tolist()
        curve = det_curve(bona, attack)
        macers = [m for _, m, _ in curve.points]
        bpcers = [b for _, _, b in curve.points]
        assert all(a >= b for a, b in zip(macers, macers[1:]))
        assert all(a <= b for a, b in zip(bpcers, bpcers[1:]))

    def test_hand_sweep(self):
        curve = det_curve([0.9, 0.8], [0.1, 0.2])
        by_t = {t: (m, b) for t, m, b in curve.points}
        assert by_t[0.8] == (0.0, 0.0)
        assert by_t[0.2] == (0.5, 0.0)

    def test_polarity_flip(self):
        # lower score = more bona fide
        curve = det_curve([0.1, 0.2], [0.8, 0.9], higher_is_bonafide=False)
        assert any(m == 0.0 and b == 0.0 for _, m, b in curve.points)

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            det_curve([], [0.5])


class TestKLDivergence:
    def test_identical_zero(self, rng):
        x = rng.uniform(0, 1, 200).tolist()
        assert abs(kl_divergence(x, x)) <= 1e-12

    def test_two_bin_ln2(self):
        # P concentrated in bin 1, Q uniform over both bins
        p = [0.0] * 100
        q = [0.0] * 50 + [1.0] * 50
        val = kl_divergence(p, q, bins=2, epsilon=1e-10)
        assert val == pytest.approx(math.log(2.0), abs=1e-3)

    def test_non_negative_random(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            p = rng.normal(rng.uniform(-1, 1), 1.0, 50).tolist()
            q = rng.normal(rng.uniform(-1, 1), 1.0, 50).tolist()
            assert kl_divergence(p, q) >= -1e-12

    def test_degenerate_range(self):
        assert kl_divergence([1.0, 1.0], [1.0, 1.0, 1.0]) == 0.0

    def test_affine_invariance(self, rng):
        p = rng.uniform(0, 1, 100).tolist()
        q = rng.uniform(0, 1, 100).tolist()
        v1 = kl_divergence(p, q)
        v2 = kl_divergence([3.0 * x + 5.0 for x in p], [3.0 * x + 5.0 for x in q])
        assert v1 == pytest.approx(v2, abs=1e-9)

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            kl_divergence([], [1.0])


class TestKdeTable:
    def test_single_sample_peak(self):
        table = kde_table([2.0], bandwidth=0.5, grid=101)
        xs = [x for x, _ in table]
        dens = [d for _, d in table]
        assert xs[int(np.argmax(dens))] == pytest.approx(2.0, abs=0.05)
        # symmetric about the sample
        assert dens[0] == pytest.approx(dens[-1], rel=1e-6)

    def test_two_clusters_two_modes(self):
        samples = [0.0] * 10 + [10.0] * 10
        table = kde_table(samples, bandwidth=0.5, grid=400)
        xs = np.array([x for x, _ in table])
        dens = np.array([d for _, d in table])
        # local maxima
        peaks = xs[1:-1][(dens[1:-1] > dens[:-2]) & (dens[1:-1] > dens[2:])]
        assert any(abs(p - 0.0) <= 0.5 for p in peaks)
        assert any(abs(p - 10.0) <= 0.5 for p in peaks)

    def test_integrates_to_one(self, rng):
        samples = rng.normal(0, 2, 100).tolist()
        table = kde_table(samples, bandwidth=0.4, grid=512)
        xs = np.array([x for x, _ in table])
        dens = np.array([d for _, d in table])
        assert np.trapezoid(dens, xs) == pytest.approx(1.0, abs=1e-2)

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            kde_table([], bandwidth=0.1)
