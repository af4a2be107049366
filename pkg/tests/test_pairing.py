import numpy as np
import pytest

from morphforge.pairing import FULL, SubjectEntry, select_pairs


def subj(sid, gender, emb, split="train"):
    return SubjectEntry(subject_id=sid, gender=gender, split=split,
                        embedding=np.asarray(emb, dtype=float))


class TestSelectPairs:
    def test_full_three_subjects(self):
        subjects = [subj(f"F{i}", "F", np.eye(3)[i]) for i in range(3)]
        sel = select_pairs(subjects, "train", FULL)
        assert len(sel.pairs) == 3

    def test_full_no_cross_gender(self):
        subjects = [subj(f"F{i}", "F", np.eye(4)[i]) for i in range(2)] + \
                   [subj(f"M{i}", "M", np.eye(4)[i + 2]) for i in range(2)]
        sel = select_pairs(subjects, "train", FULL)
        assert len(sel.pairs) == 2
        for p in sel.pairs:
            assert p.subject_a[0] == p.subject_b[0]

    def test_k1_nearest_verified_by_brute_force(self):
        embs = {
            "a": [1.0, 0.0, 0.0],
            "b": [0.9, 0.1, 0.0],
            "c": [0.0, 1.0, 0.0],
            "d": [0.0, 0.9, 0.3],
        }
        subjects = [subj(s, "F", e) for s, e in embs.items()]
        sel = select_pairs(subjects, "train", 1)
        got = {(p.subject_a, p.subject_b) for p in sel.pairs}

        def cos(x, y):
            x, y = np.asarray(x), np.asarray(y)
            return x @ y / (np.linalg.norm(x) * np.linalg.norm(y))

        expected = set()
        for s in embs:
            best = max((t for t in embs if t != s),
                       key=lambda t: (cos(embs[s], embs[t]), [t < x for x in embs]))
            # ties broken by ascending id: recompute explicitly
            sims = sorted(((cos(embs[s], embs[t]), t) for t in embs if t != s),
                          key=lambda p: (-p[0], p[1]))
            best = sims[0][1]
            expected.add(tuple(sorted((s, best))))
        assert got == expected

    def test_pairs_unordered_unique(self):
        subjects = [subj(f"F{i}", "F", np.eye(5)[i] + 0.1) for i in range(5)]
        sel = select_pairs(subjects, "train", 3)
        seen = set()
        for p in sel.pairs:
            assert p.subject_a < p.subject_b
            key = (p.subject_a, p.subject_b)
            assert key not in seen
            seen.add(key)

    def test_k_ge_group_size_behaves_as_full(self):
        subjects = [subj(f"F{i}", "F", np.eye(4)[i] + 0.2) for i in range(4)]
        assert len(select_pairs(subjects, "train", 10).pairs) == 6

    def test_single_subject_group_warns(self):
        subjects = [subj("F0", "F", [1.0, 0.0]),
                    subj("M0", "M", [1.0, 0.0]), subj("M1", "M", [0.9, 0.1])]
        sel = select_pairs(subjects, "train", FULL)
        assert len(sel.pairs) == 1
        assert any("F" in w for w in sel.warnings)

    def test_wrong_split_rejected(self):
        with pytest.raises(ValueError, match="split"):
            select_pairs([subj("F0", "F", [1.0], split="dev")], "train", FULL)

    def test_deterministic_with_ties(self):
        subjects = [subj(f"F{i}", "F", [1.0, 0.0]) for i in range(4)]
        a = select_pairs(subjects, "train", 2)
        b = select_pairs(subjects, "train", 2)
        assert a.pairs == b.pairs

    def test_count_bounds_k_mode(self):
        rng = np.random.default_rng(1)
        subjects = [subj(f"F{i:02d}", "F", rng.standard_normal(6)) for i in range(10)]
        k = 3
        pairs = select_pairs(subjects, "train", k).pairs
        assert int(np.ceil(10 * k / 2)) <= len(pairs) <= 10 * k

    def test_full_count_formula(self):
        rng = np.random.default_rng(2)
        subjects = [subj(f"F{i:02d}", "F", rng.standard_normal(4)) for i in range(6)] + \
                   [subj(f"M{i:02d}", "M", rng.standard_normal(4)) for i in range(5)]
        pairs = select_pairs(subjects, "train", FULL).pairs
        assert len(pairs) == 15 + 10
