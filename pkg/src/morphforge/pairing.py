"""Morph contributor pair selection by embedding similarity, per split and gender."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

FULL = "full"  # sentinel: all C(n, 2) pairs per gender group


@dataclass(frozen=True)
class SubjectEntry:
    subject_id: str
    gender: str  # "F" | "M"
    split: str  # "train" | "dev" | "test"
    embedding: np.ndarray

    def __post_init__(self):
        if self.gender not in ("F", "M"):
            raise ValueError(f"gender must be F or M, got {self.gender!r}")
        if self.split not in ("train", "dev", "test"):
            raise ValueError(f"unknown split {self.split!r}")
        emb = np.asarray(self.embedding, dtype=float)
        if np.linalg.norm(emb) == 0.0:
            raise ValueError("embedding must be non-zero")
        object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class Pair:
    subject_a: str
    subject_b: str
    similarity: float


@dataclass
class PairSelection:
    pairs: list[Pair] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


def _cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    return float((a @ b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def select_pairs(subjects: list[SubjectEntry], split: str, k) -> PairSelection:
    """Unordered, unique, same-gender pairs. `k` mode keeps each subject's k
    most similar peers (ties broken by subject_id ascending); FULL takes every
    combination. Groups with fewer than 2 subjects yield a warning."""
    for s in subjects:
        if s.split != split:
            raise ValueError(f"subject {s.subject_id} is in split {s.split}, not {split}")
    ids = [s.subject_id for s in subjects]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate subject_id in input")

    result = PairSelection()
    for gender in ("F", "M"):
        group = sorted((s for s in subjects if s.gender == gender),
                       key=lambda s: s.subject_id)
        if not group:
            continue
        if len(group) < 2:
            result.warnings.append(
                f"gender group {gender} in split {split} has {len(group)} subject(s); no pairs")
            continue
        sim = {}
        for a, b in combinations(group, 2):
            sim[(a.subject_id, b.subject_id)] = _cosine_similarity(a.embedding, b.embedding)

        if k == FULL or k is None or (isinstance(k, int) and k >= len(group) - 1):
            chosen = set(sim)
        else:
            if not isinstance(k, int) or k < 1:
                raise ValueError(f"k must be a positive integer or FULL, got {k!r}")
            chosen = set()
            for s in group:
                peers = [t for t in group if t.subject_id != s.subject_id]
                key = lambda t: (-sim[_ordered(s.subject_id, t.subject_id)], t.subject_id)
                for t in sorted(peers, key=key)[:k]:
                    chosen.add(_ordered(s.subject_id, t.subject_id))
        for a_id, b_id in sorted(chosen):
            result.pairs.append(Pair(a_id, b_id, sim[(a_id, b_id)]))
    return result


def _ordered(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a < b else (b, a)
