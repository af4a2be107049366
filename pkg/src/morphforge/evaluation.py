"""Vulnerability and detection metrics: Morphing Attack Potential matrices,
DET curves (MACER/BPCER), KL divergence and KDE tables for quality scores."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .formats import format_csv


@dataclass(frozen=True)
class AttemptScore:
    morph_id: str
    contributor_slot: int  # 1 or 2
    attempt_index: int
    frs_id: str
    score: float

    def __post_init__(self):
        if self.contributor_slot not in (1, 2):
            raise ValueError(f"contributor_slot must be 1 or 2, got {self.contributor_slot}")
        if self.attempt_index < 1:
            raise ValueError("attempt_index must be >= 1")
        if not math.isfinite(self.score):
            raise ValueError("score must be finite")


@dataclass(frozen=True)
class MAPMatrix:
    """cells[r-1, c-1] = fraction of morphs fooling >= c systems with >= r attempts."""
    cells: np.ndarray  # (R, C)
    frs_ids: tuple[str, ...]

    def to_csv(self) -> str:
        header = ["attempts"] + [f">= {c} FRS" for c in range(1, self.cells.shape[1] + 1)]
        rows = [[r + 1] + [f"{v:.6f}" for v in self.cells[r]]
                for r in range(self.cells.shape[0])]
        return format_csv(header, rows)


@dataclass(frozen=True)
class DETCurve:
    points: tuple[tuple[float, float, float], ...]  # (threshold, macer, bpcer)

    def to_csv(self) -> str:
        return format_csv(["threshold", "macer", "bpcer"],
                          [[f"{t:.10g}", f"{m:.6f}", f"{b:.6f}"] for t, m, b in self.points])


def compute_map(scores: list[AttemptScore], thresholds: dict[str, float],
                policy: str = "both") -> MAPMatrix:
    """Morphing Attack Potential matrix.

    cell(r, c): fraction of morphs for which at least c FRSs are each fooled at
    attempt level r. Under `both`, an FRS is fooled at level r when every
    contributor slot has >= r attempts scoring at or above that FRS's
    threshold; under `either`, one such slot suffices.
    """
    if not scores:
        raise ValueError("no attempt scores given")
    if policy not in ("both", "either"):
        raise ValueError(f"policy must be 'both' or 'either', got {policy!r}")
    frs_ids = tuple(sorted({s.frs_id for s in scores}))
    for f in frs_ids:
        if f not in thresholds:
            raise ValueError(f"unknown frs_id {f!r}: no threshold configured")
    morph_ids = sorted({s.morph_id for s in scores})
    slots = sorted({s.contributor_slot for s in scores})
    r_max = max(s.attempt_index for s in scores)
    c_max = len(frs_ids)

    # pass counts per (morph, frs, slot): number of attempts at/above threshold
    counts: dict[tuple[str, str, int], int] = {}
    seen: set[tuple[str, str, int]] = set()
    for s in scores:
        key = (s.morph_id, s.frs_id, s.contributor_slot)
        seen.add(key)
        if s.score >= thresholds[s.frs_id]:
            counts[key] = counts.get(key, 0) + 1
    for m in morph_ids:
        for f in frs_ids:
            for slot in slots:
                if (m, f, slot) not in seen:
                    raise ValueError(
                        f"morph {m!r} / frs {f!r} is missing attempts for slot {slot}")

    cells = np.zeros((r_max, c_max))
    for r in range(1, r_max + 1):
        fooled = np.zeros(len(morph_ids), dtype=int)
        for mi, m in enumerate(morph_ids):
            for f in frs_ids:
                per_slot = [counts.get((m, f, slot), 0) >= r for slot in slots]
                ok = all(per_slot) if policy == "both" else any(per_slot)
                if ok:
                    fooled[mi] += 1
        for c in range(1, c_max + 1):
            cells[r - 1, c - 1] = np.mean(fooled >= c)
    return MAPMatrix(cells=cells, frs_ids=frs_ids)


def det_curve(bona_fide: list[float], attack: list[float],
              higher_is_bonafide: bool = True) -> DETCurve:
    """Sweep thresholds over the union of scores; MACER(t) = fraction of attack
    scores >= t, BPCER(t) = fraction of bona fide scores < t. Includes the
    -inf/+inf endpoints (1, 0) and (0, 1)."""
    if not bona_fide or not attack:
        raise ValueError("both score lists must be non-empty")
    bona = np.asarray(bona_fide, dtype=float)
    att = np.asarray(attack, dtype=float)
    if not higher_is_bonafide:
        bona, att = -bona, -att
    thresholds = np.concatenate(([-np.inf], np.unique(np.concatenate([bona, att])), [np.inf]))
    points = []
    for t in thresholds:
        macer = float(np.mean(att >= t))
        bpcer = float(np.mean(bona < t))
        points.append((float(t), macer, bpcer))
    return DETCurve(points=tuple(points))


def kl_divergence(p_samples: list[float], q_samples: list[float],
                  bins: int = 100, epsilon: float = 1e-10) -> float:
    """KL(P || Q) in nats between histogram estimates over the shared range of
    both sample sets, with epsilon smoothing."""
    if not len(p_samples) or not len(q_samples):
        raise ValueError("both sample sets must be non-empty")
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    p = np.asarray(p_samples, dtype=float)
    q = np.asarray(q_samples, dtype=float)
    lo = min(p.min(), q.min())
    hi = max(p.max(), q.max())
    if lo == hi:
        return 0.0
    hp, _ = np.histogram(p, bins=bins, range=(lo, hi))
    hq, _ = np.histogram(q, bins=bins, range=(lo, hi))
    fp = hp.astype(float) + epsilon
    fq = hq.astype(float) + epsilon
    fp /= fp.sum()
    fq /= fq.sum()
    return float(np.sum(fp * np.log(fp / fq)))


def kde_table(samples: list[float], bandwidth: float,
              grid: int = 256) -> list[tuple[float, float]]:
    """Gaussian-kernel density estimate on a uniform grid spanning the sample
    range padded by three bandwidths."""
    if not len(samples):
        raise ValueError("samples must be non-empty")
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if grid < 2:
        raise ValueError("grid must be >= 2")
    x = np.asarray(samples, dtype=float)
    lo = x.min() - 3.0 * bandwidth
    hi = x.max() + 3.0 * bandwidth
    xs = np.linspace(lo, hi, grid)
    z = (xs[:, None] - x[None, :]) / bandwidth
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (x.size * bandwidth * math.sqrt(2.0 * math.pi))
    return list(zip(xs.tolist(), dens.tolist()))


def kde_csv(table: list[tuple[float, float]]) -> str:
    return format_csv(["x", "density"], [[f"{x:.10g}", f"{d:.10g}"] for x, d in table])
