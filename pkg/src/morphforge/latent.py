"""Latent-space vector math: direction fitting, neutralization projections,
grid editing, PCA, and random PCA editing with embedding-distance control."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Latent = np.ndarray  # 1-D float vector in the generator's intermediate space


@dataclass(frozen=True)
class SemanticDirection:
    """Unit normal of a binary-attribute boundary plus per-class mean distances."""

    attribute: str
    normal: np.ndarray
    mean_distance_neg: float = 0.0
    mean_distance_pos: float = 0.0

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if n.ndim != 1:
            raise ValueError("direction normal must be a 1-D vector")
        if abs(np.linalg.norm(n) - 1.0) > 1e-6:
            raise ValueError(f"direction normal must be unit length, got {np.linalg.norm(n)}")
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True)
class EditRecipe:
    """Weighted sum of semantic directions applied on top of a base latent."""

    terms: tuple[tuple[SemanticDirection, float], ...]
    mode: str = "IFGD"

    def __post_init__(self):
        if not self.terms:
            raise ValueError("recipe needs at least one term")
        for _, scale in self.terms:
            if not np.isfinite(scale):
                raise ValueError("recipe scales must be finite")


def _as_latent(w) -> np.ndarray:
    arr = np.asarray(w, dtype=float)
    if arr.ndim != 1:
        raise ValueError("latent must be a 1-D vector")
    if not np.all(np.isfinite(arr)):
        raise ValueError("latent contains non-finite values")
    return arr


def _check_dim(w: np.ndarray, d: SemanticDirection) -> None:
    if w.shape[0] != d.normal.shape[0]:
        raise ValueError(
            f"dimension mismatch: latent dim {w.shape[0]} vs direction dim {d.normal.shape[0]}")


def fit_direction(latents: Sequence, labels: Sequence, attribute: str = "attribute",
                  iterations: int = 500, step: float = 0.1,
                  l2: float = 1e-3) -> SemanticDirection:
    """Fit a separating hyperplane through the origin for a binary attribute.

    Deterministic full-batch subgradient descent on the hinge loss. Returns the
    unit normal (pointing toward the positive class) and the mean unsigned
    distance of each class's points to the hyperplane.
    """
    X = np.asarray([_as_latent(w) for w in latents], dtype=float)
    y = np.asarray(labels)
    if y.ndim != 1 or y.shape[0] != X.shape[0]:
        raise ValueError("labels must align with latents")
    classes = np.unique(y)
    if classes.shape[0] != 2:
        raise ValueError("degenerate labels: need exactly two classes")
    sign = np.where(y == classes[1], 1.0, -1.0)

    w = np.zeros(X.shape[1])
    for _ in range(iterations):
        margins = sign * (X @ w)
        viol = margins < 1.0
        grad = l2 * w
        if viol.any():
            grad -= (sign[viol, None] * X[viol]).mean(axis=0) * (viol.sum() / X.shape[0])
        w -= step * grad
    norm = np.linalg.norm(w)
    if norm == 0.0:
        raise ValueError("degenerate labels: classifier did not separate the classes")
    normal = w / norm
    dist = X @ normal
    return SemanticDirection(
        attribute=attribute,
        normal=normal,
        mean_distance_pos=float(abs(dist[sign > 0].mean())),
        mean_distance_neg=float(abs(dist[sign < 0].mean())),
    )


def project_to_boundary(w, d: SemanticDirection) -> np.ndarray:
    """Remove the component of `w` along the boundary normal."""
    w = _as_latent(w)
    _check_dim(w, d)
    return w - (w @ d.normal) * d.normal


def shift_along(w, d: SemanticDirection, scale: float) -> np.ndarray:
    w = _as_latent(w)
    _check_dim(w, d)
    if not np.isfinite(scale):
        raise ValueError("scale must be finite")
    return w + scale * d.normal


def neutralize(w, pose: SemanticDirection, illum: SemanticDirection,
               expr: SemanticDirection, d_neutral: float) -> np.ndarray:
    """Sequentially project out pose and illumination, then shift expression
    to the neutral side by the pre-computed mean distance."""
    if not np.isfinite(d_neutral):
        raise ValueError("d_neutral must be finite")
    w1 = project_to_boundary(w, pose)
    w2 = project_to_boundary(w1, illum)
    _check_dim(w2, expr)
    return w2 - (w2 @ expr.normal + d_neutral) * expr.normal


def edit_ifgs(w_base, illum: SemanticDirection, age: SemanticDirection,
              alpha_i: float, alpha_a: float) -> np.ndarray:
    """Mild illumination + ageing edit for same-session mated samples."""
    w = _as_latent(w_base)
    _check_dim(w, illum)
    _check_dim(w, age)
    return w + alpha_i * illum.normal + alpha_a * age.normal


def edit_ifgd(w_base, recipe: EditRecipe) -> np.ndarray:
    """Apply a multi-attribute edit recipe (pose/expression/illumination/age)."""
    w = _as_latent(w_base)
    out = w.copy()
    for direction, scale in recipe.terms:
        _check_dim(w, direction)
        out = out + scale * direction.normal
    return out


def fit_pca(latents: Sequence, k: int) -> list[SemanticDirection]:
    """Top-k principal directions of the latent cloud, orthonormal, by
    descending explained variance. Sign fixed so the first nonzero component
    is positive."""
    X = np.asarray([_as_latent(w) for w in latents], dtype=float)
    if X.shape[0] < 2:
        raise ValueError("need at least 2 samples for PCA")
    if k < 1:
        raise ValueError("k must be positive")
    Xc = X - X.mean(axis=0)
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    if s.size == 0 or s[0] <= 0.0:
        raise ValueError("zero variance: all samples identical")
    tol = s[0] * max(X.shape) * np.finfo(float).eps
    rank = int((s > tol).sum())
    if rank == 0:
        raise ValueError("zero variance: all samples identical")
    if k > rank:
        raise ValueError(f"k={k} exceeds data rank {rank}")
    directions = []
    for i in range(k):
        v = vt[i]
        nz = np.nonzero(np.abs(v) > 1e-12)[0]
        if nz.size and v[nz[0]] < 0:
            v = -v
        directions.append(SemanticDirection(attribute=f"pca_{i}", normal=v / np.linalg.norm(v)))
    return directions


def edit_frpca(w_base, components: Sequence[SemanticDirection], seed: int,
               embed: Callable[[np.ndarray], np.ndarray], tau_id: float,
               s_max: float = 10.0, iterations: int = 32,
               coefficients: np.ndarray | None = None) -> np.ndarray:
    """Random PCA-direction edit whose strength is controlled so the embedding
    moves, but stays within cosine distance `tau_id` of the base.

    Samples a seeded coefficient vector over `components`, then binary-searches
    a global scale in [0, s_max] for the largest embedding distance <= tau_id.
    `coefficients` overrides the seeded draw (test hook).
    """
    w = _as_latent(w_base)
    if not components:
        raise ValueError("need at least one component")
    if not 0.0 < tau_id < 1.0:
        raise ValueError("tau_id must be in (0, 1)")
    if coefficients is None:
        rng = np.random.default_rng(seed)
        coefficients = rng.standard_normal(len(components))
    coefficients = np.asarray(coefficients, dtype=float)
    direction = np.zeros_like(w)
    for c, comp in zip(coefficients, components):
        _check_dim(w, comp)
        direction = direction + c * comp.normal

    base_emb = np.asarray(embed(w), dtype=float)

    def dist(scale: float) -> float:
        e = np.asarray(embed(w + scale * direction), dtype=float)
        na, nb = np.linalg.norm(base_emb), np.linalg.norm(e)
        if na == 0.0 or nb == 0.0:
            raise ValueError("embedding oracle returned a zero vector")
        return float(1.0 - (base_emb @ e) / (na * nb))

    full = dist(s_max)
    if full <= 0.0:
        raise ValueError("ineffective directions: editing does not move the embedding")
    if full <= tau_id:
        return w + s_max * direction
    lo, hi = 0.0, s_max
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if dist(mid) <= tau_id:
            lo = mid
        else:
            hi = mid
    if lo == 0.0 or dist(lo) <= 0.0:
        raise ValueError("ineffective directions: no admissible edit scale found")
    return w + lo * direction
