"""Quality and identity gates for candidate base samples and mated samples."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .edges import canny_edges

# 0-based index ranges of the standard 68-point annotation
LEFT_EYE = slice(36, 42)
RIGHT_EYE = slice(42, 48)
NOSE_BRIDGE = slice(27, 31)


@dataclass(frozen=True)
class PoseEstimate:
    yaw: float
    pitch: float
    roll: float

    def __post_init__(self):
        for name in ("yaw", "pitch", "roll"):
            v = getattr(self, name)
            if not np.isfinite(v) or not -180.0 <= v <= 180.0:
                raise ValueError(f"{name} out of range: {v}")


@dataclass(frozen=True)
class DiversityResult:
    accepted: bool
    nearest_index: int | None = None
    nearest_distance: float | None = None


@dataclass(frozen=True)
class GlassesResult:
    flagged: bool
    density: float


def check_landmarks(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape != (68, 2):
        raise ValueError(f"expected 68 (x, y) landmarks, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError("landmarks contain non-finite values")
    return pts


def cosine_distance(a, b) -> float:
    """1 - cos(a, b); symmetric, in [0, 2]."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine distance undefined for a zero vector")
    return float(1.0 - (a @ b) / (na * nb))


def diversity_check(candidate, gallery, threshold: float = 0.45) -> DiversityResult:
    """Reject a candidate whose embedding is closer than `threshold` to any
    already-accepted embedding; reports the nearest offender."""
    if not 0.0 < threshold < 2.0:
        raise ValueError("threshold must be in (0, 2)")
    nearest_idx, nearest_dist = None, None
    for i, g in enumerate(gallery):
        d = cosine_distance(candidate, g)
        if nearest_dist is None or d < nearest_dist:
            nearest_idx, nearest_dist = i, d
    if nearest_dist is not None and nearest_dist < threshold:
        return DiversityResult(False, nearest_idx, nearest_dist)
    return DiversityResult(True, nearest_idx, nearest_dist)


def preservation_check(base, mated, threshold: float = 0.45) -> bool:
    """Accept iff the mated sample stays within `threshold` cosine distance of
    its base (inclusive boundary)."""
    if not 0.0 < threshold < 2.0:
        raise ValueError("threshold must be in (0, 2)")
    return cosine_distance(base, mated) <= threshold


def pose_gate(p: PoseEstimate, limit: float = 5.0) -> bool:
    """Accept iff yaw and pitch both lie in the closed box [-limit, limit]."""
    return -limit <= p.yaw <= limit and -limit <= p.pitch <= limit


def eye_aspect_ratio(landmarks, eye: str) -> float:
    """(|p2-p6| + |p3-p5|) / (2 |p1-p4|) over the six points of one eye."""
    pts = check_landmarks(landmarks)
    if eye == "left":
        p = pts[LEFT_EYE]
    elif eye == "right":
        p = pts[RIGHT_EYE]
    else:
        raise ValueError(f"eye must be 'left' or 'right', got {eye!r}")
    width = np.linalg.norm(p[0] - p[3])
    if width == 0.0:
        raise ValueError("degenerate landmarks: zero eye width")
    v1 = np.linalg.norm(p[1] - p[5])
    v2 = np.linalg.norm(p[2] - p[4])
    return float((v1 + v2) / (2.0 * width))


def _bridge_roi(pts: np.ndarray, shape: tuple[int, int]) -> tuple[int, int, int, int]:
    """Nose-bridge bounding box padded by 20% of the inter-ocular distance."""
    bridge = pts[NOSE_BRIDGE]
    left_center = pts[LEFT_EYE].mean(axis=0)
    right_center = pts[RIGHT_EYE].mean(axis=0)
    iod = np.linalg.norm(right_center - left_center)
    pad = 0.2 * iod
    x0 = int(np.floor(bridge[:, 0].min() - pad))
    x1 = int(np.ceil(bridge[:, 0].max() + pad))
    y0 = int(np.floor(bridge[:, 1].min() - pad))
    y1 = int(np.ceil(bridge[:, 1].max() + pad))
    h, w = shape
    if x0 < 0 or y0 < 0 or x1 >= w or y1 >= h:
        raise ValueError("nose-bridge region falls outside the image")
    return x0, x1, y0, y1


def glasses_check(image, landmarks, density_threshold: float = 0.03,
                  low: float = 0.1, high: float = 0.2, sigma: float = 1.4) -> GlassesResult:
    """Flag the sample when edge-pixel density over the nose bridge exceeds
    the threshold (glasses leave a strong frame edge there)."""
    pts = check_landmarks(landmarks)
    img = np.asarray(image)
    if img.ndim != 2:
        raise ValueError("expected a grayscale image")
    x0, x1, y0, y1 = _bridge_roi(pts, img.shape)
    edges = canny_edges(img, low=low, high=high, sigma=sigma)
    roi = edges[y0:y1 + 1, x0:x1 + 1]
    density = float(roi.mean()) if roi.size else 0.0
    return GlassesResult(density > density_threshold, density)
