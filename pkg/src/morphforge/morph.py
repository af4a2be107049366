"""Landmark-based morphing: Delaunay triangulation, piecewise-affine warping,
blending, splice post-processing, and the inverse de-morphing operation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import ConvexHull, Delaunay, QhullError
from PIL import Image, ImageDraw

from .gates import check_landmarks, cosine_distance
from .raster import check_raster


@dataclass(frozen=True)
class Triangulation:
    vertices: np.ndarray  # (n, 2) float
    triangles: np.ndarray  # (m, 3) int vertex indices


@dataclass(frozen=True)
class MorphRecord:
    subject_a: str
    subject_b: str
    algorithm: str  # "LMA" or "external"
    alpha: float
    output: str

    def __post_init__(self):
        if self.subject_a == self.subject_b:
            raise ValueError("morph contributors must differ")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1], got {self.alpha}")


def _cross2(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def _triangle_areas(pts: np.ndarray, tris: np.ndarray) -> np.ndarray:
    a, b, c = pts[tris[:, 0]], pts[tris[:, 1]], pts[tris[:, 2]]
    return 0.5 * np.abs(_cross2(b - a, c - a))


def delaunay(points) -> Triangulation:
    """Delaunay triangulation of a 2-D point set (empty-circumcircle property)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (x, y) points")
    try:
        tri = Delaunay(pts)
    except QhullError as exc:
        raise ValueError(f"degenerate point set (collinear?): {exc}") from exc
    simplices = np.sort(tri.simplices, axis=1)
    simplices = simplices[_triangle_areas(pts, simplices) > 0.0]
    if simplices.shape[0] == 0:
        raise ValueError("degenerate point set: no non-degenerate triangles")
    order = np.lexsort((simplices[:, 2], simplices[:, 1], simplices[:, 0]))
    return Triangulation(vertices=pts, triangles=simplices[order])


def _bilinear_sample(src: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear sampling with edge-clamp addressing. Returns float values."""
    h, w = src.shape[:2]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 2) if w > 1 else np.zeros_like(xs, int)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 2) if h > 1 else np.zeros_like(ys, int)
    dx = xs - x0
    dy = ys - y0
    if src.ndim == 3:
        dx = dx[:, None]
        dy = dy[:, None]
    f = src.astype(float)
    top = f[y0, x0] * (1 - dx) + f[y0, np.minimum(x0 + 1, w - 1)] * dx
    bot = f[np.minimum(y0 + 1, h - 1), x0] * (1 - dx) + \
        f[np.minimum(y0 + 1, h - 1), np.minimum(x0 + 1, w - 1)] * dx
    return top * (1 - dy) + bot * dy


def _round_u8(values: np.ndarray) -> np.ndarray:
    # half-away-from-zero on non-negative values
    return np.floor(np.clip(values, 0.0, 255.0) + 0.5).astype(np.uint8)


def piecewise_warp(src, src_pts, dst_pts, tri: Triangulation) -> np.ndarray:
    """Warp `src` so that `src_pts` land on `dst_pts`, triangle by triangle,
    with bilinear sampling; pixels outside every destination triangle are
    copied from `src`."""
    src = check_raster(src)
    src_pts = np.asarray(src_pts, dtype=float)
    dst_pts = np.asarray(dst_pts, dtype=float)
    if src_pts.shape != dst_pts.shape or src_pts.shape[0] != tri.vertices.shape[0]:
        raise ValueError("point lists and triangulation vertex count must agree")
    if np.array_equal(src_pts, dst_pts):
        return src.copy()
    h, w = src.shape[:2]
    out = src.copy()
    for t_idx, (i, j, k) in enumerate(tri.triangles):
        d = dst_pts[[i, j, k]]
        s = src_pts[[i, j, k]]
        area2 = float(_cross2(d[1] - d[0], d[2] - d[0]))
        if area2 == 0.0:
            raise ValueError(f"degenerate destination triangle {t_idx} ({i}, {j}, {k})")
        # affine map dst -> src
        m = np.column_stack([d, np.ones(3)])
        affine = np.linalg.solve(m, s)  # (3, 2)

        x0 = max(int(np.floor(d[:, 0].min())), 0)
        x1 = min(int(np.ceil(d[:, 0].max())), w - 1)
        y0 = max(int(np.floor(d[:, 1].min())), 0)
        y1 = min(int(np.ceil(d[:, 1].max())), h - 1)
        if x1 < x0 or y1 < y0:
            continue
        ys, xs = np.mgrid[y0:y1 + 1, x0:x1 + 1]
        xs = xs.ravel().astype(float)
        ys = ys.ravel().astype(float)
        # barycentric inclusion test
        v0 = d[1] - d[0]
        v1 = d[2] - d[0]
        px = xs - d[0, 0]
        py = ys - d[0, 1]
        inv = 1.0 / area2
        l1 = (px * v1[1] - py * v1[0]) * inv
        l2 = (py * v0[0] - px * v0[1]) * inv
        l0 = 1.0 - l1 - l2
        eps = 1e-9
        mask = (l0 >= -eps) & (l1 >= -eps) & (l2 >= -eps)
        if not mask.any():
            continue
        xs_in, ys_in = xs[mask], ys[mask]
        coords = np.column_stack([xs_in, ys_in, np.ones(xs_in.size)]) @ affine
        vals = _bilinear_sample(src, coords[:, 0], coords[:, 1])
        out[ys_in.astype(int), xs_in.astype(int)] = _round_u8(vals)
    return out


def border_anchors(shape: tuple[int, ...]) -> np.ndarray:
    """Four corners plus four edge midpoints, in pixel coordinates."""
    h, w = shape[0], shape[1]
    x1, y1 = float(w - 1), float(h - 1)
    return np.array([
        [0.0, 0.0], [x1, 0.0], [0.0, y1], [x1, y1],
        [x1 / 2, 0.0], [x1 / 2, y1], [0.0, y1 / 2], [x1, y1 / 2],
    ])


def morph_pair(a, la, b, lb, alpha: float) -> np.ndarray:
    """Landmark-based morph: average the geometry, warp both contributors to
    it, and alpha-blend. Endpoints and the 0.5 argument swap are byte-exact."""
    a = check_raster(a)
    b = check_raster(b)
    if a.shape != b.shape:
        raise ValueError(f"raster dimension mismatch: {a.shape} vs {b.shape}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    la = check_landmarks(la)
    lb = check_landmarks(lb)
    if alpha == 0.0:
        return a.copy()
    if alpha == 1.0:
        return b.copy()
    anchors = border_anchors(a.shape)
    pts_a = np.vstack([la, anchors])
    pts_b = np.vstack([lb, anchors])
    if np.array_equal(pts_a, pts_b):
        avg = pts_a.copy()
    elif alpha == 0.5:
        avg = 0.5 * (pts_a + pts_b)  # symmetric in argument order
    else:
        avg = (1.0 - alpha) * pts_a + alpha * pts_b
    tri = delaunay(avg)
    warped_a = piecewise_warp(a, pts_a, avg, tri)
    warped_b = piecewise_warp(b, pts_b, avg, tri)
    blend = (1.0 - alpha) * warped_a.astype(float) + alpha * warped_b.astype(float)
    return _round_u8(blend)


def _hull_mask(shape: tuple[int, int], pts: np.ndarray) -> np.ndarray:
    """Filled convex hull of the landmark set; empty for degenerate hulls."""
    try:
        hull = ConvexHull(pts)
    except QhullError:
        return np.zeros(shape, dtype=bool)
    poly = [tuple(p) for p in pts[hull.vertices]]
    im = Image.new("1", (shape[1], shape[0]), 0)
    ImageDraw.Draw(im).polygon(poly, fill=1, outline=1)
    return np.asarray(im, dtype=bool)


def splice_postprocess(morph, background, landmarks, feather_px: int = 0) -> np.ndarray:
    """Blend the morphed face region onto a contributor's background through a
    feathered convex-hull mask."""
    morph = check_raster(morph)
    background = check_raster(background)
    if morph.shape != background.shape:
        raise ValueError(f"raster dimension mismatch: {morph.shape} vs {background.shape}")
    if feather_px < 0:
        raise ValueError("feather_px must be >= 0")
    pts = check_landmarks(landmarks)
    mask = _hull_mask(morph.shape[:2], pts)
    if not mask.any():
        return background.copy()
    if feather_px == 0:
        out = background.copy()
        out[mask] = morph[mask]
        return out
    inside = ndimage.distance_transform_edt(mask)
    alpha = np.clip(inside / float(feather_px), 0.0, 1.0)
    if morph.ndim == 3:
        alpha = alpha[:, :, None]
    blend = alpha * morph.astype(float) + (1.0 - alpha) * background.astype(float)
    return _round_u8(blend)


def demorph_landmarks(ls, lp, factor: float) -> np.ndarray:
    """Extrapolate suspect landmarks away from the probe's contribution."""
    ls = check_landmarks(ls)
    lp = check_landmarks(lp)
    if not 0.0 <= factor < 1.0:
        raise ValueError(f"factor must be in [0, 1), got {factor}")
    return (ls - factor * lp) / (1.0 - factor)


def demorph(suspect, ls, probe, lp, factor: float) -> np.ndarray:
    """Invert a suspected morph against a trusted probe: extrapolate the
    geometry away from the probe and divide the probe's appearance back out."""
    suspect = check_raster(suspect)
    probe = check_raster(probe)
    if suspect.shape != probe.shape:
        raise ValueError(f"raster dimension mismatch: {suspect.shape} vs {probe.shape}")
    if not 0.0 <= factor < 1.0:
        raise ValueError(f"factor must be in [0, 1), got {factor}")
    if factor == 0.0:
        return suspect.copy()
    ls = check_landmarks(ls)
    lp = check_landmarks(lp)
    target = demorph_landmarks(ls, lp, factor)
    anchors = border_anchors(suspect.shape)
    pts_s = np.vstack([ls, anchors])
    pts_p = np.vstack([lp, anchors])
    pts_t = np.vstack([target, anchors])
    tri = delaunay(pts_t)
    warped_s = piecewise_warp(suspect, pts_s, pts_t, tri).astype(float)
    warped_p = piecewise_warp(probe, pts_p, pts_t, tri).astype(float)
    return _round_u8((warped_s - factor * warped_p) / (1.0 - factor))


def lmfd_verify(demorphed_emb, probe_emb, threshold: float = 0.45) -> str:
    """Differential detector decision: bona fide iff the de-morphed image still
    matches the probe (inclusive threshold)."""
    if not 0.0 < threshold < 2.0:
        raise ValueError("threshold must be in (0, 2)")
    d = cosine_distance(demorphed_emb, probe_emb)
    return "bona_fide" if d <= threshold else "morph_attack"
