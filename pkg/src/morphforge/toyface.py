"""Deterministic toy face renderer.

Maps a latent vector to a 256x256 grayscale face whose geometry (head ellipse,
eyes, nose, mouth) is an affine function of the first 8 latent components. The
first 8 components are also stamped into row 0 of the image as a tagged byte
block, so pose, landmarks, embedding, and a pseudo-gender label can be
recovered analytically from the rendered pixels. This makes the whole pipeline
testable offline with no model inference.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw

from .errors import NoFaceError

SIZE = 256
EMBED_DIM = 8
_TAG_MAGIC = bytes((83, 89, 78, 86))  # "SYNV"
_TAG_FLOATS = struct.Struct("<8f")
_TAG_LEN = len(_TAG_MAGIC) + _TAG_FLOATS.size + 1

# index of the latent component steering each rendered trait
POSE_YAW = 3
POSE_PITCH = 4
EYE_OPENNESS = 5
GENDER = 7
DEGREES_PER_UNIT = 3.0  # yaw/pitch degrees per unit of latent components 3/4


@dataclass(frozen=True)
class FaceParams:
    cx: float
    cy: float
    rx: float
    ry: float
    yaw: float
    pitch: float
    ear: float  # eye aspect ratio (height/width of the eye hexagon)
    nose_len: float
    tone: float


def face_params(latent: np.ndarray) -> FaceParams:
    w = np.asarray(latent, dtype=np.float32)[:EMBED_DIM].astype(float)
    if w.shape[0] < EMBED_DIM:
        raise ValueError(f"latent must have at least {EMBED_DIM} components")
    return FaceParams(
        cx=128.0 + 6.0 * w[0],
        cy=128.0 + 6.0 * w[1],
        rx=62.0 + 3.0 * w[2],
        ry=84.0 + 3.0 * w[2],
        yaw=float(np.clip(DEGREES_PER_UNIT * w[POSE_YAW], -180.0, 180.0)),
        pitch=float(np.clip(DEGREES_PER_UNIT * w[POSE_PITCH], -180.0, 180.0)),
        ear=float(np.clip(0.32 + 0.06 * w[EYE_OPENNESS], 0.05, 0.6)),
        nose_len=26.0 + 2.0 * w[6],
        tone=float(np.clip(170.0 + 6.0 * w[GENDER], 60.0, 230.0)),
    )


def landmarks_from_params(p: FaceParams) -> np.ndarray:
    """Analytic 68-point landmark set for the rendered face."""
    pts = np.zeros((68, 2))
    # jaw 0-16: lower half of the head ellipse, left to right
    theta = np.pi * (1.0 - np.arange(17) / 16.0)
    pts[0:17, 0] = p.cx + p.rx * np.cos(theta)
    pts[0:17, 1] = p.cy + p.ry * np.sin(theta)

    eye_dx = 0.42 * p.rx
    eye_y = p.cy - 0.18 * p.ry
    ew = 0.36 * p.rx
    eh = p.ear * ew

    # brows 17-26: shallow arcs above each eye
    for side, start in ((-1, 17), (1, 22)):
        ex = p.cx + side * eye_dx
        xs = ex + np.linspace(-0.6, 0.6, 5) * ew
        ys = eye_y - 0.14 * p.ry - 3.0 * np.sin(np.linspace(0, np.pi, 5))
        pts[start:start + 5, 0] = xs
        pts[start:start + 5, 1] = ys

    # nose bridge 27-30: vertical segment down the face midline
    bridge_top = p.cy - 0.30 * p.ry
    pts[27:31, 0] = p.cx
    pts[27:31, 1] = bridge_top + np.linspace(0.0, p.nose_len, 4)
    # nose bottom 31-35
    pts[31:36, 0] = p.cx + np.linspace(-8.0, 8.0, 5)
    pts[31:36, 1] = bridge_top + p.nose_len + 5.0

    # eyes 36-41 (left), 42-47 (right): hexagons with EAR = eh / ew
    for side, start in ((-1, 36), (1, 42)):
        ex = p.cx + side * eye_dx
        pts[start:start + 6] = [
            [ex - ew / 2, eye_y],
            [ex - ew / 4, eye_y - eh / 2],
            [ex + ew / 4, eye_y - eh / 2],
            [ex + ew / 2, eye_y],
            [ex + ew / 4, eye_y + eh / 2],
            [ex - ew / 4, eye_y + eh / 2],
        ]

    # mouth 48-67: outer ring of 12, inner ring of 8
    mx, my = p.cx, p.cy + 0.45 * p.ry
    for n, radii, start in ((12, (0.30 * p.rx, 0.10 * p.ry), 48),
                            (8, (0.20 * p.rx, 0.05 * p.ry), 60)):
        ang = 2.0 * np.pi * np.arange(n) / n
        pts[start:start + n, 0] = mx + radii[0] * np.cos(ang)
        pts[start:start + n, 1] = my + radii[1] * np.sin(ang)
    return pts


def render(latent: np.ndarray) -> np.ndarray:
    """Render the toy face and stamp the latent tag into row 0."""
    p = face_params(latent)
    lm = landmarks_from_params(p)
    im = Image.new("L", (SIZE, SIZE), 40)
    draw = ImageDraw.Draw(im)
    tone = int(round(p.tone))
    draw.ellipse([p.cx - p.rx, p.cy - p.ry, p.cx + p.rx, p.cy + p.ry],
                 fill=tone, outline=0, width=2)
    # eyes: white sclera hexagon with a dark pupil
    for start in (36, 42):
        hexagon = [tuple(q) for q in lm[start:start + 6]]
        draw.polygon(hexagon, fill=245, outline=90)
        ex = (lm[start][0] + lm[start + 3][0]) / 2.0
        ey = lm[start][1]
        draw.ellipse([ex - 2, ey - 2, ex + 2, ey + 2], fill=20)
    # nose: faint line so it stays below the edge-detector thresholds
    draw.line([tuple(lm[27]), tuple(lm[30])], fill=max(tone - 18, 0), width=2)
    # mouth outline
    draw.polygon([tuple(q) for q in lm[48:60]], outline=70)

    img = np.asarray(im, dtype=np.uint8).copy()
    img[0, :_TAG_LEN] = np.frombuffer(_make_tag(latent), dtype=np.uint8)
    return img


def _make_tag(latent: np.ndarray) -> bytes:
    w = np.asarray(latent, dtype=np.float32)[:EMBED_DIM]
    payload = _TAG_MAGIC + _TAG_FLOATS.pack(*w.tolist())
    return payload + bytes([sum(payload) % 256])


def read_tag(image: np.ndarray) -> np.ndarray:
    """Recover the 8 tagged latent components; raises NoFaceError otherwise."""
    img = np.asarray(image)
    if img.ndim == 3:
        img = img[:, :, 0]
    if img.ndim != 2 or img.shape[0] < 1 or img.shape[1] < _TAG_LEN:
        raise NoFaceError("no face found: image too small for the toy detector")
    raw = bytes(img[0, :_TAG_LEN].astype(np.uint8).tolist())
    if raw[:4] != _TAG_MAGIC or sum(raw[:-1]) % 256 != raw[-1]:
        raise NoFaceError("no face found in image")
    return np.asarray(_TAG_FLOATS.unpack(raw[4:-1]), dtype=np.float64)


def embedding_from_tag(tag: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(tag)
    if norm == 0.0:
        raise NoFaceError("no face found: degenerate toy embedding")
    return tag / norm


def params_from_tag(tag: np.ndarray) -> FaceParams:
    return face_params(tag)


def gender_from_tag(tag: np.ndarray) -> str:
    return "F" if tag[GENDER] < 0.0 else "M"
