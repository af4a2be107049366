"""On-disk formats: SYNV vector blocks, landmark/pose/pair files, and score CSVs.

SYNV layout (little-endian): magic "SYNV", u16 version (=1), u16 reserved,
u32 count, u32 dim, then count*dim IEEE-754 float32 values.
"""

from __future__ import annotations

import csv
import io
import json
import struct
from pathlib import Path

import numpy as np

SYNV_MAGIC = b"SYNV"
SYNV_VERSION = 1
_HEADER = struct.Struct("<4sHHII")


def write_synv(vectors: np.ndarray) -> bytes:
    """Serialize a (count, dim) or (dim,) float array to SYNV bytes."""
    arr = np.asarray(vectors, dtype=np.float32)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2:
        raise ValueError(f"expected 1-D or 2-D array, got {arr.ndim}-D")
    if not np.all(np.isfinite(arr)):
        raise ValueError("SYNV payload must be finite")
    count, dim = arr.shape
    header = _HEADER.pack(SYNV_MAGIC, SYNV_VERSION, 0, count, dim)
    return header + arr.astype("<f4").tobytes()


def read_synv(data: bytes) -> np.ndarray:
    """Parse SYNV bytes into a (count, dim) float32 array."""
    if len(data) < _HEADER.size:
        raise ValueError("SYNV block truncated: header incomplete")
    magic, version, _reserved, count, dim = _HEADER.unpack_from(data)
    if magic != SYNV_MAGIC:
        raise ValueError(f"bad SYNV magic: {magic!r}")
    if version != SYNV_VERSION:
        raise ValueError(f"unsupported SYNV version: {version}")
    expected = _HEADER.size + 4 * count * dim
    if len(data) != expected:
        raise ValueError(f"SYNV payload length {len(data)} != expected {expected}")
    arr = np.frombuffer(data, dtype="<f4", offset=_HEADER.size).reshape(count, dim)
    if not np.all(np.isfinite(arr)):
        raise ValueError("SYNV payload contains non-finite values")
    return arr.copy()


def save_synv(path: str | Path, vectors: np.ndarray) -> None:
    Path(path).write_bytes(write_synv(vectors))


def load_synv(path: str | Path) -> np.ndarray:
    return read_synv(Path(path).read_bytes())


# --- structured text sidecars -------------------------------------------------

def save_landmarks(path: str | Path, points: np.ndarray) -> None:
    pts = np.asarray(points, dtype=float)
    if pts.shape != (68, 2):
        raise ValueError(f"expected 68 [x, y] pairs, got shape {pts.shape}")
    Path(path).write_text(json.dumps(pts.tolist()))


def load_landmarks(path: str | Path) -> np.ndarray:
    pts = np.asarray(json.loads(Path(path).read_text()), dtype=float)
    if pts.shape != (68, 2):
        raise ValueError(f"{path}: expected 68 [x, y] pairs, got shape {pts.shape}")
    return pts


def save_pose(path: str | Path, yaw: float, pitch: float, roll: float) -> None:
    Path(path).write_text(json.dumps({"yaw": yaw, "pitch": pitch, "roll": roll}))


def load_pose(path: str | Path) -> dict:
    d = json.loads(Path(path).read_text())
    for key in ("yaw", "pitch", "roll"):
        if key not in d:
            raise ValueError(f"{path}: pose file missing '{key}'")
    return d


def save_direction_meta(path: str | Path, attribute: str,
                        mean_distance_neg: float, mean_distance_pos: float) -> None:
    Path(path).write_text(json.dumps({
        "attribute": attribute,
        "mean_distance_neg": mean_distance_neg,
        "mean_distance_pos": mean_distance_pos,
    }))


def load_direction_meta(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def save_pairs(path: str | Path, pairs: list[dict]) -> None:
    Path(path).write_text(json.dumps(pairs, indent=2))


def load_pairs(path: str | Path) -> list[dict]:
    pairs = json.loads(Path(path).read_text())
    for p in pairs:
        if not {"subject_a", "subject_b", "similarity"} <= set(p):
            raise ValueError(f"{path}: malformed pair entry {p}")
    return pairs


# --- score CSVs ---------------------------------------------------------------

def read_attempt_scores(path: str | Path) -> list[dict]:
    """Read `morph_id,slot,attempt,frs_id,score` rows."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "morph_id": row["morph_id"],
                "slot": int(row["slot"]),
                "attempt": int(row["attempt"]),
                "frs_id": row["frs_id"],
                "score": float(row["score"]),
            })
    return rows


def read_detection_scores(path: str | Path) -> tuple[list[float], list[float]]:
    """Read `id,label,score` rows; returns (bona_fide, attack) score lists."""
    bona, attack = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            label = row["label"].strip().lower()
            if label == "bonafide":
                bona.append(float(row["score"]))
            elif label == "morph":
                attack.append(float(row["score"]))
            else:
                raise ValueError(f"unknown label {row['label']!r} (want bonafide|morph)")
    return bona, attack


def read_quality_scores(path: str | Path) -> dict[str, list[float]]:
    """Read `id,subset,score` rows grouped by subset tag."""
    groups: dict[str, list[float]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            groups.setdefault(row["subset"], []).append(float(row["score"]))
    return groups


def format_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()
