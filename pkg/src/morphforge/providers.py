"""Uniform inference-provider interface: toy (deterministic, in-process),
file-backed (precomputed artifacts by content hash), and HTTP (sidecar)."""

from __future__ import annotations

import base64
import hashlib
import json
import time
from pathlib import Path

import httpx
import numpy as np

from . import toyface
from .errors import ArtifactNotFoundError, CapabilityError, NoFaceError, TransportError
from .formats import load_landmarks, load_pose, load_synv, read_synv, write_synv
from .gates import PoseEstimate
from .raster import decode_png, encode_png

CAPABILITIES = frozenset({
    "sample_latent", "decode_latent", "embed_face",
    "estimate_pose", "detect_landmarks", "classify_gender",
})


class Provider:
    """Base provider; subclasses declare capabilities and implement the calls."""

    capabilities: frozenset[str] = frozenset()

    def require(self, capability: str) -> None:
        if capability not in self.capabilities:
            raise CapabilityError(
                f"{type(self).__name__} does not support {capability!r}")

    def sample_latents(self, count: int, seed: int) -> np.ndarray:
        raise NotImplementedError

    def decode_latent(self, latent: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def embed_face(self, image: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def estimate_pose(self, image: np.ndarray) -> PoseEstimate:
        raise NotImplementedError

    def detect_landmarks(self, image: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def classify_gender(self, image: np.ndarray) -> str:
        raise CapabilityError(f"{type(self).__name__} does not support 'classify_gender'")


class ToyProvider(Provider):
    """Deterministic offline provider backed by the toy face renderer."""

    capabilities = frozenset(CAPABILITIES)

    def __init__(self, dim: int = 32):
        if dim < toyface.EMBED_DIM:
            raise ValueError(f"latent dim must be >= {toyface.EMBED_DIM}")
        self.dim = dim
        self.embed_dim = toyface.EMBED_DIM

    def sample_latents(self, count: int, seed: int) -> np.ndarray:
        return np.random.default_rng(seed).standard_normal((count, self.dim))

    def decode_latent(self, latent: np.ndarray) -> np.ndarray:
        return toyface.render(np.asarray(latent, dtype=float))

    def embed_face(self, image: np.ndarray) -> np.ndarray:
        return toyface.embedding_from_tag(toyface.read_tag(image))

    def estimate_pose(self, image: np.ndarray) -> PoseEstimate:
        p = toyface.params_from_tag(toyface.read_tag(image))
        return PoseEstimate(yaw=p.yaw, pitch=p.pitch, roll=0.0)

    def detect_landmarks(self, image: np.ndarray) -> np.ndarray:
        p = toyface.params_from_tag(toyface.read_tag(image))
        return toyface.landmarks_from_params(p)

    def classify_gender(self, image: np.ndarray) -> str:
        return toyface.gender_from_tag(toyface.read_tag(image))


class FileProvider(Provider):
    """Resolves precomputed model outputs from a directory tree keyed by the
    content hash of the request payload."""

    capabilities = frozenset({"sample_latent", "decode_latent", "embed_face",
                              "estimate_pose", "detect_landmarks"})

    def __init__(self, root: str | Path):
        self.root = Path(root)

    @staticmethod
    def _digest(payload: bytes) -> str:
        return hashlib.sha256(payload).hexdigest()

    def _path(self, kind: str, key: str, suffix: str) -> Path:
        path = self.root / kind / f"{key}{suffix}"
        if not path.exists():
            raise ArtifactNotFoundError(f"{kind}/{key}{suffix}")
        return path

    def sample_latents(self, count: int, seed: int) -> np.ndarray:
        return load_synv(self._path("sample", f"{count}_{seed}", ".synv"))

    def decode_latent(self, latent: np.ndarray) -> np.ndarray:
        key = self._digest(write_synv(np.asarray(latent)))
        return decode_png(self._path("decode", key, ".png").read_bytes())

    def embed_face(self, image: np.ndarray) -> np.ndarray:
        key = self._digest(encode_png(image))
        return load_synv(self._path("embed", key, ".synv"))[0]

    def estimate_pose(self, image: np.ndarray) -> PoseEstimate:
        key = self._digest(encode_png(image))
        d = load_pose(self._path("pose", key, ".json"))
        return PoseEstimate(yaw=d["yaw"], pitch=d["pitch"], roll=d["roll"])

    def detect_landmarks(self, image: np.ndarray) -> np.ndarray:
        key = self._digest(encode_png(image))
        return load_landmarks(self._path("landmarks", key, ".json"))


class HttpProvider(Provider):
    """Client for the inference sidecar protocol (UTF-8 JSON bodies)."""

    def __init__(self, base_url: str, retries: int = 3, backoff: float = 0.25,
                 timeout: float = 30.0, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self.backoff = backoff
        self._client = client or httpx.Client(timeout=timeout)
        self.capabilities = frozenset(self._health().get("capabilities", []))

    def _health(self) -> dict:
        return self._request("GET", "/v1/health")

    def _request(self, method: str, path: str, payload: dict | None = None) -> dict:
        url = self.base_url + path
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.request(method, url, json=payload)
            except httpx.HTTPError as exc:
                last_exc = exc
                time.sleep(self.backoff * (2 ** attempt))
                continue
            if resp.status_code >= 400:
                try:
                    message = resp.json().get("error", resp.text)
                except json.JSONDecodeError:
                    message = resp.text
                if "no face" in str(message).lower():
                    raise NoFaceError(message)
                if 400 <= resp.status_code < 500:
                    raise TransportError(f"{path}: HTTP {resp.status_code}: {message}")
                last_exc = TransportError(f"{path}: HTTP {resp.status_code}: {message}")
                time.sleep(self.backoff * (2 ** attempt))
                continue
            try:
                return resp.json()
            except json.JSONDecodeError as exc:
                raise TransportError(f"{path}: malformed JSON response") from exc
        raise TransportError(f"{path}: provider unreachable after {self.retries + 1} attempts"
                             ) from last_exc

    def sample_latents(self, count: int, seed: int) -> np.ndarray:
        self.require("sample_latent")
        body = self._request("POST", "/v1/sample", {"count": count, "seed": seed})
        return read_synv(base64.b64decode(body["latents"]))

    def decode_latent(self, latent: np.ndarray) -> np.ndarray:
        self.require("decode_latent")
        payload = base64.b64encode(write_synv(np.asarray(latent))).decode()
        body = self._request("POST", "/v1/decode", {"latents": payload})
        return decode_png(base64.b64decode(body["images"][0]))

    def embed_face(self, image: np.ndarray) -> np.ndarray:
        self.require("embed_face")
        payload = [base64.b64encode(encode_png(image)).decode()]
        body = self._request("POST", "/v1/embed", {"images": payload})
        return read_synv(base64.b64decode(body["embeddings"]))[0]

    def estimate_pose(self, image: np.ndarray) -> PoseEstimate:
        self.require("estimate_pose")
        payload = [base64.b64encode(encode_png(image)).decode()]
        body = self._request("POST", "/v1/pose", {"images": payload})
        d = body["poses"][0]
        return PoseEstimate(yaw=d["yaw"], pitch=d["pitch"], roll=d["roll"])

    def detect_landmarks(self, image: np.ndarray) -> np.ndarray:
        self.require("detect_landmarks")
        payload = [base64.b64encode(encode_png(image)).decode()]
        body = self._request("POST", "/v1/landmarks", {"images": payload})
        pts = np.asarray(body["landmarks"][0], dtype=float)
        if pts.shape != (68, 2):
            raise TransportError(f"expected 68 landmarks, got shape {pts.shape}")
        return pts


def make_provider(config: dict) -> Provider:
    """Build a provider from a config mapping: {mode: toy|file|http, ...}."""
    mode = config.get("mode", "toy")
    if mode == "toy":
        return ToyProvider(dim=int(config.get("dim", 32)))
    if mode == "file":
        return FileProvider(config["root"])
    if mode == "http":
        return HttpProvider(config["url"],
                            retries=int(config.get("retries", 3)))
    raise ValueError(f"unknown provider mode {mode!r}")
