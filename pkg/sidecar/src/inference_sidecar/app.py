"""FastAPI application implementing the provider HTTP protocol.

All bodies are UTF-8 JSON. Binary payloads (SYNV vector blocks, PNG images)
travel base64-encoded. Every error response carries `{"error": "<message>"}`.
"""

from __future__ import annotations

import base64
import binascii

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from morphforge.errors import NoFaceError
from morphforge.formats import read_synv, write_synv
from morphforge.raster import decode_png, encode_png

from .backends import capabilities_of, load_backend
from .config import SidecarConfig


class ClientError(Exception):
    def __init__(self, message: str, status: int = 400):
        super().__init__(message)
        self.status = status


class SampleRequest(BaseModel):
    count: int = Field(ge=1)
    seed: int


class DecodeRequest(BaseModel):
    latents: str


class ImagesRequest(BaseModel):
    images: list[str] = Field(min_length=1)


def _b64decode(data: str, what: str) -> bytes:
    try:
        return base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ClientError(f"malformed base64 in {what}: {exc}") from exc


def _parse_synv(data: str, what: str) -> np.ndarray:
    try:
        return read_synv(_b64decode(data, what))
    except ValueError as exc:
        raise ClientError(f"bad SYNV block in {what}: {exc}") from exc


def _parse_images(payload: ImagesRequest, max_batch: int) -> list[np.ndarray]:
    if len(payload.images) > max_batch:
        raise ClientError(
            f"batch of {len(payload.images)} exceeds limit {max_batch}", status=413)
    images = []
    for i, blob in enumerate(payload.images):
        try:
            images.append(decode_png(_b64decode(blob, f"images[{i}]")))
        except (ValueError, OSError) as exc:
            raise ClientError(f"cannot decode images[{i}] as PNG: {exc}") from exc
    return images


def create_app(config: SidecarConfig) -> FastAPI:
    backend = load_backend(config)
    capabilities = capabilities_of(backend)
    app = FastAPI(title="inference-sidecar", docs_url=None, redoc_url=None)

    @app.exception_handler(ClientError)
    async def client_error(_: Request, exc: ClientError):
        return JSONResponse(status_code=exc.status, content={"error": str(exc)})

    @app.exception_handler(NoFaceError)
    async def no_face(_: Request, exc: NoFaceError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def invalid_request(_: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"error": str(exc)})

    @app.exception_handler(Exception)
    async def internal_error(_: Request, exc: Exception):
        return JSONResponse(status_code=500, content={"error": str(exc)})

    def require(capability: str) -> None:
        if capability not in capabilities:
            raise ClientError(f"capability {capability!r} not available", status=404)

    @app.get("/v1/health")
    async def health():
        return {"status": "ok", "capabilities": sorted(capabilities)}

    @app.post("/v1/sample")
    async def sample(req: SampleRequest):
        require("sample_latent")
        if req.count > config.max_batch:
            raise ClientError(
                f"batch of {req.count} exceeds limit {config.max_batch}", status=413)
        latents = backend.sample_latents(req.count, seed=req.seed)
        return {"latents": base64.b64encode(write_synv(latents)).decode()}

    @app.post("/v1/decode")
    async def decode(req: DecodeRequest):
        require("decode_latent")
        latents = _parse_synv(req.latents, "latents")
        if latents.shape[0] > config.max_batch:
            raise ClientError(
                f"batch of {latents.shape[0]} exceeds limit {config.max_batch}",
                status=413)
        images = [backend.decode_latent(w) for w in latents]
        return {"images": [base64.b64encode(encode_png(img)).decode()
                           for img in images]}

    @app.post("/v1/embed")
    async def embed(req: ImagesRequest):
        require("embed_face")
        images = _parse_images(req, config.max_batch)
        embeddings = np.stack([np.asarray(backend.embed_face(img), dtype=np.float32)
                               for img in images])
        return {"embeddings": base64.b64encode(write_synv(embeddings)).decode()}

    @app.post("/v1/pose")
    async def pose(req: ImagesRequest):
        require("estimate_pose")
        images = _parse_images(req, config.max_batch)
        poses = [backend.estimate_pose(img) for img in images]
        return {"poses": [{"yaw": p.yaw, "pitch": p.pitch, "roll": p.roll}
                          for p in poses]}

    @app.post("/v1/landmarks")
    async def landmarks(req: ImagesRequest):
        require("detect_landmarks")
        images = _parse_images(req, config.max_batch)
        pts = [np.asarray(backend.detect_landmarks(img), dtype=float)
               for img in images]
        return {"landmarks": [p.tolist() for p in pts]}

    return app
