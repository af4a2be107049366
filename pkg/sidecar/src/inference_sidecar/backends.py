"""Backend loading: deterministic fake backend or pluggable model adapters.

A models directory must contain an ``adapter.py`` exposing
``load(models_dir: Path, device: str) -> backend``. The returned backend
implements any subset of the provider methods (``sample_latents``,
``decode_latent``, ``embed_face``, ``estimate_pose``, ``detect_landmarks``);
the capability set advertised by ``/v1/health`` is derived from what is
actually implemented. Any load failure aborts startup.
"""

from __future__ import annotations

import importlib.util
from pathlib import Path

from morphforge.providers import ToyProvider

from .config import SidecarConfig

_CAPABILITY_METHODS = {
    "sample_latent": "sample_latents",
    "decode_latent": "decode_latent",
    "embed_face": "embed_face",
    "estimate_pose": "estimate_pose",
    "detect_landmarks": "detect_landmarks",
}


class BackendLoadError(Exception):
    pass


def capabilities_of(backend) -> frozenset[str]:
    return frozenset(cap for cap, method in _CAPABILITY_METHODS.items()
                     if callable(getattr(backend, method, None)))


def load_backend(config: SidecarConfig):
    if config.fake:
        return ToyProvider()
    return _load_adapter(Path(config.models_dir), config.device)


def _load_adapter(models_dir: Path, device: str):
    adapter_path = models_dir / "adapter.py"
    if not adapter_path.is_file():
        raise BackendLoadError(f"no adapter.py in {models_dir}")
    spec = importlib.util.spec_from_file_location("sidecar_adapter", adapter_path)
    module = importlib.util.module_from_spec(spec)
    try:
        spec.loader.exec_module(module)
        backend = module.load(models_dir, device)
    except Exception as exc:
        raise BackendLoadError(f"adapter failed to load: {exc}") from exc
    if not capabilities_of(backend):
        raise BackendLoadError("adapter exposes no provider capabilities")
    return backend
