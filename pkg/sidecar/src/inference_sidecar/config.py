from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class SidecarConfig:
    host: str = "127.0.0.1"
    port: int = 8750
    fake: bool = False
    models_dir: Path | None = None
    device: str = "cpu"
    max_batch: int = 64

    def __post_init__(self):
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if self.fake and self.models_dir is not None:
            raise ValueError("fake mode takes no models directory")
        if not self.fake and self.models_dir is None:
            raise ValueError("model mode requires --models")
