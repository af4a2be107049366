"""HTTP inference sidecar implementing the morphforge provider protocol."""

from .config import SidecarConfig
from .app import create_app

__version__ = "0.1.0"

__all__ = ["SidecarConfig", "create_app", "__version__"]
