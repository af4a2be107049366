from __future__ import annotations

import sys

import click

from .app import create_app
from .backends import BackendLoadError
from .config import SidecarConfig


@click.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8750, show_default=True)
@click.option("--fake", is_flag=True, help="serve the deterministic fake backend")
@click.option("--models", "models_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="directory holding adapter.py and model weights")
@click.option("--device", default="cpu", show_default=True)
@click.option("--max-batch", type=int, default=64, show_default=True)
def main(host, port, fake, models_dir, device, max_batch):
    """Serve the inference protocol over HTTP."""
    import uvicorn

    try:
        config = SidecarConfig(host=host, port=port, fake=fake,
                               models_dir=models_dir, device=device,
                               max_batch=max_batch)
        app = create_app(config)
    except (ValueError, BackendLoadError) as exc:
        click.echo(f"startup failed: {exc}", err=True)
        sys.exit(1)
    uvicorn.run(app, host=config.host, port=config.port)


if __name__ == "__main__":
    main()
