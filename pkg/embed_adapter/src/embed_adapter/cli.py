"""Command-line entry point.

Exit codes: 0 success, 2 backend/image failure, 3 bad arguments or config.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .errors import BackendUnavailable, UnreadableImage
from .export import ExportJob, export_features

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"}


@click.group()
def main():
    """Image feature exporter for the grasp-planning engine."""


@main.command()
@click.option("--images", "images_dir", type=click.Path(exists=True, file_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--backend", default="handcrafted", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file of backend settings, recorded in the metadata sidecar.")
def export(images_dir, out_dir, backend, config_path):
    """Export one FVEC and one FMAP per image in --images."""
    settings = {}
    if config_path:
        try:
            settings = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"error: {config_path}: {exc}", err=True)
            sys.exit(3)
    images = sorted(
        p for p in Path(images_dir).iterdir() if p.suffix.lower() in IMAGE_SUFFIXES
    )
    if not images:
        click.echo(f"error: no images found in {images_dir}", err=True)
        sys.exit(3)
    try:
        metadata = export_features(
            ExportJob(images=tuple(images), out_dir=Path(out_dir), backend=backend, settings=settings)
        )
    except (BackendUnavailable, UnreadableImage) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(3)
    click.echo(f"exported {len(metadata['files'])} image(s) to {out_dir}")


if __name__ == "__main__":
    main()
