"""HTTP service wrapping the expansion pipeline."""

from .app import create_app

__all__ = ["create_app"]
