"""HTTP service wrapping the allocation and estimation pipelines."""

from .app import app, create_app

__all__ = ["app", "create_app"]
