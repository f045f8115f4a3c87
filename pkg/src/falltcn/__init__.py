"""Skeleton-sequence fall detection toolkit: 2D-to-3D pose lifting, pose
canonicalization and a dilated temporal-convolutional fall classifier."""

from .backend import available_backends, backend_name, set_backend

__version__ = "0.1.0"

__all__ = ["available_backends", "backend_name", "set_backend", "__version__"]
