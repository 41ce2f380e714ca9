"""Exact finite-model BV effective actions for cyclic DGLAs."""

__version__ = "0.1.0"
