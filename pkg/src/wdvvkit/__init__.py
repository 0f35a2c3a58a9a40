"""Exact tools for WDVV solutions, their inversion symmetry, principal
hierarchies, tau functions and the associated transformation laws."""

from importlib import resources

__all__ = ["data_path"]


def data_path(name: str):
    """Path of a shipped example file (``a2.wdvv``, ``a3.G``, ...)."""
    return resources.files(__name__) / "data" / name
