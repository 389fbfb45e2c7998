"""Durable artifacts: array container, community index CSV, index snapshots."""

from .container import load_arrays, save_arrays
from .index_table import export_index, load_index
from .snapshot import load_snapshot, save_snapshot

__all__ = [
    "export_index",
    "load_arrays",
    "load_index",
    "load_snapshot",
    "save_arrays",
    "save_snapshot",
]
