"""Map-equation community detection and its exhaustive oracle."""

from .infomap import infomap
from .map_equation import map_equation
from .oracle import brute_force_partition, set_partitions
from .partition import (
    OUTLIER,
    CommunityPartition,
    export_partition_csv,
    load_partition_csv,
)

__all__ = [
    "OUTLIER",
    "CommunityPartition",
    "brute_force_partition",
    "export_partition_csv",
    "infomap",
    "load_partition_csv",
    "map_equation",
    "set_partitions",
]
