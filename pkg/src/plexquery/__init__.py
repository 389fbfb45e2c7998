"""plexquery: query-driven search over multiplex tissue images.

Per-panel patch encoders are trained by iterative self-supervision (kNN
graph -> map-equation communities -> contrastive + triplet updates against
a momentum memory dictionary); panels fuse by graph intersection; queries
return single cells, communities, or fused communities with expression
profiles."""

__version__ = "0.1.0"
