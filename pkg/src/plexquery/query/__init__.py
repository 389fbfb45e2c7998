"""Query serving: retrieval modes, quick search, expression profiles."""

from .index import PanelIndex, SearchIndex, build_index
from .profile import expression_profile
from .quick import quick_search
from .retrieval import (
    RetrievalResult,
    community_retrieve,
    fused_retrieve,
    representative_patches,
    topn_cosine,
)

__all__ = [
    "PanelIndex",
    "RetrievalResult",
    "SearchIndex",
    "build_index",
    "community_retrieve",
    "expression_profile",
    "fused_retrieve",
    "quick_search",
    "representative_patches",
    "topn_cosine",
]
