"""Membership inference and group status on directed follower graphs."""

from .centrality import eigenvector_centrality, follower_count, pagerank, reversed_pagerank
from .errors import (ConfigError, DivergenceError, DomainError, ParseError, StatusNetError,
                     ValidationError)
from .graph import SocialGraph, load_graph, save_graph
from .group_status import group_status, pr_baseline
from .inference import infer_lp, infer_sp, infer_up, membership_table, train_sp

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DivergenceError", "DomainError", "ParseError", "SocialGraph",
    "StatusNetError", "ValidationError", "eigenvector_centrality", "follower_count",
    "group_status", "infer_lp", "infer_sp", "infer_up", "load_graph", "membership_table",
    "pagerank", "pr_baseline", "reversed_pagerank", "save_graph", "train_sp",
]
