"""Tensor graphs, reverse-mode differentiation and the Adam optimizer."""

from .graph import Graph, GraphError, NumericError, as_tensor, backward, forward
from .params import ParamStore, adam_step

__all__ = [
    "Graph",
    "GraphError",
    "NumericError",
    "ParamStore",
    "adam_step",
    "as_tensor",
    "backward",
    "forward",
]
