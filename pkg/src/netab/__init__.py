"""Degree-paired rerandomization designs for network A/B tests."""

__version__ = "0.1.0"

from .graph import Network, generate_er, load_edge_list, pairs_network  # noqa: E402
from .design import Design, StoppingConfig, algorithm1, algorithm2, pair_structure  # noqa: E402
