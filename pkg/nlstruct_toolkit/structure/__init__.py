"""
Output-space structure: variables, regions and the flat potential layout.
"""

from .graph import (
    RegionGraph,
    build_chain,
    build_from_pairs,
    build_fully_connected,
    build_second_order,
)

__all__ = [
    'RegionGraph',
    'build_chain',
    'build_second_order',
    'build_fully_connected',
    'build_from_pairs',
]
