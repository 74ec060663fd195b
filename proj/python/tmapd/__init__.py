"""Lifelong multi-agent pickup-and-delivery with disruption-triggered terraforming."""

from tmapd._core import (
    __version__,
    generate_map,
    generate_map_custom,
    graph_distance,
    ideal_service_time,
    presets,
    run_paired,
    run_single,
    solve_wpbs,
)

__all__ = [
    "__version__",
    "generate_map",
    "generate_map_custom",
    "graph_distance",
    "ideal_service_time",
    "presets",
    "run_paired",
    "run_single",
    "solve_wpbs",
]
