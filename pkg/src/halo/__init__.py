"""Superlevel sets and Tauberian constants of geometric maximal operators."""
from .core_geom import (Ball, Box, BoxSet, Interval, IntervalSet, as_scalar, ball_slab_volume,
                        boxset_canonicalize, format_scalar, region_ball_volume)
from .covering_balls import (DensityBallFamily, cf_select, dilation_cover_check, tauberian_upper_from_selection,
                             theorem3_bound)
from .iterated_chain import AlphaChain, chain_step, fiber_decompose, run_chain, theorem2_bound
from .maximal_1d import (MixedIndicator, bounded_overlap_select, lemma1_bound, superlevel_indicator,
                         superlevel_mixed)

__version__ = "0.1.0"

__all__ = [
    "AlphaChain", "Ball", "Box", "BoxSet", "DensityBallFamily", "Interval", "IntervalSet", "MixedIndicator",
    "as_scalar", "ball_slab_volume", "bounded_overlap_select", "boxset_canonicalize", "cf_select", "chain_step",
    "dilation_cover_check", "fiber_decompose", "format_scalar", "lemma1_bound", "region_ball_volume",
    "run_chain", "superlevel_indicator", "superlevel_mixed", "tauberian_upper_from_selection",
    "theorem2_bound", "theorem3_bound",
]
