"""Empirical halo-function laboratory."""
from .fit import ExponentFit, fit_exponent
from .sampler import Candidates, OperatorFamily, SweepRecord, sampled_superlevel_ratio
from .slab import HaloHeight, slab_halo_height
from .sweep import SlabSpec, alpha_sweep, dyadic_ladder, theorem4_probe

__all__ = [
    "Candidates", "ExponentFit", "HaloHeight", "OperatorFamily", "SlabSpec", "SweepRecord",
    "alpha_sweep", "dyadic_ladder", "fit_exponent", "sampled_superlevel_ratio", "slab_halo_height",
    "theorem4_probe",
]
