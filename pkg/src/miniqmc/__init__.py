"""Particle-by-particle QMC kernels in two layouts, with a benchmark harness.

The ``ref`` path keeps packed AoS tables and full N x N Jastrow matrices in
double precision; the ``opt`` path uses padded SoA rows, O(N) Jastrow state
and optional single-precision hot data. Both are checked against the
brute-force evaluators in :mod:`miniqmc.oracle`.
"""

from .containers import AlignedSoAVector, padded_size
from .errors import (DivergenceError, NearSingularUpdate, QMCError, SingularMatrixError,
                     StagingError, VerificationError)
from .lattice import Cell, min_image_disp
from .particles import ParticleSet, Walker, load_walker, store_walker

__version__ = "0.1.0"

__all__ = [
    "AlignedSoAVector", "padded_size", "Cell", "min_image_disp", "ParticleSet", "Walker",
    "load_walker", "store_walker", "QMCError", "SingularMatrixError", "NearSingularUpdate",
    "DivergenceError", "StagingError", "VerificationError",
]
