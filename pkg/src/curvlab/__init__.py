"""curvlab: curvature of left-invariant metrics at desk scale.

Compact Lie algebra data, a generic curvature engine for metrized
algebras, spectrally truncated algebras of maps from the circle or flat
torus into a compact group, Freed-style two-step Ricci regularization,
an exact homogeneous-symbol calculus with the Wodzicki-residue surface
Ricci formula, and Green's-matrix configuration products.
"""

from . import configurations, domains, engine, liealg, mapping, regularize, symbols
from .configurations import Configuration, build_configuration, ricci_lower_bound_scan
from .domains import ModeBasis, SpectralOperator, greens_function
from .engine import (DenseMetric, FiniteBackend, InternalConsistencyError,
                     KronMetric, MetrizedAlgebra, metrized_from_lie_algebra)
from .liealg import LieAlgebraData, abelian, load_structure_file, su2, su3
from .mapping import TruncatedGroupModel
from .regularize import (RicciEstimate, ScalarizedOperator, classify_partial_traces,
                         einstein_ratio, interleaved_trace_probe, ricci_cutoff,
                         scalarize)
from .symbols import (HomogeneousSymbol, ResidueDensity, TrigPoly,
                      curvature_leading_symbol, dirichlet_pairing, fiber_moment,
                      surface_ricci, surface_ricci_closed_form, wodzicki_residue)

__version__ = "0.1.0"

__all__ = [
    "Configuration", "DenseMetric", "FiniteBackend", "HomogeneousSymbol",
    "InternalConsistencyError", "KronMetric", "LieAlgebraData", "MetrizedAlgebra",
    "ModeBasis", "ResidueDensity", "RicciEstimate", "ScalarizedOperator",
    "SpectralOperator", "TrigPoly", "TruncatedGroupModel", "abelian",
    "build_configuration", "classify_partial_traces", "curvature_leading_symbol",
    "dirichlet_pairing", "einstein_ratio", "fiber_moment", "greens_function",
    "interleaved_trace_probe", "load_structure_file", "metrized_from_lie_algebra",
    "ricci_cutoff", "ricci_lower_bound_scan", "scalarize", "su2", "su3",
    "surface_ricci", "surface_ricci_closed_form", "wodzicki_residue",
    "configurations", "domains", "engine", "liealg", "mapping", "regularize",
    "symbols",
]
