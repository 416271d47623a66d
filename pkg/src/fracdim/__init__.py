"""Box-counting and energy estimates for graphs of functions perturbed by fractional Brownian fields."""

from .dimension import (
    DimensionEstimate,
    EnergyReport,
    GraphCloud,
    box_count,
    box_dimension,
    discrete_energy,
    energy_dimension,
    energy_scan,
    graph_points,
    lemma1_bound_check,
    lift_measure,
    oscillation_count,
    theoretical_graph_dimension,
)
from .domains import CantorSpec, CompactSetModel, DiscreteMeasure, build_cantor, build_interval, build_product, natural_measure
from .errors import ConfigError, DegeneratePairError, ParameterError
from .functions import WeierstrassSpec, holder_test_function, random_phase_weierstrass, weierstrass
from .stochastic import (
    FbmField,
    FbmPath,
    HurstParameter,
    RngSeed,
    increment_variance,
    sample_additive_field,
    sample_fbm_path,
    sample_fgn,
)

__version__ = "0.1.0"
