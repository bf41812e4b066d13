"""Explicit ReLU networks that classify manifolds by their topology.

Indicator networks for balls, solid tori and their unions, GF(2) homology,
nerve complexes of samples and the end-to-end sample -> complex -> classifier
pipeline.
"""

from .homology import SimplicialComplex, betti_numbers, topological_complexity
from .indicators import (BoundReport, ball_network, representative_network,
                         theoretical_size_bounds, torus_network, union_network)
from .nerve import alpha_complex_2d, cech_complex, rips_complex, sample_size_bound
from .pipeline import PipelineConfig, run_pipeline, scaling_experiment
from .pwl import PiecewiseLinear1D, pwl_to_network
from .relu_core import ReluNetwork, compose, add, maximum
from .shapes import (BallSpec, EmbeddedSpec, RepresentativeSpec, TorusSpec, UniformBox,
                     UniformOnShapes, monte_carlo_risk, sample_uniform)

__version__ = "0.1.0"
