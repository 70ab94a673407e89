"""Exponential-family restricted Boltzmann machines with arbitrary monotone units."""

from .errors import (DivergenceDetected, DomainError, ExpRbmError, QuadratureFailure,
                     SaturationError, UnsupportedExactSampler)
from .model import (ExpRbmModel, SamplerMode, energy, gibbs_chain, hidden_input,
                    mean_hidden, mean_visible, sample_hidden, sample_visible,
                    unnormalized_log_joint, visible_input)
from .rng import RngStream
from .units import (CATALOG, UNIT_NAMES, ActivationSpec, bregman_divergence,
                    conditional_log_density_unnormalized, get_unit, matching_loss)

__version__ = "0.1.0"
