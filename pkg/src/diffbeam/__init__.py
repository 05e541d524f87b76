"""Frequency- and steering-invariant differential beamformers for line arrays
of omnidirectional and directional microphones."""
from .array import (ArrayGeometry, MicrophoneElement, PRESETS, directivity_gain, steering_matrix,
                    steering_vector, wavenumber)
from .bessel import bessel_jn
from .designer import DesignSpec, MetricsReport, MetricsRow, design_broadband, parse_design_config
from .errors import *  # noqa: F401,F403
from .metrics import (beampattern, cbar_matrix, directivity_factor, gamma_matrix, ideal_directivity_factor,
                      mse_quadratic, q_coupling_matrix, white_noise_gain)
from .pattern import IdealPattern, cos_basis, evaluate_ideal, nulls_from_coefficients, solve_coefficients
from .solvers import (BeamformerFilter, ConstraintSystem, Method, build_constraints, nullspace_basis,
                      solve_inc, solve_mwng, solve_nc, solve_trust_region, wmax)

__version__ = "0.1.0"
