"""Dyadic product harmonic analysis on the torus at finite resolution."""

__version__ = "0.1.0"

from .errors import CapacityError, ConvergenceError, ResolutionError
from .geometry import (DyadicInterval, DyadicRectangle, Grid, OpenSetApprox, all_dyadic_rectangles,
                       enumerate_open_sets, rectangles_contained, rectangles_of_generation)
from .haar import (CONST, HAAR, MEAN, GridFunction, HaarSpectrum, forward_haar, h1_norm,
                   haar_atom, haar_coefficient, inverse_haar, martingale, partial_transform,
                   permute_axes, project_open_set, square_function, tilde_aggregate)
from .norms import (NormReport, bmo_m_norm, bmo_norm, intersection_norm, lmo_norm,
                    product_bmo_norm, slice_bmo_max, stegenga_functional)
from .operators import (OperatorHandle, OperatorMatrix, Signature, apply_B, assemble_matrix,
                        bilinear_K, bmo_to_bmo_lowerbound, decompose_product,
                        decomposition_residual, enumerate_signatures, is_band_limited,
                        l2_operator_norm, multiply, named_operator)
from .testfns import FunctionRecipe, additive_lift, dyadic_log, sample, tensor_product
from .experiments import ExperimentConfig, Report, emit_report, run_experiment
