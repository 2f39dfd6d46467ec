"""Optimal train/test split sizing for ridge regression."""

from .config import ExperimentConfig, parse_config
from .integrity import (ImPointEstimate, SplitCurve, Tier, empirical_argmin, im_curve,
                        im_tier0, im_tier1, im_tier1_given_x, im_tier2, im_tier2_given_train)
from .moments import MomentKind, analytic_reference, deterministic_bounds_check, mc_trace_moment
from .ridge import RidgeFit, ridge_fit, test_mean_squared_error
from .rng import RngSeed, sample_gaussian_rows, sample_spd_covariance
from .solver import (SplitRecommendation, asymptotic_split, leading_poly_root, recommend,
                     recommend_integer_split)

__version__ = "0.1.0"
