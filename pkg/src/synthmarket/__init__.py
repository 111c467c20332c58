"""Score-based diffusion models for synthetic asset returns.

The score network is trained with a denoising score-matching objective that is
evaluated by Gauss-Hermite and Simpson quadrature instead of sampling; scenarios
are produced by encoding data points with the forward SDE and decoding them with
the reverse-time SDE.
"""
from .data import PriceTable, ReturnsDataset, load_prices, select_window, to_returns
from .dsde import DsdeSpec, GaussMoments, Kind, beta, drift_diffusion, marginal_moments, tau, transition_moments
from .objective import ObjectiveConfig, gradient, mc_oracle, objective, residual
from .quadrature import QuadRule, gh_rule, int_i1, int_i2, make_rule, simpson_integrate, simpson_rule
from .sampler import PathConfig, ScenarioSet, forward_path, generate_scenarios, reverse_path
from .score_net import ScoreParams, init_params, k_forward, score_eval, true_gaussian_score
from .trainer import OptimizerState, TrainConfig, adam_step, train
from .validate import (
    ValidationReport,
    build_report,
    condition_number,
    cvm_pvalue,
    cvm_statistic,
    portfolio_project,
    qq_pairs,
    sample_covariance,
)

__version__ = "0.1.0"
