"""Stochastic-portfolio-theory laboratory.

Rank-based market simulation, functionally generated and rank-permuted
portfolios, first-order model estimation, and a commodity-futures
implied-price/carry backtesting pipeline.
"""

from .backtest import BacktestReport, run_backtest, sharpe_relative, summary_table
from .decomposition import (ReturnDecomposition, decompose, excess_growth_rate,
                            market_identity_residual, portfolio_log_return,
                            relative_log_return, stratonovich_integral)
from .errors import (EvaluationError, InsufficientDataError, InvalidInputError,
                     MissingCarryError, ParamConstraintError, SptlabError)
from .estimation import (FirstOrderEstimate, first_order_approximation,
                         fit_first_order, rank_size_curve,
                         reflected_gaussian_filter)
from .fgp import (DriftAccumulator, GeneratingFunction, constant_generator,
                  fgp_drift_increment, fgp_weights, geometric_mean_generator,
                  swap_drift_increment, swap_generator)
from .firstorder import (FirstOrderParams, SimConfig, simulate,
                         simulate_log_paths, theoretical_gap_variances,
                         theoretical_local_times, validate_params)
from .futures import (EligibilityCalendar, ImpliedSeries, QuoteBook,
                      build_implied_series, carry_factor, eligibility,
                      held_contract_and_carry, implied_two_month_price,
                      normalize_entries)
from .market import (CovarianceEstimate, PricePanel, RankState, WeightVector,
                     compute_ranks, estimate_covariance, market_weights,
                     month_index, month_str, relative_covariance)
from .policies import (WeightPolicy, diversity_weights, equal_weights,
                       parse_policy, permutation_weights, reverse_weights,
                       swap_weights)

__version__ = "0.1.0"
