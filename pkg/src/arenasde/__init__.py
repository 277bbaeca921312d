"""Stochastic foraging-arena predator-prey toolkit.

Simulates the coupled prey/predator diffusion with a foraging-arena
interaction, evaluates the closed-form pathwise envelopes and the moment and
distribution-function brackets of its states, and cross-validates every bound
against Monte Carlo simulation on shared Brownian noise.
"""

__version__ = "0.1.0"

from .brackets import (Bracket, BoundResult, DEFAULT_K2_VARIANT, K2Variant,
                       OutOfDomainError, cdf_joint_upper, cdf_lower_x,
                       cdf_lower_y, cdf_upper_x, cdf_upper_y,
                       joint_moment_lower, joint_moment_upper,
                       logistic_cdf_bracket, logistic_moment_bracket,
                       moment_lower_x, moment_lower_y)
from .brownian import (BrownianPath, GaussianKernel, coarsen_path,
                       density_extremum, joint_density, sample_path)
from .config import (ConfigError, RunConfig, load_config, parse_config_text,
                     reference_config, reference_params)
from .envelopes import (ViolationReport, audit, audit_paths, envelope_x,
                        envelope_y)
from .logistic import (GbmPath, LogisticPath, PathOverflowError, gbm_path,
                       log_integral_identity, logistic_exact)
from .model import (GammaLaw, LogisticParams, ModelParams, NovikovCheck,
                    Regime, RegimeTag, classify_regime, gamma_stationary,
                    logistic_constants, novikov_threshold, phi)
from .montecarlo import (McEstimate, McOverflowError, mc_cdf,
                         mc_ergodic_average, mc_moment)
from .quadrature import (QuadratureError, QuadratureResult, halfline_gauss,
                         region_integral_2d, region_integral_3d)
from .simulate import (TrajectoryBundle, simulate_system, strong_error_probe,
                       system_seeds)
