"""Cavity-modified quantum tunneling of N metastable systems sharing one cavity mode.

Ski-jump wells coupled bilinearly to a cavity quadrature: analytic bounce
paths, Euclidean actions, the finite-temperature zero-mode correction and the
tunneling-rate modification r, plus brute-force oracles for each of them.
"""

__version__ = "0.1.0"

from .errors import (DivergentResponse, GridTooCoarse, InvalidParameter, PolaritunnelError,
                     RWAViolation, StationaryPointNotFound, TruncationNotConverged, UnstableDraw,
                     UnstableSystem)
from .model import (CouplingMoments, PolaritonSpectrum, SystemSpec, coupling_moments,
                    polariton_spectrum, stiffness_matrix, validate_system)
from .instanton import (FourierSolution, Trajectory, action_finite_beta, action_zero_t, chi_p,
                        fourier_coefficients, harmonic_frequency, instanton_path, path_energy)
from .rates import (CumulantRate, HighTResult, RateBreakdown, arithmetic_frequency,
                    epsilon_finite, epsilon_from_path, epsilon_ratio_bounds, high_t_action,
                    rate_modification_cumulant, rate_modification_exact,
                    rate_modification_single)
from .barrier import barrier_hessian_analysis
from .oracles import (CouplingEnsemble, OracleReport, matsubara_sum_oracle,
                      monte_carlo_ensemble, normal_mode_path_oracle, numeric_action_oracle,
                      run_verification)
