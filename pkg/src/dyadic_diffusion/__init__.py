"""Dyadic Markov kernels, their Haar spectral calculus and the dyadic central limit."""

from .dyadic import (DeltaValue, DyadicInterval, DyadicPoint, IdenticalPointsError,
                     delta_power_integral, dyadic_distance, shell_measure,
                     smallest_common_interval)
from .haar import (GridFunction, HaarCoefficients, HaarIndex, haar_eval, haar_forward,
                   haar_inverse, haar_samples, lp_norm, read_grid_function,
                   square_function, write_grid_function)
from .kernels import (AlphaSequence, KernelSpec, ShellSequence, StabilityReport,
                      alpha_to_k, alpha_to_lambda, clt_step, convolve, convolve_alpha_route,
                      evaluate, from_defect, from_lambda, gamma_diag, gaussian, iterate,
                      k_to_alpha, k_to_lambda, lambda_to_alpha, lambda_to_k, load_kernel,
                      mollify, normalization_check, power_law_seed, psi, save_kernel,
                      stability_estimate, step_kernel)
from .spectral import (OperatorPlan, apply_kernel, apply_kernel_quadrature,
                       derivative_constant, fractional_derivative_quadrature,
                       fractional_derivative_spectral, heat_solve, operator_matrix,
                       quadrature_matrix)
from .clt import CltReport, emit_report, run_clt

__version__ = "0.1.0"
