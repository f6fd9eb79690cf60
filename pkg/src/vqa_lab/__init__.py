"""Noisy-optimization laboratory for parameterized quantum circuits.

Dense statevector simulation of layered rotation ansatze with Pauli-sum
observables, exact parameter-shift derivatives, gradient descent with
several noise models, stationary-point classification, and the analysis
helpers (escape statistics, power-law fits, kernel-regression timing,
random-walk constants) needed to study when update noise helps descent
escape strict saddles.  Hot numeric paths run under numba when it is
available; set ``VQALAB_DISABLE_NUMBA=1`` to force the pure-numpy
fallback.
"""

from .analysis import (EscapeStats, PowerLawFit, convergence_time,
                       critical_noise, escape_probability,
                       estimate_qntk_k, fit_power_law,
                       linear_model_critical_noise, linear_model_loss_variance,
                       linear_model_mean_loss, optimal_shots,
                       performance_metric, polya_constant,
                       qntk_convergence_time, qntk_convergence_time_small_eta,
                       qntk_residual_variance, return_probability,
                       simulate_linear_sgd, wilson_interval)
from .backend import backend_name, get_kernels
from .circuit import (AnsatzLayout, GateSpec, Statevector, apply_circuit,
                      strongly_entangling_layout, zero_state)
from .config import (ExperimentConfig, LinearModelSpec, SweepSpec, Theta0Spec,
                     load_config, parse_config)
from .errors import (CapacityError, ConfigError, DimensionError, DivergedError,
                     DomainError, ParseError, RegimeError, VqaLabError)
from .experiments import (ExperimentResult, TrappedSeed,
                          build_layout_and_observable, find_trapped_seeds,
                          run_experiment)
from .gradient import (GradientEstimate, HessianMatrix, gradient_exact,
                       gradient_shots, hessian_exact, loss)
from .hamiltonian import (PauliSum, PauliTerm, expectation, load_pauli_sum,
                          measurement_groups, min_eigenvalue, operator_norm,
                          parse_pauli_sum, pauli_sum, sample_expectation,
                          sum_z)
from .optimizer import (OptimizerConfig, RunRecord, SmoothnessBounds,
                        StoppingRule, TerminalReport, classify_terminal,
                        depolarized_loss, run, smoothness_bounds, step_gd,
                        step_pgd)
from .rng import mix_seed, run_rng, splitmix64

__version__ = "0.1.0"

__all__ = [
    "AnsatzLayout", "CapacityError", "ConfigError", "DimensionError",
    "DivergedError", "DomainError", "EscapeStats", "ExperimentConfig",
    "ExperimentResult", "GateSpec", "GradientEstimate", "HessianMatrix",
    "LinearModelSpec", "OptimizerConfig", "ParseError", "PauliSum",
    "PauliTerm", "PowerLawFit", "RegimeError", "RunRecord",
    "SmoothnessBounds", "Statevector", "StoppingRule", "SweepSpec",
    "TerminalReport", "Theta0Spec", "TrappedSeed", "VqaLabError",
    "apply_circuit", "backend_name", "build_layout_and_observable",
    "classify_terminal", "convergence_time", "critical_noise",
    "depolarized_loss", "escape_probability", "estimate_qntk_k",
    "expectation", "find_trapped_seeds", "fit_power_law", "get_kernels",
    "gradient_exact", "gradient_shots", "hessian_exact",
    "linear_model_critical_noise", "linear_model_loss_variance",
    "linear_model_mean_loss", "load_config", "load_pauli_sum", "loss",
    "measurement_groups", "min_eigenvalue", "mix_seed", "operator_norm",
    "optimal_shots", "parse_config", "parse_pauli_sum", "pauli_sum",
    "performance_metric", "polya_constant", "qntk_convergence_time",
    "qntk_convergence_time_small_eta", "qntk_residual_variance",
    "return_probability", "run", "run_experiment", "run_rng",
    "sample_expectation", "simulate_linear_sgd", "smoothness_bounds",
    "splitmix64", "step_gd", "step_pgd", "strongly_entangling_layout",
    "sum_z", "wilson_interval", "zero_state",
]
