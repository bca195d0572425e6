"""Loopy BP, Bethe free-energy analysis and ensemble BP for binary pairwise models."""
from .bp import BPOptions, BPResult, beliefs_from_messages, run_bp
from .ensemble import (EnsembleSpec, average_beliefs, ebp_exact, ebp_gaussian, fit_gaussian,
                       monte_carlo_stderr)
from .graph import Graph
from .harness import (CompareOptions, comparison_csv, export_trajectory_projection,
                      five_model_comparison, metrics, run_metadata, sweep_csv,
                      sweep_unbelievable_fraction)
from .learning import (LearnOptions, LearningTrajectory, best_beliefs, bethe_wake_sleep,
                       detect_equilibrium, pseudo_moment_matching)
from .model import (IsingModel, energy, exact_log_partition, exact_marginals,
                    generate_random_ising, rho_closed_form, symmetric_four_node)
from .pseudomarginal import (MomentVector, Pseudomarginals, average_energy, bethe_entropy,
                             bethe_free_energy, bethe_free_energy_gradient,
                             check_local_consistency, from_moments, to_moments)
from .spectral import (Believability, BetheHessian, bethe_hessian, is_believable, min_eigenpair,
                       theorem1_eigenvector)

__all__ = [name for name in dir() if not name.startswith("_")]
