"""Partial Wasserstein-1 matching: exact solvers, neural dual estimates and
point-set registration."""

__version__ = "0.1.0"

from .measures import (DiscreteMeasure, cost_matrix, diameter, empirical_batch,
                       load_points, pairwise_distances, save_points, total_mass)
from .primal_oracle import (InfeasibleProblem, SolverError, TransportPlan,
                            duality_certificate, omitted_mass,
                            solve_distance_threshold, solve_partial_mass,
                            wasserstein1)
from .potential_net import NetConfig, PotentialNet
from .pwan_core import (PwanConfig, PwanTrace, dual_value, estimate_divergence,
                        loss_distance, loss_mass, mass_annealing, pwan_fit,
                        theta_gradient)
