"""Spherically symmetric steady states under MOND gravity.

Interpolation functions and the Q kernel, radial fields and potentials,
variational functionals, a shooting solver for steady states, the kinetic
lift, and a shell code for perturbation experiments.
"""

__version__ = "0.1.0"

from .errors import (BracketError, DomainError, MondeqError, NoCompactSupportError, SamplerError,
                     ToleranceNotMetError, ValidationError)
from .interpolation import (Family, InterpolationFunction, QKernel, check_hoelder, check_q_taylor,
                            lambda_eval, q_eval, qkernel)
from .radial import (FieldProfile, PotentialNormalization, RadialDensity, ReferenceDensity,
                     cumulative_mass, make_grid, mond_field, newtonian_field, potentials,
                     qumond_direct, uniform_ball)
from .functionals import (AnsatzFunction, AnsatzKind, EnergyReport, casimir, default_reference,
                          distance_fluid, distance_kinetic, energy_report, epot_newton, epot_q,
                          epotq_directional_derivative, h_energy, taylor_remainder)
from .equilibrium import (EquilibriumModel, MassCurve, SolverOptions, el_residual, mass_curve, shoot,
                          shoot_mass_radius, solve_for_mass)
from .kinetic import KineticModel, lift_kinetic, reduce_phi_to_psi

__all__ = [
    "__version__",
    "BracketError", "DomainError", "MondeqError", "NoCompactSupportError", "SamplerError",
    "ToleranceNotMetError", "ValidationError",
    "Family", "InterpolationFunction", "QKernel", "check_hoelder", "check_q_taylor", "lambda_eval",
    "q_eval", "qkernel",
    "FieldProfile", "PotentialNormalization", "RadialDensity", "ReferenceDensity", "cumulative_mass",
    "make_grid", "mond_field", "newtonian_field", "potentials", "qumond_direct", "uniform_ball",
    "AnsatzFunction", "AnsatzKind", "EnergyReport", "casimir", "default_reference", "distance_fluid",
    "distance_kinetic", "energy_report", "epot_newton", "epot_q", "epotq_directional_derivative",
    "h_energy", "taylor_remainder",
    "EquilibriumModel", "MassCurve", "SolverOptions", "el_residual", "mass_curve", "shoot",
    "shoot_mass_radius", "solve_for_mass",
    "KineticModel", "lift_kinetic", "reduce_phi_to_psi",
]
