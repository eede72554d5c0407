"""Classical, quantum and beyond-quantum bounds for bipartite Bell inequalities,
plus a Monte Carlo model of a noisy entangled-photon Bell test."""

from .functionals import (
    BellFunctional,
    algebraic_bound,
    chained,
    chsh,
    chsh_prime,
    elegant,
    evaluate,
    local_bound,
    lplus1pr_bound,
    m3322,
    m4322,
    tilted,
)
from .quantum import NoiseModel, Strategy, TwoQubitState, apply_noise, behavior_of, pure_angle
from .scenario import Behavior, Correlators, Scenario, behavior_from_table, correlators_of

__version__ = "0.1.0"
