"""Resilient observer-based control and quantized emulation for overcomplete linear systems."""
from .alphabet import (
    AlphabetEntry,
    activation_entropy,
    alphabet_entropy,
    build_alphabet,
    distinct_direction_count,
    drop_channel,
    enumerate_patterns,
)
from .dqn import DqnHyper, dqn_select
from .emulation import (
    EmulationConfig,
    brute_force_select,
    hebb_learn,
    iterate_weights,
    partition_circle,
    partition_sphere_mc,
)
from .errors import NeuromimeticError
from .linalg import IndexSet, all_n_minors_nonzero, solve_left, solve_left_invariant, solve_right, solve_right_invariant
from .resilient import DropoutSchedule, design_gains, simulate_cascade, verify_resilience

__version__ = "0.1.0"
