"""Conditional entropy bound F*(q, s) and capacity regions of discrete
degraded broadcast channels.

Matrices are column-stochastic (``T[j, i] = Pr(out = j | in = i)``) and all
entropies are in nats.
"""

from .channels import (
    DbcModel,
    GroupTable,
    MultTable,
    find_degrading_channel,
    load_model,
    make_broadcast_bec,
    make_broadcast_bsc,
    make_broadcast_z,
    make_group_additive,
    make_is_example,
    make_multiplicative,
    model_from_json,
    save_model,
    validate_dbc,
)
from .errors import DbcError, DomainError, InfeasibleError, InvalidInputError, UnsupportedError
from .fstar import fstar_dual, fstar_oracle, fstar_primal, phi, psi
from .prob import (
    SimplexGrid,
    TransmissionStrategy,
    binary_entropy,
    conditional_entropy_given_strategy,
    deterministic_rng,
    entropy,
)

__version__ = "0.1.0"
