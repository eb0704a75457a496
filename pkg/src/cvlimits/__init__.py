"""Quantum-limit fidelities for amplifying and phase-conjugating Gaussian-distributed coherent states."""

from .channels import (
    ChannelSpec,
    TaskSpec,
    average_fidelity_closed,
    average_fidelity_mc,
    average_fidelity_quadrature,
    per_input_fidelity,
)
from .exceptions import CVLimitsError, DomainError, TruncationError, UsageError
from .fidelity_limits import (
    BoundResult,
    amplification_bound,
    attenuation_bound,
    best_gaussian_amplifier,
    conjugation_bound,
    scale_task,
    witness_bound,
    witness_bound_optimize,
)
from .fock_numerics import TruncationSpec
from .gaussian_core import GaussianMixtureSpec

__version__ = "0.1.0"
