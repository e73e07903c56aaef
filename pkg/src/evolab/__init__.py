"""Executable combinatorics for learning to predict discrete dynamical systems."""

from evolab.core import (
    BudgetError,
    CapabilityError,
    EvolutionFamily,
    ImplicitFamily,
    SpecError,
    StateSpace,
    Stream,
    VersionSpace,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "CapabilityError",
    "EvolutionFamily",
    "ImplicitFamily",
    "SpecError",
    "StateSpace",
    "Stream",
    "VersionSpace",
]
