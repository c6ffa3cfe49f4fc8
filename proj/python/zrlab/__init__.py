"""Zero-range particle dynamics laboratory."""

from ._core import (
    DomainError,
    TableError,
    UsageError,
    canonical_probs,
    count_law,
    equivalence_gap,
    fugacity,
    gamma_pmf,
    lsi_constant,
    rate_constants,
    rate_values,
    relaxation_time,
    sector_size,
    sector_states,
    simulate,
    site_law,
    spectral_gap,
)

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "TableError",
    "UsageError",
    "canonical_probs",
    "count_law",
    "equivalence_gap",
    "fugacity",
    "gamma_pmf",
    "lsi_constant",
    "rate_constants",
    "rate_values",
    "relaxation_time",
    "sector_size",
    "sector_states",
    "simulate",
    "site_law",
    "spectral_gap",
]
