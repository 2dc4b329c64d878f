"""Compatibility of d'Alembert and multiplier-rule dynamics under a linear velocity constraint."""
__version__ = "0.1.0"

from .compat import Case, consistency_counts, initial_data_verdict, verdict_at_point  # noqa: E402
from .constraint import ConstraintClass, ConstraintForm, classify, condition_count, curl  # noqa: E402
from .dynamics import NaturalLagrangian, Potential, compare, integrate  # noqa: E402
from .exceptions import (  # noqa: E402
    ConfigError,
    DegeneratePointError,
    FactorizationError,
    NonholonomicError,
    PairingError,
    PreconditionError,
    RankParityError,
)
from .geometry import Chart, MetricField  # noqa: E402
from .skew import decompose, skew_spectrum, verify_basis  # noqa: E402

__all__ = [
    "__version__",
    "Case", "consistency_counts", "initial_data_verdict", "verdict_at_point",
    "ConstraintClass", "ConstraintForm", "classify", "condition_count", "curl",
    "NaturalLagrangian", "Potential", "compare", "integrate",
    "ConfigError", "DegeneratePointError", "FactorizationError", "NonholonomicError",
    "PairingError", "PreconditionError", "RankParityError",
    "Chart", "MetricField",
    "decompose", "skew_spectrum", "verify_basis",
]
