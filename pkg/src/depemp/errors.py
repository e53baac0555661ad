"""Exception hierarchy shared by all modules."""


class DepempError(Exception):
    """Base class for package errors."""


class ConfigurationError(DepempError):
    """Invalid model/distribution/experiment configuration (CLI exit code 2)."""


class BudgetError(ConfigurationError):
    """Requested exact enumeration exceeds the enumeration budget."""


class NumericError(DepempError):
    """Quadrature or maximization failed (divergent tail, non-finite weight)."""


class ContractError(DepempError):
    """A precondition on supplied data was violated (missing states, bad martingale)."""
