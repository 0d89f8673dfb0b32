"""Exception hierarchy shared by the core package, the service, and the CLI.

Every error carries a ``kind`` string (stable wire identifier used by the
HTTP error payload) and the CLI exit code mandated for that class of
failure: 2 configuration, 3 numeric, 4 I/O, 5 infeasible latency budget.
"""


class SemposeError(Exception):
    kind = "internal"
    exit_code = 1


class ConfigurationError(SemposeError):
    kind = "configuration"
    exit_code = 2


class PolicyError(ConfigurationError):
    """Requested symbol count is not an admissible dimension."""


class NumericError(SemposeError):
    kind = "numeric"
    exit_code = 3


class DegenerateInputError(NumericError):
    """Input too close to a singular point (e.g. near-zero raw quaternion)."""


class DataIOError(SemposeError):
    kind = "io"
    exit_code = 4


class FramingError(DataIOError):
    """Malformed symbol payload (odd interleaved length, k beyond k_max)."""


class InfeasibleBudgetError(SemposeError):
    kind = "infeasible_budget"
    exit_code = 5


EXIT_CODES = {
    "configuration": 2,
    "numeric": 3,
    "io": 4,
    "infeasible_budget": 5,
}
