"""Symbol-count adaptation: scale the KL rate estimate into a target
dimension and quantize onto the admissible set under the latency budget.
"""

from dataclasses import dataclass, field

from .channel import LatencyModel
from .codec import DEFAULT_SYMBOL_DIMS, validate_symbol_dims
from .errors import ConfigurationError, InfeasibleBudgetError

DEFAULT_LATENCY_BUDGET_MS = 16.0  # one frame of a 60 fps service


@dataclass
class PolicyConfig:
    gamma: float = 100.0
    latency_budget_ms: float = DEFAULT_LATENCY_BUDGET_MS
    symbol_dims: tuple = DEFAULT_SYMBOL_DIMS
    latency: LatencyModel = None

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConfigurationError(f"gamma must be positive, got {self.gamma}")
        if self.latency_budget_ms <= 0:
            raise ConfigurationError(
                f"latency budget must be positive, got {self.latency_budget_ms}"
            )
        self.symbol_dims = validate_symbol_dims(self.symbol_dims)


def estimate_kbar(kl_nats, gamma):
    """Target symbol count proportional to the rate estimate."""
    if kl_nats < 0:
        raise ConfigurationError(f"KL must be non-negative, got {kl_nats}")
    return gamma * kl_nats


def select_k(kbar, cfg):
    """Largest admissible k <= kbar whose end-to-end latency fits the budget.

    Falls back to the smallest admissible k when kbar undershoots the set.
    Raises when no dimension fits the budget at all: the caller must know a
    request cannot be served, never silently violate the deadline.
    """
    feasible = [k for k in cfg.symbol_dims if cfg.latency.e2e_ms(k) <= cfg.latency_budget_ms]
    if not feasible:
        raise InfeasibleBudgetError(
            f"no symbol dimension in {cfg.symbol_dims} meets the "
            f"{cfg.latency_budget_ms} ms budget (fastest is "
            f"{min(cfg.latency.e2e_ms(k) for k in cfg.symbol_dims):.3f} ms)"
        )
    fitting = [k for k in feasible if k <= kbar]
    return max(fitting) if fitting else min(feasible)


def quantize_train(kbar, symbol_dims):
    """Training-time choice: largest k <= kbar, floor at min(K); no latency term."""
    fitting = [k for k in symbol_dims if k <= kbar]
    return max(fitting) if fitting else min(symbol_dims)
