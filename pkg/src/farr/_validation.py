import math

import numpy as np

PROB_ATOL = 1e-9


def check_payoff_matrix(u):
    u = np.asarray(u, dtype=float)
    if u.ndim != 2:
        raise ValueError(f"payoff matrix must be 2-D, got shape {u.shape}")
    if u.shape[0] < 1 or u.shape[1] < 1:
        raise ValueError("payoff matrix needs at least one row and one column")
    if not np.all(np.isfinite(u)):
        raise ValueError("payoff matrix entries must be finite")
    return u


def check_distribution(p, name="distribution", size=None):
    p = np.array(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a nonempty 1-D vector")
    if size is not None and p.size != size:
        raise ValueError(f"{name} has length {p.size}, expected {size}")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError(f"{name} must be nonnegative and finite")
    if abs(p.sum() - 1.0) > PROB_ATOL:
        raise ValueError(f"{name} sums to {p.sum()!r}, expected 1")
    return p


def check_finite(x, name):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x}")
    return x


def check_positive_int(x, name, minimum=1):
    if isinstance(x, bool) or int(x) != x or x < minimum:
        raise ValueError(f"{name} must be an integer >= {minimum}, got {x!r}")
    return int(x)


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending key."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
