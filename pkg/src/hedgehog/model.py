"""Material constants, bulk-potential scalars and the one-parameter rescaling."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class Params:
    a2: float
    b2: float
    c2: float

    def __post_init__(self):
        for name in ("a2", "b2", "c2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ConfigError(f"{name} must be finite, got {v}")
        if self.b2 <= 0 or self.c2 <= 0:
            raise ConfigError("b2 and c2 must be positive")
        if self.a2 < 0:
            raise ConfigError("a2 must be non-negative")

    @property
    def reference(self):
        """True for a2 = 0, the reference profile u0."""
        return self.a2 == 0.0

    @property
    def s_plus(self):
        return s_plus(self)


def s_plus(p):
    return (p.b2 + math.sqrt(p.b2 ** 2 + 24.0 * p.a2 * p.c2)) / (4.0 * p.c2)


def bulk_F(p, u):
    u = np.asarray(u, dtype=float)
    return -p.a2 * u - p.b2 * u ** 2 / 3.0 + 2.0 * p.c2 * u ** 3 / 3.0


def bulk_f(p, u):
    # F(u)/u, continued to -a2 at u = 0
    u = np.asarray(u, dtype=float)
    return -p.a2 - p.b2 * u / 3.0 + 2.0 * p.c2 * u ** 2 / 3.0


def bulk_f_hat(p, u):
    u = np.asarray(u, dtype=float)
    return -p.a2 - 2.0 * p.b2 * u / 3.0 + 2.0 * p.c2 * u ** 2


def bulk_f_tilde(p, u):
    u = np.asarray(u, dtype=float)
    return -p.a2 + 2.0 * p.b2 * u / 3.0 + 2.0 * p.c2 * u ** 2 / 3.0


def rescale_params(p, target_b2, target_c2):
    """Map p to the equivalent parameters with (b2, c2) = targets.

    If u solves the profile problem for p, then lam * u(r / mu) solves it
    for the returned parameters.  Returns (params, lam, mu).
    """
    if target_b2 <= 0 or target_c2 <= 0:
        raise ConfigError("rescale targets must be positive")
    lam = p.c2 * target_b2 / (p.b2 * target_c2)
    mu2 = p.b2 / (lam * target_b2)
    return Params(p.a2 / mu2, float(target_b2), float(target_c2)), lam, math.sqrt(mu2)
