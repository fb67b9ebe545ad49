"""Closed-form post-selection performance and threshold optimization.

Bob's two symbols are Gaussians centred at +mu and -mu with common spread
sigma. A result above ``x_plus`` reads as bit 1, below ``x_minus`` as bit 0,
anything in between is inconclusive. Both symbols are assumed equally likely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import optimize, special

POSITIVE, NEGATIVE, INCONCLUSIVE = 1, -1, 0
OUTCOME_NAMES = {POSITIVE: "Positive", NEGATIVE: "Negative", INCONCLUSIVE: "Inconclusive"}

# Gauss-Hermite nodes for averaging over a Gaussian phase error.
_GH_NODES, _GH_WEIGHTS = np.polynomial.hermite_e.hermegauss(64)
_GH_WEIGHTS = _GH_WEIGHTS / _GH_WEIGHTS.sum()


class NoConclusiveEvents(ValueError):
    """Raised when the thresholds leave no probability mass for a decision."""


@dataclass(frozen=True)
class ThresholdPolicy:
    """Bob's decision thresholds; ``x_minus`` defaults to ``-x_plus``."""

    x_plus: float
    x_minus: Optional[float] = None

    def __post_init__(self):
        if self.x_minus is None:
            object.__setattr__(self, "x_minus", -float(self.x_plus))
        if self.x_minus > self.x_plus:
            raise ValueError(f"x_minus ({self.x_minus}) must not exceed x_plus ({self.x_plus})")

    @classmethod
    def symmetric(cls, x_plus: float) -> "ThresholdPolicy":
        if x_plus < 0:
            raise ValueError("symmetric thresholds need x_plus >= 0")
        return cls(x_plus, -x_plus)

    @property
    def is_symmetric(self) -> bool:
        return self.x_minus == -self.x_plus

    def classify(self, x):
        """Map quadratures to POSITIVE / NEGATIVE / INCONCLUSIVE codes."""
        x = np.asarray(x)
        return np.where(x > self.x_plus, POSITIVE, np.where(x < self.x_minus, NEGATIVE, INCONCLUSIVE)).astype(np.int8)


@dataclass(frozen=True)
class PerformancePoint:
    x_plus: float
    e_int: float
    p_d: float
    p_inc: float
    eta_d: float
    gain: float


def _check_sigma(sigma):
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")


def _joint_probabilities(mu, sigma, policy, jitter_deg=0.0):
    """Return (P(conclusive), P(conclusive and wrong)) for equiprobable +-mu."""
    _check_sigma(sigma)
    mu = abs(mu)
    if jitter_deg > 0:
        means = mu * np.cos(np.radians(jitter_deg) * _GH_NODES)
        weights = _GH_WEIGHTS
    else:
        means = np.array([mu])
        weights = np.array([1.0])
    ndtr = special.ndtr
    # symbol +mu: right tail is correct, left tail wrong; -mu mirrors it
    right_plus = ndtr((means - policy.x_plus) / sigma)
    left_plus = ndtr((policy.x_minus - means) / sigma)
    right_minus = ndtr((-means - policy.x_plus) / sigma)
    left_minus = ndtr((policy.x_minus + means) / sigma)
    p_d = 0.5 * (right_plus + left_plus + right_minus + left_minus)
    p_err = 0.5 * (left_plus + right_minus)
    return float(weights @ p_d), float(weights @ p_err)


def conclusive_probability(mu: float, sigma: float, policy: ThresholdPolicy, jitter_deg: float = 0.0) -> float:
    """Effective detection efficiency p_d, the chance that Bob reaches a decision."""
    return _joint_probabilities(mu, sigma, policy, jitter_deg)[0]


def intrinsic_error_rate(mu: float, sigma: float, policy: ThresholdPolicy, jitter_deg: float = 0.0) -> float:
    """Bit error probability among conclusive results.

    Raises:
        NoConclusiveEvents: if p_d underflows to zero.
    """
    p_d, p_err = _joint_probabilities(mu, sigma, policy, jitter_deg)
    if p_d <= 0:
        raise NoConclusiveEvents(f"no conclusive outcomes for mu={mu}, sigma={sigma}, {policy}")
    return p_err / p_d


def effective_quantum_efficiency(p_d: float, n_sig: float) -> float:
    if not n_sig > 0:
        raise ValueError(f"n_sig must be > 0, got {n_sig}")
    return p_d / n_sig


def binary_entropy(e):
    e = np.asarray(e, dtype=float)
    inside = (e > 0) & (e < 1)
    safe = np.where(inside, e, 0.5)
    h = -safe * np.log2(safe) - (1 - safe) * np.log2(1 - safe)
    out = np.where(inside, h, 0.0)
    return float(out) if out.ndim == 0 else out


def mutual_information(e):
    """Alice-Bob information per conclusive bit over a binary symmetric channel."""
    if np.any((np.asarray(e) < 0) | (np.asarray(e) > 1)):
        raise ValueError("error rate must lie in [0, 1]")
    return 1.0 - binary_entropy(e)


def gain(mu: float, sigma: float, x_plus: float, jitter_deg: float = 0.0) -> float:
    """Objective of the threshold search: p_d times mutual information, bits per pulse."""
    p_d, p_err = _joint_probabilities(mu, sigma, ThresholdPolicy.symmetric(x_plus), jitter_deg)
    if p_d <= 0:
        return 0.0
    return p_d * mutual_information(min(p_err / p_d, 1.0))


def performance(n_sig: float, sigma: float, x_plus: float, mu: Optional[float] = None,
                jitter_deg: float = 0.0) -> PerformancePoint:
    """All post-selection figures of merit at one symmetric threshold.

    ``mu`` defaults to sqrt(n_sig), the ideal-channel symbol mean.
    """
    mu = math.sqrt(n_sig) if mu is None else mu
    policy = ThresholdPolicy.symmetric(x_plus)
    p_d, p_err = _joint_probabilities(mu, sigma, policy, jitter_deg)
    e_int = p_err / p_d if p_d > 0 else float("nan")
    eta_d = effective_quantum_efficiency(p_d, n_sig) if n_sig > 0 else float("nan")
    info = mutual_information(e_int) if p_d > 0 else 0.0
    return PerformancePoint(x_plus, e_int, p_d, 1.0 - p_d, eta_d, p_d * info)


def optimize_threshold(n_sig: float, sigma: float, mu: Optional[float] = None,
                       tol: float = 1e-4) -> tuple[float, float]:
    """Symmetric threshold maximizing p_d * (1 - h2(e_int)).

    A coarse grid guards against local maxima; the best grid cell is refined
    with a bounded scalar search.

    Returns:
        (x_plus, gain) at the optimum.
    """
    if not n_sig > 0:
        raise ValueError("n_sig must be > 0")
    _check_sigma(sigma)
    mu = math.sqrt(n_sig) if mu is None else abs(mu)
    upper = mu + 8.0 * sigma
    step = min(0.01, upper / 50)
    grid = np.arange(0.0, upper + step, step)
    values = np.array([gain(mu, sigma, x) for x in grid])
    i = int(np.argmax(values))
    best_x, best_g = float(grid[i]), float(values[i])

    lo, hi = max(0.0, best_x - step), best_x + step
    res = optimize.minimize_scalar(lambda x: -gain(mu, sigma, x), bounds=(lo, hi), method="bounded",
                                   options={"xatol": min(tol, 1e-9)})
    if res.success and -res.fun > best_g:
        best_x, best_g = float(res.x), float(-res.fun)
    return best_x, best_g


def fit_phase_jitter(mu: float, sigma: float, x_plus: float, target_p_d: float, target_ber: float,
                     max_jitter_deg: float = 90.0) -> float:
    """Least-squares phase jitter (degrees) matching an observed (p_d, BER) pair.

    Mismatches are measured relative to the targets.
    """
    policy = ThresholdPolicy.symmetric(x_plus)

    def loss(jitter):
        p_d, p_err = _joint_probabilities(mu, sigma, policy, jitter)
        ber = p_err / p_d
        return ((p_d - target_p_d) / target_p_d) ** 2 + ((ber - target_ber) / target_ber) ** 2

    grid = np.linspace(0.0, max_jitter_deg, 181)
    i = int(np.argmin([loss(j) for j in grid]))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(loss, bounds=(lo, hi), method="bounded")
    return float(res.x) if res.fun <= loss(grid[i]) else float(grid[i])
