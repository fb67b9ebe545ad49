"""Bob's monitoring of quadrature distributions.

Bob keeps every quadrature he records, split by whether his LO basis matched
Alice's bit basis, and compares each pile with what an untouched channel would
produce. Intercept-resend variants that alter the photon statistics reshape
these distributions even when the mean photon number is preserved.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from .physics import ChannelModel, CoherentPulse, quadrature_mean, quadrature_sigma

CORRECT_BASIS = "CorrectBasis"
WRONG_BASIS = "WrongBasis"
DEFAULT_ALPHA = 0.01
MIN_SAMPLES = 100

_JITTER_NODES, _JITTER_WEIGHTS = np.polynomial.hermite_e.hermegauss(32)
_JITTER_WEIGHTS = _JITTER_WEIGHTS / _JITTER_WEIGHTS.sum()


@dataclass(frozen=True)
class FitReport:
    statistic: float
    p_value: float
    test_name: str
    alarm: bool

    def to_dict(self):
        return {"test_name": self.test_name, "statistic": self.statistic,
                "p_value": self.p_value, "alarm": self.alarm}


class GaussianMixture:
    """Mixture of Gaussians sharing one standard deviation."""

    def __init__(self, means, weights, sigma):
        self.means = np.atleast_1d(np.asarray(means, dtype=float))
        self.weights = np.atleast_1d(np.asarray(weights, dtype=float))
        self.weights = self.weights / self.weights.sum()
        self.sigma = float(sigma)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        return (self.weights * stats.norm.pdf(x, self.means, self.sigma)).sum(axis=-1)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)[..., None]
        return (self.weights * stats.norm.cdf(x, self.means, self.sigma)).sum(axis=-1)

    __call__ = pdf

    @property
    def mean(self) -> float:
        return float(self.weights @ self.means)

    @property
    def variance(self) -> float:
        return self.sigma**2 + float(self.weights @ (self.means - self.mean) ** 2)

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)


def expected_pdf(basis_tag: str, n_sig: float, channel: ChannelModel) -> GaussianMixture:
    """Quadrature distribution Bob should see on an untouched channel.

    Correct basis: equal mixture of the two symbol Gaussians at +-mu. Wrong
    basis: one Gaussian at zero. Phase jitter in ``channel`` is folded in by
    Gauss-Hermite averaging over the phase error.
    """
    mu = quadrature_mean(CoherentPulse(n_sig, 0.0), channel, 0)
    sigma = quadrature_sigma(channel)
    if channel.phase_jitter_deg > 0:
        delta = np.radians(channel.phase_jitter_deg) * _JITTER_NODES
        w = _JITTER_WEIGHTS
    else:
        delta, w = np.zeros(1), np.ones(1)
    if basis_tag == CORRECT_BASIS:
        means = np.concatenate([mu * np.cos(delta), -mu * np.cos(delta)])
    elif basis_tag == WRONG_BASIS:
        # phases 90 and 270 measured at LO 0 give -+mu sin(delta)
        means = np.concatenate([mu * np.sin(delta), -mu * np.sin(delta)])
    else:
        raise ValueError(f"unknown basis tag {basis_tag!r}")
    return GaussianMixture(means, np.concatenate([w, w]), sigma)


def _check_samples(samples):
    samples = np.asarray(samples, dtype=float).ravel()
    if samples.size < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {samples.size}")
    return samples


def goodness_of_fit(samples, expected, alpha: float = DEFAULT_ALPHA, test_name: str = "ks") -> FitReport:
    """One-sample Kolmogorov-Smirnov test against ``expected.cdf``."""
    samples = _check_samples(samples)
    res = stats.kstest(samples, expected.cdf)
    p = float(res.pvalue)
    return FitReport(float(res.statistic), p, test_name, p < alpha)


def moment_check(samples, expected_mu: float, expected_sigma: float, alpha: float = DEFAULT_ALPHA,
                 test_name: str = "moments") -> FitReport:
    """Two z-tests, on the sample mean and on the sample variance.

    The variance test uses the sample fourth central moment for its standard
    error, so it stays calibrated for non-Gaussian mixtures. The reported
    p-value is Bonferroni-combined; ``statistic`` is the larger |z|.
    """
    samples = _check_samples(samples)
    n = samples.size
    z_mean = (samples.mean() - expected_mu) / (expected_sigma / math.sqrt(n))
    centered = samples - samples.mean()
    var = centered @ centered / (n - 1)
    m4 = np.mean(centered**4)
    se_var = math.sqrt(max(m4 - var**2, 1e-300) / n)
    z_var = (var - expected_sigma**2) / se_var
    p_mean = 2 * stats.norm.sf(abs(z_mean))
    p_var = 2 * stats.norm.sf(abs(z_var))
    p = float(min(1.0, 2 * min(p_mean, p_var)))
    return FitReport(float(max(abs(z_mean), abs(z_var))), p, test_name, p < alpha)


def monitor(correct_samples, wrong_samples, n_sig: float, channel: ChannelModel,
            alpha: float = DEFAULT_ALPHA) -> list[FitReport]:
    """KS and moment checks for both basis classes; classes with too few samples are skipped."""
    reports = []
    for tag, samples in ((CORRECT_BASIS, correct_samples), (WRONG_BASIS, wrong_samples)):
        if np.size(samples) < MIN_SAMPLES:
            continue
        model = expected_pdf(tag, n_sig, channel)
        label = "correct_basis" if tag == CORRECT_BASIS else "wrong_basis"
        reports.append(goodness_of_fit(samples, model, alpha, f"ks_{label}"))
        reports.append(moment_check(samples, model.mean, model.std, alpha, f"moments_{label}"))
    return reports


@dataclass
class QuadratureHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    basis_tag: str

    def __post_init__(self):
        self.bin_edges = np.asarray(self.bin_edges, dtype=float)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.counts) != len(self.bin_edges) - 1:
            raise ValueError("need exactly one count per bin")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise ValueError("bin edges must be strictly ascending")
        if np.any(self.counts < 0):
            raise ValueError("counts must be non-negative")

    @classmethod
    def from_samples(cls, samples, basis_tag: str, bins=40, range=(-3.0, 3.0)) -> "QuadratureHistogram":
        counts, edges = np.histogram(np.asarray(samples, dtype=float), bins=bins, range=range)
        return cls(edges, counts, basis_tag)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def density(self):
        return self.counts / (self.total * np.diff(self.bin_edges))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["bin_left", "bin_right", "count"])
            for lo, hi, c in zip(self.bin_edges[:-1], self.bin_edges[1:], self.counts):
                writer.writerow([f"{lo:.6g}", f"{hi:.6g}", int(c)])

    @classmethod
    def from_csv(cls, path, basis_tag: str) -> "QuadratureHistogram":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError(f"{path}: empty histogram")
        edges = [float(r["bin_left"]) for r in rows] + [float(rows[-1]["bin_right"])]
        return cls(edges, [int(r["count"]) for r in rows], basis_tag)


def histograms_for(samples_by_tag: dict[str, Sequence[float]], bins=40, range=(-3.0, 3.0)):
    return {tag: QuadratureHistogram.from_samples(s, tag, bins, range) for tag, s in samples_by_tag.items()}
