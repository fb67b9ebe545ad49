"""Eavesdropping strategies: intercept-resend and beamsplitting.

Eve is modelled with ideal homodyne detectors. She acts on the pulse as it
leaves Alice, before the channel transmittance seen by Bob.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, stats

from .analytics import INCONCLUSIVE, ThresholdPolicy
from .physics import VACUUM_SIGMA, ChannelModel, CoherentPulse, sample_quadratures

NONE = "none"
INTERCEPT_SINGLE = "intercept_resend_single"
INTERCEPT_DUAL = "intercept_resend_dual"
BEAMSPLIT = "beamsplit"
VARIANTS = (NONE, INTERCEPT_SINGLE, INTERCEPT_DUAL, BEAMSPLIT)


@dataclass(frozen=True)
class EveStrategy:
    """Eve's attack. Fields irrelevant to ``variant`` are ignored."""

    variant: str = NONE
    intercept_fraction: float = 1.0
    resend_n_sig: float = 1.0
    vacuum_fraction: float = 0.0
    tap_fraction: float = 0.5

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown Eve variant {self.variant!r}; expected one of {VARIANTS}")
        for name in ("intercept_fraction", "vacuum_fraction", "tap_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.resend_n_sig < 0:
            raise ValueError("resend_n_sig must be >= 0")

    @property
    def is_intercept(self) -> bool:
        return self.variant in (INTERCEPT_SINGLE, INTERCEPT_DUAL)


@dataclass(frozen=True)
class DualBasisOutcome:
    x: float
    p: float
    phase_estimate: int


def beamsplit(pulse: CoherentPulse, tap: float) -> tuple[CoherentPulse, CoherentPulse]:
    """Split a coherent pulse; returns (to Bob, to Eve).

    A coherent state leaves a beam splitter as a product of two coherent
    states, so measurements on the two outputs are independent.
    """
    if not 0.0 <= tap <= 1.0:
        raise ValueError(f"tap must lie in [0, 1], got {tap}")
    eve_n = pulse.n_sig * tap
    return CoherentPulse(pulse.n_sig - eve_n, pulse.phase_a), CoherentPulse(eve_n, pulse.phase_a)


def ml_phase_estimate(x, p):
    """Nearest of the four protocol phases to the point (x, p).

    The means (m,0), (0,m), (-m,0), (0,-m) are equidistant from the origin, so
    the nearest one maximizes the projection. Ties go to the earlier phase in
    the order 0, 90, 180, 270.
    """
    x, p = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(p, dtype=float))
    est = np.argmax(np.stack([x, p, -x, -p]), axis=0) * 90
    return int(est) if est.ndim == 0 else est


def single_basis_estimate(x, basis):
    """Sign decision in one basis: x >= 0 reads as ``basis``, otherwise ``basis + 180``."""
    est = np.where(np.asarray(x) >= 0, basis, np.asarray(basis) + 180)
    return int(est) if est.ndim == 0 else est


def dual_basis_sample(n_sig, phase_a, rng: np.random.Generator):
    """Vectorized 50-50 split followed by homodyne at 0 and 90 degrees."""
    n_sig, phase_a = np.broadcast_arrays(np.asarray(n_sig, dtype=float), np.asarray(phase_a, dtype=float))
    amp = np.sqrt(n_sig / 2.0)
    phi = np.radians(phase_a)
    x = amp * np.cos(phi) + VACUUM_SIGMA * rng.standard_normal(phi.shape)
    p = amp * np.sin(phi) + VACUUM_SIGMA * rng.standard_normal(phi.shape)
    return x, p


def dual_basis_measure(pulse: CoherentPulse, rng: np.random.Generator) -> DualBasisOutcome:
    x, p = dual_basis_sample(pulse.n_sig, pulse.phase_a, rng)
    x, p = float(x), float(p)
    return DualBasisOutcome(x, p, ml_phase_estimate(x, p))


def discrimination_probability(n_sig: float) -> float:
    """Probability that the dual-basis ML estimate names Alice's phase.

    By the fourfold symmetry it is enough to take phase 0, where the estimate
    is right when x > |p|. The inner integral over x is an error function.
    """
    if n_sig < 0:
        raise ValueError("n_sig must be >= 0")
    m = math.sqrt(n_sig / 2.0)
    s = VACUUM_SIGMA

    def integrand(p):
        return stats.norm.pdf(p, scale=s) * stats.norm.sf((abs(p) - m) / s)

    # integrand is even in p
    value, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12)
    return 2.0 * value


def discrimination_probability_mc(n_sig: float, trials: int, rng: np.random.Generator,
                                  chunk: int = 1_000_000) -> tuple[float, float]:
    """Monte Carlo estimate of :func:`discrimination_probability` and its standard error."""
    hits = 0
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        phases = rng.integers(0, 4, size) * 90
        x, p = dual_basis_sample(n_sig, phases, rng)
        hits += int(np.count_nonzero(ml_phase_estimate(x, p) == phases))
        done += size
    p_hat = hits / trials
    return p_hat, math.sqrt(p_hat * (1 - p_hat) / trials)


def apply_intercept_resend(n_sig, phase_a, strategy: EveStrategy, rng: np.random.Generator):
    """Vectorized intercept-resend over a batch of pulses.

    Random draws happen in a fixed order (intercept mask, Eve's basis,
    measurement noise, vacuum mask) so results depend only on the generator.

    Returns:
        (n_out, phase_out, intercepted, estimate) arrays. ``estimate`` is -1
        where Eve left the pulse alone.
    """
    if not strategy.is_intercept:
        raise ValueError(f"{strategy.variant!r} is not an intercept-resend variant")
    n_sig, phase_a = np.broadcast_arrays(np.asarray(n_sig, dtype=float), np.asarray(phase_a, dtype=float))
    shape = n_sig.shape
    intercepted = rng.random(shape) < strategy.intercept_fraction
    if strategy.variant == INTERCEPT_SINGLE:
        eve_basis = rng.integers(0, 2, shape) * 90
        x = sample_quadratures(n_sig, phase_a, eve_basis, ChannelModel.ideal(), rng)
        estimate = single_basis_estimate(x, eve_basis)
    else:
        x, p = dual_basis_sample(n_sig, phase_a, rng)
        estimate = ml_phase_estimate(x, p)
    vacuum = rng.random(shape) < strategy.vacuum_fraction

    n_out = np.where(intercepted, np.where(vacuum, 0.0, strategy.resend_n_sig), n_sig)
    phase_out = np.where(intercepted, estimate, phase_a).astype(float)
    estimate = np.where(intercepted, estimate, -1)
    return n_out, phase_out, intercepted, estimate


def intercept_resend(pulse: CoherentPulse, strategy: EveStrategy, rng: np.random.Generator) -> CoherentPulse:
    """Pulse that reaches the channel after Eve's intercept-resend step."""
    n_out, phase_out, _, _ = apply_intercept_resend(pulse.n_sig, pulse.phase_a, strategy, rng)
    return CoherentPulse(float(n_out), float(phase_out))


@dataclass(frozen=True)
class BeamsplitStats:
    n_pulses: int
    correlation: float
    correlation_z: float
    chi2_p_value: float
    eve_error_rate: float
    eve_error_rate_bob_conclusive: float
    futility_z: float


def beamsplit_statistics(n_sig: float, tap: float, policy: ThresholdPolicy, n_pulses: int,
                         rng: np.random.Generator, bins: int = 8) -> BeamsplitStats:
    """Monte Carlo check that Eve's tapped light tells her nothing about Bob's noise.

    Alice sends 0 or 180 degrees; Bob and Eve both measure at LO phase 0 with
    ideal detectors. Correlation and the chi-square contingency test are
    computed within each phase class, since Alice's bit is common to both.
    Eve decides by sign; her error rate on all pulses is compared with her
    error rate on pulses where Bob's result was conclusive.
    """
    bob_n = n_sig * (1 - tap)
    eve_n = n_sig * tap
    phase = rng.integers(0, 2, n_pulses) * 180.0
    ideal = ChannelModel.ideal()
    xb = sample_quadratures(bob_n, phase, 0.0, ideal, rng)
    xe = sample_quadratures(eve_n, phase, 0.0, ideal, rng)

    resid_b = np.empty(n_pulses)
    resid_e = np.empty(n_pulses)
    chi2 = 0.0
    dof = 0
    for ph in (0.0, 180.0):
        sel = phase == ph
        resid_b[sel] = xb[sel] - xb[sel].mean()
        resid_e[sel] = xe[sel] - xe[sel].mean()
        edges_b = np.quantile(xb[sel], np.linspace(0, 1, bins + 1))
        edges_e = np.quantile(xe[sel], np.linspace(0, 1, bins + 1))
        table, _, _ = np.histogram2d(xb[sel], xe[sel], bins=[edges_b, edges_e])
        res = stats.chi2_contingency(table, correction=False)
        chi2 += res.statistic
        dof += res.dof
    r = float(np.corrcoef(resid_b, resid_e)[0, 1])
    chi2_p = float(stats.chi2.sf(chi2, dof))

    eve_wrong = (xe >= 0) != (phase == 0.0)
    conclusive = policy.classify(xb) != INCONCLUSIVE
    e_all = float(eve_wrong.mean())
    k = int(conclusive.sum())
    e_cond = float(eve_wrong[conclusive].mean()) if k else float("nan")
    # the conditional subset is part of the full sample: var of the difference
    # is e(1-e)(1/k - 1/n)
    var = e_all * (1 - e_all) * (1.0 / k - 1.0 / n_pulses) if k else float("nan")
    z = (e_cond - e_all) / math.sqrt(var) if var > 0 else 0.0
    return BeamsplitStats(n_pulses, r, r * math.sqrt(n_pulses), chi2_p, e_all, e_cond, z)
