import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from hdqkd.physics import (
    ChannelModel,
    CoherentPulse,
    photocurrent_to_quadrature,
    quadrature_mean,
    quadrature_pdf,
    quadrature_sigma,
    quadrature_to_photocurrent,
    sample_quadrature,
    sample_quadratures,
)

IDEAL = ChannelModel.ideal()
EXPERIMENT = ChannelModel(visibility=0.8, detector_efficiency=0.85, n_lo=2e6, electronic_noise_electrons=1010)


class TestTypes:
    def test_phase_wraps(self):
        assert CoherentPulse(1.0, 450).phase_a == 90
        assert CoherentPulse(1.0, -90).phase_a == 270

    @pytest.mark.parametrize("n", [-0.1, float("nan"), float("inf")])
    def test_rejects_bad_photon_number(self, n):
        with pytest.raises(ValueError):
            CoherentPulse(n)

    def test_vacuum_pulse_allowed(self):
        assert CoherentPulse(0.0).amplitude == 0

    @pytest.mark.parametrize("field", ["transmittance", "visibility", "detector_efficiency"])
    def test_channel_ranges(self, field):
        with pytest.raises(ValueError):
            ChannelModel(**{field: 1.5})

    def test_channel_rejects_nonpositive_lo(self):
        with pytest.raises(ValueError):
            ChannelModel(n_lo=0)

    def test_bad_basis(self):
        with pytest.raises(ValueError):
            quadrature_mean(CoherentPulse(1.0), IDEAL, 45)


class TestMoments:
    def test_experimental_mean(self):
        mu = quadrature_mean(CoherentPulse(0.1, 0), EXPERIMENT, 0)
        assert mu == pytest.approx(0.233, abs=5e-4)

    @pytest.mark.parametrize("n_sig", [0.0, 0.1, 1.0, 7.0])
    def test_quadrature_orthogonal(self, n_sig):
        assert quadrature_mean(CoherentPulse(n_sig, 90), IDEAL, 0) == pytest.approx(0.0, abs=1e-15)

    def test_opposite_phase(self):
        assert quadrature_mean(CoherentPulse(1.0, 180), IDEAL, 0) == pytest.approx(-1.0)

    def test_total_phase_is_difference(self):
        assert quadrature_mean(CoherentPulse(1.0, 90), IDEAL, 90) == pytest.approx(1.0)
        assert quadrature_mean(CoherentPulse(1.0, 270), IDEAL, 90) == pytest.approx(-1.0)

    def test_vacuum_sigma(self):
        assert quadrature_sigma(IDEAL) == 0.5

    def test_amplifier_noise_sigma(self):
        sigma_e = 1010 / (2 * math.sqrt(2e6 * 0.85))
        assert quadrature_sigma(EXPERIMENT) == pytest.approx(math.sqrt(0.25 + sigma_e**2))
        assert quadrature_sigma(EXPERIMENT) == pytest.approx(0.632, abs=5e-4)

    def test_noise_vanishes_for_strong_lo(self):
        ch = ChannelModel(n_lo=1e18, electronic_noise_electrons=1010)
        assert quadrature_sigma(ch) == pytest.approx(0.5, abs=1e-6)

    def test_noise_needs_detector(self):
        with pytest.raises(ValueError):
            quadrature_sigma(ChannelModel(detector_efficiency=0.0, electronic_noise_electrons=10))

    def test_sigma_override(self):
        ch = EXPERIMENT.with_total_sigma(0.57)
        assert quadrature_sigma(ch) == pytest.approx(0.57)
        with pytest.raises(ValueError):
            EXPERIMENT.with_total_sigma(0.4)

    def test_photocurrent_round_trip(self):
        n = np.array([-2000.0, 0.0, 1414.2])
        assert np.allclose(quadrature_to_photocurrent(photocurrent_to_quadrature(n, 2e6), 2e6), n)
        assert photocurrent_to_quadrature(2 * math.sqrt(4e6), 4e6) == pytest.approx(1.0)

    @given(n=st.floats(0, 50), t=st.floats(0, 1), eta=st.floats(0, 1), v=st.floats(0, 1), phase=st.floats(0, 360))
    def test_mean_scaling(self, n, t, eta, v, phase):
        ch = ChannelModel(transmittance=t, detector_efficiency=eta, visibility=v)
        expected = math.sqrt(n * t * eta) * v * math.cos(math.radians(phase))
        assert quadrature_mean(CoherentPulse(n, phase), ch, 0) == pytest.approx(expected, abs=1e-12)
        # the spread ignores the signal entirely
        assert quadrature_sigma(ch) == 0.5


class TestPdf:
    def test_peak(self):
        assert quadrature_pdf(1.0, CoherentPulse(1.0), IDEAL, 0) == pytest.approx(1 / (0.5 * math.sqrt(2 * math.pi)))
        assert quadrature_pdf(1.0, CoherentPulse(1.0), IDEAL, 0) == pytest.approx(0.7979, abs=1e-4)

    def test_hand_value(self):
        expected = 1 / (0.5 * math.sqrt(2 * math.pi)) * math.exp(-((0 - 1) ** 2) / (2 * 0.25))
        assert quadrature_pdf(0.0, CoherentPulse(1.0), IDEAL, 0) == pytest.approx(expected)
        assert expected == pytest.approx(0.1080, abs=1e-4)

    def test_mirror_symmetry(self):
        x = np.linspace(-3, 3, 61)
        a = quadrature_pdf(x, CoherentPulse(0.7, 0), EXPERIMENT, 0)
        b = quadrature_pdf(-x, CoherentPulse(0.7, 180), EXPERIMENT, 0)
        assert np.allclose(a, b)

    @settings(max_examples=25, deadline=None)
    @given(n=st.floats(0, 30), phase=st.sampled_from([0, 90, 180, 270]), noise=st.floats(0, 3000),
           basis=st.sampled_from([0, 90]))
    def test_integrates_to_one(self, n, phase, noise, basis):
        ch = ChannelModel(n_lo=2e6, detector_efficiency=0.85, electronic_noise_electrons=noise)
        pulse = CoherentPulse(n, phase)
        mu = quadrature_mean(pulse, ch, basis)
        s = quadrature_sigma(ch)
        total, _ = integrate.quad(lambda x: quadrature_pdf(x, pulse, ch, basis), mu - 40 * s, mu + 40 * s,
                                  points=[mu], epsabs=1e-13, epsrel=1e-13, limit=200)
        assert total == pytest.approx(1.0, abs=1e-9)


class TestSampling:
    def test_moments(self, rng):
        x = sample_quadratures(1.0, 0.0, 0.0, IDEAL, np.random.default_rng(1))
        assert x.shape == ()
        x = sample_quadratures(np.full(100_000, 1.0), 0.0, 0.0, IDEAL, rng)
        assert abs(x.mean() - 1.0) < 0.005
        assert abs(x.std() - 0.5) < 0.005

    @pytest.mark.parametrize("n_sig,phase,channel", [(0.1, 0, EXPERIMENT), (1.0, 180, IDEAL), (3.0, 45, EXPERIMENT)])
    def test_moments_within_five_standard_errors(self, rng, n_sig, phase, channel):
        n = 100_000
        x = sample_quadratures(np.full(n, n_sig), phase, 0, channel, rng)
        mu = quadrature_mean(CoherentPulse(n_sig, phase), channel, 0)
        s = quadrature_sigma(channel)
        assert abs(x.mean() - mu) < 5 * s / math.sqrt(n)
        assert abs(x.std(ddof=1) - s) < 5 * s / math.sqrt(2 * (n - 1))

    def test_wrong_basis_indistinguishable(self, rng):
        a = sample_quadratures(np.full(100_000, 1.0), 90, 0, IDEAL, rng)
        b = sample_quadratures(np.full(100_000, 1.0), 270, 0, IDEAL, rng)
        assert stats.ks_2samp(a, b).pvalue > 0.01

    def test_determinism(self):
        pulse = CoherentPulse(0.3, 90)
        a = [sample_quadrature(pulse, EXPERIMENT, 90, np.random.default_rng(7)) for _ in range(3)]
        assert a[0] == a[1] == a[2]
        r1, r2 = np.random.default_rng(8), np.random.default_rng(8)
        assert [sample_quadrature(pulse, EXPERIMENT, 0, r1) for _ in range(5)] == \
               [sample_quadrature(pulse, EXPERIMENT, 0, r2) for _ in range(5)]

    def test_phase_jitter_shrinks_mean(self, rng):
        ch = ChannelModel(phase_jitter_deg=30.0)
        x = sample_quadratures(np.full(200_000, 1.0), 0, 0, ch, rng)
        # E[cos d] for d ~ N(0, s^2) is exp(-s^2 / 2)
        expected = math.exp(-math.radians(30.0) ** 2 / 2)
        assert abs(x.mean() - expected) < 5 * 0.55 / math.sqrt(200_000)
