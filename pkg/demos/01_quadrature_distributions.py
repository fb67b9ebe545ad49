"""
Quadrature distributions of a weak coherent pulse
=================================================

Bob mixes Alice's pulse with a bright local oscillator and records one
quadrature per pulse. For a coherent state the result is Gaussian with
standard deviation 1/2, centred at sqrt(n) cos(phi_A - phi_B).
"""
import numpy as np

from hdqkd import ChannelModel, CoherentPulse, quadrature_mean, quadrature_sigma, sample_quadratures

ideal = ChannelModel.ideal()
for phase in (0, 90, 180, 270):
    mu = quadrature_mean(CoherentPulse(1.0, phase), ideal, 0)
    print(f"phase {phase:3d}: mean {mu:+.3f}, sigma {quadrature_sigma(ideal):.3f}")

# 90 and 270 degrees look identical to Bob: that is a wrong-basis pulse.
rng = np.random.default_rng(1)
a = sample_quadratures(np.ones(10_000), 90, 0, ideal, rng)
b = sample_quadratures(np.ones(10_000), 270, 0, ideal, rng)
print(f"sample means at 90 / 270 degrees: {a.mean():+.4f} / {b.mean():+.4f}")

# The reported apparatus: visibility 0.8, photodiode efficiency 0.85,
# 2e6 LO photons and 1010 electrons of amplifier noise.
lab = ChannelModel(visibility=0.8, detector_efficiency=0.85, n_lo=2e6, electronic_noise_electrons=1010)
print(f"lab mean at n=0.1: {quadrature_mean(CoherentPulse(0.1), lab, 0):.3f}")
print(f"lab sigma from the stated noise: {quadrature_sigma(lab):.3f}")
