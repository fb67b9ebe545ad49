"""
Eavesdropping and what Bob can see
==================================

Three attacks: dual-basis intercept-resend, vacuum substitution, and a
beamsplitter tap. Bob's quadrature histograms reveal the second; the third
leaves no trace but also leaves Eve's data uncorrelated with Bob's noise.
"""
import numpy as np

from hdqkd import EveStrategy, SessionConfig, ThresholdPolicy, CoherentPulse, discrimination_probability, run_session
from hdqkd.attacks import beamsplit_statistics

print(f"Eve's four-phase accuracy at n=1: {discrimination_probability(1.0):.4f}")

base = dict(n_pulses=20_000, pulse=CoherentPulse(1.0), policy=ThresholdPolicy(0.3), seed=5)
strategies = {
    "none": EveStrategy(),
    "dual-basis intercept": EveStrategy("intercept_resend_dual", resend_n_sig=1.0),
    "half vacuum": EveStrategy("intercept_resend_single", intercept_fraction=0.5, vacuum_fraction=1.0),
    "beamsplit 50%": EveStrategy("beamsplit", tap_fraction=0.5),
}
for name, eve in strategies.items():
    _, report = run_session(SessionConfig(eve=eve, **base))
    print(f"{name:22s} sifted error {report.sifted_error_rate:.4f}  alarm {report.alarm}")

s = beamsplit_statistics(1.0, 0.5, ThresholdPolicy(0.5), 200_000, np.random.default_rng(2))
print(f"Eve error on all pulses {s.eve_error_rate:.4f}, on Bob's kept pulses {s.eve_error_rate_bob_conclusive:.4f}")
