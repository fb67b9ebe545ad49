"""
Post-selection thresholds
=========================

Raising the threshold X+ throws away ambiguous pulses: the error rate among
the kept ones falls, and so does the fraction kept. The best threshold
maximizes kept fraction times mutual information.
"""
import numpy as np

from hdqkd import optimize_threshold, performance

for n_sig in (1.0, 0.1):
    print(f"n_sig = {n_sig}")
    print("  x_plus    e_int      p_d   eta_d    gain")
    for x in np.arange(0.0, 1.51, 0.25):
        p = performance(n_sig, 0.5, x)
        print(f"  {x:6.2f}  {p.e_int:7.4f}  {p.p_d:7.4f}  {p.eta_d:6.3f}  {p.gain:6.4f}")
    x_opt, g = optimize_threshold(n_sig, 0.5)
    print(f"  optimum x_plus = {x_opt:.4f}, gain = {g:.4f} bits/pulse\n")
