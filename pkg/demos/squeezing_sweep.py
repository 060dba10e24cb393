"""Thermal squeezing by parametric feedback below threshold.

Sweeps the viscous parametric gain and prints the normalized dampings and
variances of both quadratures next to their closed forms.
"""

from mirrorsim import scenarios

settings = scenarios.default_settings("gain_sweep", duration=300.0)
result = scenarios.run_gain_sweep(settings, seed=1)
print(f"{'g':>4} {'G1/G':>12} {'G2/G':>12} {'V1/Vth':>12} {'V2/Vth':>12}")
for row in result.table:
    cells = [f"{row[k]:.3f} ({row['theory_' + k]:.3f})" for k in
             ("gamma1_over_gamma", "gamma2_over_gamma", "var1_over_thermal", "var2_over_thermal")]
    print(f"{row['gain']:4.1f} " + " ".join(f"{c:>12}" for c in cells))
print("(simulated, closed form in parentheses)")
