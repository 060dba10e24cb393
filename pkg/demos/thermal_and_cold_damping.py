"""Free Brownian motion of the mirror mode, then cold damping at g = 3.

Prints the quadrature dispersions, the fitted decay rates and the effective
temperature inferred from the cooled variance.
"""

import math

from mirrorsim import analysis, model, presets, scenarios
from mirrorsim.model import FeedbackConfig, FeedbackMode
from mirrorsim.simulator import run_experiment

p, e = presets.paper_oscillator(), presets.paper_environment()
v_th = model.thermal_variance(p, e)
print(f"thermal dispersion {math.sqrt(v_th):.4g} m, damping {p.damping_rate / (2 * math.pi):.2f} Hz")

for label, fb in (("free", FeedbackConfig()), ("cold g=3", FeedbackConfig(FeedbackMode.COLD_DAMP, 3.0))):
    trace = run_experiment(presets.rotating_config(fb, duration=60.0, seed=1))
    d1, d2 = analysis.dispersions(trace)
    c11, c22 = scenarios.fitted_dampings(trace, p, fb)
    t_eff = analysis.inferred_temperature(0.5 * (d1 * d1 + d2 * d2), p, e)
    print(f"{label:9s} dX1 {d1:.4g} m  dX2 {d2:.4g} m  "
          f"Gamma1/2pi {c11.fitted_gamma / (2 * math.pi):6.1f} Hz  "
          f"Gamma2/2pi {c22.fitted_gamma / (2 * math.pi):6.1f} Hz  T_eff {t_eff:6.1f} K")
