"""Physical constants (CODATA 2018 exact values)."""

BOLTZMANN = 1.380649e-23  # J/K
SPEED_OF_LIGHT = 299_792_458.0  # m/s
