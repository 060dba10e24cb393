"""Compiled inner loops for the two integrators.

Both kernels take pre-drawn noise so that the random stream is owned by the
caller and the single-step Python API reproduces the vectorised path exactly.
"""

import math

import numpy as np
from numba import njit

MODE_CODES = {"off": 0, "cold_damp": 1, "parametric_viscous": 2, "parametric_spring": 3}


@njit(cache=True, nogil=True)
def feedback_force(mode, x, v, t, coef_v, coef_x, two_omega, phase, fmax):
    if mode == 0:
        f = 0.0
    elif mode == 1:
        f = -coef_v * v
    elif mode == 2:
        f = 2.0 * coef_v * math.cos(two_omega * t + phase) * v
    else:
        f = 2.0 * coef_x * math.cos(two_omega * t + phase) * x
    if fmax > 0.0:
        if f > fmax:
            f = fmax
        elif f < -fmax:
            f = -fmax
    return f


@njit(cache=True, nogil=True)
def full_band_steps(x, v, t0, dt, decay, stiffness, inv_mass, mode, coef_v, coef_x,
                    two_omega, phase, fmax, impulses, out_x):
    """Kick-drift steps; writes positions after each step into ``out_x``.

    Returns (x, v, bad) where ``bad`` is the index of the first non-finite
    step or -1.
    """
    for i in range(impulses.shape[0]):
        t = t0 + i * dt
        f = feedback_force(mode, x, v, t, coef_v, coef_x, two_omega, phase, fmax)
        v = decay * v + dt * (f * inv_mass - stiffness * x) + impulses[i] * inv_mass
        x = x + dt * v
        if not (math.isfinite(x) and math.isfinite(v)):
            return x, v, i
        out_x[i] = x
    return x, v, -1


@njit(cache=True, nogil=True)
def rotating_steps(x1, x2, phi, chol, free_decay, free_sigma, force_matrix, fmax,
                   drive, noise, out):
    """Slow-quadrature steps.

    Linear regime: exact Gaussian update ``X' = phi X + chol xi``.
    When the feedback force phasor exceeds ``fmax`` it is rescaled to that
    magnitude and applied on top of the exact free relaxation.
    """
    for i in range(noise.shape[0]):
        n1 = noise[i, 0]
        n2 = noise[i, 1]
        saturated = False
        if fmax > 0.0:
            f1 = force_matrix[0, 0] * x1 + force_matrix[0, 1] * x2
            f2 = force_matrix[1, 0] * x1 + force_matrix[1, 1] * x2
            mag = math.sqrt(f1 * f1 + f2 * f2)
            if mag > fmax:
                saturated = True
                scale = fmax / mag
                f1 *= scale
                f2 *= scale
                y1 = free_decay * x1 - drive * f2 + free_sigma * n1
                y2 = free_decay * x2 + drive * f1 + free_sigma * n2
        if not saturated:
            y1 = phi[0, 0] * x1 + phi[0, 1] * x2 + chol[0, 0] * n1
            y2 = phi[1, 0] * x1 + phi[1, 1] * x2 + chol[1, 0] * n1 + chol[1, 1] * n2
        x1 = y1
        x2 = y2
        if not (math.isfinite(x1) and math.isfinite(x2)):
            return x1, x2, i
        out[i, 0] = x1
        out[i, 1] = x2
    return x1, x2, -1


@njit(cache=True, nogil=True)
def lockin_steps(phase, bp, z_bp, lp, z_i, z_q, k0, cycles_per_sample, cycle0_i, cycle0_q,
                 scale, decimation, out):
    """Bandpass, square mixing on I and Q, low-pass and decimation, sample by sample.

    ``bp`` and ``lp`` are single second-order sections (b0, b1, b2, 1, a1, a2)
    run in transposed direct form II; ``z_*`` hold their states and are updated
    in place. Sample ``k0 + n`` is kept when ``(k0 + n + 1) % decimation == 0``.
    The square references are +1 where the fractional cycle lies in
    [-1/4, 1/4]. Returns the number of rows written to ``out``.
    """
    b0, b1, b2, a1, a2 = bp[0, 0], bp[0, 1], bp[0, 2], bp[0, 4], bp[0, 5]
    c0, c1, c2, d1, d2 = lp[0, 0], lp[0, 1], lp[0, 2], lp[0, 4], lp[0, 5]
    s0, s1 = z_bp[0, 0], z_bp[0, 1]
    i0, i1 = z_i[0, 0], z_i[0, 1]
    q0, q1 = z_q[0, 0], z_q[0, 1]
    n_out = 0
    for n in range(phase.shape[0]):
        x = phase[n]
        y = b0 * x + s0
        s0 = b1 * x - a1 * y + s1
        s1 = b2 * x - a2 * y
        k = k0 + n
        base = k * cycles_per_sample
        ci = base + cycle0_i
        ci -= math.floor(ci)
        cq = base + cycle0_q
        cq -= math.floor(cq)
        u = y if (ci <= 0.25 or ci >= 0.75) else -y
        yi = c0 * u + i0
        i0 = c1 * u - d1 * yi + i1
        i1 = c2 * u - d2 * yi
        u = y if (cq <= 0.25 or cq >= 0.75) else -y
        yq = c0 * u + q0
        q0 = c1 * u - d1 * yq + q1
        q1 = c2 * u - d2 * yq
        if (k + 1) % decimation == 0:
            out[n_out, 0] = yi * scale
            out[n_out, 1] = yq * scale
            n_out += 1
    z_bp[0, 0], z_bp[0, 1] = s0, s1
    z_i[0, 0], z_i[0, 1] = i0, i1
    z_q[0, 0], z_q[0, 1] = q0, q1
    return n_out


def warm_up():
    """Compile all kernels on tiny inputs."""
    out = np.empty(1)
    full_band_steps(0.0, 0.0, 0.0, 1e-6, 1.0, 1.0, 1.0, 0, 0.0, 0.0, 0.0, 0.0, 0.0,
                    np.zeros(1), out)
    out2 = np.empty((1, 2))
    eye = np.eye(2)
    rotating_steps(0.0, 0.0, eye, eye, 1.0, 0.0, np.zeros((2, 2)), 0.0, 0.0,
                   np.zeros((1, 2)), out2)
    sos = np.array([[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]])
    lockin_steps(np.zeros(1), sos, np.zeros((1, 2)), sos, np.zeros((1, 2)), np.zeros((1, 2)),
                 0, 0.1, 0.0, 0.0, 1.0, 1, out2)
