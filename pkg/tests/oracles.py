"""Independent reference computations used by the tests.

Everything here works from sampled curve points z(theta) alone (plus the
flux), never from the map's derivative series, so agreement with the library
is a genuine cross-check.
"""

import math

import numpy as np
from scipy.special import ellipe


def theta_derivative(values, order=1):
    """Spectral d^order/dtheta^order of a periodic sequence (no dealiasing)."""
    n = values.size
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    return np.fft.ifft((1j * k) ** order * np.fft.fft(values))


def curve_points(fmap, rho, n):
    """Boundary image sampled directly from the coefficient list."""
    w = rho * np.exp(2j * math.pi * np.arange(n) / n)
    z = np.zeros(n, dtype=complex)
    for c, p in zip(fmap.coeffs, fmap.powers):
        z += c * w**p
    return z


def green_area(z):
    """Enclosed area 1/2 Im(conj(z) z') dtheta by spectral trapezoidal quadrature."""
    dz = theta_derivative(z)
    return 0.5 * float(np.mean(np.imag(np.conj(z) * dz))) * 2.0 * math.pi


def geometry(z, flux):
    """E, kappa, ds and n.r from the sampled curve (counter-clockwise orientation)."""
    n = z.size
    dz = theta_derivative(z)
    ddz = theta_derivative(z, 2)
    speed = np.abs(dz)
    kappa = np.imag(np.conj(dz) * ddz) / speed**3
    normal = -1j * dz / speed  # outward for a counter-clockwise curve
    E = flux / (2.0 * math.pi * speed)
    ds = speed * 2.0 * math.pi / n
    n_dot_r = np.real(np.conj(normal) * z)
    return E, kappa, ds, n_dot_r


def ellipse_perimeter(a, b):
    a, b = max(a, b), min(a, b)
    return 4.0 * a * ellipe(1.0 - (b / a) ** 2)


def segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return np.sign((b.real - a.real) * (c.imag - a.imag) - (b.imag - a.imag) * (c.real - a.real))

    return (orient(p1, p2, q1) * orient(p1, p2, q2) < 0) & (orient(q1, q2, p1) * orient(q1, q2, p2) < 0)


def brute_force_self_intersecting(z):
    """O(N^2) test of every pair of non-adjacent edges of the closed polygon z."""
    n = z.size
    a, b = z, np.roll(z, -1)
    for i in range(n):
        j = np.arange(i + 2, n)
        if i == 0:
            j = j[j != n - 1]
        if j.size and np.any(segments_cross(a[i], b[i], a[j], b[j])):
            return True
    return False
