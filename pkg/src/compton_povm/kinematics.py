"""Single Compton scattering: energies, alpha/beta, Mueller matrices, densities.

Energies are in units of the electron rest mass (1.0 == 511 keV) and cross
sections in units of r_e^2.
"""
import threading

import numpy as np

from .polarization import is_physical_stokes

# (0,0) projector left after averaging M(phi) over a full turn, divided by 2 pi
AZIMUTH_AVERAGE = np.diag([1.0, 0.0, 0.0, 1.0])

_ANGLE_TOL = 1e-12


def check_polar(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(~np.isfinite(theta)) or np.any(theta < -_ANGLE_TOL) or np.any(theta > np.pi + _ANGLE_TOL):
        raise ValueError("polar scattering angle outside [0, pi]")
    return np.clip(theta, 0.0, np.pi)


def check_energy(e0):
    if not np.all(np.asarray(e0) > 0):
        raise ValueError(f"photon energy must be positive, got {e0}")
    return e0


def scattered_energy(e0, theta):
    """Photon energy after scattering through ``theta``: ``E0 / (1 + E0 (1 - cos theta))``."""
    check_energy(e0)
    theta = check_polar(theta)
    return e0 / (1.0 + e0 * (1.0 - np.cos(theta)))


def alpha_beta(e0, theta):
    """Unpolarized differential cross section and analyzing power.

    Returns
    -------
    alpha, beta
        ``alpha`` in r_e^2 per steradian; ``beta`` dimensionless in [0, 1].
    """
    theta = check_polar(theta)
    r = scattered_energy(e0, theta) / e0
    s2 = np.sin(theta) ** 2
    denom = r + 1.0 / r - s2
    return 0.5 * r**2 * denom, s2 / denom


def alpha_beta_unit_energy(theta):
    """Reduced closed forms of ``alpha_beta`` at ``E0 = 1``."""
    theta = check_polar(theta)
    c = np.cos(theta)
    poly = c * (3.0 + (c - 3.0) * c) - 3.0
    return poly / (2.0 * (c - 2.0) ** 3), (c - 2.0) * np.sin(theta) ** 2 / poly


def transition_matrix(e0, theta):
    """Compton transition Mueller matrix T(E0, theta), block diagonal 2x2 + 2x2."""
    theta = float(check_polar(theta))
    e = scattered_energy(e0, theta)
    c = np.cos(theta)
    de = (e0 - e) * (1.0 - c)
    t11 = 1.0 + c * c + de
    t12 = np.sin(theta) ** 2
    t33 = 2.0 * c
    t44 = 2.0 * c + de * c
    return 0.5 * (e / e0) ** 2 * np.array(
        [
            [t11, t12, 0.0, 0.0],
            [t12, 2.0 - t12, 0.0, 0.0],
            [0.0, 0.0, t33, 0.0],
            [0.0, 0.0, 0.0, t44],
        ]
    )


def rotation_matrix(phi):
    c, s = np.cos(2.0 * phi), np.sin(2.0 * phi)
    return np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c, s, 0.0],
            [0.0, -s, c, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _gauss_legendre_theta(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * np.pi * (x + 1.0), 0.5 * np.pi * w


def _single_total_quadrature(e0, n):
    theta, w = _gauss_legendre_theta(n)
    a, _ = alpha_beta(e0, theta)
    return 2.0 * np.pi * float(np.sum(w * a * np.sin(theta)))


_sigma1_cache = {}
_sigma1_lock = threading.Lock()


def single_total_cross_section(e0=1.0, nodes=128, rtol=1e-9):
    """Total Klein-Nishina cross section by Gauss-Legendre quadrature.

    Starts at ``nodes`` points and doubles until the relative change drops
    below ``rtol``. Results are cached per energy.
    """
    check_energy(e0)
    key = float(e0)
    with _sigma1_lock:
        if key in _sigma1_cache:
            return _sigma1_cache[key]
        prev = _single_total_quadrature(key, nodes)
        while True:
            nodes *= 2
            cur = _single_total_quadrature(key, nodes)
            if abs(cur - prev) <= rtol * abs(cur) or nodes >= 8192:
                break
            prev = cur
        _sigma1_cache[key] = cur
        return cur


def klein_nishina_total(e0):
    """Closed-form total Klein-Nishina cross section (r_e^2); vectorized.

    Loses precision from cancellation below ``e0 ~ 1e-3``.
    """
    k = np.asarray(e0, dtype=float)
    l2 = np.log1p(2.0 * k)
    return 2.0 * np.pi * (
        (1.0 + k) / k**2 * (2.0 * (1.0 + k) / (1.0 + 2.0 * k) - l2 / k)
        + l2 / (2.0 * k)
        - (1.0 + 3.0 * k) / (1.0 + 2.0 * k) ** 2
    )


def klein_nishina_density(stokes, e0, theta, phi):
    """Normalized scattering probability density per steradian.

    Parameters
    ----------
    stokes : array_like
        Normalized Stokes vector of the incoming photon (``s0 == 1``).
    e0 : float
        Incoming energy.
    theta, phi : float or array_like
        Scattering direction; ``phi`` is measured from the Bloch x-axis.
    """
    s = np.asarray(stokes, dtype=float)
    if abs(s[0] - 1.0) > 1e-12:
        raise ValueError("klein_nishina_density needs a normalized Stokes vector (s0 == 1)")
    if not is_physical_stokes(s):
        raise ValueError("Stokes vector is not physical")
    a, b = alpha_beta(e0, theta)
    return a / single_total_cross_section(e0) * (
        1.0 + b * (s[1] * np.cos(2.0 * phi) + s[2] * np.sin(2.0 * phi))
    )


def polarimeter_asymmetry(stokes, e0, theta, phi):
    """Count asymmetry between azimuths ``phi`` and ``phi + pi/2``."""
    d1 = klein_nishina_density(stokes, e0, theta, phi)
    d2 = klein_nishina_density(stokes, e0, theta, phi + 0.5 * np.pi)
    return (d1 - d2) / (d1 + d2)
