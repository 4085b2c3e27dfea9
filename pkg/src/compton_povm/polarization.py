"""Single-photon polarization states in the circular {|R>, |L>} basis.

Stokes vectors are plain length-4 float arrays ``(s0, s1, s2, s3)`` and
density matrices are 2x2 complex arrays with rows/columns ordered R, L.
"""
from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (IDENTITY, SIGMA_X, SIGMA_Y, SIGMA_Z)

KET_R = np.array([1, 0], dtype=complex)
KET_L = np.array([0, 1], dtype=complex)
KET_H = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_V = np.array([1, -1], dtype=complex) / np.sqrt(2)
KET_A = np.array([1, 1j], dtype=complex) / np.sqrt(2)
KET_D = np.array([1, -1j], dtype=complex) / np.sqrt(2)


def projector(ket):
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


def hermitize(m, tol=HERMITIAN_TOL):
    """Return ``(m + m^dagger)/2``, raising if ``m`` is not Hermitian within ``tol``."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if np.max(np.abs(m - m.conj().T)) > tol:
        raise ValueError("matrix is not Hermitian")
    return 0.5 * (m + m.conj().T)


def density_to_stokes(rho):
    """Stokes vector of a 2x2 polarization density matrix.

    Parameters
    ----------
    rho : array_like, shape (2, 2)
        Hermitian matrix in the {|R>, |L>} basis. Need not have unit trace.

    Returns
    -------
    numpy.ndarray
        ``(s0, s1, s2, s3)`` with ``s_j = Tr[rho sigma_j]``.
    """
    rho = hermitize(rho)
    if rho.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {rho.shape}")
    rr, rl, lr, ll = rho[0, 0], rho[0, 1], rho[1, 0], rho[1, 1]
    return np.array(
        [(rr + ll).real, (rl + lr).real, (1j * rl - 1j * lr).real, (rr - ll).real]
    )


def stokes_to_density(stokes):
    s0, s1, s2, s3 = np.asarray(stokes, dtype=float)
    return 0.5 * np.array([[s0 + s3, s1 - 1j * s2], [s1 + 1j * s2, s0 - s3]])


def is_physical_stokes(stokes, tol=1e-12):
    s = np.asarray(stokes, dtype=float)
    return bool(s[0] > 0 and s[1] ** 2 + s[2] ** 2 + s[3] ** 2 <= s[0] ** 2 * (1 + tol) + tol)


@dataclass(frozen=True)
class BlochAngles:
    """Point on the polarization Bloch sphere.

    ``theta`` is the polar angle in [0, pi]; ``phi`` is the half-angle
    azimuth, so the ket carries the phase ``exp(2i phi)``. ``phi`` is
    reduced mod pi on construction.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError(f"Bloch polar angle {self.theta} outside [0, pi]")
        object.__setattr__(self, "phi", float(np.mod(self.phi, np.pi)))

    @property
    def ket(self):
        return np.array(
            [np.cos(self.theta / 2), np.exp(2j * self.phi) * np.sin(self.theta / 2)]
        )

    def orthogonal_ket(self):
        # partner state of the discrimination pair
        return np.array(
            [np.sin(self.theta / 2), -np.exp(2j * self.phi) * np.cos(self.theta / 2)]
        )


def bloch_state(angles):
    """Rank-1 density matrix of ``cos(t/2)|R> + exp(2i phi) sin(t/2)|L>``."""
    return projector(angles.ket)


# named single-photon states used throughout the Bell and witness code
STATES = {
    "R": projector(KET_R),
    "L": projector(KET_L),
    "H": projector(KET_H),
    "V": projector(KET_V),
    "A": projector(KET_A),
    "D": projector(KET_D),
}
NAMED_KETS = {"R": KET_R, "L": KET_L, "H": KET_H, "V": KET_V, "A": KET_A, "D": KET_D}
