"""Bipartite states, joint statistics, CHSH, and the R-ratio audit."""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .kinematics import alpha_beta
from .polarization import KET_H, KET_L, KET_R, KET_V, hermitize, projector
from .povm import FilteredPair, _sign, filtered_pair_from_beta

PSD_TOL = 1e-12
TSIRELSON = 2.0 * np.sqrt(2.0)
LHV_BOUND = 2.0


@dataclass(frozen=True)
class BipartiteState:
    """Two-photon polarization state in the {RR, RL, LR, LL} basis."""

    matrix: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        m = hermitize(self.matrix)
        if m.shape != (4, 4):
            raise ValueError("bipartite state must be 4x4")
        if abs(np.trace(m).real - 1.0) > 1e-10:
            raise ValueError("bipartite state must have unit trace")
        if np.min(np.linalg.eigvalsh(m)) < -1e-10:
            raise ValueError("bipartite state must be positive semidefinite")
        object.__setattr__(self, "matrix", m)

    def partial_transpose(self):
        """Transpose on the second photon."""
        t = self.matrix.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1)
        return t.reshape(4, 4)


def _pure(ket, label):
    return BipartiteState(projector(ket), label)


def standard_states():
    """Named states: phi_minus, omega_mix, omega_sep, product_HV."""
    phi_minus = (np.kron(KET_R, KET_R) - np.kron(KET_L, KET_L)) / np.sqrt(2.0)
    hv = np.kron(KET_H, KET_V)
    vh = np.kron(KET_V, KET_H)
    omega_sep = 0.25 * np.array(
        [[1, 0, 0, -1], [0, 1, 0, 0], [0, 0, 1, 0], [-1, 0, 0, 1]], dtype=complex
    )
    return {
        "phi_minus": _pure(phi_minus, "phi_minus"),
        "omega_mix": BipartiteState(0.5 * (projector(hv) + projector(vh)), "omega_mix"),
        "omega_sep": BipartiteState(omega_sep, "omega_sep"),
        "product_HV": _pure(hv, "product_HV"),
    }


@dataclass(frozen=True)
class BellSettings:
    phi_a: float
    phi_a_prime: float
    phi_b: float
    phi_b_prime: float


def bell_test_angles(phi, offset=0.0):
    """Settings ``(0, 2 phi, -phi, -3 phi)``, optionally rotated by a common ``offset``."""
    return BellSettings(offset, 2.0 * phi + offset, -phi - offset, -3.0 * phi - offset)


def _as_matrix(state):
    if isinstance(state, BipartiteState):
        return state.matrix
    return BipartiteState(np.asarray(state)).matrix


def joint_probabilities(state, pair_a, pair_b):
    """2x2 array ``p[j, k]`` with index 0 for outcome + and 1 for outcome -."""
    rho = _as_matrix(state)
    out = np.empty((2, 2))
    for j, ea in enumerate((pair_a.plus, pair_a.minus)):
        for k, eb in enumerate((pair_b.plus, pair_b.minus)):
            out[j, k] = np.trace(rho @ np.kron(ea.matrix, eb.matrix)).real
    return out


def joint_probability(state, pair_a, outcome_a, pair_b, outcome_b):
    rho = _as_matrix(state)
    ea = pair_a.element(outcome_a).matrix
    eb = pair_b.element(outcome_b).matrix
    return float(np.trace(rho @ np.kron(ea, eb)).real)


def phi_minus_joint_probability(beta_a, beta_b, phi_a, phi_b, outcome_a, outcome_b):
    jk = _sign(outcome_a) * _sign(outcome_b)
    return 0.25 * (1.0 - jk * beta_a * beta_b * np.cos(2.0 * (phi_a + phi_b)))


def expectation(state, pair_a, pair_b):
    p = joint_probabilities(state, pair_a, pair_b)
    return float(p[0, 0] + p[1, 1] - p[0, 1] - p[1, 0])


def phi_minus_expectation(beta_a, beta_b, phi_a, phi_b):
    return -beta_a * beta_b * np.cos(2.0 * (np.asarray(phi_a) + np.asarray(phi_b)))


def chsh(state, beta, settings, beta_b=None):
    """CHSH combination ``E(a,b) - E(a,b') + E(a',b) + E(a',b')`` from explicit traces."""
    beta_b = beta if beta_b is None else beta_b
    a = filtered_pair_from_beta(beta, settings.phi_a)
    a2 = filtered_pair_from_beta(beta, settings.phi_a_prime)
    b = filtered_pair_from_beta(beta_b, settings.phi_b)
    b2 = filtered_pair_from_beta(beta_b, settings.phi_b_prime)
    return (
        expectation(state, a, b)
        - expectation(state, a, b2)
        + expectation(state, a2, b)
        + expectation(state, a2, b2)
    )


def chsh_closed_form(beta, phi):
    """CHSH of |Phi-> at the Bell-test angles: ``beta^2 (-3 cos 2phi + cos 6phi)``."""
    phi = np.asarray(phi, dtype=float)
    return beta**2 * (-3.0 * np.cos(2.0 * phi) + np.cos(6.0 * phi))


def chsh_scan(phi_grid, beta, state=None, beta_b=None):
    """CHSH along the Bell-test-angle family for each ``phi`` in ``phi_grid``.

    Uses explicit traces against ``state`` (|Phi-> by default).
    """
    if state is None:
        state = standard_states()["phi_minus"]
    phi_grid = np.asarray(phi_grid, dtype=float)
    return np.array([chsh(state, beta, bell_test_angles(p), beta_b) for p in phi_grid])


def violation_threshold():
    """Smallest analyzing power for which |S| can exceed 2: ``2**-0.25``."""
    return 2.0**-0.25


def max_chsh(state, beta, beta_b=None, restarts=8, seed=0):
    """Maximum |S| over all four azimuths (multistart Nelder-Mead)."""
    rng = np.random.default_rng(seed)
    best = -np.inf
    starts = [np.array([0.0, 0.25, -0.125, -0.375]) * np.pi]
    starts += [rng.uniform(-np.pi, np.pi, 4) for _ in range(restarts)]
    for sign in (1.0, -1.0):
        for x0 in starts:
            res = minimize(
                lambda x: -sign * chsh(state, beta, BellSettings(*x), beta_b),
                x0,
                method="Nelder-Mead",
                options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 4000},
            )
            best = max(best, -res.fun)
    return float(best)


def pair_cross_section(state, e0, theta_a, theta_b, phi_a, phi_b):
    """``Tr[state (Pi_a x Pi_b)]`` with unnormalized single-scatter elements (r_e^4/sr^2)."""
    rho = _as_matrix(state)
    mats = []
    for theta, phi in ((theta_a, phi_a), (theta_b, phi_b)):
        a, b = alpha_beta(e0, theta)
        off = b * np.exp(2j * phi)
        mats.append(a * np.array([[1.0, np.conj(off)], [off, 1.0]]))
    return float(np.trace(rho @ np.kron(mats[0], mats[1])).real)


@dataclass(frozen=True)
class RRatioResult:
    ratio: float
    theta_a: float
    theta_b: float
    delta_phi: float


def _ratio(state, e0, ta, tb, dphi):
    return pair_cross_section(state, e0, ta, tb, 0.0, dphi) / pair_cross_section(
        state, e0, ta, tb, 0.0, 0.0
    )


def single_scatter_optimum(e0=1.0):
    """Polar angle of maximum single-scatter analyzing power at ``e0``."""
    res = minimize_scalar(
        lambda t: -alpha_beta(e0, t)[1],
        bounds=(1e-4, np.pi - 1e-4),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x)


def r_ratio(state, e0=1.0, thetas=None):
    """Perpendicular-to-parallel coincidence ratio R.

    Maximized over both polar angles (bounded local search warm-started at
    the single-scatter optimum) and over the sign of the 90 degree azimuth
    offset. Passing ``thetas=(theta_a, theta_b)`` evaluates a fixed
    detector geometry instead.
    """
    lo, hi = 1e-4, np.pi - 1e-4
    best = None
    for dphi in (0.5 * np.pi, -0.5 * np.pi):
        if thetas is not None:
            ta, tb = (float(t) for t in thetas)
            val = _ratio(state, e0, ta, tb, dphi)
        else:
            t0 = single_scatter_optimum(e0)
            res = minimize(
                lambda x: -_ratio(state, e0, x[0], x[1], dphi),
                np.array([t0, t0]),
                method="L-BFGS-B",
                bounds=[(lo, hi), (lo, hi)],
                options={"ftol": 1e-15, "gtol": 1e-12},
            )
            ta, tb = (float(t) for t in res.x)
            val = -float(res.fun)
        if best is None or val > best.ratio:
            best = RRatioResult(val, ta, tb, dphi)
    return best


__all__ = [
    "BellSettings",
    "BipartiteState",
    "FilteredPair",
    "LHV_BOUND",
    "RRatioResult",
    "TSIRELSON",
    "bell_test_angles",
    "chsh",
    "chsh_closed_form",
    "chsh_scan",
    "expectation",
    "joint_probabilities",
    "joint_probability",
    "max_chsh",
    "pair_cross_section",
    "phi_minus_expectation",
    "phi_minus_joint_probability",
    "r_ratio",
    "single_scatter_optimum",
    "standard_states",
    "violation_threshold",
]
