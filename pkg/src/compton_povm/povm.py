"""POVM elements of N-scatter Compton polarimetry and their QI metrics."""
from dataclasses import dataclass

import numpy as np

from .chain import (
    ScatterChainSpec,
    coplanar_beta,
    nfold_cross_section,
    povm_normalizer,
    total_cross_section,
)
from .polarization import PAULI, hermitize

DENSITY = "density"
NORMALIZED = "normalized"

PSD_TOL = 1e-12


@dataclass(frozen=True)
class PovmElement:
    """2x2 POVM element in the {|R>, |L>} basis.

    ``scale`` is ``"density"`` for unfiltered elements (per sr^N) or
    ``"normalized"`` for filtered, post-selected elements.
    """

    matrix: np.ndarray
    scale: str = NORMALIZED

    def __post_init__(self):
        if self.scale not in (DENSITY, NORMALIZED):
            raise ValueError(f"unknown POVM scale tag {self.scale!r}")
        m = hermitize(self.matrix)
        if m.shape != (2, 2):
            raise ValueError("POVM element must be 2x2")
        object.__setattr__(self, "matrix", m)
        if self.scale == NORMALIZED and abs(np.trace(m).real - 1.0) > 1e-12:
            raise ValueError("normalized POVM element must have unit trace")

    @property
    def beta(self):
        return 2.0 * abs(self.matrix[1, 0]) / np.trace(self.matrix).real

    @property
    def phi(self):
        return 0.5 * np.angle(self.matrix[1, 0])

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def probability(self, rho):
        return float(np.trace(np.asarray(rho) @ self.matrix).real)


@dataclass(frozen=True)
class FilteredPair:
    """Dichotomic filtered POVM; ``plus + minus`` is the identity by construction."""

    plus: PovmElement
    minus: PovmElement
    beta: float
    phi: float

    def element(self, outcome):
        return self.plus if _sign(outcome) > 0 else self.minus


def _sign(outcome):
    if outcome in (1, "+", "plus"):
        return 1
    if outcome in (-1, "-", "minus"):
        return -1
    raise ValueError(f"outcome must be +1/-1, got {outcome!r}")


def _polarimeter_matrix(beta, phi):
    off = beta * np.exp(2j * phi)
    return np.array([[1.0, np.conj(off)], [off, 1.0]])


def _coplanar_thetas(thetas, phi):
    thetas = tuple(np.atleast_1d(thetas))
    phis = np.atleast_1d(phi)
    if phis.size > 1:
        if phis.size != len(thetas):
            raise ValueError("phi sequence must match the number of scatters")
        if np.any(phis[1:] != 0.0):
            raise ValueError("only co-planar trajectories have a (beta, phi) POVM")
    return thetas, float(phis[0])


def unfiltered_povm(thetas, phi, e0=1.0):
    """Unfiltered POVM density ``N(thetas) [[1, b e^{-2i phi}], [b e^{2i phi}, 1]]``.

    ``phi`` is the first-scatter azimuth. A full azimuth sequence may be
    passed instead, provided every later entry is zero.
    """
    thetas, phi = _coplanar_thetas(thetas, phi)
    n = len(thetas)
    norm = povm_normalizer(n, e0)(thetas)
    beta = coplanar_beta(e0, thetas)
    return PovmElement(norm * _polarimeter_matrix(beta, phi), DENSITY)


def filter_povm(pi0, pi1, atol=1e-12):
    """Post-selection filtering of two POVM elements.

    Requires ``pi0 + pi1`` proportional to the identity; returns the pair
    rescaled by ``Tr[pi0 + pi1] / d``.
    """
    pi0 = np.asarray(pi0, dtype=complex)
    pi1 = np.asarray(pi1, dtype=complex)
    total = pi0 + pi1
    d = total.shape[0]
    scale = np.trace(total).real / d
    if np.max(np.abs(total - scale * np.eye(d))) > atol * max(scale, 1.0):
        raise ValueError("filtering needs Pi_0 + Pi_1 proportional to the identity")
    return pi0 / scale, pi1 / scale


def filtered_pair_from_beta(beta, phi):
    if not 0.0 <= beta <= 1.0 + 1e-12:
        raise ValueError(f"analyzing power must lie in [0, 1], got {beta}")
    off = 0.5 * beta * np.exp(2j * phi)
    plus = np.array([[0.5, np.conj(off)], [off, 0.5]])
    minus = np.array([[0.5, -np.conj(off)], [-off, 0.5]])
    return FilteredPair(PovmElement(plus), PovmElement(minus), float(beta), float(phi))


def filtered_pair(thetas, phi, e0=1.0):
    """Filtered pair for outcomes at azimuths ``phi`` (+) and ``phi + pi/2`` (-)."""
    thetas, phi = _coplanar_thetas(thetas, phi)
    plus = unfiltered_povm(thetas, phi, e0).matrix
    minus = unfiltered_povm(thetas, phi + 0.5 * np.pi, e0).matrix
    filter_povm(plus, minus, atol=1e-10)
    return filtered_pair_from_beta(coplanar_beta(e0, thetas), phi)


def povm_from_probes(thetas, phis, e0=1.0):
    """Reconstruct the POVM density of an arbitrary trajectory from probe states.

    The N-fold cross section is evaluated on (1,0,0,0) and (1, +-e_k); the
    Pauli coefficients of the element follow from sums and differences.
    """
    spec = ScatterChainSpec(e0, tuple(np.atleast_1d(thetas)), tuple(np.atleast_1d(phis)))
    sigma = total_cross_section(spec.n, e0)

    def density(s):
        return nfold_cross_section(spec, s) / sigma

    coeffs = [2.0 * density([1.0, 0.0, 0.0, 0.0])]
    for k in range(1, 4):
        probe = np.zeros(4)
        probe[0] = 1.0
        probe[k] = 1.0
        plus = density(probe)
        probe[k] = -1.0
        coeffs.append(plus - density(probe))
    matrix = 0.5 * sum(c * p for c, p in zip(coeffs, PAULI))
    return PovmElement(matrix, DENSITY)


def linear_basis_elements(beta):
    """Filtered elements closest to the H, V, A, D projectors."""
    hv = filtered_pair_from_beta(beta, 0.0)
    ad = filtered_pair_from_beta(beta, 0.25 * np.pi)
    return {"H": hv.plus, "V": hv.minus, "A": ad.plus, "D": ad.minus}


def _require_normalized(element):
    if element.scale != NORMALIZED:
        raise ValueError("metric is defined for normalized (filtered) POVM elements")


def fidelity_to_projector(element, target):
    """``<psi| Pi |psi>`` for a filtered element and a Bloch-sphere target."""
    _require_normalized(element)
    return 0.5 * (
        1.0 + element.beta * np.sin(target.theta) * np.cos(2.0 * (element.phi - target.phi))
    )


def trace_distance_to_projector(element, target):
    """``||Pi - |psi><psi| ||_1 / 2`` via its closed form."""
    _require_normalized(element)
    b = element.beta
    x = b * np.sin(target.theta) * np.cos(2.0 * (element.phi - target.phi))
    return 0.5 * np.sqrt(max(1.0 + b * b - 2.0 * x, 0.0))


def trace_distance(a, b):
    """Half the trace norm of ``a - b`` for Hermitian matrices."""
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(np.asarray(a) - np.asarray(b)))))


def qsd_success(pair, target):
    """Success probability for discriminating the target and its orthogonal partner."""
    psi_p = target.ket
    psi_m = target.orthogonal_ket()
    p_plus = np.vdot(psi_p, pair.plus.matrix @ psi_p).real
    p_minus = np.vdot(psi_m, pair.minus.matrix @ psi_m).real
    return 0.5 * (p_plus + p_minus)


def helstrom_distinguishability(pair):
    return trace_distance(pair.plus.matrix, pair.minus.matrix)


def helstrom_success(pair):
    return 0.5 * (1.0 + helstrom_distinguishability(pair))


def _state_matrix(state):
    m = np.asarray(getattr(state, "matrix", state), dtype=complex)
    if m.shape != (4, 4):
        raise ValueError("bipartite state must be 4x4")
    if abs(np.trace(m).real - 1.0) > 1e-10:
        raise ValueError("bipartite state must have unit trace")
    return m


def mub_witness_I2(state, beta_a, beta_b=None):
    """Two-MUB correlation witness with filtered POVMs on both arms.

    For each linear basis ({H,V} and {A,D}) sums the joint probabilities of
    the outcome pairing (matched or swapped) that maximizes the total, then
    adds the two bases. Separable states give values in [0.5, 1.5].
    """
    rho = _state_matrix(state)
    beta_b = beta_a if beta_b is None else beta_b
    ea = linear_basis_elements(beta_a)
    eb = linear_basis_elements(beta_b)
    total = 0.0
    for first, second in (("H", "V"), ("A", "D")):

        def p(x, y):
            return np.trace(rho @ np.kron(ea[x].matrix, eb[y].matrix)).real

        matched = p(first, first) + p(second, second)
        swapped = p(first, second) + p(second, first)
        total += max(matched, swapped)
    return float(total)
