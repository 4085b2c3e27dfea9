"""Sequential Compton scattering chains in the Stokes-Mueller picture."""
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .kinematics import (
    AZIMUTH_AVERAGE,
    check_energy,
    check_polar,
    rotation_matrix,
    scattered_energy,
    single_total_cross_section,
    transition_matrix,
)

DETECTOR = np.array([1.0, 0.0, 0.0, 0.0])

QUADRATURE_MAX_N = 5


@dataclass(frozen=True)
class ScatterChainSpec:
    """An N-scatter trajectory.

    ``phis=None`` is the co-planar convention: every azimuth is zero, so the
    first-scatter rotation is left to the caller (see ``coplanar``).
    """

    e0: float
    thetas: tuple
    phis: Optional[tuple] = None

    def __post_init__(self):
        check_energy(self.e0)
        thetas = tuple(float(t) for t in np.atleast_1d(self.thetas))
        if not thetas:
            raise ValueError("a scattering chain needs at least one scatter")
        check_polar(thetas)
        object.__setattr__(self, "thetas", thetas)
        if self.phis is not None:
            phis = tuple(float(p) for p in np.atleast_1d(self.phis))
            if len(phis) != len(thetas):
                raise ValueError("phis and thetas must have the same length")
            if any(not 0.0 <= p < 2.0 * np.pi for p in phis):
                raise ValueError("azimuthal angles must lie in [0, 2 pi)")
            object.__setattr__(self, "phis", phis)

    @classmethod
    def coplanar(cls, e0, thetas, phi=0.0):
        thetas = tuple(np.atleast_1d(thetas))
        return cls(e0, thetas, (float(np.mod(phi, 2 * np.pi)),) + (0.0,) * (len(thetas) - 1))

    @property
    def n(self):
        return len(self.thetas)

    @property
    def is_coplanar(self):
        return self.phis is None or all(p == 0.0 for p in self.phis[1:])

    @property
    def first_phi(self):
        return 0.0 if self.phis is None else self.phis[0]


@dataclass(frozen=True)
class ChainBlockSummary:
    alpha: float
    gamma: float
    delta: float
    epsilon: float
    f: float
    g: float
    energies: tuple = field(default_factory=tuple)

    @property
    def beta(self):
        return self.gamma / self.alpha

    @property
    def e_final(self):
        return self.energies[-1]


def propagate_energies(e0, thetas):
    energies = [float(e0)]
    for t in thetas:
        energies.append(float(scattered_energy(energies[-1], t)))
    return energies


def chain_mueller(spec):
    """Ordered product ``T_N M_N ... T_1 M_1`` with each T at its incoming energy."""
    phis = spec.phis if spec.phis is not None else (0.0,) * spec.n
    product = np.eye(4)
    e = spec.e0
    for theta, phi in zip(spec.thetas, phis):
        product = transition_matrix(e, theta) @ rotation_matrix(phi) @ product
        e = scattered_energy(e, theta)
    return product


def coplanar_summary(e0, thetas):
    """Block entries of ``T_N ... T_1`` for a co-planar chain."""
    thetas = tuple(np.atleast_1d(thetas))
    p = chain_mueller(ScatterChainSpec(e0, thetas))
    return ChainBlockSummary(
        alpha=p[0, 0],
        gamma=p[0, 1],
        delta=p[1, 0],
        epsilon=p[1, 1],
        f=p[2, 2],
        g=p[3, 3],
        energies=tuple(propagate_energies(e0, thetas)),
    )


def coplanar_beta_batch(e0, thetas):
    """Vectorized ``(beta, alpha, E_N)`` for a stack of co-planar chains, shape ``(m, N)``."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    check_polar(thetas)
    alpha, gamma, e_final = kernels.coplanar_coefficients(e0, thetas)
    return gamma / alpha, alpha, e_final


def coplanar_beta(e0, thetas):
    beta, _, _ = coplanar_beta_batch(e0, np.atleast_1d(thetas)[None, :])
    return float(beta[0])


def nfold_cross_section(spec, stokes):
    """``<I| T_N M_N ... T_1 M_1 |S>`` in r_e^(2N) per sr^N, for normalized ``stokes``."""
    s = np.asarray(stokes, dtype=float)
    if abs(s[0] - 1.0) > 1e-12:
        raise ValueError("nfold_cross_section needs a normalized Stokes vector (s0 == 1)")
    return float(DETECTOR @ chain_mueller(spec) @ s)


def _tensor_quadrature(n, e0, nodes):
    x, w = np.polynomial.legendre.leggauss(nodes)
    theta = 0.5 * np.pi * (x + 1.0)
    # 2 pi from the azimuth average, pi/2 from the interval map, sin from d Omega
    weights = 2.0 * np.pi * 0.5 * np.pi * w * np.sin(theta)
    return kernels.nested_total_cross_section(e0, n, np.cos(theta), weights)


def _nodes_for(n):
    return 64 if n <= 3 else 32


@dataclass(frozen=True)
class CrossSectionEstimate:
    n: int
    e0: float
    value: float
    error: float
    method: str


def total_cross_section_mc(n, e0=1.0, samples=10_000_000, seed=0, chunk=1_000_000):
    """Plain Monte Carlo over ``cos theta_j`` uniform; returns ``(value, standard_error)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    check_energy(e0)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        e = np.full(m, float(e0))
        weight = np.ones(m)
        for _ in range(n):
            c = rng.uniform(-1.0, 1.0, m)
            r = 1.0 / (1.0 + e * (1.0 - c))
            weight *= 4.0 * np.pi * 0.5 * r * r * (r + 1.0 / r - (1.0 - c * c))
            e = e * r
        total += float(np.sum(weight))
        total_sq += float(np.sum(weight * weight))
        done += m
    mean = total / samples
    var = max(total_sq / samples - mean * mean, 0.0)
    return mean, float(np.sqrt(var / samples))


_xsec_cache = {}
_xsec_lock = threading.Lock()


def total_cross_section_estimate(n, e0=1.0, mc_samples=10_000_000, seed=0):
    """Total N-fold cross section with an error estimate.

    Tensor Gauss-Legendre for ``n <= 5`` (error from a coarser grid),
    Monte Carlo above that (error is the standard error).
    """
    if int(n) != n or n < 1:
        raise ValueError(f"chain length must be a positive integer, got {n}")
    n = int(n)
    check_energy(e0)
    key = (n, float(e0))
    with _xsec_lock:
        if key in _xsec_cache:
            return _xsec_cache[key]
        if n == 1:
            value = single_total_cross_section(e0)
            coarse = _tensor_quadrature(1, e0, 48)
            est = CrossSectionEstimate(n, float(e0), value, abs(value - coarse), "quadrature")
        elif n <= QUADRATURE_MAX_N:
            nodes = _nodes_for(n)
            value = _tensor_quadrature(n, e0, nodes)
            coarse = _tensor_quadrature(n, e0, (3 * nodes) // 4)
            est = CrossSectionEstimate(n, float(e0), value, abs(value - coarse), "quadrature")
        else:
            value, se = total_cross_section_mc(n, e0, samples=mc_samples, seed=seed)
            est = CrossSectionEstimate(n, float(e0), value, se, "montecarlo")
        _xsec_cache[key] = est
        return est


def total_cross_section(n, e0=1.0):
    """Total N-fold cross section sigma_tot(N) in units of r_e^(2N)."""
    return total_cross_section_estimate(n, e0).value


def povm_normalizer(n, e0=1.0):
    """Return ``thetas -> alpha(thetas) / sigma_tot(N)``, the POVM prefactor."""
    sigma = total_cross_section(n, e0)

    def normalizer(thetas):
        thetas = np.atleast_1d(thetas)
        if thetas.shape[-1] != n:
            raise ValueError(f"expected {n} polar angles, got {thetas.shape[-1]}")
        _, alpha, _ = coplanar_beta_batch(e0, thetas.reshape(-1, n))
        out = alpha / sigma
        return float(out[0]) if thetas.ndim == 1 else out

    return normalizer


def azimuth_averaged_rotation(samples=256):
    """Quadrature of M(phi) over a full turn; equals ``2 pi * AZIMUTH_AVERAGE``."""
    phi = 2.0 * np.pi * np.arange(samples) / samples
    return sum(rotation_matrix(p) for p in phi) * (2.0 * np.pi / samples)


__all__ = [
    "AZIMUTH_AVERAGE",
    "ChainBlockSummary",
    "CrossSectionEstimate",
    "ScatterChainSpec",
    "chain_mueller",
    "coplanar_beta",
    "coplanar_beta_batch",
    "coplanar_summary",
    "nfold_cross_section",
    "povm_normalizer",
    "propagate_energies",
    "total_cross_section",
    "total_cross_section_estimate",
    "total_cross_section_mc",
]
