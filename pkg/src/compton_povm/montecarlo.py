"""Seeded Monte Carlo: Bell outcome tallies, scattering trajectories, rate arithmetic.

Every stream is a Philox generator keyed by ``SeedSequence(seed, spawn_key=...)``
so that sub-streams (one per Bell setting, say) do not depend on the order in
which they are consumed.
"""
from dataclasses import dataclass

import numpy as np

from .bell import BellSettings, joint_probabilities
from .kinematics import alpha_beta, check_energy, klein_nishina_total
from .povm import filtered_pair_from_beta

ENVELOPE_MARGIN = 1.05


def generator(seed, *key):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key)))


@dataclass(frozen=True)
class OutcomeCounts:
    n_pp: int
    n_pm: int
    n_mp: int
    n_mm: int

    @property
    def total(self):
        return self.n_pp + self.n_pm + self.n_mp + self.n_mm

    def as_dict(self):
        return {"n_pp": self.n_pp, "n_pm": self.n_pm, "n_mp": self.n_mp, "n_mm": self.n_mm}


def sample_outcomes(state, beta, phi_a, phi_b, n_pairs, seed, beta_b=None, stream=0):
    """Multinomial draw of ``n_pairs`` coincidences from the analytic joint probabilities."""
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    beta_b = beta if beta_b is None else beta_b
    p = joint_probabilities(
        state, filtered_pair_from_beta(beta, phi_a), filtered_pair_from_beta(beta_b, phi_b)
    ).ravel()
    p[np.abs(p) < 1e-15] = 0.0
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    counts = generator(seed, stream).multinomial(int(n_pairs), p)
    return OutcomeCounts(*(int(c) for c in counts))


def empirical_expectation(counts):
    """Correlation estimate and its standard error ``sqrt((1 - E^2) / total)``."""
    total = counts.total
    if total <= 0:
        raise ValueError("no coincidences recorded")
    e = (counts.n_pp + counts.n_mm - counts.n_pm - counts.n_mp) / total
    return e, float(np.sqrt(max(1.0 - e * e, 0.0) / total))


@dataclass(frozen=True)
class ChshEstimate:
    value: float
    standard_error: float
    expectations: tuple
    errors: tuple
    counts: tuple

    def z_score(self, bound=2.0):
        if self.standard_error == 0.0:
            return np.inf if abs(self.value) > bound else 0.0
        return (abs(self.value) - bound) / self.standard_error


_CHSH_TERMS = (("phi_a", "phi_b", 1.0), ("phi_a", "phi_b_prime", -1.0),
               ("phi_a_prime", "phi_b", 1.0), ("phi_a_prime", "phi_b_prime", 1.0))


def empirical_chsh(state, beta, settings: BellSettings, n_pairs_per_setting, seed, beta_b=None):
    """CHSH from four independent tallies; setting ``k`` uses sub-stream ``k``."""
    es, ses, tallies = [], [], []
    value = 0.0
    var = 0.0
    for k, (a, b, sign) in enumerate(_CHSH_TERMS):
        c = sample_outcomes(state, beta, getattr(settings, a), getattr(settings, b),
                            n_pairs_per_setting, seed, beta_b=beta_b, stream=k)
        e, se = empirical_expectation(c)
        value += sign * e
        var += se * se
        es.append(e)
        ses.append(se)
        tallies.append(c)
    return ChshEstimate(value, float(np.sqrt(var)), tuple(es), tuple(ses), tuple(tallies))


@dataclass(frozen=True)
class TrajectorySample:
    """One sampled chain: ``scatters[j] = (theta_j, phi_j, E_j)`` with ``E_j`` after the scatter."""

    e0: float
    scatters: tuple
    weight: float


@dataclass(frozen=True)
class TrajectoryBatch:
    thetas: np.ndarray
    phis: np.ndarray
    energies: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return self.thetas.shape[0]

    def sample(self, i):
        scatters = tuple(
            (float(t), float(p), float(e))
            for t, p, e in zip(self.thetas[i], self.phis[i], self.energies[i, 1:])
        )
        return TrajectorySample(float(self.energies[i, 0]), scatters, float(self.weights[i]))


def _envelope(e0):
    # alpha (1 + beta) peaks at theta = 0 where it equals 1 for every energy
    grid = np.linspace(0.0, np.pi, 721)
    a, b = alpha_beta(e0, grid)
    return ENVELOPE_MARGIN * float(np.max(a * (1.0 + b)))


def _scatter_stokes(stokes, e, c, phi):
    """Normalized Stokes vector after ``T(e, theta) M(phi)``; vectorized over rows."""
    c2, s2 = np.cos(2.0 * phi), np.sin(2.0 * phi)
    x1 = c2 * stokes[:, 1] + s2 * stokes[:, 2]
    x2 = -s2 * stokes[:, 1] + c2 * stokes[:, 2]
    ep = e / (1.0 + e * (1.0 - c))
    de = (e - ep) * (1.0 - c)
    t11 = 1.0 + c * c + de
    t12 = 1.0 - c * c
    out = np.empty_like(stokes)
    out[:, 0] = t11 * stokes[:, 0] + t12 * x1
    out[:, 1] = t12 * stokes[:, 0] + (2.0 - t12) * x1
    out[:, 2] = 2.0 * c * x2
    out[:, 3] = (2.0 * c + de * c) * stokes[:, 3]
    return out / out[:, :1], ep


def sample_trajectories(e0, n_scatters, n_samples, seed, stokes=None):
    """Sequential rejection sampling of Klein-Nishina scatters.

    Each scatter is drawn from the polarized density at the current energy
    and polarization (uniform-on-sphere proposal). The weight is the product
    of the per-step total cross sections, so its mean estimates sigma_tot(N).
    """
    check_energy(e0)
    if n_scatters < 1:
        raise ValueError("n_scatters must be >= 1")
    rng = generator(seed)
    m = int(n_samples)
    s = np.tile(np.array([1.0, 0.0, 0.0, 0.0]) if stokes is None else np.asarray(stokes, float), (m, 1))
    if np.any(np.abs(s[:, 0] - 1.0) > 1e-12):
        raise ValueError("initial Stokes vector must be normalized")
    env = _envelope(e0)
    energies = np.empty((m, n_scatters + 1))
    energies[:, 0] = e0
    thetas = np.empty((m, n_scatters))
    phis = np.empty((m, n_scatters))
    weights = np.ones(m)
    for j in range(n_scatters):
        e = energies[:, j]
        weights *= klein_nishina_total(e)
        cos_t = np.empty(m)
        phi = np.empty(m)
        pending = np.arange(m)
        while pending.size:
            k = pending.size
            c = rng.uniform(-1.0, 1.0, k)
            p = rng.uniform(0.0, 2.0 * np.pi, k)
            u = rng.uniform(0.0, env, k)
            a, b = alpha_beta(e[pending], np.arccos(c))
            dens = a * (1.0 + b * (s[pending, 1] * np.cos(2 * p) + s[pending, 2] * np.sin(2 * p)))
            if np.any(dens > env):
                raise RuntimeError("rejection envelope violated")
            ok = u < dens
            cos_t[pending[ok]] = c[ok]
            phi[pending[ok]] = p[ok]
            pending = pending[~ok]
        thetas[:, j] = np.arccos(cos_t)
        phis[:, j] = phi
        s, energies[:, j + 1] = _scatter_stokes(s, e, cos_t, phi)
    return TrajectoryBatch(thetas, phis, energies, weights)


def sample_trajectory(e0, n_scatters, seed, stokes=None):
    return sample_trajectories(e0, n_scatters, 1, seed, stokes).sample(0)


def double_arm_rate(c1):
    """Both photons pass the per-photon selection: ``C1**2``."""
    if not 0.0 < c1 < 1.0:
        raise ValueError("per-photon acceptance must lie in (0, 1)")
    return c1 * c1


def coincidence_rate_estimate(c1, cone_half_angle):
    """Coincidences per source decay: ``C1**2 * (1 - cos(cone))``.

    This is a reconstruction of the rate arithmetic (both-arm acceptance
    times the solid-angle fraction of a cone around the axis), not a
    detector simulation.
    """
    if not 0.0 < cone_half_angle < 0.5 * np.pi:
        raise ValueError("cone half-angle must lie in (0, pi/2)")
    return double_arm_rate(c1) * (1.0 - np.cos(cone_half_angle))
