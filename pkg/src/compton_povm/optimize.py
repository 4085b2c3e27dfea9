"""Maximize the co-planar analyzing power beta over the polar angles of a chain."""
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .chain import coplanar_beta_batch
from .kinematics import check_energy

LOWER = 1e-4
UPPER = np.pi - 1e-4
FD_STEP = 1e-5
GRADIENT_TOL = 1e-5
SIMPLEX_MAX_N = 4
JITTER = 0.05
WARM_SHRINK = 0.8


class ConvergenceError(RuntimeError):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True)
class OptimizationConfig:
    n: int
    e0: float = 1.0
    tolerance: float = 1e-8
    max_evals: int = 200_000
    restarts: int = 4
    seed: int = 0
    warm_start: Optional[tuple] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"chain length must be a positive integer, got {self.n}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        check_energy(self.e0)
        if self.warm_start is not None and len(self.warm_start) != self.n:
            raise ValueError("warm_start must have one angle per scatter")


@dataclass(frozen=True)
class OptimumRecord:
    n: int
    e0: float
    thetas_opt: tuple
    beta_opt: float
    e_final: float
    gradient_norm: float = field(default=0.0, compare=False)

    @classmethod
    def from_thetas(cls, e0, thetas, gradient_norm=0.0):
        thetas = np.asarray(thetas, dtype=float)
        beta, _, e_final = coplanar_beta_batch(e0, thetas[None, :])
        return cls(len(thetas), float(e0), tuple(float(t) for t in thetas), float(beta[0]),
                   float(e_final[0]), float(gradient_norm))

    @property
    def max_abs_S(self):
        return 2.0 * np.sqrt(2.0) * self.beta_opt**2

    @property
    def fidelity(self):
        return 0.5 * (1.0 + self.beta_opt)

    @property
    def trace_distance(self):
        return 0.5 * (1.0 - self.beta_opt)

    def as_row(self):
        return {
            "N": self.n,
            "thetas": list(self.thetas_opt),
            "beta": self.beta_opt,
            "max_abs_S": self.max_abs_S,
            "F": self.fidelity,
            "D": self.trace_distance,
            "E_N": self.e_final,
        }


def beta_gradient(e0, thetas, step=FD_STEP):
    """Central-difference gradient of beta in theta (one batched kernel call)."""
    thetas = np.asarray(thetas, dtype=float)
    n = thetas.size
    probes = np.repeat(thetas[None, :], 2 * n, axis=0)
    idx = np.arange(n)
    probes[2 * idx, idx] += step
    probes[2 * idx + 1, idx] -= step
    beta, _, _ = coplanar_beta_batch(e0, np.clip(probes, 0.0, np.pi))
    return (beta[0::2] - beta[1::2]) / (2.0 * step)


def _to_box(u):
    return LOWER + (UPPER - LOWER) / (1.0 + np.exp(-u))


def _from_box(theta):
    s = (np.clip(theta, LOWER + 1e-12, UPPER - 1e-12) - LOWER) / (UPPER - LOWER)
    return np.log(s / (1.0 - s))


def _neg_beta(e0):
    def f(thetas):
        beta, _, _ = coplanar_beta_batch(e0, np.asarray(thetas, dtype=float)[None, :])
        return -float(beta[0])

    return f


def _quasi_newton(e0, x0, max_evals):
    f = _neg_beta(e0)

    def fun(u):
        return f(_to_box(u))

    def jac(u):
        theta = _to_box(u)
        s = (theta - LOWER) / (UPPER - LOWER)
        return -beta_gradient(e0, theta) * (UPPER - LOWER) * s * (1.0 - s)

    res = minimize(fun, _from_box(np.asarray(x0)), jac=jac, method="BFGS",
                   options={"gtol": 1e-11, "maxiter": max_evals})
    return _to_box(res.x)


def _simplex(e0, x0, max_evals):
    n = len(x0)
    res = minimize(_neg_beta(e0), np.asarray(x0, dtype=float), method="Nelder-Mead",
                   bounds=[(LOWER, UPPER)] * n,
                   options={"xatol": 1e-11, "fatol": 1e-15, "maxfev": max_evals,
                            "adaptive": n > 2})
    return res.x


def _local_solve(e0, x0, max_evals):
    n = len(x0)
    x = _simplex(e0, x0, max_evals) if n <= SIMPLEX_MAX_N else _quasi_newton(e0, x0, max_evals)
    grad = np.max(np.abs(beta_gradient(e0, x)))
    if grad >= GRADIENT_TOL:
        x = _quasi_newton(e0, x, max_evals)
        grad = np.max(np.abs(beta_gradient(e0, x)))
    return x, grad


def _grid_start(e0, points=2048):
    grid = np.linspace(LOWER, UPPER, points)
    beta, _, _ = coplanar_beta_batch(e0, grid[:, None])
    return np.array([grid[np.argmax(beta)]])


def warm_start_from(previous):
    """Prepend a smaller first angle to an (N-1)-scatter optimum."""
    previous = tuple(previous)
    return (WARM_SHRINK * previous[0],) + previous


def _default_start(config):
    if config.warm_start is not None:
        return np.asarray(config.warm_start, dtype=float)
    if config.n == 1:
        return _grid_start(config.e0)
    prev = optimize_beta(OptimizationConfig(config.n - 1, config.e0, config.tolerance,
                                            config.max_evals, 0, config.seed))
    return np.asarray(warm_start_from(prev.thetas_opt))


def _pick(candidates, tolerance):
    best_beta = max(c.beta_opt for c in candidates)
    close = [c for c in candidates if best_beta - c.beta_opt <= tolerance]
    return min(close, key=lambda c: c.thetas_opt)


def optimize_beta(config):
    """Local maximum of beta(thetas) for an N-scatter co-planar chain.

    The start is a grid scan for N = 1 and a warm start from the N-1 optimum
    otherwise; ``config.restarts`` jittered copies are solved as well and the
    best (lexicographically smallest on ties) is returned.

    Raises
    ------
    ConvergenceError
        If no start reaches a central-difference gradient below 1e-5.
    """
    x0 = _default_start(config)
    starts = [x0]
    for child in np.random.SeedSequence(config.seed).spawn(config.restarts):
        rng = np.random.default_rng(child)
        starts.append(np.clip(x0 + rng.normal(0.0, JITTER, x0.size), LOWER, UPPER))
    converged = []
    best_effort = None
    for start in starts:
        x, grad = _local_solve(config.e0, start, config.max_evals)
        rec = OptimumRecord.from_thetas(config.e0, x, grad)
        if best_effort is None or rec.beta_opt > best_effort.beta_opt:
            best_effort = rec
        if grad < GRADIENT_TOL:
            converged.append(rec)
    if not converged:
        raise ConvergenceError(
            f"beta optimization for N={config.n} did not converge", best=best_effort
        )
    return _pick(converged, config.tolerance)


def optimum_table(n_max, e0=1.0, restarts=4, seed=0):
    """Optimal chains for N = 1..n_max, each warm-started from the previous row."""
    if int(n_max) != n_max or n_max < 1:
        raise ValueError(f"n_max must be a positive integer, got {n_max}")
    rows = []
    prev = None
    for n in range(1, int(n_max) + 1):
        ws = None if prev is None else warm_start_from(prev.thetas_opt)
        rec = optimize_beta(OptimizationConfig(n, e0, restarts=restarts, seed=seed, warm_start=ws))
        if prev is not None and rec.beta_opt <= prev.beta_opt:
            raise ConvergenceError(f"beta did not increase from N={n - 1} to N={n}", best=rec)
        if np.any(np.diff(rec.thetas_opt) <= 0):
            warnings.warn(f"optimal angles for N={n} are not increasing along the chain")
        rows.append(rec)
        prev = rec
    return rows
