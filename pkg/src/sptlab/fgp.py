"""Functionally generated portfolios.

A positive C^2 function S on the simplex generates a portfolio whose weights
are a gradient expression in log S evaluated at the market weights, and whose
relative log-return decomposes as log S(mu) plus a finite-variation drift.
Derivatives may be supplied analytically or fall back to central finite
differences (gradient steps are taken tangent to the simplex, which leaves
the weight formula unchanged because it is invariant to constant shifts of
the gradient).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import EvaluationError, InvalidInputError
from .market import CovarianceEstimate, WeightVector

GRAD_STEP = 1e-6
HESS_STEP = 1e-4  # second differences need a larger step to beat roundoff


@dataclass
class GeneratingFunction:
    """A positive C^2 function on the open simplex with optional derivatives.

    ``grad_log`` returns (D_i log S(x)) and ``hessian`` returns (D_ij S(x));
    either may be None, in which case finite differences are used.
    """

    fn: Callable[[np.ndarray], float]
    grad_log: Callable[[np.ndarray], np.ndarray] | None = None
    hessian: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "custom"

    def __call__(self, x) -> float:
        v = float(self.fn(np.asarray(x, dtype=float)))
        if not np.isfinite(v) or v <= 0.0:
            raise EvaluationError(f"generating function {self.name!r} returned {v} (must be > 0)")
        return v

    def grad_log_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.grad_log is not None:
            g = np.asarray(self.grad_log(x), dtype=float)
        else:
            g = self._fd_grad_log(x)
        if not np.all(np.isfinite(g)):
            raise EvaluationError(f"non-finite gradient of log {self.name!r}")
        return g

    def hessian_at(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.hessian is not None:
            h = np.asarray(self.hessian(x), dtype=float)
        else:
            h = self._fd_hessian(x)
        if not np.all(np.isfinite(h)):
            raise EvaluationError(f"non-finite Hessian of {self.name!r}")
        return h

    def _fd_grad_log(self, x: np.ndarray) -> np.ndarray:
        n = x.size
        h = GRAD_STEP
        g = np.empty(n)
        for i in range(n):
            d = -np.full(n, 1.0 / n)
            d[i] += 1.0  # direction e_i - 1/n, tangent to the simplex
            g[i] = (np.log(self(x + h * d)) - np.log(self(x - h * d))) / (2.0 * h)
        return g

    def _fd_hessian(self, x: np.ndarray) -> np.ndarray:
        n = x.size
        h = HESS_STEP
        out = np.empty((n, n))
        f0 = self.fn(x)
        for i in range(n):
            ei = np.zeros(n)
            ei[i] = h
            out[i, i] = (self.fn(x + ei) - 2.0 * f0 + self.fn(x - ei)) / h**2
            for j in range(i + 1, n):
                ej = np.zeros(n)
                ej[j] = h
                out[i, j] = out[j, i] = (
                    self.fn(x + ei + ej) - self.fn(x + ei - ej)
                    - self.fn(x - ei + ej) + self.fn(x - ei - ej)
                ) / (4.0 * h**2)
        return out


def constant_generator() -> GeneratingFunction:
    """S(x) = 1; generates the market portfolio with zero drift."""
    return GeneratingFunction(
        fn=lambda x: 1.0,
        grad_log=lambda x: np.zeros(x.size),
        hessian=lambda x: np.zeros((x.size, x.size)),
        name="constant",
    )


def swap_generator(i: int, j: int) -> GeneratingFunction:
    """S(x) = x_i x_j / (x_i + x_j); generates the swap portfolio of i and j."""
    if i == j:
        raise InvalidInputError("swap generator requires distinct indices")

    def fn(x):
        return x[i] * x[j] / (x[i] + x[j])

    def grad_log(x):
        g = np.zeros(x.size)
        s = x[i] + x[j]
        g[i] = 1.0 / x[i] - 1.0 / s
        g[j] = 1.0 / x[j] - 1.0 / s
        return g

    def hessian(x):
        h = np.zeros((x.size, x.size))
        s = x[i] + x[j]
        h[i, i] = -2.0 * x[j] ** 2 / s**3
        h[j, j] = -2.0 * x[i] ** 2 / s**3
        h[i, j] = h[j, i] = 2.0 * x[i] * x[j] / s**3
        return h

    return GeneratingFunction(fn, grad_log, hessian, name=f"swap({i},{j})")


def geometric_mean_generator() -> GeneratingFunction:
    """S(x) = (x_1 ... x_n)^{1/n}; generates the equal-weighted portfolio."""

    def fn(x):
        return float(np.exp(np.mean(np.log(x))))

    def grad_log(x):
        return 1.0 / (x.size * x)

    def hessian(x):
        n = x.size
        s = fn(x)
        h = s / (n**2 * np.outer(x, x))
        h[np.diag_indices(n)] = s * (1.0 - n) / (n**2 * x**2)
        return h

    return GeneratingFunction(fn, grad_log, hessian, name="geometric-mean")


BUILTIN_GENERATORS = {
    "constant": constant_generator,
    "swap": swap_generator,
    "geometric-mean": geometric_mean_generator,
}


def fgp_weights(S: GeneratingFunction, mu) -> WeightVector:
    """Weights of the portfolio generated by S at market weights mu."""
    m = np.asarray(mu, dtype=float)
    if np.any(m <= 0.0):
        raise InvalidInputError("market weights must be strictly positive")
    g = S.grad_log_at(m)
    pi = (g + 1.0 - float(m @ g)) * m
    total = pi.sum()
    if abs(total - 1.0) > 1e-8:
        raise EvaluationError(f"generated weights sum to {total}, expected 1")
    return WeightVector(pi / total)


def fgp_drift_increment(S: GeneratingFunction, mu, tau: CovarianceEstimate,
                        dt: float) -> float:
    """One drift-process increment: -1/(2S) sum_ij D_ij S mu_i mu_j tau_ij dt."""
    m = np.asarray(mu, dtype=float)
    if tau.n != m.size:
        raise InvalidInputError("covariance dimension does not match weights")
    if dt <= 0:
        raise InvalidInputError("dt must be positive")
    h = S.hessian_at(m)
    quad = float(m @ (h * tau.sigma) @ m)
    return -quad / (2.0 * S(m)) * dt


def swap_drift_increment(mu, i: int, j: int, tau: CovarianceEstimate,
                         dt: float) -> float:
    """Closed-form drift increment of the swap portfolio of assets i and j.

    Equals twice the excess growth rate of the passive two-asset
    sub-portfolio times dt; nonnegative whenever tau is PSD.
    """
    m = np.asarray(mu, dtype=float)
    if i == j:
        raise InvalidInputError("swap requires distinct assets")
    if tau.n != m.size:
        raise InvalidInputError("covariance dimension does not match weights")
    t = tau.sigma
    s = m[i] + m[j]
    return m[i] * m[j] / s**2 * (t[i, i] - 2.0 * t[i, j] + t[j, j]) * dt


@dataclass
class DriftAccumulator:
    """Running value of the drift process Theta and elapsed time."""

    theta: float = 0.0
    t: float = 0.0

    def add(self, increment: float, dt: float) -> None:
        self.theta += increment
        self.t += dt
