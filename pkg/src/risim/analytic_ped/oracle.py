"""Numerical reference for the greedy-detector error probability.

Integration by parts gives

    P(X < max Y) = int_0^inf F_X(y) d[F_Y(y)^L],

so only the CDF of the target statistic is needed. It is recovered from
the closed-form Laplace transform by Fourier-series inversion on a
shifted Bromwich line with Euler summation of the alternating tail
(Abate and Whitt); the competitor CDF is a first-order Marcum Q.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy import special

from ..errors import ConvergenceError
from ..specfun import QuadratureSpec, integrate, marcum_p1

__all__ = ["target_cdf", "oracle_error_probability"]

# Aliasing error of the inversion is about exp(-_SHIFT).
_SHIFT = 23.0
_EULER_M = 20
_EXTRA = 12
_INV_TOL = 1e-9


def _laplace_cdf(s: np.ndarray, blocks) -> np.ndarray:
    out = 1.0 / s
    for m2, v in blocks:
        d = 1.0 + 2.0 * v * s
        out = out * np.exp(-s * m2 / d) / np.sqrt(d)
    return out


def _moments(blocks):
    mean = sum(m2 + v for m2, v in blocks)
    var = sum(2 * v * v + 4 * m2 * v for m2, v in blocks)
    return mean, math.sqrt(var)


def _euler(x: np.ndarray, blocks, n_terms: int) -> np.ndarray:
    k = np.arange(n_terms + _EULER_M + 1)
    s = (_SHIFT + 2j * math.pi * k[None, :]) / (2.0 * x[:, None])
    re = np.real(_laplace_cdf(s, blocks))
    re[:, 0] *= 0.5
    sign = np.where(k % 2 == 0, 1.0, -1.0)
    partial = np.cumsum(re * sign[None, :], axis=1)[:, n_terms:]
    binom = special.comb(_EULER_M, np.arange(_EULER_M + 1)) / 2.0 ** _EULER_M
    return math.exp(_SHIFT / 2.0) / x * (partial @ binom)


def target_cdf(x, blocks: Sequence[tuple[float, float]]) -> np.ndarray:
    """CDF of a sum of squared independent Gaussians.

    Parameters
    ----------
    x : array_like
        Evaluation points.
    blocks : sequence of (float, float)
        (squared mean, variance) of each real Gaussian component. Zero
        variances are allowed as long as some component has a positive
        variance.

    Raises
    ------
    ConvergenceError
        If the Euler-summed inversion does not settle to ``1e-9``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    pos = x > 0
    if not np.any(pos):
        return out
    xp = x[pos]
    _, sd = _moments(blocks)
    sd = max(sd, 1e-300)
    n = int(math.ceil(8.0 * float(xp.max()) / (math.pi * sd))) + 20
    for _ in range(5):
        f1 = _euler(xp, blocks, n)
        f2 = _euler(xp, blocks, n + _EXTRA)
        err = float(np.max(np.abs(f1 - f2)))
        if err <= _INV_TOL:
            out[pos] = np.clip(f2, 0.0, 1.0)
            return out
        n *= 2
    raise ConvergenceError("Laplace inversion of the target CDF did not converge",
                           estimate=float(np.mean(f2)), residual=err)


def oracle_error_probability(lam: float, blocks: Sequence[tuple[float, float]], n_comp: int,
                             quad: QuadratureSpec | None = None) -> tuple[float, float]:
    """``P(X < max of n_comp competitors)`` by numerical integration.

    Competitors are ``|CN(sqrt(lam), 1)|^2``. Returns the value and an
    absolute error estimate.
    """
    quad = quad or QuadratureSpec(abs_tol=1e-12, rel_tol=1e-9)
    a = math.sqrt(2.0 * lam)
    root = math.sqrt(lam)

    def integrand(y):
        y = np.asarray(y, dtype=float)
        fy = np.exp(-(np.sqrt(y) - root) ** 2) * special.i0e(2.0 * root * np.sqrt(y))
        out = target_cdf(y, blocks) * fy
        if n_comp > 1:
            out = out * n_comp * marcum_p1(a, np.sqrt(2.0 * y)) ** (n_comp - 1)
        return out

    y_hi = (root + 7.0 + math.sqrt(math.log(n_comp + 1.0))) ** 2
    val = integrate(integrand, 0.0, y_hi, quad)
    # Remaining mass beyond y_hi is below n_comp * exp(-49).
    return min(1.0, max(0.0, val)), 1e-9
