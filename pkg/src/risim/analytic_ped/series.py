"""Double-series evaluation of the greedy-detector error probability.

For a target statistic ``X`` and ``L`` i.i.d. competitors
``Y ~ |CN(sqrt(lam), 1)|^2``,

    P(X < max Y) = 1 - exp(-L lam) * sum_alpha C_L(alpha) E[X^alpha],

where ``C_L`` is the ``L``-fold convolution of the per-competitor
coefficient

    g(n) = sum_{l + p + 1 = n} (-1)^p lam^l / (l!^2 p! n).

Grouping by ``alpha`` is grouping by total anti-diagonal ``sum(l + p)``.
The series is asymptotic rather than convergent once ``X`` has
appreciable spread, so partial sums are accelerated with Wynn's epsilon
algorithm in extended precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
from scipy import special

from ..combinatorics import PARTITION_CAP, enumerate_partitions, faa_di_bruno_weight
from ..errors import CapacityError, ConvergenceError, DomainError

__all__ = ["SeriesControl", "SeriesOutcome", "cumulant_coefficients", "raw_moments",
           "series_error_probability", "wynn_epsilon"]

_MP = mpmath.MPContext()
_MP.dps = 80
_SINGULAR = _MP.mpf(10) ** (-(_MP.dps - 10))
_RANGE_SLACK = 1e-6


@dataclass(frozen=True)
class SeriesControl:
    """Truncation and stopping controls for the double series.

    Attributes
    ----------
    ell_max, p_max : int
        Per-competitor caps on the two summation indices. The defaults
        keep every anti-diagonal up to ``alpha_cap`` complete.
    rel_tol : float
        Stopping tolerance, applied as ``rel_tol * max(1, |estimate|)``.
    alpha_cap : int
        Largest moment order used; at most the partition cap.
    """

    ell_max: int = 23
    p_max: int = 23
    rel_tol: float = 1e-8
    alpha_cap: int = 24

    def __post_init__(self):
        if self.ell_max < 0 or self.p_max < 0:
            raise DomainError("ell_max and p_max must be >= 0")
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if not 1 <= self.alpha_cap <= PARTITION_CAP:
            raise CapacityError(f"alpha_cap must lie in [1, {PARTITION_CAP}]")


@dataclass(frozen=True)
class SeriesOutcome:
    value: float
    residual: float
    clamped: bool
    accelerated: bool
    n_terms: int


def cumulant_coefficients(blocks: Sequence[tuple[float, float]], order: int, ctx=None):
    """Scaled cumulants ``h_r = kappa_r / r!`` of a sum of squared Gaussians.

    Each block ``(m2, v)`` is one real Gaussian with squared mean ``m2``
    and variance ``v``; its log-MGF contributes
    ``2^{r-1} (m2 v^{r-1} + v^r / r)`` to ``h_r``.
    """
    ctx = ctx or _MP
    out = []
    for r in range(1, order + 1):
        acc = ctx.mpf(0)
        for m2, v in blocks:
            m2, v = ctx.mpf(m2), ctx.mpf(v)
            acc += ctx.mpf(2) ** (r - 1) * (m2 * v ** (r - 1) + v ** r / r)
        out.append(acc)
    return out


def raw_moments(h: Sequence, order: int, cap: int = PARTITION_CAP):
    """Raw moments ``E[X^n]`` for ``n = 0..order`` from scaled cumulants."""
    moms = [1]
    for n in range(1, order + 1):
        acc = 0
        for p in enumerate_partitions(n, cap):
            acc = acc + faa_di_bruno_weight(p, h)
        moms.append(acc * math.factorial(n))
    return moms


def wynn_epsilon(seq: Sequence):
    """Wynn epsilon extrapolation of a sequence of partial sums.

    Returns the last entry of the highest even column. A zero difference
    means the current column is exactly constant, which is taken as
    convergence of that column.
    """
    prev = [0] * (len(seq) + 1)
    cur = list(seq)
    best = cur[-1]
    k = 0
    while len(cur) > 1:
        nxt = []
        for i in range(len(cur) - 1):
            d = cur[i + 1] - cur[i]
            if abs(d) <= _SINGULAR * (1 + abs(cur[i + 1])):
                return cur[i + 1] if k % 2 == 0 else best
            nxt.append(prev[i + 1] + 1 / d)
        prev, cur = cur, nxt
        k += 1
        if k % 2 == 0:
            best = cur[-1]
    return best


def _coefficients(lam, n_max: int, ctl: SeriesControl, printed: bool):
    g = [_MP.mpf(0)] * (n_max + 1)
    for n in range(1, n_max + 1):
        acc = _MP.mpf(0)
        for ell in range(0, min(n - 1, ctl.ell_max) + 1):
            p = n - 1 - ell
            if p > ctl.p_max:
                continue
            term = lam ** ell / (_MP.factorial(ell) ** 2 * _MP.factorial(p) * n)
            acc += -term if p % 2 else term
        g[n] = acc * _MP.factorial(n) if printed else acc
    return g


def _convolve_power(g, power: int, n_max: int):
    out = [_MP.mpf(0)] * (n_max + 1)
    out[0] = _MP.mpf(1)
    for _ in range(power):
        new = [_MP.mpf(0)] * (n_max + 1)
        for i, a in enumerate(out):
            if a == 0:
                continue
            for j in range(1, n_max + 1 - i):
                new[i + j] += a * g[j]
        out = new
    return out


def series_error_probability(lam: float, blocks: Sequence[tuple[float, float]], n_comp: int,
                             ctl: SeriesControl, *, printed: bool = False,
                             prefactor_lam: float | None = None) -> SeriesOutcome:
    """Evaluate ``P(X < max of n_comp competitors)`` by the double series.

    Parameters
    ----------
    lam : float
        Competitor non-centrality (unit-variance units).
    blocks : sequence of (float, float)
        Target components (squared mean, variance), same units.
    n_comp : int
        Number of competitors ``L >= 1``.
    ctl : SeriesControl
    printed : bool, optional
        Use the product-of-factorials coefficient form without the
        multinomial factor. It coincides with the default for ``L = 1``.
    prefactor_lam : float, optional
        Non-centrality used in the ``exp(-L lam)`` prefactor when it
        differs from the one in the coefficients.

    Returns
    -------
    SeriesOutcome

    Raises
    ------
    ConvergenceError
        If neither the raw partial sums nor their Wynn transform settle
        within ``alpha_cap`` terms, or the result leaves ``[0, 1]`` by
        more than ``1e-6``.
    """
    if n_comp < 1:
        raise DomainError("need at least one competitor")
    a_max = ctl.alpha_cap
    if n_comp > a_max:
        raise ConvergenceError(
            f"{n_comp} competitors need moment orders beyond alpha_cap={a_max}")
    # The competitor index l only reaches order a_max - n_comp; if the
    # Poisson(n_comp * lam) mass beyond it is not negligible the series
    # cannot represent exp(n_comp * lam) and is out of its envelope.
    outside = float(special.gammainc(a_max - n_comp + 1, n_comp * lam)) if lam > 0 else 0.0
    if outside > ctl.rel_tol:
        raise ConvergenceError(
            f"lam={lam:.4g} with {n_comp} competitors is outside the series envelope "
            f"for alpha_cap={a_max}", estimate=None, residual=outside)
    lam_m = _MP.mpf(lam)
    h = cumulant_coefficients(blocks, a_max)
    moms = raw_moments(h, a_max, cap=max(a_max, 1))
    g = _coefficients(lam_m, a_max, ctl, printed)
    conv = _convolve_power(g, n_comp, a_max)
    pref = _MP.exp(-n_comp * _MP.mpf(lam if prefactor_lam is None else prefactor_lam))

    incs, partial = [], []
    acc = _MP.mpf(0)
    for alpha in range(n_comp, a_max + 1):
        t = conv[alpha] * moms[alpha]
        if printed:
            t = t / _MP.factorial(alpha)
        incs.append(pref * t)
        acc += t
        partial.append(1 - pref * acc)

    tol = lambda v: ctl.rel_tol * max(1.0, abs(float(v)))  # noqa: E731
    n = len(partial)
    if n < 4:
        raise ConvergenceError("too few series terms for a stopping decision",
                               estimate=float(partial[-1]), residual=float("inf"))
    # Stopping rules are applied at the end of the computed range so that
    # a run of negligible leading terms cannot pass for convergence.
    if all(abs(incs[i]) <= tol(partial[-1]) for i in (-3, -2, -1)):
        return _finish(partial[-1], float(abs(incs[-1])), False, n)
    est = [wynn_epsilon(partial[: j + 1]) for j in range(n - 4, n)]
    diffs = [abs(est[i] - est[i - 1]) for i in (1, 2, 3)]
    if all(d <= tol(est[-1]) for d in diffs):
        return _finish(est[-1], float(max(diffs)), True, n)
    raise ConvergenceError(
        f"series did not converge within alpha_cap={a_max} (lam={float(lam):.4g})",
        estimate=float(est[-1]), residual=float(max(diffs)))


def _finish(value, residual: float, accelerated: bool, n_terms: int) -> SeriesOutcome:
    v = float(value)
    if not math.isfinite(v) or v < -_RANGE_SLACK or v > 1 + _RANGE_SLACK:
        raise ConvergenceError(f"series value {v!r} lies outside [0, 1]",
                               estimate=v, residual=residual)
    clamped = v < 0 or v > 1
    return SeriesOutcome(min(1.0, max(0.0, v)), residual, clamped, accelerated, n_terms)
