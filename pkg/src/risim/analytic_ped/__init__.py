"""Pairwise and greedy-detector index-error probabilities.

Three routes are offered for every quantity:

* the double series (:mod:`.series`), exact in principle but only
  numerically usable at moderate ``N * gamma_av``;
* the numerical oracle (:mod:`.oracle`), valid everywhere;
* closed-form limits for high, low and zero SNR.

Series calls fall back to the oracle (and say so in ``PedResult.method``)
when the series cannot be evaluated, unless ``fallback=False``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from ..combinatorics import PARTITION_CAP
from ..errors import ContractError, ConvergenceError
from ..model import CfParams, LinkProblem, SystemConfig, link_problem
from ..specfun import QuadratureSpec
from .oracle import oracle_error_probability, target_cdf
from .series import (SeriesControl, SeriesOutcome, cumulant_coefficients, raw_moments,
                     series_error_probability, wynn_epsilon)

__all__ = [
    "PedMethod",
    "Regime",
    "PedResult",
    "SeriesControl",
    "SERIES_GUARD",
    "moment_target",
    "ppead_ssk_series",
    "ped_ssk_series",
    "ppead_sm_series",
    "ped_sm_series",
    "ped_sm_avg",
    "ped_ssk_asymptotic",
    "ped_sm_asymptotic",
    "ppead_oracle",
    "ped_oracle",
    "target_cdf",
    "wynn_epsilon",
]

#: Above this value of ``N * gamma_av`` series calls go straight to the oracle.
SERIES_GUARD = 10.0


class PedMethod(str, Enum):
    SERIES = "series"
    ORACLE = "oracle"
    ASYMPTOTIC = "asymptotic"


class Regime(str, Enum):
    HIGH_SNR = "high"
    LOW_SNR = "low"
    ZERO_SNR = "zero"


@dataclass(frozen=True)
class PedResult:
    """Probability with provenance.

    Attributes
    ----------
    value : float
        Probability in ``[0, 1]``.
    method : PedMethod
        Route that produced ``value``.
    truncation_residual : float
        Error estimate of that route.
    clamped : bool
        ``value`` was pulled back into ``[0, 1]`` from at most ``1e-6``
        outside.
    regime : Regime or None
        Limit evaluated, for asymptotic results.
    via_oracle : bool
        An asymptotic limit was evaluated numerically because its series
        did not converge.
    """

    value: float
    method: PedMethod
    truncation_residual: float
    clamped: bool = False
    regime: Regime | None = None
    via_oracle: bool = False


def moment_target(params: CfParams, order: int, cap: int = PARTITION_CAP) -> float:
    """Raw moment ``E[X^order]`` of the target statistic (natural units).

    Computed from the scaled cumulants through the partition sum.
    """
    if params.c == math.inf:
        raise ContractError("moments diverge at zero SNR in natural units")
    h = cumulant_coefficients(params.blocks, order)
    return float(raw_moments(h, order, cap)[order])


def _oracle(prob: LinkProblem, n_comp: int, quad=None) -> PedResult:
    val, err = oracle_error_probability(prob.lam, prob.blocks, n_comp, quad)
    return PedResult(val, PedMethod.ORACLE, err)


def _series(prob: LinkProblem, n_comp: int, cfg: SystemConfig, ctl, fallback: bool,
            printed: bool) -> PedResult:
    ctl = ctl or SeriesControl()
    if fallback and cfg.n_elements * cfg.gamma_av > SERIES_GUARD:
        return _oracle(prob, n_comp)
    try:
        out = series_error_probability(prob.lam, prob.blocks, n_comp, ctl, printed=printed)
    except ConvergenceError:
        if not fallback:
            raise
        return _oracle(prob, n_comp)
    return PedResult(out.value, PedMethod.SERIES, out.residual, out.clamped)


def ppead_ssk_series(cfg: SystemConfig, ctl: SeriesControl | None = None, *,
                     fallback: bool = True) -> PedResult:
    """Pairwise index-error probability for SSK by the double series.

    Parameters
    ----------
    cfg : SystemConfig
        SSK configuration.
    ctl : SeriesControl, optional
    fallback : bool, optional
        Route to the oracle when ``N * gamma_av`` exceeds
        :data:`SERIES_GUARD` or the series fails to converge.

    Raises
    ------
    ConvergenceError
        Only when ``fallback`` is false.
    """
    return _series(link_problem(cfg), 1, cfg, ctl, fallback, False)


def ped_ssk_series(cfg: SystemConfig, ctl: SeriesControl | None = None, *,
                   fallback: bool = True, printed: bool = False) -> PedResult:
    """Greedy-detector index-error probability for SSK by the double series.

    ``printed=True`` uses the coefficient form without the multinomial
    weight, which is only correct for ``n_rx = 2``.
    """
    return _series(link_problem(cfg), cfg.n_rx - 1, cfg, ctl, fallback, printed)


def _sm_problem(cfg: SystemConfig, symbol) -> LinkProblem:
    if cfg.constellation is None:
        raise ContractError("SM routine called with an SSK configuration")
    return link_problem(cfg, symbol)


def ppead_sm_series(cfg: SystemConfig, symbol: complex, ctl: SeriesControl | None = None, *,
                    fallback: bool = True) -> PedResult:
    """Pairwise index-error probability for SM given the transmitted symbol."""
    return _series(_sm_problem(cfg, symbol), 1, cfg, ctl, fallback, False)


def ped_sm_series(cfg: SystemConfig, symbol: complex, ctl: SeriesControl | None = None, *,
                  fallback: bool = True, printed: bool = False) -> PedResult:
    """Greedy-detector index-error probability for SM given the symbol."""
    return _series(_sm_problem(cfg, symbol), cfg.n_rx - 1, cfg, ctl, fallback, printed)


def _average(results: list[PedResult]) -> PedResult:
    methods = {r.method for r in results}
    method = methods.pop() if len(methods) == 1 else PedMethod.ORACLE
    return PedResult(math.fsum(r.value for r in results) / len(results), method,
                     max(r.truncation_residual for r in results),
                     any(r.clamped for r in results))


def ped_sm_avg(cfg: SystemConfig, ctl: SeriesControl | None = None, *,
               fallback: bool = True, pairwise: bool = False) -> PedResult:
    """Symbol-averaged SM index-error probability (uniform priors).

    ``method`` is SERIES only if every symbol was evaluated by the series.
    """
    fn = ppead_sm_series if pairwise else ped_sm_series
    if cfg.constellation is None:
        raise ContractError("ped_sm_avg needs an SM configuration")
    return _average([fn(cfg, complex(s), ctl, fallback=fallback)
                     for s in cfg.constellation.points])


def _limit_problem(cfg: SystemConfig, symbol, regime: Regime, printed: bool):
    """Limit problem and, for printed forms, the prefactor non-centrality."""
    re, im = (1.0, 0.0) if symbol is None else (complex(symbol).real, complex(symbol).imag)
    n, g, k = cfg.n_elements, cfg.gamma_av, cfg.rician_k
    lag = cfg.laguerre
    mu2 = n * n * math.pi * lag * lag / 4.0
    if regime is Regime.HIGH_SNR:
        blocks = ((mu2 / n * re * re, cfg.beta * re * re), (mu2 / n * im * im, cfg.beta * im * im))
        return LinkProblem(k * n, blocks, cfg.n_rx), None
    if regime is Regime.ZERO_SNR:
        return LinkProblem(0.0, ((0.0, 0.5), (0.0, 0.5)), cfg.n_rx), None
    if symbol is None:
        # The signal term in the target is of the same order as the
        # competitor non-centrality, so it is kept unless printed.
        first = (0.0 if printed else mu2 * g, 0.5)
        return LinkProblem(k * n * n * g, (first, (0.0, 0.5)), cfg.n_rx), None
    im_gain = 1.0 if printed else g
    blocks = ((mu2 * g * re * re, 0.5), (mu2 * im_gain * im * im, 0.5))
    return LinkProblem(k * n * n * g, blocks, cfg.n_rx), (k * n if printed else None)


def _asymptotic(cfg, symbol, regime, ctl, printed, fallback, pairwise) -> PedResult:
    regime = Regime(regime)
    prob, pref = _limit_problem(cfg, symbol, regime, printed)
    n_comp = 1 if pairwise else cfg.n_rx - 1
    ctl = ctl or SeriesControl()
    try:
        out = series_error_probability(prob.lam, prob.blocks, n_comp, ctl,
                                       printed=printed, prefactor_lam=pref)
        return PedResult(out.value, PedMethod.ASYMPTOTIC, out.residual, out.clamped, regime)
    except ConvergenceError:
        if printed or not fallback:
            raise
    val, err = oracle_error_probability(prob.lam, prob.blocks, n_comp)
    return PedResult(val, PedMethod.ASYMPTOTIC, err, False, regime, via_oracle=True)


def ped_ssk_asymptotic(cfg: SystemConfig, regime: Regime | str, ctl: SeriesControl | None = None,
                       *, printed: bool = False, fallback: bool = True,
                       pairwise: bool = False) -> PedResult:
    """Limiting SSK index-error probability.

    Regimes
    -------
    high
        ``gamma_av -> inf``: noise vanishes and the competitor
        non-centrality becomes ``k N``; independent of ``gamma_av``.
    low
        First-order small-``gamma_av`` form: competitor non-centrality
        ``k N^2 gamma_av`` and a unit-variance target keeping the mean
        ``N^2 pi gamma_av L^2 / 4``. ``printed=True`` drops that mean,
        leaving an exponential target; the form is then only accurate
        while ``N^2 gamma_av`` is small.
    zero
        ``gamma_av = 0``: equals ``1 - 1 / n_rx``.

    The limit is summed with the double series; if that does not
    converge the same limit is integrated numerically and
    ``via_oracle`` is set (never for ``printed=True``).
    """
    if cfg.constellation is not None:
        raise ContractError("ped_ssk_asymptotic needs an SSK configuration")
    return _asymptotic(cfg, None, regime, ctl, printed, fallback, pairwise)


def ped_sm_asymptotic(cfg: SystemConfig, symbol: complex, regime: Regime | str,
                      ctl: SeriesControl | None = None, *, printed: bool = False,
                      fallback: bool = True, pairwise: bool = False) -> PedResult:
    """Limiting SM index-error probability for one symbol.

    The low-SNR limit keeps the symbol-dependent target means
    ``N^2 pi gamma_av L^2 Re(s)^2 / 4`` (and likewise for ``Im``) with
    unit-half variances. ``printed=True`` reproduces the variant whose
    exponential prefactor uses ``k N`` and whose quadrature term lacks
    ``gamma_av``.
    """
    _sm_problem(cfg, symbol)
    return _asymptotic(cfg, symbol, regime, ctl, printed, fallback, pairwise)


def ppead_oracle(cfg: SystemConfig, symbol: complex | None = None,
                 quad: QuadratureSpec | None = None) -> PedResult:
    """Pairwise index-error probability by numerical integration.

    For SM with ``symbol=None`` the result is averaged over the alphabet.
    """
    return _oracle_any(cfg, symbol, quad, pairwise=True)


def ped_oracle(cfg: SystemConfig, symbol: complex | None = None,
               quad: QuadratureSpec | None = None) -> PedResult:
    """Greedy-detector index-error probability by numerical integration."""
    return _oracle_any(cfg, symbol, quad, pairwise=False)


def _oracle_any(cfg, symbol, quad, pairwise):
    n_comp = 1 if pairwise else cfg.n_rx - 1
    if cfg.constellation is not None and symbol is None:
        return _average([_oracle(link_problem(cfg, complex(s)), n_comp, quad)
                         for s in cfg.constellation.points])
    return _oracle(link_problem(cfg, symbol), n_comp, quad)
