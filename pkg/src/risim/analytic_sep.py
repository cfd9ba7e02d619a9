"""Symbol-error probability and bit-error approximations.

The coherent SEP of M-PSK and square M-QAM on the co-phased branch is the
MGF-form integral over the instantaneous SNR, using the Gaussian surrogate
for the co-phased gain (see :func:`risim.model.mgf_max_snr`):

* M-PSK: ``(1/pi) int_0^{(M-1)pi/M} M_gamma(-sin^2(pi/M) / sin^2 eta) d eta``
* M-QAM: ``(4r/pi) int_0^{pi/2} M(-g / sin^2) - (4r^2/pi) int_0^{pi/4} M(-g / sin^2)``
  with ``r = 1 - 1/sqrt(M)`` and ``g = 3 / (2 (M - 1))``.

Closed-form limits are provided for high and low SNR. The default forms
are the ones that agree with the integrals; ``printed=True`` selects an
alternative algebraic form kept for comparison (see each function).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

from .errors import ContractError, DomainError
from .model import SystemConfig, mgf_max_snr
from .specfun import QuadratureSpec, gaussian_q, integrate

__all__ = [
    "SepMethod",
    "SepResult",
    "sep_mpsk",
    "sep_mqam",
    "sep_mpsk_asymptotic",
    "sep_mqam_asymptotic",
    "ber_union_ssk",
    "ber_sm_approx",
]

_RANGE_SLACK = 1e-6


class SepMethod(str, Enum):
    QUADRATURE = "quadrature"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class SepResult:
    """Probability with provenance; ``value`` lies in ``[0, 1]``."""

    value: float
    method: SepMethod
    regime: str | None = None
    clamped: bool = False


def _check_m(m: int, qam: bool = False) -> None:
    if m < 2 or m & (m - 1):
        raise DomainError(f"M must be a power of two >= 2, got {m}")
    if qam and (m < 4 or math.isqrt(m) ** 2 != m):
        raise DomainError(f"QAM requires perfect-square M, got {m}")


def _result(val: float, method: SepMethod, regime=None) -> SepResult:
    if not math.isfinite(val) or val < -_RANGE_SLACK or val > 1 + _RANGE_SLACK:
        raise DomainError(f"SEP value {val!r} falls outside [0, 1]")
    clamped = val < 0 or val > 1
    return SepResult(min(1.0, max(0.0, val)), method, regime, clamped)


def _sep_quad():
    # SEP at high SNR can be ~1e-60, so the target must be relative.
    return QuadratureSpec(abs_tol=1e-300, rel_tol=1e-10, max_subdivisions=4000)


def sep_mpsk(cfg: SystemConfig, m: int, quad: QuadratureSpec | None = None) -> SepResult:
    """M-PSK SEP on the co-phased branch by adaptive quadrature.

    Parameters
    ----------
    cfg : SystemConfig
        Only ``n_elements``, ``rician_k`` and ``gamma_av`` are used.
    m : int
        PSK order.
    quad : QuadratureSpec, optional

    Returns
    -------
    SepResult
        ``(M - 1) / M`` at zero SNR.
    """
    _check_m(m)
    a = math.sin(math.pi / m) ** 2
    upper = (m - 1) * math.pi / m

    def f(eta):
        return mgf_max_snr(cfg, -a / np.sin(eta) ** 2) / math.pi

    return _result(integrate(f, 0.0, upper, quad or _sep_quad()), SepMethod.QUADRATURE)


def sep_mqam(cfg: SystemConfig, m: int, quad: QuadratureSpec | None = None) -> SepResult:
    """Square M-QAM SEP on the co-phased branch by adaptive quadrature."""
    _check_m(m, qam=True)
    r = 1.0 - 1.0 / math.sqrt(m)
    g = 1.5 / (m - 1)
    spec = quad or _sep_quad()

    def f(eta):
        return mgf_max_snr(cfg, -g / np.sin(eta) ** 2) / math.pi

    lo = integrate(f, 0.0, math.pi / 4, spec)
    hi = integrate(f, math.pi / 4, math.pi / 2, spec)
    return _result(4 * r * (lo + hi) - 4 * r * r * lo, SepMethod.QUADRATURE)


def _snr_stats(cfg: SystemConfig) -> tuple[float, float]:
    n = cfg.n_elements
    lag = cfg.laguerre
    mu = n * n * math.pi * cfg.gamma_av * lag * lag / 4.0
    var = n * cfg.gamma_av * cfg.beta
    return mu, var


def _decay(cfg: SystemConfig) -> float:
    # exp(-mu / (2 var)), which no longer depends on gamma_av.
    lag = cfg.laguerre
    return math.exp(-cfg.n_elements * math.pi * lag * lag / (8.0 * cfg.beta))


def sep_mpsk_asymptotic(cfg: SystemConfig, m: int, regime: str, *,
                        printed: bool = False) -> SepResult:
    """Closed-form M-PSK SEP limits.

    Parameters
    ----------
    cfg : SystemConfig
    m : int
    regime : {"high", "low", "zero"}
        ``high``: the MGF denominator is replaced by its SNR-proportional
        part, leaving ``exp(-mu / (2 v)) sin(eta) / (sin(pi/M) sqrt(2 v))``
        under the integral, so the SEP is
        ``(1 - cos((M-1) pi / M)) exp(-mu / (2 v)) / (pi sin(pi/M) sqrt(2 v))``
        with ``mu = N^2 pi gamma_av L^2 / 4`` and ``v = N gamma_av beta``.
        ``low``: the denominator is replaced by 1, which leaves the AWGN
        M-PSK integral at SNR ``mu``. In closed form this is
        ``Q(h) + 2 T(h, cot(pi/M))`` with ``h = sqrt(2 mu) sin(pi/M)`` and
        Owen's T function; for ``M = 2`` it is ``Q(sqrt(2 mu))``.
        ``zero``: ``(M - 1) / M``.
    printed : bool, optional
        ``high``: drop the ``1 / sin(pi/M)`` factor (exact only for M = 2).
        ``low`` with ``M > 2``: the arctangent expression in
        ``zeta = 1 / (2 sin^2(pi/M) v)``, which does not stay in
        ``[0, 1]`` at realistic ``N`` and then raises.

    Raises
    ------
    DomainError
        If the selected expression leaves ``[0, 1]`` or ``gamma_av = 0``
        for a non-zero regime.
    """
    _check_m(m)
    if regime == "zero":
        return _result((m - 1) / m, SepMethod.ASYMPTOTIC, "zero")
    mu, var = _snr_stats(cfg)
    if var <= 0 and (regime != "low" or printed):
        raise DomainError(f"the {regime!r} SEP form needs gamma_av > 0")
    sn = math.sin(math.pi / m)
    theta = (m - 1) * math.pi / m
    if regime == "high":
        val = (1.0 - math.cos(theta)) * _decay(cfg) / (math.pi * math.sqrt(2.0 * var))
        if not printed:
            val /= sn
        return _result(val, SepMethod.ASYMPTOTIC, "high")
    if regime == "low":
        h = math.sqrt(2.0 * mu) * sn
        if m == 2:
            val = float(gaussian_q(h))
        elif printed:
            lag = cfg.laguerre
            zeta = 1.0 / (2.0 * sn * sn * var)
            root = math.sqrt(1.0 + zeta)
            t = math.tan(theta)
            val = (m - 1) / m - cfg.n_elements * lag * lag / (8.0 * cfg.beta * root) * (
                math.atan(root * t) + root / 2.0 * t)
        else:
            val = float(gaussian_q(h)) + 2.0 * float(special.owens_t(h, 1.0 / math.tan(math.pi / m)))
        return _result(val, SepMethod.ASYMPTOTIC, "low")
    raise ContractError(f"unknown regime {regime!r}")


def sep_mqam_asymptotic(cfg: SystemConfig, m: int, regime: str, *,
                        printed: bool = False) -> SepResult:
    """Closed-form square M-QAM SEP limits.

    With ``r = 1 - 1/sqrt(M)``, ``mu`` and ``v`` as in
    :func:`sep_mpsk_asymptotic`:

    ``high``
        ``(4 r / pi) B - (4 r^2 / pi) (1 - 1/sqrt 2) B`` with
        ``B = sqrt(2 (M - 1)) exp(-mu / (2 v)) / sqrt(6 v)``; the two
        sine integrals over ``(0, pi/2)`` and ``(0, pi/4)`` give 1 and
        ``1 - 1/sqrt 2``.
    ``low``
        ``4 r Q(x) - 4 r^2 Q(x)^2`` with ``x = sqrt(3 mu / (M - 1))``, the
        AWGN square-QAM SEP at SNR ``mu`` (Craig form of both integrals).
    ``zero``
        ``(M - 1) / M``.

    ``printed=True`` selects, for ``high``, the second coefficient
    ``sqrt((sqrt 2 - 1)(M - 1))`` in place of ``(1 - 1/sqrt 2) sqrt(2 (M - 1))``
    and, for ``low``, the arctangent expression in
    ``u = (M - 1) / (3 v)`` with a first term ``4 r Q(sqrt(3 mu))``.
    """
    _check_m(m, qam=True)
    if regime == "zero":
        return _result((m - 1) / m, SepMethod.ASYMPTOTIC, "zero")
    mu, var = _snr_stats(cfg)
    if var <= 0 and (regime != "low" or printed):
        raise DomainError(f"the {regime!r} SEP form needs gamma_av > 0")
    r = 1.0 - 1.0 / math.sqrt(m)
    if regime == "high":
        e = _decay(cfg) / math.sqrt(6.0 * var)
        first = 4.0 / math.pi * r * math.sqrt(2.0 * (m - 1)) * e
        if printed:
            second = 4.0 / math.pi * r * r * math.sqrt((math.sqrt(2.0) - 1.0) * (m - 1)) * e
        else:
            second = 4.0 / math.pi * r * r * (1.0 - 1.0 / math.sqrt(2.0)) * math.sqrt(2.0 * (m - 1)) * e
        return _result(first - second, SepMethod.ASYMPTOTIC, "high")
    if regime == "low":
        if printed:
            lag = cfg.laguerre
            u = (m - 1) / (3.0 * var)
            root = math.sqrt(1.0 + u)
            bracket = math.pi / 4.0 - cfg.n_elements * math.pi * lag * lag / (8.0 * cfg.beta) * (
                (math.atan(root) + root / 2.0) / root)
            val = 4.0 * r * float(gaussian_q(math.sqrt(3.0 * mu))) - 4.0 / math.pi * r * r * bracket
        else:
            q = float(gaussian_q(math.sqrt(3.0 * mu / (m - 1))))
            val = 4.0 * r * q - 4.0 * r * r * q * q
        return _result(val, SepMethod.ASYMPTOTIC, "low")
    raise ContractError(f"unknown regime {regime!r}")


def ber_union_ssk(cfg: SystemConfig, ped: float) -> float:
    """SSK bit-error rate ``min(1, n_rx * ped / 2)``."""
    if not 0 <= ped <= 1:
        raise DomainError("ped must lie in [0, 1]")
    return min(1.0, cfg.n_rx * ped / 2.0)


def ber_sm_approx(cfg: SystemConfig, ped: float, sep: float, *,
                  interpretation: str = "printed", m: int | None = None) -> tuple[float, bool]:
    """SM bit-error approximation from PED and SEP.

    ``printed``: ``(1 - (n_rx - 1) ped) sep / log2(N n_rx) + (n_rx - 1) ped / 2``.
    ``per_bit``: same with ``log2(M n_rx)``, the number of bits per
    channel use; needs ``m``.

    Returns
    -------
    value : float
        Clamped to ``[0, 1]``.
    clamped : bool
    """
    if not (0 <= ped <= 1 and 0 <= sep <= 1):
        raise DomainError("ped and sep must lie in [0, 1]")
    if interpretation == "printed":
        denom = math.log2(cfg.n_elements * cfg.n_rx)
    elif interpretation == "per_bit":
        if cfg.constellation is None and m is None:
            raise ContractError("per_bit interpretation needs the modulation order")
        mm = m if m is not None else cfg.constellation.m
        denom = math.log2(mm * cfg.n_rx)
    else:
        raise ContractError(f"unknown interpretation {interpretation!r}")
    ell = cfg.n_rx - 1
    raw = (1 - ell * ped) * sep / denom + ell * ped / 2
    val = min(1.0, max(0.0, raw))
    return val, val != raw
