"""System configuration and decision-statistic distributions.

Conventions: unit-power Rician entries (``sigma_h^2 = 1``), unit symbol
energy and noise power ``N0 = 1 / gamma_av``. The RIS co-phases the
branch of the transmit-antenna index ``w`` so that the target statistic
is ``|sum_i |h_{w,i}| s + n|^2``; every other receive branch sees an
unaligned sum.

Gaussian (central-limit) surrogates used throughout:

* target: ``Re ~ N(mu_x Re(s), b Re(s)^2 + c)``, ``Im ~ N(mu_x Im(s),
  b Im(s)^2 + c)``, independent, with ``mu_x = N sqrt(pi)/2 L``,
  ``b = N (1 + k - pi L^2 / 4)``, ``c = N0 / 2`` and ``L = L_{1/2}(-k)``;
* non-target: ``|CN(N sqrt(k), N + N0)|^2``.

SSK is the special case ``s = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ContractError, DomainError
from .specfun import laguerre_half, marcum_p1

__all__ = [
    "Scheme",
    "Constellation",
    "SystemConfig",
    "CfParams",
    "NonTargetStats",
    "LinkProblem",
    "cf_params_ssk",
    "cf_params_sm",
    "nontarget_stats",
    "cf_target",
    "mgf_target",
    "cf_nontarget",
    "cdf_nontarget",
    "mgf_max_snr",
    "link_problem",
    "gray_code",
]

_MEMBER_TOL = 1e-9


class Scheme(str, Enum):
    SSK = "ssk"
    SM = "sm"


def gray_code(i):
    """Binary-reflected Gray code of a non-negative integer (array-aware)."""
    return i ^ (i >> 1)


def _is_pow2(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class Constellation:
    """Unit-average-energy PSK or square QAM alphabet.

    Attributes
    ----------
    modulation : {"psk", "qam"}
    m : int
        Alphabet size.
    points : ndarray of complex
        Symbols; ``mean(|points|^2) == 1``.
    labels : ndarray of int
        Gray labels; adjacent symbols differ in one bit.

    Notes
    -----
    PSK uses phases ``2 pi i / M + theta0`` with ``theta0 = 0`` for BPSK
    and ``pi / M`` otherwise, so QPSK is ``(+-1 +- j)/sqrt(2)``. QAM uses
    separable Gray labelling of the in-phase and quadrature levels.
    """

    modulation: str
    m: int
    points: np.ndarray = field(repr=False, compare=False)
    labels: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def psk(cls, m: int) -> "Constellation":
        if m < 2 or not _is_pow2(m):
            raise DomainError(f"PSK order must be a power of two >= 2, got {m}")
        theta0 = 0.0 if m == 2 else math.pi / m
        idx = np.arange(m)
        pts = np.exp(1j * (2 * math.pi * idx / m + theta0))
        if m == 2:
            pts = np.array([1.0 + 0j, -1.0 + 0j])
        return cls("psk", m, pts, gray_code(idx))

    @classmethod
    def qam(cls, m: int) -> "Constellation":
        side = math.isqrt(m)
        if m < 4 or side * side != m or not _is_pow2(m):
            raise DomainError(f"QAM requires a perfect-square power-of-two M >= 4, got {m}")
        levels = 2.0 * np.arange(side) - side + 1
        scale = math.sqrt(2.0 * (m - 1) / 3.0)
        ii, qq = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
        ii, qq = ii.ravel(), qq.ravel()
        pts = (levels[ii] + 1j * levels[qq]) / scale
        bits = side.bit_length() - 1
        labels = (gray_code(ii) << bits) | gray_code(qq)
        return cls("qam", m, pts, labels)

    @classmethod
    def make(cls, modulation: str, m: int) -> "Constellation":
        if modulation == "psk":
            return cls.psk(m)
        if modulation == "qam":
            return cls.qam(m)
        raise DomainError(f"unknown modulation {modulation!r}")

    @property
    def bits_per_symbol(self) -> int:
        return self.m.bit_length() - 1

    def index_of(self, symbol: complex) -> int:
        """Index of ``symbol`` in the alphabet; ContractError if absent."""
        d = np.abs(self.points - complex(symbol))
        i = int(np.argmin(d))
        if d[i] > _MEMBER_TOL:
            raise ContractError(f"symbol {symbol!r} is not in the {self.m}-{self.modulation} alphabet")
        return i


@dataclass(frozen=True)
class SystemConfig:
    """RIS-assisted link parameters.

    Attributes
    ----------
    n_elements : int
        Number of RIS reflecting elements ``N >= 1``.
    n_rx : int
        Number of receive antennas (index alphabet size), ``>= 2``.
    rician_k : float
        Rician factor ``k >= 0``.
    gamma_av : float
        Average SNR ``E_s / N0`` (linear); ``0`` selects the zero-SNR limit.
    constellation : Constellation or None
        ``None`` for SSK; the symbol alphabet for SM.
    """

    n_elements: int
    n_rx: int
    rician_k: float
    gamma_av: float
    constellation: Constellation | None = None

    def __post_init__(self):
        if int(self.n_elements) != self.n_elements or self.n_elements < 1:
            raise DomainError(f"n_elements must be an integer >= 1, got {self.n_elements}")
        if int(self.n_rx) != self.n_rx or self.n_rx < 2:
            raise DomainError(f"n_rx must be an integer >= 2, got {self.n_rx}")
        if not (self.rician_k >= 0 and math.isfinite(self.rician_k)):
            raise DomainError(f"rician_k must be finite and >= 0, got {self.rician_k}")
        if not (self.gamma_av >= 0 and math.isfinite(self.gamma_av)):
            raise DomainError(f"gamma_av must be finite and >= 0, got {self.gamma_av}")

    @classmethod
    def from_db(cls, n_elements: int, n_rx: int, rician_k: float, gamma_db: float,
                constellation: Constellation | None = None) -> "SystemConfig":
        gamma = 0.0 if gamma_db == -math.inf else 10.0 ** (gamma_db / 10.0)
        return cls(n_elements, n_rx, rician_k, gamma, constellation)

    @property
    def scheme(self) -> Scheme:
        return Scheme.SSK if self.constellation is None else Scheme.SM

    @property
    def noise_power(self) -> float:
        return math.inf if self.gamma_av == 0 else 1.0 / self.gamma_av

    @property
    def laguerre(self) -> float:
        return laguerre_half(self.rician_k)

    @property
    def beta(self) -> float:
        """Per-element variance of ``|h|``: ``1 + k - pi L^2 / 4``."""
        lag = self.laguerre
        return max(0.0, 1.0 + self.rician_k - 0.25 * math.pi * lag * lag)

    def replace(self, **kw) -> "SystemConfig":
        from dataclasses import replace
        return replace(self, **kw)


@dataclass(frozen=True)
class CfParams:
    """Target-statistic parameters in natural (unnormalized) units.

    ``blocks`` lists the (squared mean, variance) of the two independent
    Gaussian components whose squared magnitudes add up to the target
    statistic. For SSK ``mu1 = mu_x, mu2 = 0, b1 = b, b2 = 0``.
    """

    mu_x: float
    b: float
    c: float
    mu1: float
    mu2: float
    b1: float
    b2: float

    @property
    def blocks(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((self.mu1 ** 2, self.b1 + self.c), (self.mu2 ** 2, self.b2 + self.c))


@dataclass(frozen=True)
class NonTargetStats:
    """Squared mean and variance of one unaligned complex branch sum."""

    mean_sq: float
    var: float


@dataclass(frozen=True)
class LinkProblem:
    """Decision statistics rescaled by the non-target variance.

    In these units every non-target branch is ``|CN(sqrt(lam), 1)|^2``
    and the target is the sum of squares of the independent Gaussians
    described by ``blocks`` (squared mean, variance). Finite for
    ``gamma_av = 0``.

    Attributes
    ----------
    lam : float
        Non-target non-centrality.
    blocks : tuple of (float, float)
    n_rx : int
    """

    lam: float
    blocks: tuple[tuple[float, float], ...]
    n_rx: int

    @property
    def n_competitors(self) -> int:
        return self.n_rx - 1


def _base(cfg: SystemConfig) -> tuple[float, float, float]:
    n = cfg.n_elements
    mu_x = n * math.sqrt(math.pi) / 2.0 * cfg.laguerre
    b = n * cfg.beta
    c = 0.5 * cfg.noise_power
    return mu_x, b, c


def cf_params_ssk(cfg: SystemConfig) -> CfParams:
    """Target parameters for SSK (equivalently SM with symbol 1)."""
    mu_x, b, c = _base(cfg)
    return CfParams(mu_x, b, c, mu_x, 0.0, b, 0.0)


def cf_params_sm(cfg: SystemConfig, symbol: complex) -> CfParams:
    """Target parameters for SM with transmitted ``symbol``.

    Raises
    ------
    ContractError
        If ``cfg`` is not SM or ``symbol`` is not in its alphabet.
    """
    if cfg.constellation is None:
        raise ContractError("cf_params_sm needs an SM configuration")
    cfg.constellation.index_of(symbol)
    s = complex(symbol)
    mu_x, b, c = _base(cfg)
    re, im = s.real, s.imag
    return CfParams(mu_x, b, c, mu_x * re, mu_x * im, b * re * re, b * im * im)


def nontarget_stats(cfg: SystemConfig) -> NonTargetStats:
    """Non-target branch statistics ``|CN(N sqrt(k), N + N0)|^2``."""
    n = cfg.n_elements
    return NonTargetStats(n * n * cfg.rician_k, n + cfg.noise_power)


def cf_target(params: CfParams, omega):
    """Characteristic function ``E[exp(j omega X)]`` of the target statistic."""
    w = np.asarray(omega, dtype=float)
    out = np.ones(w.shape, dtype=complex)
    for m2, v in params.blocks:
        d = 1.0 - 2j * w * v
        out *= np.exp(1j * w * m2 / d) / np.sqrt(d)
    return complex(out) if np.ndim(omega) == 0 else out


def mgf_target(params: CfParams, s):
    """Moment generating function ``E[exp(s X)]`` for ``s <= 0``."""
    ss = np.asarray(s, dtype=float)
    if np.any(ss > 0):
        raise DomainError("mgf_target is only defined here for s <= 0")
    out = np.ones(ss.shape)
    for m2, v in params.blocks:
        d = 1.0 - 2.0 * ss * v
        out *= np.exp(ss * m2 / d) / np.sqrt(d)
    return float(out) if np.ndim(s) == 0 else out


def cf_nontarget(stats: NonTargetStats, omega):
    """Characteristic function of one non-target statistic."""
    w = np.asarray(omega, dtype=float)
    d = 1.0 - 1j * w * stats.var
    out = np.exp(1j * w * stats.mean_sq / d) / d
    return complex(out) if np.ndim(omega) == 0 else out


def cdf_nontarget(stats: NonTargetStats, y):
    """CDF ``P(Y <= y)`` of one non-target statistic (a scaled ncx2(2))."""
    yy = np.asarray(y, dtype=float)
    if np.any(yy < 0):
        raise DomainError("cdf_nontarget needs y >= 0")
    if not math.isfinite(stats.var):
        out = np.zeros(yy.shape)
        return float(out) if np.ndim(y) == 0 else out
    a = math.sqrt(2.0 * stats.mean_sq / stats.var)
    return marcum_p1(a, np.sqrt(2.0 * yy / stats.var)) if np.ndim(y) else float(
        marcum_p1(a, math.sqrt(2.0 * float(yy) / stats.var)))


def mgf_max_snr(cfg: SystemConfig, s):
    """MGF of the instantaneous SNR ``gamma_av * (sum_i |h_i|)^2``.

    Uses the Gaussian surrogate ``sqrt(gamma) ~ N(sqrt(gamma_av) mu_x,
    gamma_av b)``, giving ``exp(s mu / (1 - 2 s v)) / sqrt(1 - 2 s v)``
    with ``mu = N^2 pi gamma_av L^2 / 4`` and ``v = N gamma_av beta``.
    Defined for ``s <= 0``.
    """
    ss = np.asarray(s, dtype=float)
    if np.any(ss > 0):
        raise DomainError("mgf_max_snr is only defined here for s <= 0")
    n = cfg.n_elements
    lag = cfg.laguerre
    mu = n * n * math.pi * cfg.gamma_av * lag * lag / 4.0
    var = n * cfg.gamma_av * cfg.beta
    d = 1.0 - 2.0 * ss * var
    out = np.exp(ss * mu / d) / np.sqrt(d)
    return float(out) if np.ndim(s) == 0 else out


def link_problem(cfg: SystemConfig, symbol: complex | None = None) -> LinkProblem:
    """Rescaled detection problem for one transmitted symbol.

    Dividing every statistic by the non-target variance ``N + N0`` (that
    is multiplying by ``gamma_av / (N gamma_av + 1)``) keeps all
    quantities finite at zero SNR.
    """
    if symbol is None:
        re, im = 1.0, 0.0
    else:
        if cfg.constellation is None:
            raise ContractError("a symbol was given for an SSK configuration")
        cfg.constellation.index_of(symbol)
        re, im = complex(symbol).real, complex(symbol).imag
    n, g, k = cfg.n_elements, cfg.gamma_av, cfg.rician_k
    lag = cfg.laguerre
    scale = g / (n * g + 1.0)
    mu2 = n * n * math.pi * lag * lag / 4.0 * scale
    b = n * cfg.beta * scale
    c = 0.5 / (n * g + 1.0)
    blocks = ((mu2 * re * re, b * re * re + c), (mu2 * im * im, b * im * im + c))
    return LinkProblem(k * n * n * scale, blocks, cfg.n_rx)
