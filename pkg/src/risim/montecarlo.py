"""Monte Carlo simulation of the RIS-assisted SSK/SM link.

Two channel modes are available:

``exact``
    Rician channel entries are drawn for the co-phased (target) branch and
    the received sums are formed literally. For every other branch the RIS
    phases ``u_i = conj(h_{w,i}) / |h_{w,i}|`` are independent of that
    branch's channel, so its sum ``sum_i h_{v,i} u_i`` is exactly
    ``sqrt(k) sum_i u_i + CN(0, N)`` given ``u``. Drawing it that way is
    equal in distribution to drawing the full ``n_rx x N`` matrix and costs
    ``N + n_rx`` instead of ``n_rx N`` normals per trial.
``clt``
    The Gaussian surrogates used by the analysis: real target gain
    ``N(mu_x, b)`` (with independent real/imaginary parts for SM) and
    non-target sums ``CN(N sqrt(k), N)``.

Randomness is counter based: batch ``j`` of a run seeded with ``seed``
draws from ``Philox(SeedSequence(seed, spawn_key=(j,)))``. Counts are
integers summed over batches, so results do not depend on the number of
workers or on the order in which batches complete.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ContractError, DomainError
from .model import Constellation, SystemConfig

__all__ = [
    "ChannelMode",
    "SimControl",
    "MetricEstimate",
    "LinkCounts",
    "draw_channel_matrix",
    "simulate_link",
    "simulate_ped",
    "simulate_ppead",
    "simulate_sep",
    "simulate_ber",
]


class ChannelMode(str, Enum):
    EXACT = "exact"
    CLT = "clt"


@dataclass(frozen=True)
class SimControl:
    """Monte Carlo run controls.

    Attributes
    ----------
    trials : int
        Number of channel uses, at least 1000.
    seed : int
        Non-negative root seed.
    channel_mode : ChannelMode
    batch_size : int
        Trials per random stream; part of the result's identity.
    workers : int
        Threads used to run batches; does not affect results.
    """

    trials: int
    seed: int = 0
    channel_mode: ChannelMode = ChannelMode.EXACT
    batch_size: int = 8192
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1000:
            raise DomainError(f"trials must be >= 1000, got {self.trials}")
        if self.seed < 0:
            raise DomainError("seed must be non-negative")
        if self.batch_size < 1 or self.workers < 1:
            raise DomainError("batch_size and workers must be >= 1")
        object.__setattr__(self, "channel_mode", ChannelMode(self.channel_mode))


@dataclass(frozen=True)
class MetricEstimate:
    """Sample estimate with its standard error."""

    value: float
    std_err: float
    trials: int
    metric: str


@dataclass
class LinkCounts:
    """Integer tallies accumulated over a run."""

    trials: int = 0
    index_errors: int = 0
    pair_errors: int = 0
    symbol_errors: int = 0
    bit_errors: int = 0
    bit_errors_sq: int = 0
    bits_per_trial: int = 0

    def add(self, other: "LinkCounts") -> None:
        self.trials += other.trials
        self.index_errors += other.index_errors
        self.pair_errors += other.pair_errors
        self.symbol_errors += other.symbol_errors
        self.bit_errors += other.bit_errors
        self.bit_errors_sq += other.bit_errors_sq
        self.bits_per_trial = other.bits_per_trial


def _rng(seed: int, batch: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(batch,))))


def _cn(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    z = rng.standard_normal(shape + (2,)) if isinstance(shape, tuple) else \
        rng.standard_normal((shape, 2))
    return math.sqrt(var / 2.0) * (z[..., 0] + 1j * z[..., 1])


def draw_channel_matrix(cfg: SystemConfig, rng: np.random.Generator, size: int | None = None):
    """Draw the ``n_rx x N`` RIS-to-receiver channel.

    Entries are i.i.d. ``CN(sqrt(k), 1)`` (unit total power per entry is
    ``1 + k``, matching ``E|h|^2 = k + sigma_h^2``).

    Returns
    -------
    ndarray of complex
        Shape ``(n_rx, N)``, or ``(size, n_rx, N)`` when ``size`` is given.
    """
    shape = (cfg.n_rx, cfg.n_elements) if size is None else (size, cfg.n_rx, cfg.n_elements)
    return math.sqrt(cfg.rician_k) + _cn(rng, shape)


def _popcount(x: np.ndarray) -> np.ndarray:
    x = x.astype(np.uint64)
    out = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        out += (x & np.uint64(1)).astype(np.int64)
        x >>= np.uint64(1)
    return out


def _gains(cfg: SystemConfig, rng, b: int, mode: ChannelMode):
    """Co-phased target gain and unaligned sums for every branch."""
    n, n_rx, k = cfg.n_elements, cfg.n_rx, cfg.rician_k
    lag = cfg.laguerre
    if mode is ChannelMode.EXACT:
        h = math.sqrt(k) + _cn(rng, (b, n))
        amp = np.abs(h)
        gain = amp.sum(axis=1)
        u_sum = (np.conj(h) / amp).sum(axis=1)
        others = math.sqrt(k) * u_sum[:, None] + _cn(rng, (b, n_rx), float(n))
    else:
        mu_x = n * math.sqrt(math.pi) / 2.0 * lag
        gain = mu_x + math.sqrt(n * cfg.beta) * rng.standard_normal(b)
        others = n * math.sqrt(k) + _cn(rng, (b, n_rx), float(n))
    return gain, others


def _batch(cfg: SystemConfig, mode: ChannelMode, b: int, rng, symbol_index: int | None,
           target_index: int | None) -> LinkCounts:
    n_rx = cfg.n_rx
    sq = math.sqrt(cfg.gamma_av)
    w = rng.integers(0, n_rx, size=b) if target_index is None else np.full(b, target_index)
    rows = np.arange(b)
    gain, sums = _gains(cfg, rng, b, mode)
    con = cfg.constellation
    if con is None:
        sig = sums.astype(complex)
        sig[rows, w] = gain
        s_idx = None
    else:
        s_idx = rng.integers(0, con.m, size=b) if symbol_index is None else np.full(b, symbol_index)
        v = con.points[s_idx]
        if mode is ChannelMode.CLT:
            # Independent real and imaginary spreads, as in the surrogate.
            ext = rng.standard_normal(b)
            mu_x = cfg.n_elements * math.sqrt(math.pi) / 2.0 * cfg.laguerre
            sd = math.sqrt(cfg.n_elements * cfg.beta)
            tgt = (gain * v.real) + 1j * (mu_x + sd * ext) * v.imag
        else:
            tgt = gain * v
        sig = sums.astype(complex)
        sig[rows, w] = tgt
    z = sq * sig + _cn(rng, (b, n_rx))
    energy = np.abs(z) ** 2
    w_hat = np.argmax(energy, axis=1)
    idx_err = w_hat != w
    rival = (w + 1) % n_rx
    pair_err = energy[rows, rival] > energy[rows, w]
    index_bits = n_rx.bit_length() - 1
    bit_err = _popcount(w ^ w_hat) if n_rx & (n_rx - 1) == 0 else np.zeros(b, dtype=np.int64)
    sym_err = np.zeros(b, dtype=bool)
    bits = index_bits
    if con is not None:
        ref = sq * gain
        # Coherent symbol decision on the target branch (SEP) and on the
        # detected branch (end-to-end bit errors).
        d_t = np.abs(z[rows, w][:, None] - ref[:, None] * con.points[None, :])
        s_t = np.argmin(d_t, axis=1)
        sym_err = s_t != s_idx
        d_e = np.abs(z[rows, w_hat][:, None] - ref[:, None] * con.points[None, :])
        s_e = np.argmin(d_e, axis=1)
        bit_err = bit_err + _popcount(con.labels[s_idx] ^ con.labels[s_e])
        bits += con.bits_per_symbol
    return LinkCounts(b, int(idx_err.sum()), int(pair_err.sum()), int(sym_err.sum()),
                      int(bit_err.sum()), int((bit_err ** 2).sum()), bits)


def simulate_link(cfg: SystemConfig, sim: SimControl, *, symbol_index: int | None = None,
                  target_index: int | None = None) -> LinkCounts:
    """Run the link simulation and return the raw tallies.

    Parameters
    ----------
    cfg : SystemConfig
    sim : SimControl
    symbol_index : int, optional
        Fix the SM symbol; uniform otherwise.
    target_index : int, optional
        Fix the transmit index; uniform otherwise.
    """
    if symbol_index is not None:
        if cfg.constellation is None:
            raise ContractError("symbol_index needs an SM configuration")
        if not 0 <= symbol_index < cfg.constellation.m:
            raise ContractError(f"symbol_index {symbol_index} out of range")
    n_batches = -(-sim.trials // sim.batch_size)

    def run(j: int) -> LinkCounts:
        b = min(sim.batch_size, sim.trials - j * sim.batch_size)
        return _batch(cfg, sim.channel_mode, b, _rng(sim.seed, j), symbol_index, target_index)

    total = LinkCounts()
    if sim.workers > 1:
        with ThreadPoolExecutor(max_workers=sim.workers) as pool:
            parts = list(pool.map(run, range(n_batches)))
    else:
        parts = [run(j) for j in range(n_batches)]
    for p in parts:
        total.add(p)
    return total


def _bernoulli(count: int, trials: int, metric: str) -> MetricEstimate:
    p = count / trials
    return MetricEstimate(p, math.sqrt(p * (1 - p) / trials), trials, metric)


def simulate_ped(cfg: SystemConfig, sim: SimControl, *,
                 symbol_index: int | None = None) -> MetricEstimate:
    """Index-error rate of the greedy (maximum-energy) detector."""
    c = simulate_link(cfg, sim, symbol_index=symbol_index)
    return _bernoulli(c.index_errors, c.trials, "ped")


def simulate_ppead(cfg: SystemConfig, sim: SimControl, *,
                   symbol_index: int | None = None) -> MetricEstimate:
    """Rate at which one fixed non-target branch out-powers the target."""
    c = simulate_link(cfg, sim, symbol_index=symbol_index)
    return _bernoulli(c.pair_errors, c.trials, "ppead")


def simulate_sep(cfg: SystemConfig, m: int, modulation: str, sim: SimControl) -> MetricEstimate:
    """Coherent symbol-error rate on the co-phased branch.

    The receiver knows the instantaneous real gain ``sum_i |h_i|`` (or its
    Gaussian surrogate in ``clt`` mode) and makes a minimum-distance
    decision.
    """
    con = Constellation.make(modulation, m)
    sq = math.sqrt(cfg.gamma_av)
    n_batches = -(-sim.trials // sim.batch_size)
    mono = cfg.replace(constellation=None)

    def run(j: int) -> int:
        b = min(sim.batch_size, sim.trials - j * sim.batch_size)
        rng = _rng(sim.seed, j)
        gain, _ = _gains(mono, rng, b, sim.channel_mode)
        s = rng.integers(0, m, size=b)
        ref = sq * gain
        y = ref * con.points[s] + _cn(rng, b)
        s_hat = np.argmin(np.abs(y[:, None] - ref[:, None] * con.points[None, :]), axis=1)
        return int((s_hat != s).sum())

    if sim.workers > 1:
        with ThreadPoolExecutor(max_workers=sim.workers) as pool:
            errs = sum(pool.map(run, range(n_batches)))
    else:
        errs = sum(run(j) for j in range(n_batches))
    return _bernoulli(errs, sim.trials, "sep")


def simulate_ber(cfg: SystemConfig, sim: SimControl) -> MetricEstimate:
    """Bit-error rate of index bits (natural binary) plus Gray symbol bits.

    The standard error is that of the per-trial bit-error fraction.

    Raises
    ------
    ContractError
        If ``n_rx`` is not a power of two.
    """
    if cfg.n_rx & (cfg.n_rx - 1):
        raise ContractError("BER needs n_rx to be a power of two")
    c = simulate_link(cfg, sim)
    nb = c.bits_per_trial
    mean = c.bit_errors / (c.trials * nb)
    second = c.bit_errors_sq / (c.trials * nb * nb)
    var = max(0.0, second - mean * mean)
    return MetricEstimate(mean, math.sqrt(var / c.trials), c.trials, "ber")
