"""Parameter sweeps over SNR or Rician factor with CSV output.

A sweep is described by a JSON object; :func:`load_config` parses it into
a :class:`SweepSpec`, :func:`validate` lists every problem at once, and
:func:`run_sweep` produces one :class:`ResultRow` per grid point, metric,
method and (for SM index metrics) symbol.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Iterable

from . import analytic_ped as ap
from . import analytic_sep as asep
from .errors import RisimError
from .model import Constellation, SystemConfig
from .montecarlo import ChannelMode, SimControl, simulate_link, simulate_sep

__all__ = ["CSV_HEADER", "ConfigError", "SweepSpec", "ResultRow", "load_config",
           "parse_config", "validate", "grid", "run_sweep", "format_csv", "write_csv"]

CSV_HEADER = ("scheme", "N", "n_rx", "k", "gamma_db", "M", "symbol_index", "metric",
              "method", "value", "std_err", "trials", "clamped", "status")

METRICS = ("ped", "ppead", "sep", "ber")
_ANALYTIC = ("series", "oracle", "asymptotic:high", "asymptotic:low", "asymptotic:zero")
_MC = ("mc", "mc:exact", "mc:clt")
METHODS = _ANALYTIC + _MC

_KNOWN_KEYS = {
    "scheme", "modulation", "m", "n_elements", "n_rx", "rician_k", "k_list",
    "gamma_db_start", "gamma_db_stop", "gamma_db_step", "zero_snr", "metrics",
    "methods", "trials", "seed", "channel_mode", "series", "output", "workers",
}
_SERIES_KEYS = {"ell_max", "p_max", "rel_tol", "alpha_cap"}


class ConfigError(RisimError, ValueError):
    """Configuration could not be read or is invalid.

    Attributes
    ----------
    violations : list of str
    """

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


@dataclass
class SweepSpec:
    """Parsed, not yet validated, sweep description."""

    scheme: str = "ssk"
    modulation: str | None = None
    m: int | None = None
    n_elements: list = field(default_factory=lambda: [64])
    n_rx: list = field(default_factory=lambda: [2])
    k_values: list = field(default_factory=lambda: [1.0])
    gamma_db: list = field(default_factory=list)
    zero_snr: bool = False
    metrics: list = field(default_factory=lambda: ["ped"])
    methods: list = field(default_factory=lambda: ["oracle"])
    trials: int = 100_000
    seed: int = 0
    channel_mode: str = "exact"
    series: dict = field(default_factory=dict)
    output: str | None = None
    workers: int = 1
    step_error: str | None = None


@dataclass(frozen=True)
class ResultRow:
    scheme: str
    n_elements: int
    n_rx: int
    k: float
    gamma_db: float
    m: int | None
    symbol_index: str
    metric: str
    method: str
    value: float | None
    std_err: float | None
    trials: int | None
    clamped: bool
    status: str

    @property
    def ok(self) -> bool:
        return self.status == "ok"


def _as_list(v) -> list:
    return list(v) if isinstance(v, (list, tuple)) else [v]


def _gamma_grid(start, stop, step) -> tuple[list[float], str | None]:
    if step is None or start is None or stop is None:
        return [], "gamma_db_start, gamma_db_stop and gamma_db_step must be given together"
    if not step > 0:
        return [], "gamma_db_step must be > 0"
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    if n < 1:
        return [], "gamma_db_stop must be >= gamma_db_start"
    return [round(start + i * step, 12) for i in range(n)], None


def parse_config(raw: dict[str, Any]) -> SweepSpec:
    """Build a :class:`SweepSpec` from a decoded JSON object.

    Raises
    ------
    ConfigError
        For structural problems (unknown keys, wrong JSON types).
    """
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a JSON object"])
    problems = [f"unknown key {k!r}" for k in sorted(set(raw) - _KNOWN_KEYS)]
    series = raw.get("series", {}) or {}
    if not isinstance(series, dict):
        problems.append("series must be an object")
        series = {}
    problems += [f"unknown key 'series.{k}'" for k in sorted(set(series) - _SERIES_KEYS)]

    def num_list(key, default):
        vals = _as_list(raw.get(key, default))
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in vals):
            problems.append(f"{key} must be a number or a list of numbers")
            return list(default) if isinstance(default, list) else [default]
        return vals

    spec = SweepSpec()
    spec.scheme = raw.get("scheme", "ssk")
    spec.modulation = raw.get("modulation")
    spec.m = raw.get("m")
    spec.n_elements = num_list("n_elements", 64)
    spec.n_rx = num_list("n_rx", 2)
    if "k_list" in raw:
        spec.k_values = num_list("k_list", [1.0])
        if "rician_k" in raw:
            problems.append("give either rician_k or k_list, not both")
    else:
        spec.k_values = num_list("rician_k", 1.0)
    keys = ("gamma_db_start", "gamma_db_stop", "gamma_db_step")
    if any(k in raw for k in keys):
        spec.gamma_db, spec.step_error = _gamma_grid(*(raw.get(k) for k in keys))
    spec.zero_snr = bool(raw.get("zero_snr", False))
    spec.metrics = [str(m) for m in _as_list(raw.get("metrics", ["ped"]))]
    spec.methods = [str(m) for m in _as_list(raw.get("methods", ["oracle"]))]
    spec.trials = raw.get("trials", 100_000)
    spec.seed = raw.get("seed", 0)
    spec.channel_mode = raw.get("channel_mode", "exact")
    spec.series = dict(series)
    spec.output = raw.get("output")
    spec.workers = raw.get("workers", 1)
    if problems:
        raise ConfigError(problems)
    return spec


def load_config(path: str) -> SweepSpec:
    """Read and parse a JSON sweep file.

    Raises
    ------
    ConfigError
        On I/O failure, malformed JSON (with line and column) or
        structural problems.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc.strerror}"]) from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
    return parse_config(raw)


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def validate(spec: SweepSpec) -> list[str]:
    """Return every violation in ``spec`` (empty when valid)."""
    out: list[str] = []
    if spec.scheme not in ("ssk", "sm"):
        out.append(f"scheme must be 'ssk' or 'sm', got {spec.scheme!r}")
    if spec.scheme == "sm":
        if spec.modulation not in ("psk", "qam"):
            out.append("SM needs modulation 'psk' or 'qam'")
        if not _is_int(spec.m) or spec.m < 2 or spec.m & (spec.m - 1):
            out.append("m must be a power of two >= 2")
        elif spec.modulation == "qam" and (spec.m < 4 or math.isqrt(spec.m) ** 2 != spec.m):
            out.append("QAM requires perfect-square M")
    for n in spec.n_elements:
        if not _is_int(n) or n < 1:
            out.append(f"n_elements must be integers >= 1, got {n!r}")
    for n in spec.n_rx:
        if not _is_int(n) or n < 2:
            out.append("n_rx must be ≥ 2")
    for k in spec.k_values:
        if not (isinstance(k, (int, float)) and math.isfinite(k) and k >= 0):
            out.append(f"rician_k must be finite and >= 0, got {k!r}")
    if spec.step_error:
        out.append(spec.step_error)
    if not spec.gamma_db and not spec.zero_snr:
        out.append("empty SNR axis: give gamma_db_start/stop/step or zero_snr")
    if not spec.n_elements or not spec.n_rx or not spec.k_values:
        out.append("n_elements, n_rx and the k axis must be non-empty")
    if not spec.metrics:
        out.append("metrics must be non-empty")
    for m in spec.metrics:
        if m not in METRICS:
            out.append(f"unknown metric {m!r}")
    if spec.scheme == "ssk" and "sep" in spec.metrics:
        out.append("metric 'sep' needs scheme 'sm'")
    if not spec.methods:
        out.append("methods must be non-empty")
    for m in spec.methods:
        if m not in METHODS:
            out.append(f"unknown method {m!r}")
    if "ber" in spec.metrics:
        for n in spec.n_rx:
            if _is_int(n) and n >= 2 and n & (n - 1):
                out.append(f"ber needs n_rx to be a power of two, got {n}")
    if any(m in _MC for m in spec.methods):
        if not _is_int(spec.trials) or spec.trials < 1000:
            out.append("trials must be an integer >= 1000")
        if not _is_int(spec.seed) or spec.seed < 0:
            out.append("seed must be a non-negative integer")
        if spec.channel_mode not in ("exact", "clt"):
            out.append("channel_mode must be 'exact' or 'clt'")
    if not _is_int(spec.workers) or spec.workers < 1:
        out.append("workers must be an integer >= 1")
    try:
        ap.SeriesControl(**spec.series)
    except (RisimError, TypeError) as exc:
        out.append(f"series: {exc}")
    return out


@dataclass(frozen=True)
class _Point:
    n: int
    n_rx: int
    k: float
    gamma_db: float


def grid(spec: SweepSpec) -> list[_Point]:
    """Grid points in output order (N, n_rx, k, then SNR)."""
    gammas = ([-math.inf] if spec.zero_snr else []) + list(spec.gamma_db)
    return [_Point(n, r, float(k), float(g))
            for n in spec.n_elements for r in spec.n_rx for k in spec.k_values for g in gammas]


def _status(exc: Exception) -> str:
    msg = " ".join(str(exc).split())
    return f"error:{type(exc).__name__}: {msg}"


class _PointRunner:
    def __init__(self, spec: SweepSpec, pt: _Point):
        self.spec = spec
        self.pt = pt
        con = Constellation.make(spec.modulation, spec.m) if spec.scheme == "sm" else None
        self.con = con
        self.cfg = SystemConfig.from_db(pt.n, pt.n_rx, pt.k, pt.gamma_db, con)
        self.ctl = ap.SeriesControl(**spec.series)
        self._mc: dict = {}
        self._ped: dict = {}

    # -- helpers -----------------------------------------------------------
    def row(self, metric, method, symbol="", value=None, std_err=None, trials=None,
            clamped=False, status="ok") -> ResultRow:
        pt = self.pt
        if status == "ok" and value is not None:
            if not (0.0 <= value <= 1.0):
                status = f"error:RangeError: value {value!r} outside [0, 1]"
        return ResultRow(self.spec.scheme, pt.n, pt.n_rx, pt.k, pt.gamma_db,
                         None if self.con is None else self.con.m, symbol, metric, method,
                         value, std_err, trials, clamped, status)

    def mode(self, method: str) -> ChannelMode:
        return ChannelMode(method.split(":")[1] if ":" in method else self.spec.channel_mode)

    def counts(self, mode: ChannelMode, symbol_index=None):
        key = (mode, symbol_index)
        if key not in self._mc:
            sim = SimControl(self.spec.trials, self.spec.seed, mode)
            self._mc[key] = simulate_link(self.cfg, sim, symbol_index=symbol_index)
        return self._mc[key]

    def analytic_ped(self, method: str, symbol, pairwise: bool) -> ap.PedResult:
        key = (method, None if symbol is None else complex(symbol), pairwise)
        if key in self._ped:
            return self._ped[key]
        cfg, ctl = self.cfg, self.ctl
        if method == "series":
            if self.con is None:
                res = (ap.ppead_ssk_series if pairwise else ap.ped_ssk_series)(cfg, ctl)
            elif symbol is None:
                res = ap.ped_sm_avg(cfg, ctl, pairwise=pairwise)
            else:
                res = (ap.ppead_sm_series if pairwise else ap.ped_sm_series)(cfg, symbol, ctl)
        elif method == "oracle":
            res = (ap.ppead_oracle if pairwise else ap.ped_oracle)(cfg, symbol)
        else:
            regime = method.split(":")[1]
            if self.con is None:
                res = ap.ped_ssk_asymptotic(cfg, regime, ctl, pairwise=pairwise)
            elif symbol is None:
                parts = [ap.ped_sm_asymptotic(cfg, complex(s), regime, ctl, pairwise=pairwise)
                         for s in self.con.points]
                res = ap.PedResult(math.fsum(p.value for p in parts) / len(parts),
                                   ap.PedMethod.ASYMPTOTIC,
                                   max(p.truncation_residual for p in parts),
                                   any(p.clamped for p in parts), ap.Regime(regime))
            else:
                res = ap.ped_sm_asymptotic(cfg, symbol, regime, ctl, pairwise=pairwise)
        self._ped[key] = res
        return res

    def analytic_sep(self, method: str) -> asep.SepResult:
        m, mod = self.con.m, self.con.modulation
        if method.startswith("asymptotic:"):
            regime = method.split(":")[1]
            fn = asep.sep_mpsk_asymptotic if mod == "psk" else asep.sep_mqam_asymptotic
            return fn(self.cfg, m, regime)
        fn = asep.sep_mpsk if mod == "psk" else asep.sep_mqam
        return fn(self.cfg, m)

    # -- metrics -------------------------------------------------------------
    def index_rows(self, metric: str, method: str) -> list[ResultRow]:
        pairwise = metric == "ppead"
        symbols: list = [None] if self.con is None else list(range(self.con.m)) + ["avg"]
        rows = []
        for s in symbols:
            label = "" if s is None else str(s)
            try:
                if method in _MC:
                    mode = self.mode(method)
                    c = self.counts(mode, None if s in (None, "avg") else s)
                    hits = c.pair_errors if pairwise else c.index_errors
                    p = hits / c.trials
                    rows.append(self.row(metric, f"mc:{mode.value}", label, p,
                                         math.sqrt(p * (1 - p) / c.trials), c.trials))
                else:
                    sym = None if s in (None, "avg") else complex(self.con.points[s])
                    r = self.analytic_ped(method, sym, pairwise)
                    rows.append(self.row(metric, _label(method, r), label, r.value,
                                         clamped=r.clamped))
            except RisimError as exc:
                rows.append(self.row(metric, method, label, status=_status(exc)))
        return rows

    def sep_row(self, method: str) -> ResultRow:
        try:
            if method in _MC:
                mode = self.mode(method)
                sim = SimControl(self.spec.trials, self.spec.seed, mode)
                est = simulate_sep(self.cfg, self.con.m, self.con.modulation, sim)
                return self.row("sep", f"mc:{mode.value}", "", est.value, est.std_err, est.trials)
            r = self.analytic_sep(method)
            label = "quadrature" if r.method is asep.SepMethod.QUADRATURE else method
            return self.row("sep", label, "", r.value, clamped=r.clamped)
        except RisimError as exc:
            return self.row("sep", method, "", status=_status(exc))

    def ber_row(self, method: str) -> ResultRow:
        try:
            if method in _MC:
                mode = self.mode(method)
                c = self.counts(mode)
                nb = c.bits_per_trial
                mean = c.bit_errors / (c.trials * nb)
                var = max(0.0, c.bit_errors_sq / (c.trials * nb * nb) - mean * mean)
                return self.row("ber", f"mc:{mode.value}", "", mean,
                                math.sqrt(var / c.trials), c.trials)
            ped = self.analytic_ped(method, None, False)
            if self.con is None:
                return self.row("ber", _label(method, ped), "",
                                asep.ber_union_ssk(self.cfg, ped.value), clamped=ped.clamped)
            sep = self.analytic_sep(method)
            val, clamped = asep.ber_sm_approx(self.cfg, ped.value, sep.value)
            return self.row("ber", _label(method, ped), "", val,
                            clamped=clamped or ped.clamped or sep.clamped)
        except RisimError as exc:
            return self.row("ber", method, "", status=_status(exc))

    def run(self) -> list[ResultRow]:
        rows: list[ResultRow] = []
        for metric in self.spec.metrics:
            for method in self.spec.methods:
                if metric in ("ped", "ppead"):
                    rows += self.index_rows(metric, method)
                elif metric == "sep":
                    rows.append(self.sep_row(method))
                else:
                    rows.append(self.ber_row(method))
        return rows


def _label(method: str, res: ap.PedResult) -> str:
    if method == "series" and res.method is ap.PedMethod.ORACLE:
        return "oracle"
    if method.startswith("asymptotic:") and res.via_oracle:
        return method + "+oracle"
    return method


def _run_point(spec: SweepSpec, pt: _Point) -> list[ResultRow]:
    try:
        return _PointRunner(spec, pt).run()
    except RisimError as exc:
        # Configuration-level failure at this point: one row per metric/method.
        runner_rows = []
        for metric in spec.metrics:
            for method in spec.methods:
                runner_rows.append(ResultRow(spec.scheme, pt.n, pt.n_rx, pt.k, pt.gamma_db,
                                             spec.m if spec.scheme == "sm" else None, "",
                                             metric, method, None, None, None, False,
                                             _status(exc)))
        return runner_rows


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[ResultRow]:
    """Evaluate every grid point; row order does not depend on ``workers``.

    Raises
    ------
    ConfigError
        If :func:`validate` reports violations.
    """
    problems = validate(spec)
    if problems:
        raise ConfigError(problems)
    pts = grid(spec)
    nw = spec.workers if workers is None else workers
    if nw > 1:
        with ThreadPoolExecutor(max_workers=nw) as pool:
            chunks = list(pool.map(lambda p: _run_point(spec, p), pts))
    else:
        chunks = [_run_point(spec, p) for p in pts]
    return [r for chunk in chunks for r in chunk]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("-inf" if v < 0 else "inf")
    return str(v)


def format_csv(rows: Iterable[ResultRow]) -> str:
    """Render rows as CSV text; floats use shortest round-trip form."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([_fmt(x) for x in (r.scheme, r.n_elements, r.n_rx, r.k, r.gamma_db, r.m,
                                      r.symbol_index, r.metric, r.method, r.value, r.std_err,
                                      r.trials, r.clamped)] + [r.status])
    return buf.getvalue()


def write_csv(rows: Iterable[ResultRow], path: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(rows))
    except OSError as exc:
        raise ConfigError([f"cannot write {path}: {exc.strerror}"]) from exc
