"""Run configuration: INI parsing, validation, and problem assembly.

A run is fully described by one flat key-value file with sections (parsed
by configparser) plus the noise seed; every output file records the SHA-256
of the file content and the effective seed so runs can be reproduced
byte for byte.  Validation failures name the offending ``section.field``.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Nonlinearity
from .errors import ConfigError
from .forcing import ForcingSignal, TrigTerm
from .lyapunov_perron import check_gap
from .problem import ModelProblem
from .randomness import CovarianceSpec, TimeGrid, sample_wiener
from .spectral import Spectrum, dirichlet_laplacian

__all__ = ["RunConfig", "load_config", "build_problem"]


@dataclass
class RunConfig:
    """Validated run parameters; see the README for the file schema."""

    raw_text: str
    spectrum: Spectrum
    nonlinearity: Nonlinearity
    forcing: ForcingSignal
    cov: CovarianceSpec
    seed: int
    ou_exact_variance: bool
    gap_n: int
    gap_k: float
    h: float
    tol: float
    t_back: float | None
    t_fwd: float | None
    burn_in: float | None
    threads: int
    chart: dict = field(default_factory=dict)
    track: dict = field(default_factory=dict)
    attractor: dict = field(default_factory=dict)
    periodicity: dict = field(default_factory=dict)
    almost_period: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)

    def config_hash(self, seed: int) -> str:
        digest = hashlib.sha256()
        digest.update(self.raw_text.encode("utf-8"))
        digest.update(f"|seed={seed}".encode("ascii"))
        return digest.hexdigest()


class _Section:
    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.data = dict(parser[name]) if parser.has_section(name) else {}

    def _fail(self, key: str, message: str):
        raise ConfigError(f"{self.name}.{key}: {message}")

    def raw(self, key: str, default=None):
        return self.data.get(key, default)

    def str(self, key: str, default=None, choices=None):
        value = self.data.get(key, default)
        if value is None:
            self._fail(key, "missing required value")
        value = str(value).strip()
        if choices is not None and value not in choices:
            self._fail(key, f"must be one of {', '.join(choices)} (got {value!r})")
        return value

    def float(self, key: str, default=None, minimum=None, maximum=None):
        value = self.data.get(key)
        if value is None:
            if default is None:
                self._fail(key, "missing required value")
            return default
        try:
            out = float(value)
        except ValueError:
            self._fail(key, f"not a number: {value!r}")
        if minimum is not None and out < minimum:
            self._fail(key, f"must be >= {minimum}")
        if maximum is not None and out > maximum:
            self._fail(key, f"must be <= {maximum}")
        return out

    def int(self, key: str, default=None, minimum=None):
        value = self.data.get(key)
        if value is None:
            if default is None:
                self._fail(key, "missing required value")
            return default
        try:
            out = int(str(value).strip())
        except ValueError:
            self._fail(key, f"not an integer: {value!r}")
        if minimum is not None and out < minimum:
            self._fail(key, f"must be >= {minimum}")
        return out

    def bool(self, key: str, default=False):
        value = self.data.get(key)
        if value is None:
            return default
        text = str(value).strip().lower()
        if text in ("1", "true", "yes", "on"):
            return True
        if text in ("0", "false", "no", "off"):
            return False
        self._fail(key, f"not a boolean: {value!r}")

    def floats(self, key: str, default=None):
        value = self.data.get(key)
        if value is None:
            if default is None:
                self._fail(key, "missing required value")
            return default
        try:
            return [float(tok) for tok in str(value).split()]
        except ValueError:
            self._fail(key, f"not a list of numbers: {value!r}")

    def auto_float(self, key: str, minimum=None):
        """A float or the literal 'auto' (returned as None)."""
        value = self.data.get(key, "auto")
        if str(value).strip().lower() == "auto":
            return None
        return self.float(key, minimum=minimum)


def _parse_spectrum(sec: _Section) -> Spectrum:
    kind = sec.str("kind", "dirichlet", choices=("dirichlet", "explicit"))
    alpha = sec.float("alpha", 0.0, minimum=0.0)
    if alpha >= 0.5:
        sec._fail("alpha", "must lie in [0, 1/2)")
    if kind == "dirichlet":
        n_total = sec.int("n_total", 16, minimum=2)
        return dirichlet_laplacian(n_total, alpha)
    lams = sec.floats("lambdas")
    if len(lams) < 2:
        sec._fail("lambdas", "need at least two eigenvalues")
    return Spectrum(np.asarray(lams), alpha)


def _parse_nonlinearity(sec: _Section) -> Nonlinearity:
    kind = sec.str("kind", "zero", choices=("zero", "per_mode_sin", "custom_table"))
    if kind == "zero":
        return Nonlinearity.zero()
    lipschitz = sec.float("lipschitz", minimum=0.0)
    if kind == "per_mode_sin":
        return Nonlinearity.per_mode_sin(lipschitz)
    xs = sec.floats("table_x")
    ys = sec.floats("table_y")
    if len(xs) != len(ys):
        sec._fail("table_y", "length differs from table_x")
    return Nonlinearity.custom_table(np.asarray(xs), np.asarray(ys), lipschitz)


def _parse_forcing(sec: _Section, n_modes: int) -> ForcingSignal:
    form = sec.str("form", "zero", choices=("zero", "constant", "trig_sum", "tabulated"))
    period_raw = sec.raw("period")
    period = None if period_raw is None else sec.float("period", minimum=0.0)
    if form == "zero":
        return ForcingSignal.zero(n_modes)
    if form == "constant":
        amps = sec.floats("amplitudes")
        if len(amps) != n_modes:
            sec._fail("amplitudes", f"need {n_modes} values, got {len(amps)}")
        return ForcingSignal.constant(np.asarray(amps))
    if form == "trig_sum":
        raw = sec.raw("terms")
        if raw is None:
            sec._fail("terms", "missing required value")
        terms = []
        for line in str(raw).strip().splitlines():
            toks = line.split()
            if len(toks) != 4:
                sec._fail("terms", f"each row needs 'mode amplitude frequency phase': {line!r}")
            try:
                terms.append(
                    TrigTerm(int(toks[0]), float(toks[1]), float(toks[2]), float(toks[3]))
                )
            except ValueError:
                sec._fail("terms", f"non-numeric row: {line!r}")
        return ForcingSignal.trig(n_modes, terms, period)
    raw = sec.raw("table")
    if raw is None:
        sec._fail("table", "missing required value")
    rows = []
    for line in str(raw).strip().splitlines():
        try:
            rows.append([float(tok) for tok in line.split()])
        except ValueError:
            sec._fail("table", f"non-numeric row: {line!r}")
    arr = np.asarray(rows)
    if arr.ndim != 2 or arr.shape[1] != n_modes + 1:
        sec._fail("table", f"rows need 't v_1 .. v_{n_modes}'")
    return ForcingSignal.tabulated(arr[:, 0], arr[:, 1:], period)


def _parse_noise(sec: _Section, n_modes: int) -> tuple[CovarianceSpec, int, bool]:
    kind = sec.str("kind", "zero", choices=("zero", "power_law", "explicit"))
    seed = sec.int("seed", 0)
    exact = sec.bool("exact_variance", False)
    if kind == "zero":
        return CovarianceSpec.zero(n_modes), seed, exact
    if kind == "power_law":
        scale = sec.float("scale", minimum=0.0)
        exponent = sec.float("exponent", 2.0)
        return CovarianceSpec.power_law(n_modes, scale, exponent), seed, exact
    values = sec.floats("values")
    if len(values) != n_modes:
        sec._fail("values", f"need {n_modes} values, got {len(values)}")
    return CovarianceSpec(np.asarray(values)), seed, exact


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    spectrum = _parse_spectrum(_Section(parser, "spectrum"))
    nonlinearity = _parse_nonlinearity(_Section(parser, "nonlinearity"))
    forcing = _parse_forcing(_Section(parser, "forcing"), spectrum.size)
    cov, seed, exact = _parse_noise(_Section(parser, "noise"), spectrum.size)

    cert_sec = _Section(parser, "certificate")
    gap_n = cert_sec.int("n", minimum=1)
    gap_k = cert_sec.float("k")
    if not (0.0 < gap_k < 1.0):
        cert_sec._fail("k", "must lie in (0, 1)")
    if spectrum.size < gap_n + 4:
        # keep several unresolved modes so the graph is nontrivial
        cert_sec._fail("n", f"needs n_total >= n + 4 (n_total = {spectrum.size})")

    num = _Section(parser, "numerics")
    h = num.float("h", 1e-3, minimum=0.0)
    if h <= 0.0:
        num._fail("h", "must be positive")
    if float(np.max(spectrum.lambdas)) * h > 0.5:
        num._fail("h", f"lambda_max*h = {float(np.max(spectrum.lambdas)) * h:g} exceeds 0.5")
    tol = num.float("tol", 1e-6)
    if tol <= 0.0:
        num._fail("tol", "must be positive")
    t_back = num.auto_float("t_back", minimum=0.0)
    t_fwd = num.auto_float("t_fwd", minimum=0.0)
    burn_in = num.auto_float("burn_in", minimum=0.0)
    threads = num.int("threads", 1, minimum=1)

    chart_sec = _Section(parser, "chart")
    chart = {
        "tau": chart_sec.float("tau", 0.0),
        "x_mode": chart_sec.int("x_mode", 1, minimum=1),
        "x_min": chart_sec.float("x_min", -1.0),
        "x_max": chart_sec.float("x_max", 1.0),
        "x_count": chart_sec.int("x_count", 9, minimum=1),
        "svg": chart_sec.bool("svg", True),
    }
    if chart["x_mode"] > gap_n:
        chart_sec._fail("x_mode", f"must be a resolved mode (<= n = {gap_n})")

    track_sec = _Section(parser, "track")
    track = {
        "tau": track_sec.float("tau", 0.0),
        "count": track_sec.int("count", 4, minimum=1),
        "radius": track_sec.float("radius", 0.5, minimum=0.0),
    }

    att_sec = _Section(parser, "attractor")
    attractor = {
        "tau": att_sec.float("tau", 0.0),
        "pullback_times": att_sec.floats("pullback_times", [4.0, 8.0]),
        "ensemble_size": att_sec.int("ensemble_size", 16, minimum=1),
        "radius": att_sec.float("radius", 1.0, minimum=0.0),
    }
    if any(t <= 0.0 for t in attractor["pullback_times"]):
        att_sec._fail("pullback_times", "must be positive")

    per_sec = _Section(parser, "periodicity")
    periodicity = {
        "taus": per_sec.floats("taus", [0.0]),
        "slack": per_sec.float("slack", 1e-4, minimum=0.0),
    }

    ap_sec = _Section(parser, "almost_period")
    almost_period = {
        "tau0": ap_sec.auto_float("tau0"),
        "scan_max": ap_sec.float("scan_max", 450.0, minimum=0.0),
        "scan_step": ap_sec.float("scan_step", 0.01, minimum=0.0),
        "target": ap_sec.float("target", 1e-3, minimum=0.0),
    }

    ver_sec = _Section(parser, "verify")
    checks_raw = ver_sec.str("checks", "invariance lipschitz tracking")
    checks = checks_raw.split()
    known = {"invariance", "lipschitz", "tracking", "periodicity", "almost_period", "containment"}
    for c in checks:
        if c not in known:
            ver_sec._fail("checks", f"unknown check {c!r}")
    verify = {
        "checks": checks,
        "invariance_t": ver_sec.float("invariance_t", 1.0, minimum=0.0),
        "c_inv": ver_sec.float("c_inv", 10.0, minimum=0.0),
        "envelope_slack": ver_sec.float("envelope_slack", 0.02, minimum=0.0),
        "slope_slack": ver_sec.float("slope_slack", 0.1, minimum=0.0),
    }

    return RunConfig(
        raw_text=text,
        spectrum=spectrum,
        nonlinearity=nonlinearity,
        forcing=forcing,
        cov=cov,
        seed=seed,
        ou_exact_variance=exact,
        gap_n=gap_n,
        gap_k=gap_k,
        h=h,
        tol=tol,
        t_back=t_back,
        t_fwd=t_fwd,
        burn_in=burn_in,
        threads=threads,
        chart=chart,
        track=track,
        attractor=attractor,
        periodicity=periodicity,
        almost_period=almost_period,
        verify=verify,
    )


def build_problem(cfg: RunConfig, seed_override: int | None = None) -> ModelProblem:
    """Assemble the model: certificate, horizons, grid sizing, path sample.

    The grid is sized once from the whole configuration (largest requested
    shift plus the OU burn-in margin), so every subcommand sees the same
    stored path for a given (config, seed).
    """
    cert = check_gap(cfg.spectrum, cfg.nonlinearity.lipschitz, cfg.gap_k, cfg.gap_n)
    t_back_auto, t_fwd_auto = ModelProblem.default_horizons(cert, cfg.tol)
    t_back = t_back_auto if cfg.t_back is None else cfg.t_back
    t_fwd = t_fwd_auto if cfg.t_fwd is None else cfg.t_fwd
    lam1 = float(cfg.spectrum.lambdas[0])
    burn_in = (10.0 / lam1) if cfg.burn_in is None else cfg.burn_in

    max_shift = max(
        [cfg.verify["invariance_t"]] + [float(t) for t in cfg.attractor["pullback_times"]]
    )
    h = cfg.h
    t_back = math.ceil(t_back / h) * h
    t_fwd = math.ceil(t_fwd / h) * h
    t_min = -(t_back + burn_in + max_shift) - h
    t_max = max(t_fwd, cfg.verify["invariance_t"]) + h
    grid = TimeGrid.from_times(t_min, t_max, h)

    seed = cfg.seed if seed_override is None else int(seed_override)
    path = sample_wiener(seed, grid, cfg.cov)
    return ModelProblem(
        spectrum=cfg.spectrum,
        nonlinearity=cfg.nonlinearity,
        forcing=cfg.forcing,
        path=path,
        cert=cert,
        t_back=t_back,
        t_fwd=t_fwd,
        tol=cfg.tol,
        ou_exact_variance=cfg.ou_exact_variance,
    )
