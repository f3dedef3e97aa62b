"""lambda-sweeps over random trials, aggregation and figure datasets.

A trial ``i`` draws its matrix and signal from seed ``base_seed + i``; the same
pair is observed at every noise level (the noise direction is shared too, only
its norm changes). The lambda grid is expressed in units of each instance's
``lambda_inf`` so that trials align point by point.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import bounds
from .io import format_cell, write_rows
from .problem import SIGNAL_DISTS, best_k, gen_gaussian_matrix, gen_sparse_signal, lambda_inf, make_observation
from .solver import LassoConfig, check_extremal_pair, solve_lasso

logger = logging.getLogger(__name__)

GRID_MODES = ("log", "linear", "explicit")
FIGURES = ("support", "l1norm", "residual", "entropy", "l1error")


class ConfigError(ValueError):
    """Invalid sweep configuration."""


@dataclass(frozen=True)
class LambdaGrid:
    mode: str = "log"
    count: int = 60
    min_factor: float = 1e-3
    values: tuple = ()

    def __post_init__(self):
        if self.mode not in GRID_MODES:
            raise ConfigError(f"lambda_grid.mode must be one of {GRID_MODES}, got {self.mode!r}")
        if self.mode == "explicit":
            if not self.values or any(not v > 0 for v in self.values):
                raise ConfigError("explicit lambda grid needs positive lambda_grid.values")
        else:
            if self.count < 2:
                raise ConfigError("lambda_grid.count must be at least 2")
            if not 0 < self.min_factor < 1:
                raise ConfigError("lambda_grid.min_factor must lie in (0, 1)")

    def factors(self) -> np.ndarray:
        """Grid in units of ``lambda_inf``, in descending order."""
        if self.mode == "log":
            return np.geomspace(1.0, self.min_factor, self.count)
        if self.mode == "linear":
            return np.linspace(1.0, self.min_factor, self.count)
        return np.sort(np.asarray(self.values, dtype=float))[::-1]


@dataclass(frozen=True)
class SweepConfig:
    m: int = 256
    N: int = 1024
    k: int = 40
    noise_levels: tuple = (1e-2,)
    trials: int = 5
    base_seed: int = 0
    lambda_grid: LambdaGrid = field(default_factory=LambdaGrid)
    delta_for_bounds: float = 0.7
    warm_start: bool = True
    signal_dist: str = "gaussian"

    def __post_init__(self):
        if not (1 <= self.k <= self.m <= self.N):
            raise ConfigError(f"need 1 <= k <= m <= N, got k={self.k}, m={self.m}, N={self.N}")
        if not self.noise_levels:
            raise ConfigError("noise_levels must not be empty")
        if any(not e >= 0 for e in self.noise_levels):
            raise ConfigError("noise levels must be nonnegative")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if not 0 <= self.base_seed < 2**64:
            raise ConfigError("base_seed must be a 64-bit unsigned integer")
        if not 0 < self.delta_for_bounds < bounds.DELTA_MAX:
            raise ConfigError(f"delta_for_bounds must lie in (0, {bounds.DELTA_MAX:.4f})")
        if self.signal_dist not in SIGNAL_DISTS:
            raise ConfigError(f"signal_dist must be one of {SIGNAL_DISTS}")


def full_scale(**overrides) -> SweepConfig:
    """(k, m, N) = (160, 1024, 4096), noise 1e-2, 20 trials."""
    return SweepConfig(**{"m": 1024, "N": 4096, "k": 160, "noise_levels": (1e-2,), "trials": 20, **overrides})


def ci_scale(**overrides) -> SweepConfig:
    """(k, m, N) = (40, 256, 1024), noise 1e-2, 5 trials."""
    return SweepConfig(**{"m": 256, "N": 1024, "k": 40, "noise_levels": (1e-2,), "trials": 5, **overrides})


# --------------------------------------------------------------------------- config file

_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _floats(text: str) -> tuple:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(v) for v in text.split(","))


_TOP_KEYS = {
    "m": int,
    "N": int,
    "k": int,
    "noise_levels": _floats,
    "trials": int,
    "base_seed": int,
    "delta_for_bounds": float,
    "warm_start": lambda s: _BOOL[s.lower()],
    "signal_dist": str,
}
_GRID_KEYS = {"mode": str, "count": int, "min_factor": float, "values": _floats}
CONFIG_KEYS = tuple(_TOP_KEYS) + tuple(f"lambda_grid.{k}" for k in _GRID_KEYS)


def parse_config(text: str) -> SweepConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment.

    Keys are the :class:`SweepConfig` fields, with the grid fields written as
    ``lambda_grid.mode`` etc. and lists comma-separated. Unknown or repeated
    keys are errors.
    """
    top: dict = {}
    grid: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (p.strip() for p in line.partition("="))
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key.startswith("lambda_grid."):
            table, target, name = _GRID_KEYS, grid, key.split(".", 1)[1]
        else:
            table, target, name = _TOP_KEYS, top, key
        if name not in table:
            raise ConfigError(f"line {lineno}: unknown key {key!r} (known: {', '.join(CONFIG_KEYS)})")
        if name in target:
            raise ConfigError(f"line {lineno}: repeated key {key!r}")
        try:
            target[name] = table[name](value)
        except (ValueError, KeyError) as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    try:
        return SweepConfig(**top, lambda_grid=LambdaGrid(**grid))
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> SweepConfig:
    return parse_config(Path(path).read_text())


def format_config(cfg: SweepConfig) -> str:
    g = cfg.lambda_grid
    lines = [
        f"m = {cfg.m}",
        f"N = {cfg.N}",
        f"k = {cfg.k}",
        "noise_levels = " + ",".join(repr(float(e)) for e in cfg.noise_levels),
        f"trials = {cfg.trials}",
        f"base_seed = {cfg.base_seed}",
        f"lambda_grid.mode = {g.mode}",
        f"lambda_grid.count = {g.count}",
        f"lambda_grid.min_factor = {g.min_factor!r}",
    ]
    if g.values:
        lines.append("lambda_grid.values = " + ",".join(repr(float(v)) for v in g.values))
    lines += [
        f"delta_for_bounds = {cfg.delta_for_bounds!r}",
        f"warm_start = {'true' if cfg.warm_start else 'false'}",
        f"signal_dist = {cfg.signal_dist}",
    ]
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------- sweeping

_PER_POINT = ("lam", "s_lambda", "l1_norm", "rescaled_residual", "rescaled_residual_sq",
              "residual_norm", "entropy", "l1_error", "l2_error")


@dataclass
class TrialResult:
    """One trial at one noise level: per-grid-point arrays plus instance scalars."""

    trial: int
    noise_level: float
    lambda_inf: float
    mu: float
    target_l1: float
    certified: np.ndarray
    values: dict  # name -> array over the grid


def run_trial(cfg: SweepConfig, trial: int) -> list[TrialResult]:
    """Solve the lambda path of trial ``trial`` at every noise level."""
    seed = cfg.base_seed + trial
    A = gen_gaussian_matrix(cfg.m, cfg.N, seed)
    truth = gen_sparse_signal(cfg.N, cfg.k, seed, cfg.signal_dist)
    target = best_k(truth.signal, cfg.k)
    target_l1 = float(np.abs(target).sum())
    factors = cfg.lambda_grid.factors()
    L = A.lipschitz
    out = []
    for eps in cfg.noise_levels:
        obs = make_observation(A, truth, eps, seed)
        li = lambda_inf(A, obs.y)
        vals = {name: np.zeros(factors.size) for name in _PER_POINT}
        ok = np.zeros(factors.size, dtype=bool)
        x_prev = None
        for j, f in enumerate(factors):
            lam = f * li
            if not lam > 0:
                raise ValueError(f"trial {trial}: lambda_inf is zero, the observation vanishes")
            sol = solve_lasso(A, obs.y, LassoConfig(lam), x0=x_prev if cfg.warm_start else None, lipschitz=L)
            ok[j] = sol.converged and check_extremal_pair(sol, 1e-5).passed
            if not ok[j]:
                logger.warning("trial %d noise %g lambda %g failed certification (%s)", trial, eps, lam, sol.status)
            x_prev = sol.x
            rnorm = sol.rescaled_residual * lam
            err = sol.x - target
            vals["lam"][j] = lam
            vals["s_lambda"][j] = sol.s_lambda
            vals["l1_norm"][j] = sol.l1_norm
            vals["rescaled_residual"][j] = sol.rescaled_residual
            vals["rescaled_residual_sq"][j] = sol.rescaled_residual**2
            vals["residual_norm"][j] = rnorm
            vals["entropy"][j] = bounds.entropy(sol.x)
            vals["l1_error"][j] = np.abs(err).sum()
            vals["l2_error"][j] = np.linalg.norm(err)
        out.append(TrialResult(trial, float(eps), li, obs.mu, target_l1, ok, vals))
    return out


def _trial_task(args):
    cfg, trial = args
    return run_trial(cfg, trial)


@dataclass
class SweepRecord:
    noise_level: float
    grid_index: int
    lambda_: float
    lambda_over_lambda_inf: float
    trials: int
    defects: int
    mu: float
    k: int
    delta: float
    target_l1: float
    s_lambda_mean: float
    s_lambda_std: float
    l1_norm_mean: float
    l1_norm_std: float
    rescaled_residual_mean: float
    rescaled_residual_std: float
    rescaled_residual_sq_mean: float
    residual_norm_mean: float
    entropy_mean: float
    entropy_std: float
    l1_error_mean: float
    l1_error_std: float
    l2_error_mean: float
    l2_error_std: float
    theta: float
    in_regime: bool
    residual_upper: float
    residual_lower_from_mean_support: float
    sparsity_limit: int
    l1_upper: float
    l1_upper_improved: float
    l2_upper: float
    l2_lower: float

    @classmethod
    def columns(cls) -> list[str]:
        return [("lambda" if f.name == "lambda_" else f.name) for f in fields(cls)]

    def as_row(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        return d


def bound_columns(delta: float, k: int, lam: float, mu: float, s_mean: float) -> dict:
    """Bound overlays of one sweep row from its recorded scalars."""
    c = bounds.rnsp_from_ric(delta)
    th = bounds.theta(mu, lam, k)
    t, _ = bounds.sparsity_bound(delta, c.beta, th, k)
    general, improved = bounds.l1_bounds(delta, c.beta, th, k, lam, mu)
    lower, upper = bounds.l2_bounds(delta, delta, c.beta, k, s_mean, lam, mu)
    return {
        "theta": th,
        "in_regime": th <= 1,
        "residual_upper": bounds.residual_upper(c.beta, th, k),
        "residual_lower_from_mean_support": math.sqrt(s_mean / (1 + delta)),
        "sparsity_limit": t,
        "l1_upper": general,
        "l1_upper_improved": improved,
        "l2_upper": upper,
        "l2_lower": lower,
    }


def _mean_std(a: np.ndarray) -> tuple[float, float]:
    if a.size == 0:
        return math.nan, math.nan
    return float(a.mean()), float(a.std())


def aggregate(cfg: SweepConfig, results: list[TrialResult]) -> list[SweepRecord]:
    """Average trials per (noise level, grid point); uncertified solves are left out."""
    factors = cfg.lambda_grid.factors()
    records = []
    for eps in cfg.noise_levels:
        cell = sorted((r for r in results if r.noise_level == float(eps)), key=lambda r: r.trial)
        if len(cell) != cfg.trials:
            raise RuntimeError(f"noise {eps}: {len(cell)} trial results, expected {cfg.trials}")
        mu = float(np.mean([r.mu for r in cell]))
        target_l1 = float(np.mean([r.target_l1 for r in cell]))
        for j, f in enumerate(factors):
            keep = np.array([r.certified[j] for r in cell])
            col = {name: np.array([r.values[name][j] for r in cell])[keep] for name in _PER_POINT}
            lam = float(np.array([r.values["lam"][j] for r in cell]).mean())
            s_mean, s_std = _mean_std(col["s_lambda"])
            row = dict(
                noise_level=float(eps), grid_index=j, lambda_=lam, lambda_over_lambda_inf=float(f),
                trials=cfg.trials, defects=int((~keep).sum()), mu=mu, k=cfg.k,
                delta=cfg.delta_for_bounds, target_l1=target_l1,
                s_lambda_mean=s_mean, s_lambda_std=s_std,
            )
            for name in ("l1_norm", "rescaled_residual", "entropy", "l1_error", "l2_error"):
                row[f"{name}_mean"], row[f"{name}_std"] = _mean_std(col[name])
            row["rescaled_residual_sq_mean"] = _mean_std(col["rescaled_residual_sq"])[0]
            row["residual_norm_mean"] = _mean_std(col["residual_norm"])[0]
            s_for_bounds = s_mean if np.isfinite(s_mean) else 0.0
            row.update(bound_columns(cfg.delta_for_bounds, cfg.k, lam, mu, s_for_bounds))
            records.append(SweepRecord(**row))
    return records


def run_sweep(cfg: SweepConfig, workers: int | None = None) -> list[SweepRecord]:
    """Run every trial (in a process pool when ``workers > 1``) and aggregate.

    Results are gathered in trial-index order, so the output does not depend
    on the number of workers.
    """
    workers = workers or os.cpu_count() or 1
    tasks = [(cfg, i) for i in range(cfg.trials)]
    if workers == 1 or cfg.trials == 1:
        nested = [_trial_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, cfg.trials)) as pool:
            nested = list(pool.map(_trial_task, tasks))
    return aggregate(cfg, [r for trial in nested for r in trial])


# --------------------------------------------------------------------------- summaries


@dataclass(frozen=True)
class PeakSummary:
    noise_level: float
    peak_support: float
    lambda_at_peak_support: float
    peak_residual: float
    lambda_at_peak_residual: float
    defects: int


def summarize(records: list[SweepRecord]) -> list[PeakSummary]:
    out = []
    for eps in sorted({r.noise_level for r in records}):
        rows = [r for r in records if r.noise_level == eps]
        s = np.array([r.s_lambda_mean for r in rows])
        q = np.array([r.rescaled_residual_mean for r in rows])
        i, j = int(np.nanargmax(s)), int(np.nanargmax(q))
        out.append(PeakSummary(eps, float(s[i]), rows[i].lambda_, float(q[j]), rows[j].lambda_,
                               sum(r.defects for r in rows)))
    return out


# --------------------------------------------------------------------------- figure data

# figure -> [(csv column, record attribute or callable)]
_FIGURE_COLUMNS = {
    "support": [
        ("lambda", "lambda_"),
        ("s_lambda_mean", "s_lambda_mean"),
        ("s_lambda_std", "s_lambda_std"),
        ("sparsity_limit", "sparsity_limit"),
        ("k", "k"),
    ],
    "l1norm": [
        ("lambda", "lambda_"),
        ("l1_norm_mean", "l1_norm_mean"),
        ("l1_norm_std", "l1_norm_std"),
        ("target_l1", "target_l1"),
    ],
    "residual": [
        ("lambda", "lambda_"),
        ("rescaled_residual_mean", "rescaled_residual_mean"),
        ("rescaled_residual_std", "rescaled_residual_std"),
        ("residual_upper", "residual_upper"),
        ("residual_lower_from_mean_support", "residual_lower_from_mean_support"),
    ],
    "entropy": [
        ("lambda", "lambda_"),
        ("entropy_over_1_plus_delta", lambda r: r.entropy_mean / (1 + r.delta)),
        ("s_lambda_over_1_plus_delta", lambda r: r.s_lambda_mean / (1 + r.delta)),
        ("rescaled_residual_sq_mean", "rescaled_residual_sq_mean"),
    ],
    "l1error": [
        ("lambda", "lambda_"),
        ("l1_error_mean", "l1_error_mean"),
        ("l1_error_std", "l1_error_std"),
        ("l1_upper_improved", "l1_upper_improved"),
        ("l1_upper", "l1_upper"),
    ],
}

_FIGURE_TITLES = {
    "support": ("support size s_lambda", "log"),
    "l1norm": ("||x_lambda||_1", "log"),
    "residual": ("||r_lambda||_2 / lambda", "log"),
    "entropy": ("lower bounds on ||r_lambda||_2^2 / lambda^2", "log"),
    "l1error": ("||x_lambda - x*(k)||_1", "log"),
}


def noise_tag(eps: float) -> str:
    return "%g" % eps


def figure_columns(figure: str) -> list[str]:
    if figure not in _FIGURE_COLUMNS:
        raise ValueError(f"unknown figure {figure!r}; expected one of {FIGURES}")
    return [c for c, _ in _FIGURE_COLUMNS[figure]]


def figure_rows(records: list[SweepRecord], figure: str) -> list[dict]:
    spec = _FIGURE_COLUMNS.get(figure)
    if spec is None:
        raise ValueError(f"unknown figure {figure!r}; expected one of {FIGURES}")
    rows = []
    for r in records:
        rows.append({c: (getattr(r, src) if isinstance(src, str) else src(r)) for c, src in spec})
    return rows


def plot_script(figure: str, csv_name: str) -> str:
    """gnuplot commands drawing every non-lambda column of ``csv_name`` against lambda."""
    cols = figure_columns(figure)
    ylabel, xscale = _FIGURE_TITLES[figure]
    curves = []
    for i, name in enumerate(cols[1:], start=2):
        if name.endswith("_std"):
            continue
        curves.append(f"'{csv_name}' using 1:{i} with linespoints title '{name}'")
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale x" if xscale == "log" else "unset logscale x",
        "set xlabel 'lambda'",
        f"set ylabel '{ylabel}'",
        "set terminal pngcairo size 900,600",
        f"set output '{Path(csv_name).stem}.png'",
        "plot " + ", \\\n     ".join(curves),
    ]
    return "\n".join(lines) + "\n"


def emit_figure_data(records: list[SweepRecord], figure: str, path) -> Path:
    """Write the CSV of one figure and a companion ``.gp`` script beside it."""
    if not records:
        raise ValueError("no records to emit")
    rows = figure_rows(records, figure)
    path = Path(path)
    write_rows(path, figure_columns(figure), rows)
    path.with_suffix(".gp").write_text(plot_script(figure, path.name))
    return path


def emit_all(records: list[SweepRecord], outdir) -> list[Path]:
    """Full sweep table plus every figure, one file set per noise level."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []
    for eps in sorted({r.noise_level for r in records}):
        rows = [r for r in records if r.noise_level == eps]
        tag = noise_tag(eps)
        sweep_path = outdir / f"sweep_{tag}.csv"
        write_rows(sweep_path, SweepRecord.columns(), [r.as_row() for r in rows])
        written.append(sweep_path)
        for fig in FIGURES:
            written.append(emit_figure_data(rows, fig, outdir / f"{fig}_{tag}.csv"))
    return written


def summary_table(summaries: list[PeakSummary]) -> str:
    head = ("noise", "peak_s", "lambda@peak_s", "peak_r/lambda", "lambda@peak_r", "defects")
    lines = ["  ".join(f"{h:>14}" for h in head)]
    for s in summaries:
        vals = (s.noise_level, s.peak_support, s.lambda_at_peak_support, s.peak_residual,
                s.lambda_at_peak_residual, s.defects)
        lines.append("  ".join(f"{format_cell(v, '%.6g'):>14}" for v in vals))
    return "\n".join(lines)
