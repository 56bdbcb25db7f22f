"""Config-driven experiments with deterministic, parallelizable trials.

Each trial is a pure function of (config, trial_id): trial t derives its seed
from (master_seed, "trial", t), so results are bit-identical no matter how
many worker processes run them or in which order they finish.  Records are
sorted by (trial_id, matching_kind) before writing, making the CSV output
byte-for-byte reproducible.
"""
from __future__ import annotations

import concurrent.futures
import csv
import io
import json
import math
import os
from dataclasses import dataclass, fields
from enum import Enum

import numpy as np

from .errors import ConfigError
from .market import (
    BalancedMarket,
    CanonicalMarket,
    backfill_imbalanced,
    canonical_from_raw,
    public_scores_market,
    random_cbounded_market,
    sinkhorn_balance,
    uniform_market,
    _log_uniform_raw,
)
from .matching import (
    Matching,
    Side,
    deferred_acceptance,
    enumerate_stable,
    greedy_alpha_certificate,
    outcome_of,
    truncate_delta,
)
from .probability import chernoff_lower_tail
from .rng import exponentials, stream_key, unit_uniforms
from .sampling import LatentValues, PreferenceProfile, prefs_from_latent, sample_latent
from .stats import (
    best_fit_exponential,
    dkw_bound,
    eig_dispersion,
    hyperbola_product,
    ks_distance_to_exp,
    rank_value_ratio_report,
    rescaled_ranks,
)


class ExperimentKind(Enum):
    VALUE_DIST = "value_dist"
    RANK_DIST = "rank_dist"
    HYPERBOLA = "hyperbola"
    APPROX_STABLE = "approx_stable"
    IMBALANCE = "imbalance"
    STABLE_COUNT = "stable_count"
    BOUNDS = "bounds"


class MarketKind(Enum):
    UNIFORM = "uniform"
    PUBLIC_SCORES = "public_scores"
    CBOUNDED = "cbounded"


_VALUE_FAMILY = frozenset(
    {ExperimentKind.VALUE_DIST, ExperimentKind.RANK_DIST, ExperimentKind.HYPERBOLA}
)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentKind
    n: int
    trials: int
    master_seed: int
    market: MarketKind = MarketKind.UNIFORM
    c: float = 2.0
    delta: float = 0.05
    k: int = 0
    zeta: float = 0.25
    theta: float = 0.5
    workers: int = 1
    chernoff_t: tuple[float, ...] = (0.1, 0.3, 0.5)
    chernoff_samples: int = 100_000
    dkw_eps: tuple[float, ...] = (0.1, 0.2)
    dkw_n: int = 200
    dkw_delta: float = 0.02
    dkw_band: float = 0.02
    dkw_experiments: int = 1_000
    tolerances: tuple[tuple[str, float], ...] = ()

    def tol(self, name: str, default: float) -> float:
        for key, value in self.tolerances:
            if key == name:
                return value
        return default


_INT_KEYS = {
    "n", "trials", "master_seed", "k", "workers",
    "chernoff_samples", "dkw_n", "dkw_experiments",
}
_FLOAT_KEYS = {"c", "delta", "zeta", "theta", "dkw_delta", "dkw_band"}
_LIST_KEYS = {"chernoff_t", "dkw_eps"}


def _normalize_enum(raw: str) -> str:
    return raw.strip().lower().replace("_", "").replace("-", "")


_EXPERIMENT_NAMES = {_normalize_enum(kind.value): kind for kind in ExperimentKind}
_MARKET_NAMES = {_normalize_enum(kind.value): kind for kind in MarketKind}


def parse_config(text: str) -> ExperimentConfig:
    """Parse a flat ``key = value`` config (``#`` comments, blank lines ignored)."""
    data: dict[str, object] = {}
    tolerances: dict[str, float] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw_line!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if not value:
            raise ConfigError(f"line {lineno}: no value for key {key!r}")
        try:
            if key.startswith("tol."):
                tolerances[key[4:]] = float(value)
            elif key in _INT_KEYS:
                data[key] = int(value)
            elif key in _FLOAT_KEYS:
                data[key] = float(value)
            elif key in _LIST_KEYS:
                data[key] = tuple(float(tok) for tok in value.split())
            elif key == "experiment":
                try:
                    data[key] = _EXPERIMENT_NAMES[_normalize_enum(value)]
                except KeyError:
                    raise ConfigError(
                        f"experiment: unknown kind {value!r} "
                        f"(expected one of {sorted(k.value for k in ExperimentKind)})"
                    ) from None
            elif key == "market":
                try:
                    data[key] = _MARKET_NAMES[_normalize_enum(value)]
                except KeyError:
                    raise ConfigError(
                        f"market: unknown kind {value!r} "
                        f"(expected one of {sorted(k.value for k in MarketKind)})"
                    ) from None
            else:
                raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from None

    for required in ("experiment", "n", "trials", "master_seed"):
        if required not in data:
            raise ConfigError(f"{required}: required key is missing")
    if tolerances:
        data["tolerances"] = tuple(sorted(tolerances.items()))
    cfg = ExperimentConfig(**data)  # type: ignore[arg-type]

    if cfg.n < 1:
        raise ConfigError("n: must be >= 1")
    if cfg.trials < 1:
        raise ConfigError("trials: must be >= 1")
    if cfg.c < 1.0:
        raise ConfigError("c: must be >= 1")
    if not (0.0 <= cfg.delta < 1.0):
        raise ConfigError("delta: must be in [0, 1)")
    if cfg.workers < 1:
        raise ConfigError("workers: must be >= 1")
    if cfg.k < 0:
        raise ConfigError("k: must be >= 0")
    if cfg.experiment is ExperimentKind.STABLE_COUNT and cfg.n > 10:
        raise ConfigError("n: stable_count enumerates exhaustively and needs n <= 10")
    if cfg.experiment is ExperimentKind.IMBALANCE and not (1 <= cfg.k < cfg.n):
        raise ConfigError("k: imbalance needs 1 <= k < n")
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


@dataclass(frozen=True)
class TrialRecord:
    trial_id: int
    matching_kind: str
    lambda_fit: float | None = None
    lambda_ysum: float | None = None
    ks_fit: float | None = None
    ks_ysum: float | None = None
    hyperbola: float | None = None
    dispersion: float | None = None
    rank_ratio_frac: float | None = None
    proposal_count: int | None = None
    stable_count: int | None = None
    alpha_cert: float | None = None
    bound: float | None = None
    observed: float | None = None
    da_agree: int | None = None


CSV_COLUMNS = [f.name for f in fields(TrialRecord)]
_INT_COLUMNS = {"trial_id", "proposal_count", "stable_count", "da_agree"}


# --- market construction -----------------------------------------------------

_UNIFORM_CACHE: dict[tuple[int, int], BalancedMarket] = {}


def _uniform_balanced(n: int) -> BalancedMarket:
    bal = _UNIFORM_CACHE.get((n, n))
    if bal is None:
        bal = sinkhorn_balance(uniform_market(n))
        _UNIFORM_CACHE[(n, n)] = bal
    return bal


def _build_balanced(cfg: ExperimentConfig, t: int) -> BalancedMarket:
    if cfg.market is MarketKind.UNIFORM:
        return _uniform_balanced(cfg.n)
    if cfg.market is MarketKind.PUBLIC_SCORES:
        a = cfg.c ** (2.0 * unit_uniforms(stream_key(cfg.master_seed, "public_a", t), cfg.n) - 1.0)
        b = cfg.c ** (2.0 * unit_uniforms(stream_key(cfg.master_seed, "public_b", t), cfg.n) - 1.0)
        return sinkhorn_balance(public_scores_market(a, b))
    return sinkhorn_balance(
        random_cbounded_market(cfg.n, cfg.c, stream_key(cfg.master_seed, "market", t))
    )


def _build_rectangular(cfg: ExperimentConfig, t: int) -> CanonicalMarket:
    n, m = cfg.n, cfg.n - cfg.k
    if cfg.market is MarketKind.UNIFORM:
        return uniform_market(m, n)
    if cfg.market is MarketKind.PUBLIC_SCORES:
        a = cfg.c ** (2.0 * unit_uniforms(stream_key(cfg.master_seed, "public_a", t), n) - 1.0)
        b = cfg.c ** (2.0 * unit_uniforms(stream_key(cfg.master_seed, "public_b", t), m) - 1.0)
        return public_scores_market(a, b)
    seed = stream_key(cfg.master_seed, "market", t)
    a_raw = _log_uniform_raw(m, n, cfg.c, stream_key(seed, "a_raw"))
    b_raw = _log_uniform_raw(n, m, cfg.c, stream_key(seed, "b_raw"))
    return canonical_from_raw(a_raw, b_raw)


# --- trial bodies ------------------------------------------------------------


def _matching_stats(
    cfg: ExperimentConfig,
    t: int,
    kind: str,
    bal: BalancedMarket,
    matching: Matching,
    outcome,
    sample: np.ndarray,
) -> TrialRecord:
    if cfg.delta > 0.0:
        _, x_d, y_d = truncate_delta(matching, outcome, cfg.delta)
    else:
        x_d, y_d = outcome.value_men, outcome.value_women
    lam_ysum = float(y_d.sum())
    fit = best_fit_exponential(sample)
    return TrialRecord(
        trial_id=t,
        matching_kind=kind,
        lambda_fit=fit.rate,
        lambda_ysum=lam_ysum,
        ks_fit=fit.ks_distance,
        ks_ysum=ks_distance_to_exp(sample, lam_ysum),
        hyperbola=hyperbola_product(x_d, y_d, bal.n),
        dispersion=eig_dispersion(bal.M, outcome.value_women, cfg.zeta)[1],
        rank_ratio_frac=rank_value_ratio_report(outcome, bal.phi, cfg.theta),
        proposal_count=outcome.proposal_count,
    )


def _value_family_records(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    trial_seed = stream_key(cfg.master_seed, "trial", t)
    bal = _build_balanced(cfg, t)
    values = sample_latent(bal, trial_seed)
    prefs = prefs_from_latent(values)
    records = []
    for side, kind in ((Side.MEN, "mosm"), (Side.WOMEN, "wosm")):
        matching, outcome = deferred_acceptance(prefs, side, values)
        if cfg.experiment is ExperimentKind.RANK_DIST:
            sample = rescaled_ranks(outcome.rank_men, bal.phi)
        else:
            sample = outcome.value_men
        records.append(_matching_stats(cfg, t, kind, bal, matching, outcome, sample))
    return records


def _approx_stable_records(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    trial_seed = stream_key(cfg.master_seed, "trial", t)
    bal = _build_balanced(cfg, t)
    values = sample_latent(bal, trial_seed)
    prefs = prefs_from_latent(values)
    matching, outcome = deferred_acceptance(prefs, Side.MEN, values)

    # Perturb the stable matching by k random partner swaps.
    mu = list(matching.mu)
    key = stream_key(trial_seed, "swaps")
    cursor = 0

    def draw_index() -> int:
        nonlocal cursor
        u = unit_uniforms(key, 1, offset=cursor)[0]
        cursor += 1
        return int(u * cfg.n)

    for _ in range(cfg.k):
        i1 = draw_index()
        i2 = draw_index()
        while i2 == i1:
            i2 = draw_index()
        mu[i1], mu[i2] = mu[i2], mu[i1]
    perturbed = Matching(mu=tuple(mu), n_women=cfg.n)
    pert_outcome = outcome_of(perturbed, values, proposal_count=outcome.proposal_count)

    alpha_cert, _ = greedy_alpha_certificate(perturbed, values)
    record = _matching_stats(
        cfg, t, "perturbed", bal, perturbed, pert_outcome, pert_outcome.value_men
    )
    return [TrialRecord(**{**_as_dict(record), "alpha_cert": alpha_cert})]


def _imbalance_records(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    trial_seed = stream_key(cfg.master_seed, "trial", t)
    n, m = cfg.n, cfg.n - cfg.k
    rect = _build_rectangular(cfg, t)
    bal = sinkhorn_balance(backfill_imbalanced(rect, cfg.k))
    values = sample_latent(bal, trial_seed)

    # The real market is the first m rows/columns of the extension's values.
    rect_values = LatentValues(X=values.X[:m, :], Y=values.Y[:, :m], seed=trial_seed)
    rect_prefs = prefs_from_latent(rect_values)
    rect_match, rect_outcome = deferred_acceptance(rect_prefs, Side.MEN, rect_values)

    # Completion check: with every woman ranking the k added men below all
    # real men, square DA must restrict to the rectangular DA exactly.
    women_completed = np.hstack(
        [np.argsort(rect_values.Y, axis=1), np.tile(np.arange(m, n), (n, 1))]
    )
    completed = PreferenceProfile(
        men_prefs=np.argsort(values.X, axis=1), women_prefs=women_completed
    )
    completed_match, _ = deferred_acceptance(completed, Side.MEN)
    agree = completed_match.mu[:m] == rect_match.mu

    if cfg.delta > 0.0:
        _, x_d, y_d = truncate_delta(rect_match, rect_outcome, cfg.delta)
    else:
        x_d, y_d = rect_outcome.value_men, rect_outcome.value_women
    lam_ysum = float(y_d.sum())
    sample = rect_outcome.value_men
    fit = best_fit_exponential(sample)
    return [
        TrialRecord(
            trial_id=t,
            matching_kind="mosm",
            lambda_fit=fit.rate,
            lambda_ysum=lam_ysum,
            ks_fit=fit.ks_distance,
            ks_ysum=ks_distance_to_exp(sample, lam_ysum),
            hyperbola=hyperbola_product(x_d, y_d, m),
            proposal_count=rect_outcome.proposal_count,
            da_agree=int(agree),
        )
    ]


def _stable_count_records(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    trial_seed = stream_key(cfg.master_seed, "trial", t)
    bal = _build_balanced(cfg, t)
    values = sample_latent(bal, trial_seed)
    count = len(enumerate_stable(prefs_from_latent(values)))
    return [TrialRecord(trial_id=t, matching_kind="all", stable_count=count)]


def _bounds_records(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    trial_seed = stream_key(cfg.master_seed, "trial", t)
    records = []

    # Weighted-sum lower tail: fixed weights, many unit-exponential batches.
    n = cfg.n
    u01 = unit_uniforms(stream_key(trial_seed, "chernoff_u"), n)
    weights = 2.0 ** (2.0 * u01 - 1.0)
    weights *= n / weights.sum()
    z = exponentials(
        stream_key(trial_seed, "chernoff_z"), np.ones((cfg.chernoff_samples, n))
    )
    dots = z @ weights
    for t_val in cfg.chernoff_t:
        records.append(
            TrialRecord(
                trial_id=t,
                matching_kind=f"chernoff_t={t_val:g}",
                observed=float(np.mean(dots <= t_val * n)),
                bound=chernoff_lower_tail(weights, t_val),
            )
        )

    # Empirical-CDF deviation: draws with rates jittered inside [1-band, 1+band]
    # (each within KS distance ~band/e <= dkw_delta of the unit exponential).
    e_count, dn = cfg.dkw_experiments, cfg.dkw_n
    jitter = unit_uniforms(stream_key(trial_seed, "dkw_rates"), e_count * dn)
    rates = 1.0 + cfg.dkw_band * (2.0 * jitter.reshape(e_count, dn) - 1.0)
    xs = np.sort(exponentials(stream_key(trial_seed, "dkw_x"), rates), axis=1)
    cdf = -np.expm1(-xs)
    i = np.arange(1, dn + 1, dtype=np.float64) / dn
    dev = np.maximum(
        (i[None, :] - cdf).max(axis=1), (cdf - i[None, :] + 1.0 / dn).max(axis=1)
    )
    for eps in cfg.dkw_eps:
        records.append(
            TrialRecord(
                trial_id=t,
                matching_kind=f"dkw_eps={eps:g}",
                observed=float(np.mean(dev > 2.0 * cfg.dkw_delta + eps)),
                bound=dkw_bound(dn, cfg.dkw_delta, eps),
            )
        )
    return records


_TRIAL_BODIES = {
    ExperimentKind.VALUE_DIST: _value_family_records,
    ExperimentKind.RANK_DIST: _value_family_records,
    ExperimentKind.HYPERBOLA: _value_family_records,
    ExperimentKind.APPROX_STABLE: _approx_stable_records,
    ExperimentKind.IMBALANCE: _imbalance_records,
    ExperimentKind.STABLE_COUNT: _stable_count_records,
    ExperimentKind.BOUNDS: _bounds_records,
}


def run_trial(cfg: ExperimentConfig, t: int) -> list[TrialRecord]:
    """All records of trial t; a pure function of (cfg, t)."""
    return _TRIAL_BODIES[cfg.experiment](cfg, t)


def _run_trial_star(args: tuple[ExperimentConfig, int]) -> list[TrialRecord]:
    return run_trial(*args)


def effective_workers(cfg: ExperimentConfig) -> int:
    env = os.environ.get("MML_WORKERS")
    if env is not None:
        try:
            workers = int(env)
        except ValueError:
            raise ConfigError(f"MML_WORKERS must be an integer, got {env!r}") from None
        if workers < 1:
            raise ConfigError("MML_WORKERS must be >= 1")
        return workers
    return cfg.workers


def run_experiment(
    cfg: ExperimentConfig,
) -> tuple[dict, list[TrialRecord]]:
    """Run all trials (in parallel if configured) and summarize.

    On KeyboardInterrupt the records collected so far are summarized and
    returned with ``summary["interrupted"] = True`` so callers can flush them.
    """
    workers = effective_workers(cfg)
    records: list[TrialRecord] = []
    interrupted = False
    try:
        if workers == 1:
            for t in range(cfg.trials):
                records.extend(run_trial(cfg, t))
        else:
            args = [(cfg, t) for t in range(cfg.trials)]
            chunk = max(1, cfg.trials // (workers * 4))
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
                for recs in pool.map(_run_trial_star, args, chunksize=chunk):
                    records.extend(recs)
    except KeyboardInterrupt:
        interrupted = True
    records.sort(key=lambda r: (r.trial_id, r.matching_kind))
    summary = summarize_experiment(cfg, records)
    if interrupted:
        summary["interrupted"] = True
        summary["passed"] = False
    return summary, records


# --- summaries ---------------------------------------------------------------


def _as_dict(record: TrialRecord) -> dict:
    return {name: getattr(record, name) for name in CSV_COLUMNS}


def summarize(records: list[TrialRecord]) -> dict[str, dict[str, float]]:
    """Per-column mean/std/min/max over the records where the column is set."""
    table: dict[str, dict[str, float]] = {}
    for column in CSV_COLUMNS:
        if column in ("trial_id", "matching_kind"):
            continue
        values = np.array(
            [getattr(r, column) for r in records if getattr(r, column) is not None],
            dtype=np.float64,
        )
        if values.size == 0:
            continue
        table[column] = {
            "count": int(values.size),
            "mean": float(values.mean()),
            "std": float(values.std(ddof=1)) if values.size > 1 else 0.0,
            "min": float(values.min()),
            "max": float(values.max()),
        }
    return table


def _fraction_check(
    name: str, values: list[float], limit: float, pass_fraction: float
) -> dict:
    ok = sum(1 for v in values if v <= limit)
    frac = ok / len(values) if values else 0.0
    return {
        "name": name,
        "value": frac,
        "threshold": pass_fraction,
        "op": ">=",
        "passed": bool(frac >= pass_fraction - 1e-12),
    }


def _checks_for(cfg: ExperimentConfig, records: list[TrialRecord]) -> list[dict]:
    kind = cfg.experiment
    checks: list[dict] = []
    pass_fraction = cfg.tol("pass_fraction", 0.9)

    def rows(matching_kind: str) -> list[TrialRecord]:
        return [r for r in records if r.matching_kind == matching_kind]

    if kind in (ExperimentKind.VALUE_DIST, ExperimentKind.HYPERBOLA):
        for mk in ("mosm", "wosm"):
            sel = rows(mk)
            if not sel:
                continue
            if kind is ExperimentKind.VALUE_DIST:
                checks.append(
                    _fraction_check(
                        f"ks_ysum_within[{mk}]",
                        [r.ks_ysum for r in sel],
                        cfg.tol("ks", 0.05),
                        pass_fraction,
                    )
                )
            else:
                checks.append(
                    _fraction_check(
                        f"hyperbola_within[{mk}]",
                        [abs(r.hyperbola - 1.0) for r in sel],
                        cfg.tol("hyperbola_err", 0.15),
                        pass_fraction,
                    )
                )
    elif kind is ExperimentKind.RANK_DIST:
        # Man-proposing ranks concentrate on a handful of lattice points, so
        # the continuous-fit check is only meaningful on the wosm rows.
        sel = rows("wosm")
        if sel:
            checks.append(
                _fraction_check(
                    "rank_ks_fit_within[wosm]",
                    [r.ks_fit for r in sel],
                    cfg.tol("ks", 0.05),
                    pass_fraction,
                )
            )
    elif kind is ExperimentKind.APPROX_STABLE:
        checks.append(
            _fraction_check(
                "alpha_cert_within",
                [r.alpha_cert for r in records],
                cfg.tol("alpha", 0.05),
                pass_fraction,
            )
        )
        checks.append(
            _fraction_check(
                "ks_fit_within",
                [r.ks_fit for r in records],
                cfg.tol("ks", 0.05),
                pass_fraction,
            )
        )
    elif kind is ExperimentKind.IMBALANCE:
        checks.append(
            _fraction_check(
                "ks_ysum_within",
                [r.ks_ysum for r in records],
                cfg.tol("ks", 0.05),
                pass_fraction,
            )
        )
        agree = all(r.da_agree == 1 for r in records)
        checks.append(
            {
                "name": "da_agrees_with_completion",
                "value": float(agree),
                "threshold": 1.0,
                "op": ">=",
                "passed": bool(agree),
            }
        )
    elif kind is ExperimentKind.STABLE_COUNT:
        counts = [r.stable_count for r in records]
        mean = sum(counts) / len(counts) if counts else math.nan
        target = cfg.tol("target", math.nan)
        margin = cfg.tol("margin", math.nan)
        if not math.isnan(target) and not math.isnan(margin):
            checks.append(
                {
                    "name": "mean_stable_count_near_target",
                    "value": abs(mean - target),
                    "threshold": margin,
                    "op": "<=",
                    "passed": bool(abs(mean - target) <= margin),
                }
            )
    elif kind is ExperimentKind.BOUNDS:
        excess = max((r.observed - r.bound for r in records), default=-math.inf)
        checks.append(
            {
                "name": "bounds_respected",
                "value": excess,
                "threshold": 0.0,
                "op": "<=",
                "passed": bool(excess <= 0.0),
            }
        )
    return checks


def summarize_experiment(cfg: ExperimentConfig, records: list[TrialRecord]) -> dict:
    checks = _checks_for(cfg, records)
    return {
        "experiment": cfg.experiment.value,
        "market": cfg.market.value,
        "n": cfg.n,
        "trials": cfg.trials,
        "master_seed": cfg.master_seed,
        "records": len(records),
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
        "stats": summarize(records),
    }


def format_summary(summary: dict) -> str:
    """Human-readable table form of a summary dict."""
    lines = [
        f"experiment: {summary['experiment']}  market: {summary.get('market', '-')}  "
        f"n={summary['n']}  trials={summary['trials']}  records={summary['records']}"
    ]
    if summary.get("interrupted"):
        lines.append("INTERRUPTED: partial results only")
    if summary["checks"]:
        lines.append("")
        lines.append(f"{'check':<34} {'value':>12} {'op':>3} {'threshold':>10}  verdict")
        for c in summary["checks"]:
            lines.append(
                f"{c['name']:<34} {c['value']:>12.6g} {c['op']:>3} "
                f"{c['threshold']:>10.6g}  {'PASS' if c['passed'] else 'FAIL'}"
            )
        lines.append(f"overall: {'PASS' if summary['passed'] else 'FAIL'}")
    lines.append("")
    lines.append(f"{'statistic':<18} {'count':>6} {'mean':>12} {'std':>12} {'min':>12} {'max':>12}")
    for name, row in summary["stats"].items():
        lines.append(
            f"{name:<18} {row['count']:>6d} {row['mean']:>12.6g} {row['std']:>12.6g} "
            f"{row['min']:>12.6g} {row['max']:>12.6g}"
        )
    return "\n".join(lines) + "\n"


# --- record serialization ----------------------------------------------------


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def records_to_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for record in records:
        writer.writerow([_format_cell(getattr(record, col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def records_from_csv(text: str) -> list[TrialRecord]:
    reader = csv.DictReader(io.StringIO(text))
    records = []
    for row in reader:
        kwargs = {}
        for column in CSV_COLUMNS:
            cell = row.get(column, "")
            if column == "matching_kind":
                kwargs[column] = cell
            elif cell == "" or cell is None:
                kwargs[column] = None
            elif column in _INT_COLUMNS:
                kwargs[column] = int(cell)
            else:
                kwargs[column] = float(cell)
        records.append(TrialRecord(**kwargs))
    return records


def records_to_jsonl(records: list[TrialRecord]) -> str:
    lines = [
        json.dumps({k: v for k, v in _as_dict(r).items() if v is not None})
        for r in records
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def write_outputs(out_dir, cfg: ExperimentConfig, summary: dict, records: list[TrialRecord]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "trials.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(records_to_csv(records))
    with open(os.path.join(out_dir, "trials.jsonl"), "w", encoding="utf-8") as fh:
        fh.write(records_to_jsonl(records))
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=False)
        fh.write("\n")
    with open(os.path.join(out_dir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_summary(summary))
