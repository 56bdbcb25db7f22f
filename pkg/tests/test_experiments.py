"""Config parsing, the trial runner, summaries, and record serialization."""

import json
import math
from dataclasses import replace

import numpy as np
import pytest

from mml import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentKind,
    MarketKind,
    Side,
    TrialRecord,
    deferred_acceptance,
    expected_stable_count_mc,
    format_summary,
    load_config,
    parse_config,
    prefs_from_latent,
    records_from_csv,
    records_to_csv,
    records_to_jsonl,
    run_experiment,
    sample_latent,
    sinkhorn_balance,
    stream_key,
    summarize,
    summarize_experiment,
    uniform_market,
    write_outputs,
)
from mml.experiments import effective_workers

FULL_CONFIG = """
# exercise every key the parser knows about
experiment = bounds
market     = cbounded
n = 50
trials = 10
master_seed = 801
c = 2.5
delta = 0.1
k = 0
zeta = 0.3
theta = 0.6
workers = 2
chernoff_t = 0.1 0.3 0.5
chernoff_samples = 1000
dkw_eps = 0.1 0.2
dkw_n = 200
dkw_delta = 0.02
dkw_band = 0.02
dkw_experiments = 50
tol.ks = 0.04          # trailing comments are stripped
tol.pass_fraction = 0.85
"""

TINY_VALUE_DIST = """
experiment = value_dist
market = uniform
n = 30
trials = 4
master_seed = 11
delta = 0.1
"""


def test_parse_config_reads_all_keys():
    cfg = parse_config(FULL_CONFIG)
    assert cfg.experiment is ExperimentKind.BOUNDS
    assert cfg.market is MarketKind.CBOUNDED
    assert (cfg.n, cfg.trials, cfg.master_seed) == (50, 10, 801)
    assert (cfg.c, cfg.delta, cfg.zeta, cfg.theta) == (2.5, 0.1, 0.3, 0.6)
    assert cfg.workers == 2
    assert cfg.chernoff_t == (0.1, 0.3, 0.5)
    assert cfg.chernoff_samples == 1000
    assert cfg.dkw_eps == (0.1, 0.2)
    assert (cfg.dkw_n, cfg.dkw_delta, cfg.dkw_band, cfg.dkw_experiments) == (
        200,
        0.02,
        0.02,
        50,
    )
    assert cfg.tol("ks", 0.05) == 0.04
    assert cfg.tol("pass_fraction", 0.9) == 0.85
    # unset tolerance falls back to the caller's default
    assert cfg.tol("alpha", 0.07) == 0.07


def test_enum_names_ignore_case_and_separators():
    base = "n = 4\ntrials = 1\nmaster_seed = 0\n"
    for spelling in ("value_dist", "ValueDist", "VALUE-DIST", "value dist".replace(" ", "_")):
        cfg = parse_config(f"experiment = {spelling}\n" + base)
        assert cfg.experiment is ExperimentKind.VALUE_DIST
    for spelling in ("public_scores", "Public-Scores", "PUBLICSCORES"):
        cfg = parse_config(f"experiment = value_dist\nmarket = {spelling}\n" + base)
        assert cfg.market is MarketKind.PUBLIC_SCORES


def test_malformed_lines_are_rejected():
    bad_texts = [
        ("experiment = value_dist\nn = 4\ntrials = 1\nmaster_seed = 0\nshoe_size = 9\n", "shoe_size"),
        ("experiment value_dist\n", "key = value"),
        ("experiment =\n", "no value"),
        ("experiment = value_dist\nn = four\ntrials = 1\nmaster_seed = 0\n", "n"),
        ("experiment = mystery\nn = 4\ntrials = 1\nmaster_seed = 0\n", "mystery"),
        ("experiment = value_dist\nmarket = bazaar\nn = 4\ntrials = 1\nmaster_seed = 0\n", "bazaar"),
    ]
    for text, fragment in bad_texts:
        with pytest.raises(ConfigError, match=fragment):
            parse_config(text)


def test_each_required_key_is_enforced():
    lines = {
        "experiment": "experiment = value_dist",
        "n": "n = 4",
        "trials": "trials = 1",
        "master_seed": "master_seed = 0",
    }
    for omitted in lines:
        text = "\n".join(line for key, line in lines.items() if key != omitted)
        with pytest.raises(ConfigError, match=omitted):
            parse_config(text)


def test_semantic_validation():
    def cfg_text(**overrides):
        data = {"experiment": "value_dist", "n": 4, "trials": 1, "master_seed": 0}
        data.update(overrides)
        return "\n".join(f"{k} = {v}" for k, v in data.items())

    cases = [
        (cfg_text(n=0), "n"),
        (cfg_text(trials=0), "trials"),
        (cfg_text(c=0.9), "c"),
        (cfg_text(delta=1.0), "delta"),
        (cfg_text(delta=-0.1), "delta"),
        (cfg_text(workers=0), "workers"),
        (cfg_text(k=-1), "k"),
        (cfg_text(experiment="stable_count", n=11), "n <= 10"),
        (cfg_text(experiment="imbalance", k=0), "k"),
        (cfg_text(experiment="imbalance", n=5, k=5), "k"),
    ]
    for text, fragment in cases:
        with pytest.raises(ConfigError, match=fragment):
            parse_config(text)
    # boundary values that must be accepted
    assert parse_config(cfg_text(delta=0.0)).delta == 0.0
    assert parse_config(cfg_text(c=1.0)).c == 1.0
    assert parse_config(cfg_text(experiment="stable_count", n=10)).n == 10
    assert parse_config(cfg_text(experiment="imbalance", n=5, k=4)).k == 4


def test_load_config_round_trips_file(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(FULL_CONFIG, encoding="utf-8")
    assert load_config(path) == parse_config(FULL_CONFIG)


def test_csv_round_trip_preserves_records():
    _, records = run_experiment(parse_config(TINY_VALUE_DIST))
    text = records_to_csv(records)
    header = text.splitlines()[0]
    assert header.split(",") == CSV_COLUMNS

    parsed = records_from_csv(text)
    assert parsed == records
    for record in parsed:
        assert isinstance(record.trial_id, int)
        assert isinstance(record.proposal_count, int)
        # columns this experiment never fills come back as None, not 0 or nan
        assert record.stable_count is None
        assert record.bound is None


def test_jsonl_skips_unset_fields():
    _, records = run_experiment(parse_config(TINY_VALUE_DIST))
    lines = records_to_jsonl(records).splitlines()
    assert len(lines) == len(records)
    for line, record in zip(lines, records):
        row = json.loads(line)
        assert row["trial_id"] == record.trial_id
        assert row["matching_kind"] == record.matching_kind
        assert None not in row.values()
        assert "stable_count" not in row


def test_records_arrive_sorted_by_trial_then_kind():
    _, records = run_experiment(parse_config(TINY_VALUE_DIST))
    keys = [(r.trial_id, r.matching_kind) for r in records]
    assert keys == sorted(keys)
    assert [k for _, k in keys[:2]] == ["mosm", "wosm"]


def test_worker_count_is_invisible_in_output():
    cfg = parse_config(TINY_VALUE_DIST)
    _, serial = run_experiment(cfg)
    _, parallel = run_experiment(replace(cfg, workers=3))
    assert records_to_csv(serial) == records_to_csv(parallel)


def test_effective_workers_env_override(monkeypatch):
    cfg = parse_config(TINY_VALUE_DIST)
    monkeypatch.delenv("MML_WORKERS", raising=False)
    assert effective_workers(cfg) == cfg.workers
    monkeypatch.setenv("MML_WORKERS", "3")
    assert effective_workers(cfg) == 3
    monkeypatch.setenv("MML_WORKERS", "zero")
    with pytest.raises(ConfigError, match="MML_WORKERS"):
        effective_workers(cfg)
    monkeypatch.setenv("MML_WORKERS", "0")
    with pytest.raises(ConfigError, match="MML_WORKERS"):
        effective_workers(cfg)


def test_stable_count_run_matches_direct_estimator():
    # The runner's per-trial pipeline on a uniform market draws the same
    # streams as the standalone estimator, so the two must agree exactly.
    cfg = parse_config(
        "experiment = stable_count\nmarket = uniform\nn = 3\ntrials = 40\nmaster_seed = 777\n"
    )
    _, records = run_experiment(cfg)
    counts = np.array([r.stable_count for r in records], dtype=np.float64)
    mean, stderr = expected_stable_count_mc(uniform_market(3), 40, 777)
    assert counts.mean() == mean
    assert math.isclose(counts.std(ddof=1) / math.sqrt(40), stderr, rel_tol=1e-12)


def test_fraction_check_boundary_is_inclusive():
    cfg = parse_config(
        "experiment = value_dist\nn = 100\ntrials = 20\nmaster_seed = 1\n"
        "tol.ks = 0.05\ntol.pass_fraction = 0.9\n"
    )

    def fake_records(n_good: int) -> list[TrialRecord]:
        return [
            TrialRecord(
                trial_id=i,
                matching_kind="mosm",
                ks_ysum=0.01 if i < n_good else 0.5,
            )
            for i in range(20)
        ]

    at_bar = summarize_experiment(cfg, fake_records(18))
    assert at_bar["checks"][0]["value"] == pytest.approx(0.9)
    assert at_bar["passed"]  # 18/20 == 0.9 meets a 0.9 bar exactly
    below = summarize_experiment(cfg, fake_records(17))
    assert not below["passed"]


def test_summarize_skips_unset_columns_and_lone_values():
    records = [
        TrialRecord(trial_id=0, matching_kind="all", stable_count=2),
        TrialRecord(trial_id=1, matching_kind="all", stable_count=5),
        TrialRecord(trial_id=2, matching_kind="all", stable_count=None, hyperbola=1.5),
    ]
    stats = summarize(records)
    assert set(stats) == {"stable_count", "hyperbola"}
    sc = stats["stable_count"]
    assert sc["count"] == 2
    assert sc["mean"] == pytest.approx(3.5)
    assert sc["std"] == pytest.approx(math.sqrt(4.5))
    assert (sc["min"], sc["max"]) == (2.0, 5.0)
    assert stats["hyperbola"]["std"] == 0.0  # single observation


def test_summary_structure_and_formatting():
    cfg = parse_config(TINY_VALUE_DIST)
    summary, records = run_experiment(cfg)
    assert summary["experiment"] == "value_dist"
    assert summary["market"] == "uniform"
    assert summary["records"] == len(records) == 2 * cfg.trials
    names = [c["name"] for c in summary["checks"]]
    assert names == ["ks_ysum_within[mosm]", "ks_ysum_within[wosm]"]
    assert summary["passed"] == all(c["passed"] for c in summary["checks"])

    text = format_summary(summary)
    assert "ks_ysum_within[mosm]" in text
    assert "overall: " in text
    assert "statistic" in text
    assert "INTERRUPTED" not in text
    partial = dict(summary, interrupted=True)
    assert "INTERRUPTED: partial results only" in format_summary(partial)


def test_write_outputs_creates_the_four_files(tmp_path):
    cfg = parse_config(TINY_VALUE_DIST)
    summary, records = run_experiment(cfg)
    out = tmp_path / "results"
    write_outputs(out, cfg, summary, records)
    assert sorted(p.name for p in out.iterdir()) == [
        "summary.json",
        "summary.txt",
        "trials.csv",
        "trials.jsonl",
    ]
    on_disk = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert on_disk["records"] == summary["records"]
    assert records_from_csv((out / "trials.csv").read_text(encoding="utf-8")) == records


def test_rank_and_proposal_laws_on_uniform_market():
    # With symmetric logit preferences the proposing side averages rank
    # ~log(n), the receiving side ~n/log(n), their product stays near n, and
    # man-proposing acceptance runs make ~n log(n) proposals in total.  The
    # windows below are several times wider than the observed spread.
    n, trials = 400, 8
    log_n = math.log(n)
    bal = sinkhorn_balance(uniform_market(n))
    for t in range(trials):
        values = sample_latent(bal, stream_key(424242, "trial", t))
        prefs = prefs_from_latent(values)
        for side in (Side.MEN, Side.WOMEN):
            _, outcome = deferred_acceptance(prefs, side, values)
            mean_prop = outcome.rank_men.mean() if side is Side.MEN else outcome.rank_women.mean()
            mean_recv = outcome.rank_women.mean() if side is Side.MEN else outcome.rank_men.mean()
            assert 0.5 * log_n <= mean_prop <= 3.0 * log_n
            assert 0.2 * n / log_n <= mean_recv <= 3.0 * n / log_n
            assert 0.5 <= mean_prop * mean_recv / n <= 2.0
            assert 0.3 * n * log_n <= outcome.proposal_count <= 3.0 * n * log_n
