import numpy as np
import pytest

from lassolab import bounds, experiments
from lassolab.experiments import ConfigError, LambdaGrid, SweepConfig


def _tiny(**kw):
    base = dict(m=24, N=64, k=4, noise_levels=(0.0, 1e-2), trials=3,
                lambda_grid=LambdaGrid(count=12, min_factor=1e-2))
    base.update(kw)
    return SweepConfig(**base)


@pytest.fixture(scope="module")
def tiny_records():
    return experiments.run_sweep(_tiny(), workers=1)


def test_grid_modes():
    f = LambdaGrid(count=5, min_factor=1e-2).factors()
    assert f[0] == 1.0 and f[-1] == pytest.approx(1e-2) and np.all(np.diff(f) < 0)
    f = LambdaGrid(mode="linear", count=3, min_factor=0.5).factors()
    assert list(f) == [1.0, 0.75, 0.5]
    f = LambdaGrid(mode="explicit", values=(0.2, 1.5, 0.7)).factors()
    assert list(f) == [1.5, 0.7, 0.2]
    assert LambdaGrid().factors().size == 60


@pytest.mark.parametrize("kw", [dict(count=1), dict(min_factor=1.0), dict(mode="cubic"),
                                dict(mode="explicit")])
def test_grid_validation(kw):
    with pytest.raises(ConfigError):
        LambdaGrid(**kw)


def test_config_validation():
    with pytest.raises(ConfigError):
        SweepConfig(noise_levels=())
    with pytest.raises(ConfigError):
        SweepConfig(k=300)
    with pytest.raises(ConfigError):
        SweepConfig(delta_for_bounds=0.99)
    with pytest.raises(ConfigError):
        SweepConfig(signal_dist="uniform")


def test_config_parse_round_trip():
    cfg = _tiny(base_seed=9, warm_start=False, signal_dist="rademacher")
    text = experiments.format_config(cfg)
    assert experiments.parse_config(text) == cfg
    parsed = experiments.parse_config("m = 10\nN = 20  # comment\nk = 2\nlambda_grid.count = 4\n")
    assert (parsed.m, parsed.N, parsed.k, parsed.lambda_grid.count) == (10, 20, 2, 4)


@pytest.mark.parametrize("text", ["colour = red\n", "m = 4\nm = 5\n", "m 4\n", "trials = many\n",
                                  "noise_levels = \n", "lambda_grid.step = 2\n"])
def test_config_parse_errors(text):
    with pytest.raises(ConfigError):
        experiments.parse_config(text)


def test_record_shape(tiny_records):
    cfg = _tiny()
    assert len(tiny_records) == 2 * 12
    assert all(r.trials == cfg.trials and r.defects == 0 for r in tiny_records)
    assert list(experiments.SweepRecord.columns())[:3] == ["noise_level", "grid_index", "lambda"]


def test_monotone_onset(tiny_records):
    first = [r for r in tiny_records if r.grid_index == 0]
    assert all(r.lambda_over_lambda_inf == 1.0 and r.s_lambda_mean == 0 for r in first)


def test_bound_columns_reproducible(tiny_records):
    for r in tiny_records:
        again = experiments.bound_columns(r.delta, r.k, r.lambda_, r.mu, r.s_lambda_mean)
        for key, val in again.items():
            assert getattr(r, key) == val
        assert r.in_regime == (r.theta <= 1)


def test_regime_flags(tiny_records):
    noiseless = [r for r in tiny_records if r.noise_level == 0.0]
    assert all(r.in_regime and r.theta == 0 for r in noiseless)
    noisy = [r for r in tiny_records if r.noise_level > 0]
    for r in noisy:
        assert r.theta == pytest.approx(2 * r.mu / (r.lambda_ * np.sqrt(r.k)))


def test_near_threshold_behaviour():
    cfg = SweepConfig(m=40, N=128, k=6, noise_levels=(0.0,), trials=1,
                      lambda_grid=LambdaGrid(mode="explicit", values=(0.98,)))
    (r,) = experiments.run_sweep(cfg, workers=1)
    assert 1 <= r.s_lambda_mean <= 2
    assert r.l1_norm_mean < 0.1 * r.target_l1


def test_residual_overlay_and_ceiling(tiny_records):
    for r in tiny_records:
        if r.in_regime:
            assert r.rescaled_residual_mean <= r.residual_upper
            if r.residual_norm_mean > r.mu:
                assert r.l1_norm_mean <= r.target_l1 + 1e-10


def test_workers_do_not_change_output(tmp_path):
    cfg = _tiny(trials=2, noise_levels=(1e-2,))
    a = experiments.run_sweep(cfg, workers=1)
    b = experiments.run_sweep(cfg, workers=2)
    experiments.emit_all(a, tmp_path / "a")
    experiments.emit_all(b, tmp_path / "b")
    for f in sorted((tmp_path / "a").iterdir()):
        assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()


def test_cold_start_matches_warm():
    warm = experiments.run_sweep(_tiny(trials=1), workers=1)
    cold = experiments.run_sweep(_tiny(trials=1, warm_start=False), workers=1)
    for a, b in zip(warm, cold):
        assert a.s_lambda_mean == b.s_lambda_mean
        assert a.l1_norm_mean == pytest.approx(b.l1_norm_mean, rel=1e-8)


def test_emit_figures(tmp_path, tiny_records):
    written = experiments.emit_all(tiny_records, tmp_path)
    names = {p.name for p in written}
    for fig in experiments.FIGURES:
        assert f"{fig}_0.01.csv" in names and f"{fig}_0.csv" in names
        assert (tmp_path / f"{fig}_0.01.gp").read_text().count(f"'{fig}_0.01.csv'") >= 2
    header = (tmp_path / "support_0.01.csv").read_text().splitlines()[0]
    assert header == "lambda,s_lambda_mean,s_lambda_std,sparsity_limit,k"
    header = (tmp_path / "entropy_0.01.csv").read_text().splitlines()[0].split(",")
    assert header[0] == "lambda" and len(header) == 4
    sweep = (tmp_path / "sweep_0.01.csv").read_text().splitlines()
    assert sweep[0].split(",") == experiments.SweepRecord.columns()
    assert len(sweep) == 13


def test_emit_one_record(tmp_path, tiny_records):
    p = experiments.emit_figure_data(tiny_records[:1], "entropy", tmp_path / "e.csv")
    assert len(p.read_text().splitlines()) == 2
    assert (tmp_path / "e.gp").read_text().startswith("set datafile separator ','")
    with pytest.raises(ValueError):
        experiments.emit_figure_data(tiny_records, "histogram", tmp_path / "h.csv")
    with pytest.raises(ValueError):
        experiments.emit_figure_data([], "support", tmp_path / "s.csv")


def test_entropy_figure_values(tiny_records):
    rows = experiments.figure_rows(tiny_records, "entropy")
    for r, row in zip(tiny_records, rows):
        assert row["entropy_over_1_plus_delta"] == r.entropy_mean / (1 + r.delta)
        assert row["entropy_over_1_plus_delta"] <= row["s_lambda_over_1_plus_delta"] + 1e-12


def test_summary(tiny_records):
    summ = experiments.summarize(tiny_records)
    assert [s.noise_level for s in summ] == [0.0, 0.01]
    for s in summ:
        rows = [r for r in tiny_records if r.noise_level == s.noise_level]
        assert s.peak_support == max(r.s_lambda_mean for r in rows)
    assert "peak_s" in experiments.summary_table(summ)


def test_overlay_uses_configured_delta(tiny_records):
    beta = bounds.rnsp_from_ric(0.7).beta
    r = tiny_records[0]
    assert r.residual_upper == pytest.approx((beta + r.theta) * np.sqrt(r.k))
