import numpy as np

from fedcontinual.data.synth import DEFAULT_FEATURES, FeatureSpec, SynthConfig, synth_generate


def test_noise_free_values_are_exact_sinusoids():
    feats = {"TEMP": FeatureSpec(10.0, 5.0, 2.0)}
    cfg = SynthConfig(n_clients=1, n_days=10, noise=0.0, season_period_days=8,
                      features=feats)
    (s,) = synth_generate(cfg, 0)
    t = np.arange(240) / 24.0
    hour = np.arange(240) % 24
    want = 10 + 5 * np.sin(2 * np.pi * t / 8) + 2 * np.sin(2 * np.pi * (hour - 6) / 24)
    np.testing.assert_allclose(s.frame["TEMP"].to_numpy(), want, atol=1e-12)
    assert s.frame["PM2.5"].isna().all()


def test_same_seed_same_series():
    cfg = SynthConfig(n_clients=2, n_days=5, missing_rate=0.1)
    a, b = synth_generate(cfg, 3), synth_generate(cfg, 3)
    for x, y in zip(a, b):
        assert x.frame.equals(y.frame)
    c = synth_generate(cfg, 4)
    assert not a[0].frame.equals(c[0].frame)


def test_opposite_phases_are_anticorrelated():
    feats = {"TEMP": FeatureSpec(0.0, 5.0, 0.0)}
    cfg = SynthConfig(n_clients=2, n_days=60, noise=0.0, season_period_days=20,
                      phase_offsets=(0.0, np.pi), features=feats)
    a, b = synth_generate(cfg, 0)
    r = np.corrcoef(a.frame["TEMP"], b.frame["TEMP"])[0, 1]
    assert r < -0.9


def test_client_offset_and_trend():
    feats = {"TEMP": FeatureSpec(0.0, 0.0, 0.0, noise_scale=2.0, trend=1.0)}
    cfg = SynthConfig(n_clients=2, n_days=2, noise=0.0, client_offsets=(0.0, 1.5),
                      features=feats)
    a, b = synth_generate(cfg, 0)
    np.testing.assert_allclose(b.frame["TEMP"] - a.frame["TEMP"], 3.0)
    assert a.frame["TEMP"].iloc[24] == 1.0


def test_defaults_cover_every_numeric_column_and_nonneg():
    (s,) = synth_generate(SynthConfig(n_clients=1, n_days=30, noise=1.0), 0)
    assert not s.frame[list(DEFAULT_FEATURES)].isna().any().any()
    assert (s.frame["RAIN"] >= 0).all()
    assert s.frame["wd"].notna().all()
