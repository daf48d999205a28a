import math

import pytest

np = pytest.importorskip("numpy")
sosest = pytest.importorskip("sosest")


def test_config_round_trip_and_validation():
    cfg = sosest.Config()
    assert cfg.required_tx() == [24, 40, 55, 56, 65, 72, 88, 104, 120]
    back = sosest.Config.from_text(cfg.text())
    assert back.text() == cfg.text()
    with pytest.raises(sosest.ConfigError):
        sosest.Config.from_text("[medium]\nbackground_speed = 1500\n")
    with pytest.raises(sosest.MissingInputError):
        sosest.Config.from_file("/nonexistent/sosest.ini")


def test_ncc_recovers_a_sinusoid_shift():
    k = np.arange(50)
    a = np.sin(2 * math.pi * 0.1 * (np.arange(40) + 5))
    b = np.sin(2 * math.pi * 0.1 * (k - 2.5))
    lag, ncc, valid = sosest.ncc_delay_1d(a, b)
    assert valid
    assert abs(lag - 2.5) <= 0.05
    assert -1.0 <= ncc <= 1.0


def test_regression_hand_values():
    fit = sosest.fit_pattern([0.0, 1.0, 2.0], [0.0, 1.0, 0.0], method="ols")
    assert abs(fit["slope"]) < 1e-15
    assert abs(fit["intercept"] - 1.0 / 3.0) < 1e-15
    assert fit["r_squared"] == 0.0
    w = sosest.fit_pattern([0.0, 1.0, 1.0], [0.0, 0.0, 3.0], [1.0, 1.0, 2.0], method="weighted")
    assert w["slope"] == pytest.approx(2.0, rel=1e-12)


def test_linear_calibration_inverts_exactly():
    dc = np.arange(-40.0, 41.0)
    slopes = 1e-10 - 2.5e-9 * dc
    model = sosest.build_calibration(dc, slopes, degree=1)
    assert model.estimate_offset(model.evaluate(12.0)) == pytest.approx(12.0, abs=1e-6)
    report = sosest.evaluate_calibration(model, dc, slopes)
    assert report["num_test"] == 60
    assert report["test_rmse"] < 1e-6
    with pytest.raises(sosest.OutOfRangeError):
        model.estimate_offset(1.0)


def test_conventions():
    assert sosest.DELTA_CONVENTION == "delta_c=c_bf-c"
    assert sosest.corrected_sos(1540.0, 40.0) == 1500.0
    assert sosest.echo_shift_model(1500.0, 1500.0, 0.02) == 0.0


def test_quick_estimate_end_to_end():
    cfg = sosest.Config().quick()
    cfg.clear_inclusions()
    sweep = sosest.calibration_sweep(cfg)
    assert len(sweep["delta_c"]) == 9
    model = sosest.build_calibration(sweep["delta_c"], sweep["slope"], degree=1, train_every=2)
    channels = sosest.simulate(cfg)
    assert channels.has(cfg.tx_a) and channels.has(cfg.tx_b)
    est = sosest.estimate_sos(channels, model, cfg, 1530.0)
    assert math.isfinite(est["delta_c"])
    assert est["delta_c"] > 0.0
    assert est["corrected_sos"] == pytest.approx(1530.0 - est["delta_c"])
