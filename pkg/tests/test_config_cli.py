import json
import os

import numpy as np
import pytest

from thzirs.cli import main, parse_seed_list
from thzirs.config import (
    ConfigError,
    ExperimentConfig,
    config_from_dict,
    config_to_dict,
    load_config,
)
from thzirs.experiment import load_report, resolve_bands


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


FAST = {
    "room": {"length_m": 8.0, "width_m": 5.0},
    "ues": {"count": 2},
    "bands": {"centers_ghz": [225.0, 275.0]},
    "radio": {"element_count": 8, "rate_floor_bps": 1e9},
    "search": {"grid_step_x_m": 2.0, "grid_step_y_m": 2.0},
    "runner": {"seeds": [1, 2, 3]},
}


def test_default_plan_slides_past_absorption_peaks():
    config = ExperimentConfig()
    assert config.band_centers_ghz is None
    assert config.auto_band_range_ghz == (200.0, 400.0)
    bands = resolve_bands(config)
    centers = [b.center_hz / 1e9 for b in bands]
    np.testing.assert_allclose(centers, [225.0, 275.0, 334.8], atol=0.05)
    for b in bands:
        assert b.bandwidth_hz == pytest.approx(50e9)
        assert b.noise_psd_w_per_hz == pytest.approx(10.0 ** -19.4, rel=1e-12)


def test_explicit_centers_echo_verbatim():
    config = ExperimentConfig(band_centers_ghz=(225.0, 275.0, 305.0, 355.0))
    assert config.band_centers_ghz == (225.0, 275.0, 305.0, 355.0)
    assert config.auto_band_range_ghz is None
    centers = [b.center_hz / 1e9 for b in resolve_bands(config)]
    np.testing.assert_allclose(centers, [225.0, 275.0, 305.0, 355.0], rtol=1e-15)

    # order and overlap are the caller's business
    config = ExperimentConfig(band_centers_ghz=(300.0, 280.0))
    assert config.band_centers_ghz == (300.0, 280.0)


def test_explicit_plan_wins_over_auto_range():
    config = ExperimentConfig(
        band_centers_ghz=(250.0,), auto_band_range_ghz=(200.0, 400.0)
    )
    assert config.auto_band_range_ghz is None
    centers = [b.center_hz / 1e9 for b in resolve_bands(config)]
    assert centers == [250.0]


def test_dict_round_trip_is_identity():
    for config in (
        ExperimentConfig(),
        ExperimentConfig(
            band_centers_ghz=(305.0, 225.0),
            element_count=8,
            seeds=(3, 1, 4),
            ue_counts=(1, 2, 4),
            relative_humidity_pct=0.0,
        ),
    ):
        again = config_from_dict(config_to_dict(config))
        assert again == config


def test_unknown_sections_and_keys_rejected():
    with pytest.raises(ConfigError):
        config_from_dict({"rooms": {}})
    with pytest.raises(ConfigError):
        config_from_dict({"room": {"lengthz_m": 4.0}})
    with pytest.raises(ConfigError):
        config_from_dict({"room": 7.0})
    with pytest.raises(ConfigError):
        config_from_dict([1, 2])


def test_empty_config_file_means_defaults(tmp_path):
    path = tmp_path / "empty.json"
    path.write_text("  \n\t ", encoding="utf-8")
    assert load_config(str(path)) == ExperimentConfig()


def test_unreadable_or_malformed_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config(str(bad))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"room_length_m": -1.0},
        {"ap_position_m": (9.0, 0.0, 2.0)},
        {"ue_height_m": 3.5},
        {"ue_count": 0},
        {"relative_humidity_pct": 120.0},
        {"band_width_ghz": 0.0},
        {"band_centers_ghz": (20.0,)},
        {"band_centers_ghz": ()},
        {"band_centers_ghz": None, "auto_band_range_ghz": None},
        {"auto_band_range_ghz": (400.0, 200.0)},
        {"element_count": 0},
        {"spacing_m": 0.0},
        {"p_max_w": 0.0},
        {"rate_floor_bps": -1.0},
        {"grid_step_x_m": 0.0},
        {"inner_tolerance": 0.0},
        {"seeds": ()},
        {"seeds": (-3,)},
        {"algorithms": ("bcs", "newton")},
        {"ue_counts": (0,)},
        {"sweep_step_ghz": 0.0},
    ],
)
def test_invalid_settings_rejected(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kwargs)


def test_explicit_ue_positions_set_the_count():
    config = ExperimentConfig(
        ue_positions_m=((1.0, 2.0, 1.0), (2.0, 3.0, 1.5), (4.0, 7.0, 0.5))
    )
    assert config.ue_count == 3


def test_noise_psd_combines_floor_and_figure():
    assert ExperimentConfig(noise_figure_db=0.0).noise_psd_w_per_hz() == pytest.approx(
        3.981071705534986e-21, rel=1e-12
    )
    assert ExperimentConfig().noise_psd_w_per_hz() == pytest.approx(
        10.0 ** -19.4, rel=1e-12
    )


def test_parse_seed_list_forms():
    assert parse_seed_list("7") == (7,)
    assert parse_seed_list("1,4,9") == (1, 4, 9)
    assert parse_seed_list("3..6") == (3, 4, 5, 6)
    assert parse_seed_list(" 2..2 ") == (2,)
    for bad in ("a..b", "3..1", "x,y", ""):
        with pytest.raises(ConfigError):
            parse_seed_list(bad)


def test_cli_usage_problems_exit_1(tmp_path, capsys):
    assert main([]) == 1
    assert main(["optimize", "--config", str(tmp_path / "nope.json"),
                 "--algo", "bcs", "--seed", "1"]) == 1
    cfg = write_config(tmp_path, FAST)
    assert main(["optimize", "--config", cfg, "--algo", "sorcery", "--seed", "1"]) == 1
    capsys.readouterr()


def test_cli_band_plan_prints_the_plan(tmp_path, capsys):
    cfg = write_config(tmp_path, FAST)
    assert main(["band-plan", "--config", cfg]) == 0
    out = capsys.readouterr().out
    assert "band 1: center=225.000 GHz" in out
    assert "band 2: center=275.000 GHz" in out
    assert "K(center)=" in out


def test_cli_optimize_reports_and_exits_clean(tmp_path, capsys):
    cfg = write_config(tmp_path, FAST)
    assert main(["optimize", "--config", cfg, "--algo", "minidis", "--seed", "3"]) == 0
    out = capsys.readouterr().out
    assert "algo=minidis seed=3 U=2" in out
    assert "feasible=true" in out


def test_cli_optimize_signals_infeasible(tmp_path, capsys):
    payload = {**FAST, "radio": {**FAST["radio"], "rate_floor_bps": 1e15}}
    cfg = write_config(tmp_path, payload)
    assert main(["optimize", "--config", cfg, "--algo", "minidis", "--seed", "3"]) == 2
    assert "feasible=false" in capsys.readouterr().out


def test_cli_absorption_sweep_writes_csv(tmp_path, capsys):
    payload = {**FAST, "sweep": {"distances_m": [5.0, 20.0], "step_ghz": 10.0}}
    cfg = write_config(tmp_path, payload)
    out_csv = tmp_path / "sweep.csv"
    assert main(["absorption-sweep", "--config", cfg, "--out", str(out_csv)]) == 0
    assert "wrote 21 rows" in capsys.readouterr().out

    lines = out_csv.read_text().strip().split("\n")
    assert lines[0] == "f_hz,K_per_m,gain_db_d1,gain_db_d2"
    assert len(lines) == 22
    table = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert table[0, 0] == 200e9 and table[-1, 0] == 400e9
    # more distance, less gain, at every frequency
    assert np.all(table[:, 2] > table[:, 3])

    again = tmp_path / "sweep2.csv"
    main(["absorption-sweep", "--config", cfg, "--out", str(again)])
    capsys.readouterr()
    assert again.read_bytes() == out_csv.read_bytes()


def test_cli_monte_carlo_outputs_and_replay(tmp_path, capsys):
    payload = {**FAST, "runner": {"seeds": [1, 2], "ue_counts": [1, 2]}}
    cfg = write_config(tmp_path, payload)
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    assert main(["monte-carlo", "--config", cfg, "--out", str(out_a)]) == 0
    assert main(["monte-carlo", "--config", cfg, "--out", str(out_b)]) == 0
    capsys.readouterr()

    for name in ("summary.csv", "aggregate.csv", "timing.csv", "report.json"):
        assert (out_a / name).is_file()
    # rates and aggregates replay byte for byte; wallclock may not
    for name in ("summary.csv", "aggregate.csv"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    report = load_report(str(out_a / "report.json"))
    assert not report.failures
    assert len(report.rows) == 2 * 2 * 4
    head = (out_a / "summary.csv").read_text().split("\n")[0]
    assert head == "seed,algo,U,sum_rate_bps,feasible"


def test_cli_monte_carlo_worker_count_is_invisible(tmp_path, capsys):
    payload = {**FAST, "runner": {"seeds": [5, 6], "ue_counts": [2]}}
    cfg = write_config(tmp_path, payload)
    out_a = tmp_path / "w1"
    out_b = tmp_path / "w2"
    assert main(["monte-carlo", "--config", cfg, "--out", str(out_a),
                 "--workers", "1"]) == 0
    old = os.environ.get("PLAN_THREADS")
    os.environ["PLAN_THREADS"] = "2"
    try:
        assert main(["monte-carlo", "--config", cfg, "--out", str(out_b)]) == 0
    finally:
        if old is None:
            os.environ.pop("PLAN_THREADS", None)
        else:
            os.environ["PLAN_THREADS"] = old
    capsys.readouterr()
    assert (out_a / "summary.csv").read_bytes() == (out_b / "summary.csv").read_bytes()


def test_cli_seed_override_narrows_the_batch(tmp_path, capsys):
    payload = {**FAST, "runner": {"seeds": [1, 2, 3], "ue_counts": [1]}}
    cfg = write_config(tmp_path, payload)
    out = tmp_path / "narrow"
    assert main(["monte-carlo", "--config", cfg, "--seeds", "2..3",
                 "--out", str(out)]) == 0
    capsys.readouterr()
    body = (out / "summary.csv").read_text().strip().split("\n")[1:]
    seeds = sorted({int(ln.split(",")[0]) for ln in body})
    assert seeds == [2, 3]
