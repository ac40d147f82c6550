import json

import numpy as np
import pytest

from nvnmr import cli
from nvnmr.dataio import read_csv, read_trace_csv

D_MODEL = json.dumps({"type": "polynomial",
                      "coefficients_mhz": [2877.7, 0.0, -2.6667e-6, -2.6889e-7],
                      "t_range_kelvin": [4.0, 450.0]})


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_simulate_ramsey_deterministic_bytes(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert run("simulate", "ramsey", "--detuning-khz", 5, "--b-gauss", 503,
                   "--points", 101, "--tau-max-us", 400, "--out", out) == 0
    assert (out_a / "ramsey.csv").read_bytes() == (out_b / "ramsey.csv").read_bytes()
    assert (out_a / "ramsey.json").read_bytes() == (out_b / "ramsey.json").read_bytes()


def test_simulate_ramsey_fringe_period(tmp_path):
    assert run("simulate", "ramsey", "--detuning-khz", 5, "--b-gauss", 503,
               "--tau-max-us", 400, "--points", 801, "--out", tmp_path) == 0
    tau, signal = read_trace_csv(tmp_path / "ramsey.csv", "ramsey")
    # tau = 0 is a fringe minimum (two pi/2 = pi); the next minimum sits one
    # full period later at 1/(5 kHz) = 200 us, with the crest at 100 us
    crest = tau[np.argmax(signal[: len(tau) // 2])]
    assert crest == pytest.approx(100.0, abs=2.0)
    window = (tau > 150.0) & (tau < 250.0)
    assert tau[window][np.argmin(signal[window])] == pytest.approx(200.0, abs=2.0)


def test_simulate_rabi_pi_time(tmp_path):
    # switch the driven-decay envelope off so the minimum sits exactly at t_pi
    config = tmp_path / "config.json"
    config.write_text('{"t_rabi_us": 1e12}')
    assert run("simulate", "rabi", "--rabi-khz", 2.5, "--b-gauss", 503,
               "--duration-max-us", 400, "--points", 401, "--config", config,
               "--out", tmp_path) == 0
    duration, signal = read_trace_csv(tmp_path / "rabi.csv", "rabi")
    assert duration[np.argmin(signal)] == pytest.approx(200.0, abs=1.0)


def test_simulate_odnmr_writes_sidecar(tmp_path):
    assert run("simulate", "odnmr", "--b-gauss", 503, "--rf-points", 51,
               "--out", tmp_path, "--seed", 9) == 0
    sidecar = json.loads((tmp_path / "odnmr.json").read_text())
    assert sidecar["protocol"] == "odnmr"
    assert sidecar["config"]["seed"] == 9
    assert sidecar["config"]["b_gauss"] == 503.0
    assert "output_dir" not in sidecar["config"]
    assert sidecar["provenance"]["config_sha256"]


def test_simulate_pump_and_trace(tmp_path):
    assert run("simulate", "pump", "--b-gauss", 500, "--out", tmp_path) == 0
    data = read_csv(tmp_path / "pump.csv", ("m_i", "population"))
    assert data["population"][0] > 0.95
    assert run("simulate", "trace", "--b-gauss", 503, "--initial", "zero",
               "--t-max-us", 2.0, "--points", 21, "--out", tmp_path) == 0
    t, rate = read_trace_csv(tmp_path / "fluorescence.csv", "fluorescence")
    assert rate[0] == 0.0 and rate[-1] > 0.0


def test_generate_and_fit_ramsey_round_trip(tmp_path):
    assert run("generate", "ramsey", "--detuning-khz", 5, "--b-gauss", 503,
               "--noise-relative", 0.01, "--seed", 7, "--out", tmp_path) == 0
    assert run("fit", "ramsey", tmp_path / "ramsey_synthetic.csv",
               "--out", tmp_path) == 0
    result = json.loads((tmp_path / "fit_ramsey.json").read_text())
    assert result["converged"]
    fitted = result["params"]["frequency_mhz"]
    sigma = result["stderr"]["frequency_mhz"]
    assert abs(fitted - 5e-3) <= max(2.0 * sigma, 1e-6)
    assert result["provenance"]["input_sha256"]


def test_generate_deterministic_given_seed(tmp_path):
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    for out in (out_a, out_b):
        assert run("generate", "rabi", "--noise-relative", 0.02, "--seed", 123,
                   "--points", 41, "--out", out) == 0
    assert (out_a / "rabi_synthetic.csv").read_bytes() == \
        (out_b / "rabi_synthetic.csv").read_bytes()


def test_generate_field_series_and_fit(tmp_path):
    assert run("generate", "field-series", "--method", "exact",
               "--out", tmp_path) == 0
    assert run("fit", "field-series", tmp_path / "field_series_synthetic.csv",
               "--out", tmp_path, "--a-perp-sigma-mhz", 0.01,
               "--b-drift-gauss", 0.3) == 0
    result = json.loads((tmp_path / "fit_field-series.json").read_text())
    assert abs(result["params"]["q_mhz"] + 4.9457) <= 0.3e-3
    assert abs(result["params"]["gamma_n_mhz_per_g"] - 3.075e-4) <= 0.3e-6
    assert result["systematics"]["q_a_perp_mhz"] > 0


def test_generate_temp_series_and_fit(tmp_path):
    d_model = tmp_path / "d.json"
    d_model.write_text(D_MODEL)
    assert run("generate", "temp-series", "--d-model", d_model,
               "--t-points", 30, "--out", tmp_path) == 0
    assert run("fit", "temp-series", tmp_path / "temp_series_synthetic.csv",
               "--d-model", d_model, "--out", tmp_path) == 0
    result = json.loads((tmp_path / "fit_temp-series.json").read_text())
    assert result["slope_hz_per_k"] == pytest.approx(-35.085, abs=0.05)
    assert result["params"]["a0_khz"] == pytest.approx(4949.473, abs=1e-3)


def test_fit_odmr_triplet(tmp_path):
    from nvnmr import lorentzian_comb_model
    comb = lorentzian_comb_model(2.2)
    grid = np.linspace(1509.0, 1518.0, 401)
    signal = comb(grid, center_mhz=1513.36, width_mhz=0.4, amp_low=-0.28,
                  amp_mid=-0.05, amp_high=-0.03, offset=1.0)
    rng = np.random.Generator(np.random.PCG64(1))
    noisy = signal * (1.0 + 0.01 * rng.standard_normal(len(grid)))
    path = tmp_path / "odmr.csv"
    path.write_text("f_mhz,signal\n" + "\n".join(
        f"{float(f)!r},{float(s)!r}" for f, s in zip(grid, noisy)) + "\n")
    assert run("fit", "odmr", path, "--out", tmp_path) == 0
    result = json.loads((tmp_path / "fit_odmr.json").read_text())
    assert result["params"]["center_mhz"] == pytest.approx(1513.36, abs=0.01)


def test_fit_contrast_curve(tmp_path):
    from nvnmr import ReadoutModel
    model = ReadoutModel()
    grid = np.linspace(400.0, 600.0, 81)
    rows = "\n".join(f"{float(b)!r},{model.contrast_curve(float(b))!r}"
                     for b in grid)
    path = tmp_path / "contrast.csv"
    path.write_text("b_gauss,contrast\n" + rows + "\n")
    assert run("fit", "contrast", path, "--out", tmp_path) == 0
    result = json.loads((tmp_path / "fit_contrast.json").read_text())
    assert result["params"]["center"] == pytest.approx(485.0, abs=0.01)
    assert result["params"]["fwhm"] == pytest.approx(90.0, abs=0.01)
    assert result["params"]["height"] == pytest.approx(0.038, abs=1e-4)


def test_calc_outputs(capsys):
    assert run("calc", "calibrate-field", "--f-plus", 4279.9,
               "--f-minus", 1460.1) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["b_gauss"] == pytest.approx(503.0, abs=0.005)

    assert run("calc", "q-slope", "--t-kelvin", 297) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["slope_hz_per_k"] == pytest.approx(-35.085, abs=0.01)

    assert run("calc", "sensitivity", "--contrast", 0.02, "--efficiency", 0.1,
               "--spins", 1e9, "--t2-star-s", 6e-4, "--tau-s", 1.0) == 0
    reference = json.loads(capsys.readouterr().out)["delta_omega_rad_per_s"]
    assert run("calc", "sensitivity", "--contrast", 0.04, "--efficiency", 0.1,
               "--spins", 1e9, "--t2-star-s", 6e-4, "--tau-s", 1.0) == 0
    doubled = json.loads(capsys.readouterr().out)["delta_omega_rad_per_s"]
    assert doubled == pytest.approx(reference / 2.0, rel=1e-12)


def test_exit_codes(tmp_path, capsys):
    bad_csv = tmp_path / "bad.csv"
    bad_csv.write_text("wrong,signal\n1,2\n")
    assert run("fit", "ramsey", bad_csv, "--out", tmp_path) == 2
    assert run("fit", "ramsey", tmp_path / "missing.csv") == 4
    assert run("calc", "calibrate-field", "--f-plus", 100, "--f-minus", 200) == 2
    assert run("simulate", "pump", "--b-gauss", 500, "--horizon-us", 0.01,
               "--out", tmp_path) == 3
    config = tmp_path / "config.json"
    config.write_text('{"mystery_knob": 1}')
    assert run("simulate", "rabi", "--config", config, "--out", tmp_path) == 2
    capsys.readouterr()


def test_config_file_drives_simulation(tmp_path):
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"b_gauss": 484.0, "seed": 42,
                                  "contrast_c0": 0.05}))
    assert run("simulate", "rabi", "--config", config, "--points", 41,
               "--duration-max-us", 400, "--out", tmp_path) == 0
    sidecar = json.loads((tmp_path / "rabi.json").read_text())
    assert sidecar["config"]["b_gauss"] == 484.0
    assert sidecar["config"]["contrast_c0"] == 0.05
    assert sidecar["config"]["seed"] == 42
    # CLI override beats the file
    assert run("simulate", "rabi", "--config", config, "--b-gauss", 503,
               "--points", 41, "--out", tmp_path) == 0
    sidecar = json.loads((tmp_path / "rabi.json").read_text())
    assert sidecar["config"]["b_gauss"] == 503.0
