"""Command-line front end: simulate, fit, calc and generate subcommands.

Outputs are deterministic: the same configuration and seed produce
byte-identical CSV/JSON files.  Exit codes: 0 success, 2 validation error,
3 non-convergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import analysis, dataio, effective, fitting, pulses, readout
from .analysis import (Q_VS_T_COEFFICIENTS_KHZ, QPolynomial, TemperatureSeries,
                       FieldSeries)
from .dataio import (ConfigError, SchemaError, TOOL_NAME, WorkbenchConfig,
                     dumps_json, provenance_block)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4


def _load_config(args) -> WorkbenchConfig:
    config = WorkbenchConfig.from_file(args.config) if args.config \
        else WorkbenchConfig()
    overrides = {}
    if getattr(args, "b_gauss", None) is not None:
        overrides["b_gauss"] = args.b_gauss
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["output_dir"] = args.out
    return config.replace(**overrides) if overrides else config


def _out_dir(config: WorkbenchConfig) -> Path:
    path = Path(config.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")
    print(path)


# ---------------------------------------------------------------------------
# simulate


def _build_trace(protocol: str, args, config: WorkbenchConfig) -> pulses.Trace:
    params = config.spin_parameters()
    model = config.readout_model()
    dec = config.decoherence()
    b = config.b_gauss
    if protocol == "odnmr":
        grid = np.linspace(args.rf_start_mhz, args.rf_stop_mhz, args.rf_points)
        return pulses.simulate_odnmr(params, b, grid, args.pulse_us,
                                     args.rabi_khz, model, dec)
    if protocol == "rabi":
        rf = args.rf_mhz
        if rf is None:
            rf = effective.transition_frequencies(params, b).f1_mhz
        durations = np.linspace(0.0, args.duration_max_us, args.points)
        return pulses.simulate_rabi(params, b, rf, args.rabi_khz, durations,
                                    model, dec)
    if protocol == "ramsey":
        pair = effective.transition_frequencies(params, b)
        base = pair.f1_mhz if args.transition == "f1" else pair.f2_mhz
        rf = base + args.detuning_khz * 1e-3
        taus = np.linspace(0.0, args.tau_max_us, args.points)
        return pulses.simulate_ramsey(params, b, rf, taus,
                                      pi2_duration_us=args.pi2_us,
                                      readout=model, dec=dec)
    raise ValueError(f"unknown protocol {protocol!r}")


_INITIAL_CHOICES = {"plus": (1.0, 0.0, 0.0), "zero": (0.0, 1.0, 0.0),
                    "minus": (0.0, 0.0, 1.0), "uniform": (1 / 3, 1 / 3, 1 / 3)}


def _cmd_simulate(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    if args.protocol == "pump":
        result = readout.pump_steady_state(config.rate_params(), config.b_gauss,
                                           horizon_us=args.horizon_us)
        dataio.write_csv(out / "pump.csv", ("m_i", "population"),
                         zip((1, 0, -1), result.ground_nuclear),
                         [f"{TOOL_NAME} pump steady state: ground-manifold "
                          "nuclear distribution",
                          f"b_gauss: {dataio.format_float(config.b_gauss)}"])
        print(out / "pump.csv")
        sidecar = {"protocol": "pump",
                   "params": {"b_gauss": config.b_gauss,
                              "horizon_us": args.horizon_us},
                   "ground_nuclear": list(result.ground_nuclear),
                   "populations": list(result.populations),
                   "residual_per_us": result.residual,
                   "config": config.parameters_dict(),
                   "provenance": provenance_block(config, seed=config.seed)}
        _write(out / "pump.json", dumps_json(sidecar))
        return EXIT_OK
    if args.protocol == "trace":
        initial = _INITIAL_CHOICES[args.initial]
        grid = np.linspace(0.0, args.t_max_us, args.points)
        trace = readout.fluorescence_trace(config.rate_params(), config.b_gauss,
                                           initial, grid)
    else:
        trace = _build_trace(args.protocol, args, config)
    csv_path = out / f"{trace.protocol}.csv"
    dataio.write_trace_csv(csv_path, trace)
    print(csv_path)
    sidecar = {"protocol": trace.protocol,
               "abscissa": trace.abscissa_name,
               "params": trace.params,
               "config": config.parameters_dict(),
               "provenance": provenance_block(config, seed=config.seed)}
    _write(out / f"{trace.protocol}.json", dumps_json(sidecar))
    return EXIT_OK


# ---------------------------------------------------------------------------
# fit


def _fit_result_json(kind, fit, config, input_path, extra=None) -> dict:
    payload = {"kind": kind,
               "params": {n: float(v) for n, v in zip(fit.param_names,
                                                      fit.values)},
               "stderr": {n: float(v) for n, v in zip(fit.param_names,
                                                      fit.stderr)},
               "free_names": list(fit.free_names),
               "covariance": [list(map(float, row)) for row in fit.covariance],
               "chi2_reduced": fit.chi2_reduced,
               "iterations": fit.iterations,
               "converged": fit.converged}
    if extra:
        payload.update(extra)
    payload["provenance"] = provenance_block(config, seed=config.seed,
                                             input_path=input_path)
    return payload


def _cmd_fit(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    kind = args.kind
    converged = True

    if kind in ("ramsey", "rabi"):
        x, y = dataio.read_trace_csv(args.input, kind)
        model = fitting.decaying_sinusoid_model()
        init = fitting.estimate_init(model, x, y)
        fit = fitting.fit_nonlinear(model, x, y, init)
        payload = _fit_result_json(kind, fit, config, args.input)
        converged = fit.converged
    elif kind == "odmr":
        data = dataio.read_csv(args.input, ("f_mhz", "signal"))
        fit = fitting.fit_lorentzian_comb(data["f_mhz"], data["signal"],
                                          args.spacing_mhz)
        payload = _fit_result_json(kind, fit, config, args.input,
                                   extra={"spacing_mhz": args.spacing_mhz})
        converged = fit.converged
    elif kind == "contrast":
        data = dataio.read_csv(args.input, ("b_gauss", "contrast"))
        model = fitting.lorentzian_peak_model()
        init = fitting.estimate_init(model, data["b_gauss"], data["contrast"])
        fit = fitting.fit_nonlinear(model, data["b_gauss"], data["contrast"],
                                    init)
        payload = _fit_result_json(kind, fit, config, args.input)
        converged = fit.converged
    elif kind == "field-series":
        series = dataio.read_field_series_csv(args.input)
        result = analysis.analyze_field_series(
            series, d_mhz=config.d_mhz, gamma_e=config.gamma_e_mhz_per_g,
            a_perp=config.a_perp_mhz, a_perp_sigma_mhz=args.a_perp_sigma_mhz,
            b_drift_gauss=args.b_drift_gauss)
        converged = result.fit_q.converged and result.fit_gamma.converged
        payload = {
            "kind": kind,
            "params": {"q_mhz": result.q_mhz, "q_abs_mhz": result.q_abs_mhz,
                       "gamma_n_mhz_per_g": result.gamma_n_mhz_per_g},
            "stderr": {"q_mhz": result.q_stat_mhz,
                       "gamma_n_mhz_per_g": result.gamma_n_stat_mhz_per_g},
            "systematics": {"q_a_perp_mhz": result.sys_q_a_perp_mhz,
                            "q_field_drift_mhz": result.sys_q_drift_mhz,
                            "gamma_n_field_drift_mhz_per_g":
                                result.sys_gamma_n_drift_mhz_per_g},
            "covariance": [[float(result.fit_q.covariance[0, 0]), 0.0],
                           [0.0, float(result.fit_gamma.covariance[0, 0])]],
            "chi2_reduced": {"mean_fit": result.fit_q.chi2_reduced,
                             "gyromagnetic_fit": result.fit_gamma.chi2_reduced},
            "fixed": {"d_mhz": config.d_mhz,
                      "gamma_e_mhz_per_g": config.gamma_e_mhz_per_g,
                      "a_perp_mhz": config.a_perp_mhz},
            "converged": converged,
            "provenance": provenance_block(config, seed=config.seed,
                                           input_path=args.input)}
    elif kind == "temp-series":
        d_model = dataio.load_d_model(args.d_model)
        b_series = args.b_gauss if args.b_gauss is not None else 484.0
        series = dataio.read_temperature_series_csv(args.input, b_series)
        result = analysis.analyze_temperature_series(
            series, d_model, gamma_e=config.gamma_e_mhz_per_g,
            a_perp=config.a_perp_mhz, slope_t_kelvin=args.t0_kelvin)
        payload = {
            "kind": kind,
            "params": {f"a{n}_khz": result.polynomial.a_khz[n]
                       for n in range(5)},
            "stderr": {f"a{n}_khz": float(result.coefficient_stderr_khz[n])
                       for n in range(5)},
            "covariance": [list(map(float, row))
                           for row in result.coefficient_covariance_khz],
            "slope_hz_per_k": result.slope_hz_per_k,
            "slope_t_kelvin": result.slope_t_kelvin,
            "q_abs_khz": {"t_kelvin": list(result.t_kelvin),
                          "q_abs_khz": list(result.q_abs_khz)},
            "fixed": {"b_gauss": b_series,
                      "gamma_e_mhz_per_g": config.gamma_e_mhz_per_g,
                      "a_perp_mhz": config.a_perp_mhz},
            "converged": True,
            "provenance": provenance_block(config, seed=config.seed,
                                           input_path=args.input)}
    else:
        raise ValueError(f"unknown fit kind {kind!r}")

    _write(out / f"fit_{kind}.json", dumps_json(payload))
    return EXIT_OK if converged else EXIT_NONCONVERGENCE


# ---------------------------------------------------------------------------
# calc


def _cmd_calc(args) -> int:
    if args.kind == "sensitivity":
        value = analysis.sensitivity(args.contrast, args.efficiency, args.spins,
                                     args.t2_star_s, args.tau_s)
        payload = {"kind": "sensitivity",
                   "inputs": {"contrast": args.contrast,
                              "efficiency": args.efficiency,
                              "spins": args.spins,
                              "t2_star_s": args.t2_star_s,
                              "tau_s": args.tau_s},
                   "delta_omega_rad_per_s": value}
    elif args.kind == "calibrate-field":
        value = analysis.calibrate_field(args.f_plus_mhz, args.f_minus_mhz,
                                         args.gamma_e_mhz_per_g)
        payload = {"kind": "calibrate-field",
                   "inputs": {"f_plus_mhz": args.f_plus_mhz,
                              "f_minus_mhz": args.f_minus_mhz,
                              "gamma_e_mhz_per_g": args.gamma_e_mhz_per_g},
                   "b_gauss": value}
    elif args.kind == "q-slope":
        coefficients = (args.a0_khz, args.a1_khz, args.a2_khz, args.a3_khz,
                        args.a4_khz)
        polynomial = QPolynomial(a_khz=coefficients)
        payload = {"kind": "q-slope",
                   "inputs": {"t_kelvin": args.t_kelvin,
                              **{f"a{n}_khz": c
                                 for n, c in enumerate(coefficients)}},
                   "q_abs_khz": float(polynomial(args.t_kelvin)),
                   "slope_hz_per_k": polynomial.slope_hz_per_k(args.t_kelvin)}
    else:
        raise ValueError(f"unknown calc kind {args.kind!r}")
    sys.stdout.write(dumps_json(payload))
    return EXIT_OK


# ---------------------------------------------------------------------------
# generate


def _cmd_generate(args) -> int:
    config = _load_config(args)
    out = _out_dir(config)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    noise = args.noise_relative
    if noise < 0:
        raise ValueError("noise must be >= 0")
    params = config.spin_parameters()

    if args.protocol in ("ramsey", "rabi", "odnmr"):
        trace = _build_trace(args.protocol, args, config)
        signal = trace.signal.copy()
        if noise > 0:
            signal = signal * (1.0 + noise * rng.standard_normal(len(signal)))
        noisy = pulses.Trace(abscissa=trace.abscissa, signal=signal,
                             protocol=trace.protocol,
                             abscissa_name=trace.abscissa_name,
                             params=trace.params, seed=config.seed)
        csv_path = out / f"{trace.protocol}_synthetic.csv"
        dataio.write_trace_csv(csv_path, noisy)
        print(csv_path)
        sidecar = {"protocol": trace.protocol, "truth": trace.params,
                   "noise_relative": noise, "seed": config.seed,
                   "config": config.parameters_dict(),
                   "provenance": provenance_block(config, seed=config.seed)}
        _write(out / f"{trace.protocol}_synthetic.json", dumps_json(sidecar))
        return EXIT_OK

    if args.protocol == "field-series":
        grid = np.arange(args.b_start_gauss,
                         args.b_stop_gauss + 0.5 * args.b_step_gauss,
                         args.b_step_gauss)
        pairs = [effective.transition_frequencies(params, float(b), args.method)
                 for b in grid]
        f1 = np.array([pair.f1_mhz for pair in pairs])
        f2 = np.array([pair.f2_mhz for pair in pairs])
        sigma = None
        if noise > 0:
            sigma = noise * 0.5 * (f1 + f2)
            f1 = f1 * (1.0 + noise * rng.standard_normal(len(f1)))
            f2 = f2 * (1.0 + noise * rng.standard_normal(len(f2)))
        series = FieldSeries(b_gauss=grid, f1_mhz=f1, f2_mhz=f2,
                             sigma_mhz=sigma)
        csv_path = out / "field_series_synthetic.csv"
        dataio.write_field_series_csv(csv_path, series,
                                      comments=[f"method: {args.method}"])
        print(csv_path)
        truth = {"q_mhz": config.q_mhz,
                 "gamma_n_mhz_per_g": config.gamma_n_mhz_per_g,
                 "d_mhz": config.d_mhz,
                 "gamma_e_mhz_per_g": config.gamma_e_mhz_per_g,
                 "a_perp_mhz": config.a_perp_mhz, "method": args.method}
        sidecar = {"protocol": "field-series", "truth": truth,
                   "noise_relative": noise, "seed": config.seed,
                   "config": config.parameters_dict(),
                   "provenance": provenance_block(config, seed=config.seed)}
        _write(out / "field_series_synthetic.json", dumps_json(sidecar))
        return EXIT_OK

    if args.protocol == "temp-series":
        d_model = dataio.load_d_model(args.d_model)
        b_series = args.b_gauss if args.b_gauss is not None else 484.0
        coefficients = (args.a0_khz, args.a1_khz, args.a2_khz, args.a3_khz,
                        args.a4_khz)
        polynomial = QPolynomial(a_khz=coefficients)
        grid = np.linspace(args.t_start_kelvin, args.t_stop_kelvin,
                           args.t_points)
        f1 = np.empty_like(grid)
        f2 = np.empty_like(grid)
        for i, t in enumerate(grid):
            q_signed = -1e-3 * float(polynomial(t))
            params_t = params.with_(q_mhz=q_signed, d_mhz=float(d_model(t)))
            pair = effective.transition_frequencies(params_t, b_series)
            f1[i], f2[i] = pair.f1_mhz, pair.f2_mhz
        if noise > 0:
            f1 = f1 * (1.0 + noise * rng.standard_normal(len(f1)))
            f2 = f2 * (1.0 + noise * rng.standard_normal(len(f2)))
        series = TemperatureSeries(t_kelvin=grid, f1_mhz=f1, f2_mhz=f2,
                                   b_gauss=b_series)
        csv_path = out / "temp_series_synthetic.csv"
        dataio.write_temperature_series_csv(csv_path, series)
        print(csv_path)
        truth = {f"a{n}_khz": c for n, c in enumerate(coefficients)}
        truth["b_gauss"] = b_series
        sidecar = {"protocol": "temp-series", "truth": truth,
                   "noise_relative": noise, "seed": config.seed,
                   "config": config.parameters_dict(),
                   "provenance": provenance_block(config, seed=config.seed)}
        _write(out / "temp_series_synthetic.json", dumps_json(sidecar))
        return EXIT_OK

    raise ValueError(f"unknown generate protocol {args.protocol!r}")


# ---------------------------------------------------------------------------
# parser


def _add_common(parser):
    parser.add_argument("--config", help="workbench config JSON file")
    parser.add_argument("--out", help="output directory (default: config "
                                      "output_dir)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--b-gauss", type=float,
                        help="override the config axial field")


def _add_odnmr_args(parser):
    parser.add_argument("--rf-start-mhz", type=float, default=4.6)
    parser.add_argument("--rf-stop-mhz", type=float, default=5.3)
    parser.add_argument("--rf-points", type=int, default=281)
    parser.add_argument("--pulse-us", type=float, default=200.0)
    parser.add_argument("--rabi-khz", type=float, default=2.5)


def _add_rabi_args(parser):
    parser.add_argument("--rf-mhz", type=float,
                        help="drive frequency (default: f1 at the working field)")
    parser.add_argument("--rabi-khz", type=float, default=2.5)
    parser.add_argument("--duration-max-us", type=float, default=800.0)
    parser.add_argument("--points", type=int, default=321)


def _add_ramsey_args(parser):
    parser.add_argument("--transition", choices=("f1", "f2"), default="f1")
    parser.add_argument("--detuning-khz", type=float, default=5.0)
    parser.add_argument("--tau-max-us", type=float, default=1500.0)
    parser.add_argument("--points", type=int, default=751)
    parser.add_argument("--pi2-us", type=float, default=0.0,
                        help="finite pi/2 pulse length; 0 = ideal pulses")


def _add_q_coefficient_args(parser):
    defaults = Q_VS_T_COEFFICIENTS_KHZ
    for n in range(5):
        parser.add_argument(f"--a{n}-khz", type=float, default=defaults[n],
                            help=f"|Q|(T) coefficient a{n} (kHz/K^{n})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL_NAME,
        description="Simulation and estimation workbench for optically "
                    "detected 14N nuclear spin transitions in NV ensembles")
    top = parser.add_subparsers(dest="command", required=True)

    simulate = top.add_parser("simulate", help="run a protocol, write CSV")
    sim_sub = simulate.add_subparsers(dest="protocol", required=True)
    for protocol, extra in (("odnmr", _add_odnmr_args),
                            ("rabi", _add_rabi_args),
                            ("ramsey", _add_ramsey_args)):
        sub = sim_sub.add_parser(protocol)
        _add_common(sub)
        extra(sub)
        sub.set_defaults(func=_cmd_simulate)
    pump = sim_sub.add_parser("pump")
    _add_common(pump)
    pump.add_argument("--horizon-us", type=float,
                      default=readout.HORIZON_US_DEFAULT)
    pump.set_defaults(func=_cmd_simulate)
    trace = sim_sub.add_parser("trace")
    _add_common(trace)
    trace.add_argument("--initial", choices=sorted(_INITIAL_CHOICES),
                       default="plus")
    trace.add_argument("--t-max-us", type=float, default=2.0)
    trace.add_argument("--points", type=int, default=201)
    trace.set_defaults(func=_cmd_simulate)

    fit = top.add_parser("fit", help="fit a data file, write JSON")
    fit_sub = fit.add_subparsers(dest="kind", required=True)
    for kind in ("ramsey", "rabi", "odmr", "contrast", "field-series",
                 "temp-series"):
        sub = fit_sub.add_parser(kind)
        sub.add_argument("input", help="input CSV file")
        _add_common(sub)
        if kind == "odmr":
            sub.add_argument("--spacing-mhz", type=float, default=2.2)
        if kind == "field-series":
            sub.add_argument("--a-perp-sigma-mhz", type=float, default=0.0)
            sub.add_argument("--b-drift-gauss", type=float, default=0.0)
        if kind == "temp-series":
            # --b-gauss (common) doubles as the series field; default 484 G.
            sub.add_argument("--d-model", required=True,
                             help="D(T) model JSON file")
            sub.add_argument("--t0-kelvin", type=float,
                             default=analysis.T0_SLOPE_KELVIN)
        sub.set_defaults(func=_cmd_fit)

    calc = top.add_parser("calc", help="closed-form calculators, JSON to stdout")
    calc_sub = calc.add_subparsers(dest="kind", required=True)
    sens = calc_sub.add_parser("sensitivity")
    sens.add_argument("--contrast", type=float, required=True)
    sens.add_argument("--efficiency", type=float, required=True)
    sens.add_argument("--spins", type=float, required=True)
    sens.add_argument("--t2-star-s", type=float, required=True)
    sens.add_argument("--tau-s", type=float, required=True)
    sens.set_defaults(func=_cmd_calc)
    calib = calc_sub.add_parser("calibrate-field")
    calib.add_argument("--f-plus-mhz", type=float, required=True)
    calib.add_argument("--f-minus-mhz", type=float, required=True)
    calib.add_argument("--gamma-e-mhz-per-g", type=float,
                       default=WorkbenchConfig().gamma_e_mhz_per_g)
    calib.set_defaults(func=_cmd_calc)
    slope = calc_sub.add_parser("q-slope")
    slope.add_argument("--t-kelvin", type=float, default=analysis.T0_SLOPE_KELVIN)
    _add_q_coefficient_args(slope)
    slope.set_defaults(func=_cmd_calc)

    generate = top.add_parser("generate",
                              help="synthetic noisy datasets with truth sidecar")
    gen_sub = generate.add_subparsers(dest="protocol", required=True)
    for protocol, extra in (("odnmr", _add_odnmr_args),
                            ("rabi", _add_rabi_args),
                            ("ramsey", _add_ramsey_args)):
        sub = gen_sub.add_parser(protocol)
        _add_common(sub)
        extra(sub)
        sub.add_argument("--noise-relative", type=float, default=0.01)
        sub.set_defaults(func=_cmd_generate)
    gen_field = gen_sub.add_parser("field-series")
    _add_common(gen_field)
    gen_field.add_argument("--b-start-gauss", type=float, default=350.0)
    gen_field.add_argument("--b-stop-gauss", type=float, default=675.0)
    gen_field.add_argument("--b-step-gauss", type=float, default=25.0)
    gen_field.add_argument("--method", choices=("exact", "perturbative"),
                           default="exact")
    gen_field.add_argument("--noise-relative", type=float, default=0.0)
    gen_field.set_defaults(func=_cmd_generate)
    gen_temp = gen_sub.add_parser("temp-series")
    _add_common(gen_temp)  # --b-gauss doubles as the series field, default 484 G
    gen_temp.add_argument("--d-model", required=True)
    gen_temp.add_argument("--t-start-kelvin", type=float, default=77.5)
    gen_temp.add_argument("--t-stop-kelvin", type=float, default=420.0)
    gen_temp.add_argument("--t-points", type=int, default=25)
    gen_temp.add_argument("--noise-relative", type=float, default=0.0)
    _add_q_coefficient_args(gen_temp)
    gen_temp.set_defaults(func=_cmd_generate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return int(args.func(args))
    except readout.ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (SchemaError, ConfigError, fitting.RankDeficiencyError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
