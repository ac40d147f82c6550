"""File formats and configuration: unit-annotated CSV, deterministic JSON.

All serialization is byte-reproducible: floats render with 17 significant
digits, JSON preserves insertion order, and nothing embeds timestamps.  CSV
files are UTF-8 with '#'-prefixed comment lines carrying units ahead of the
header row.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .analysis import DModel, FieldSeries, TemperatureSeries
from .pulses import DecoherenceParams, Trace
from .readout import ESLACRateParams, ReadoutModel
from .spinmodel import SpinParameters

TOOL_NAME = "nvnmr"
TOOL_VERSION = "0.1.0"

TRACE_COLUMNS = {
    "ramsey": ("tau_us", "signal"),
    "rabi": ("duration_us", "signal"),
    "odnmr": ("rf_mhz", "signal"),
    "fluorescence": ("time_us", "rate_per_us"),
}
FIELD_SERIES_COLUMNS = ("b_gauss", "f1_mhz", "f2_mhz")
TEMP_SERIES_COLUMNS = ("t_kelvin", "f1_mhz", "f2_mhz")


class SchemaError(ValueError):
    """File does not match the expected column schema."""


class ConfigError(ValueError):
    """Configuration file is malformed or carries unknown keys."""


# ---------------------------------------------------------------------------
# Deterministic serialization


def format_float(value: float) -> str:
    return format(float(value), ".17g")


def _json_fragment(obj) -> str:
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return format_float(value) if math.isfinite(value) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        items = ", ".join(f"{json.dumps(str(k))}: {_json_fragment(v)}"
                          for k, v in obj.items())
        return "{" + items + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_fragment(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj) -> str:
    """Compact deterministic JSON: insertion-ordered keys, 17-digit floats."""
    return _json_fragment(obj) + "\n"


def sha256_hex(data) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def sha256_of_file(path) -> str:
    return sha256_hex(Path(path).read_bytes())


# ---------------------------------------------------------------------------
# CSV


def write_csv(path, columns, rows, comments=()) -> None:
    lines = [f"# {comment}" for comment in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(format_float(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_csv(path, required_columns, optional_columns=()) -> dict[str, np.ndarray]:
    """Parse a unit-annotated CSV, validating the header against the schema."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{path}: not valid UTF-8 ({exc})") from None
    lines = [line for line in text.splitlines()
             if line.strip() and not line.lstrip().startswith("#")]
    if not lines:
        raise SchemaError(f"{path}: no header row found")
    header = [name.strip() for name in lines[0].split(",")]
    missing = [name for name in required_columns if name not in header]
    if missing:
        raise SchemaError(f"{path}: missing required columns {missing}; "
                          f"header is {header}")
    allowed = set(required_columns) | set(optional_columns)
    unknown = [name for name in header if name not in allowed]
    if unknown:
        raise SchemaError(f"{path}: unexpected columns {unknown}")
    columns: dict[str, list[float]] = {name: [] for name in header}
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(header):
            raise SchemaError(f"{path}:{lineno}: expected {len(header)} cells, "
                              f"got {len(cells)}")
        for name, cell in zip(header, cells):
            try:
                columns[name].append(float(cell))
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: {name} value {cell!r} "
                                  "is not numeric") from None
    return {name: np.asarray(values, dtype=float)
            for name, values in columns.items()}


def write_trace_csv(path, trace: Trace) -> None:
    columns = TRACE_COLUMNS.get(trace.protocol,
                                (trace.abscissa_name, "signal"))
    comments = [f"{TOOL_NAME} trace: {trace.protocol}",
                f"columns: {columns[0]}, {columns[1]} (dimensionless)"]
    write_csv(path, columns, zip(trace.abscissa, trace.signal), comments)


def read_trace_csv(path, protocol: str) -> tuple[np.ndarray, np.ndarray]:
    columns = TRACE_COLUMNS[protocol]
    data = read_csv(path, columns)
    return data[columns[0]], data[columns[1]]


def write_field_series_csv(path, series: FieldSeries, comments=()) -> None:
    if series.sigma_mhz is None:
        columns = FIELD_SERIES_COLUMNS
        rows = zip(series.b_gauss, series.f1_mhz, series.f2_mhz)
    else:
        columns = FIELD_SERIES_COLUMNS + ("sigma_mhz",)
        rows = zip(series.b_gauss, series.f1_mhz, series.f2_mhz, series.sigma_mhz)
    write_csv(path, columns, rows,
              [f"{TOOL_NAME} field series", "units: gauss, MHz"] + list(comments))


def read_field_series_csv(path) -> FieldSeries:
    data = read_csv(path, FIELD_SERIES_COLUMNS, optional_columns=("sigma_mhz",))
    return FieldSeries(b_gauss=data["b_gauss"], f1_mhz=data["f1_mhz"],
                       f2_mhz=data["f2_mhz"], sigma_mhz=data.get("sigma_mhz"))


def write_temperature_series_csv(path, series: TemperatureSeries,
                                 comments=()) -> None:
    write_csv(path, TEMP_SERIES_COLUMNS,
              zip(series.t_kelvin, series.f1_mhz, series.f2_mhz),
              [f"{TOOL_NAME} temperature series "
               f"(B = {format_float(series.b_gauss)} G)",
               "units: kelvin, MHz"] + list(comments))


def read_temperature_series_csv(path, b_gauss: float) -> TemperatureSeries:
    data = read_csv(path, TEMP_SERIES_COLUMNS)
    return TemperatureSeries(t_kelvin=data["t_kelvin"], f1_mhz=data["f1_mhz"],
                             f2_mhz=data["f2_mhz"], b_gauss=b_gauss)


def load_d_model(path) -> DModel:
    """Read a D(T) model file: polynomial with range, or (T, D) table."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    kind = payload.get("type")
    if kind == "polynomial":
        try:
            return DModel.from_polynomial(payload["coefficients_mhz"],
                                          payload["t_range_kelvin"])
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"{path}: bad polynomial model ({exc})") from None
    if kind == "table":
        try:
            return DModel.from_table(payload["t_kelvin"], payload["d_mhz"])
        except (KeyError, ValueError, TypeError) as exc:
            raise SchemaError(f"{path}: bad table model ({exc})") from None
    raise SchemaError(f"{path}: type must be 'polynomial' or 'table', "
                      f"got {kind!r}")


# ---------------------------------------------------------------------------
# Workbench configuration (flat JSON, unknown keys rejected)


@dataclass(frozen=True)
class WorkbenchConfig:
    """Every tunable of the workbench in one flat, hashable document."""

    d_mhz: float = SpinParameters().d_mhz
    gamma_e_mhz_per_g: float = SpinParameters().gamma_e_mhz_per_g
    q_mhz: float = SpinParameters().q_mhz
    gamma_n_mhz_per_g: float = SpinParameters().gamma_n_mhz_per_g
    a_par_mhz: float = SpinParameters().a_par_mhz
    a_perp_mhz: float = SpinParameters().a_perp_mhz
    b_gauss: float = 503.0
    contrast_c0: float = 0.038
    contrast_b0_gauss: float = 485.0
    contrast_fwhm_gauss: float = 90.0
    contrast_baseline: float = 0.0
    crossover_gauss: float = 495.0
    crossover_width_gauss: float = 40.0
    polarization: tuple = (1.0, 0.0, 0.0)
    readout_window_us: float = 0.5
    t2_star_us: float = 600.0
    t_rabi_us: float = 1000.0
    pump_rate_mhz: float = ESLACRateParams().pump_rate_mhz
    radiative_rate_mhz: float = ESLACRateParams().radiative_rate_mhz
    isc_rate_ms0_mhz: float = ESLACRateParams().isc_rate_ms0_mhz
    isc_rate_ms1_mhz: float = ESLACRateParams().isc_rate_ms1_mhz
    singlet_decay_rate_mhz: float = ESLACRateParams().singlet_decay_rate_mhz
    d_es_mhz: float = ESLACRateParams().d_es_mhz
    a_perp_es_mhz: float = ESLACRateParams().a_perp_es_mhz
    seed: int = 20200503
    output_dir: str = "."

    @classmethod
    def from_dict(cls, payload: dict) -> "WorkbenchConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(payload) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        values = dict(payload)
        if "polarization" in values:
            values["polarization"] = tuple(float(x)
                                           for x in values["polarization"])
        if "seed" in values:
            seed = values["seed"]
            if not isinstance(seed, int) or isinstance(seed, bool) \
                    or not 0 <= seed < 2 ** 64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
        try:
            config = cls(**values)
            # Construct every derived object once so invalid values surface
            # as config errors with the offending field visible.
            config.spin_parameters()
            config.readout_model()
            config.decoherence()
            config.rate_params()
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from None
        return config

    @classmethod
    def from_file(cls, path) -> "WorkbenchConfig":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}, "
                              f"column {exc.colno}: {exc.msg}") from None
        if not isinstance(payload, dict):
            raise ConfigError(f"{path}: config must be a flat JSON object")
        return cls.from_dict(payload)

    def replace(self, **changes) -> "WorkbenchConfig":
        merged = self.as_dict()
        merged.update(changes)
        return WorkbenchConfig.from_dict(merged)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out

    def parameters_dict(self) -> dict:
        """Resolved physics parameters (excludes the output location)."""
        out = self.as_dict()
        out.pop("output_dir")
        return out

    def sha256(self) -> str:
        return sha256_hex(dumps_json(self.parameters_dict()))

    def spin_parameters(self) -> SpinParameters:
        return SpinParameters(d_mhz=self.d_mhz,
                              gamma_e_mhz_per_g=self.gamma_e_mhz_per_g,
                              q_mhz=self.q_mhz,
                              gamma_n_mhz_per_g=self.gamma_n_mhz_per_g,
                              a_par_mhz=self.a_par_mhz,
                              a_perp_mhz=self.a_perp_mhz)

    def readout_model(self, mode: str = "parametric") -> ReadoutModel:
        return ReadoutModel(mode=mode,
                            contrast_c0=self.contrast_c0,
                            contrast_b0_gauss=self.contrast_b0_gauss,
                            contrast_fwhm_gauss=self.contrast_fwhm_gauss,
                            contrast_baseline=self.contrast_baseline,
                            crossover_gauss=self.crossover_gauss,
                            crossover_width_gauss=self.crossover_width_gauss,
                            polarization=self.polarization,
                            readout_window_us=self.readout_window_us,
                            rate_params=self.rate_params()
                            if mode == "rate_model" else None)

    def decoherence(self) -> DecoherenceParams:
        return DecoherenceParams(t2_star_us=self.t2_star_us,
                                 t_rabi_us=self.t_rabi_us)

    def rate_params(self) -> ESLACRateParams:
        return ESLACRateParams(pump_rate_mhz=self.pump_rate_mhz,
                               radiative_rate_mhz=self.radiative_rate_mhz,
                               isc_rate_ms0_mhz=self.isc_rate_ms0_mhz,
                               isc_rate_ms1_mhz=self.isc_rate_ms1_mhz,
                               singlet_decay_rate_mhz=self.singlet_decay_rate_mhz,
                               d_es_mhz=self.d_es_mhz,
                               a_perp_es_mhz=self.a_perp_es_mhz,
                               gamma_e_mhz_per_g=self.gamma_e_mhz_per_g,
                               gamma_n_mhz_per_g=self.gamma_n_mhz_per_g)


def provenance_block(config: WorkbenchConfig, seed=None,
                     input_path=None) -> dict:
    block = {"tool": f"{TOOL_NAME} {TOOL_VERSION}",
             "config_sha256": config.sha256(),
             "rng": f"pcg64 (numpy {np.__version__})"}
    if seed is not None:
        block["seed"] = int(seed)
    if input_path is not None:
        block["input_sha256"] = sha256_of_file(input_path)
    return block
