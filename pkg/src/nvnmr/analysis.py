"""Analysis pipelines: field series, temperature series, calibration, sensitivity.

The field-series pipeline turns measured (B, f1, f2) rows into the quadrupole
constant Q and nuclear gyromagnetic ratio gamma_n by fitting the effective
expressions for (f1+f2)/2 and (f1-f2)/2B.  The temperature pipeline inverts
the same mean-frequency expression with a user-supplied D(T) model to obtain
|Q|(T), fits a quartic polynomial and reports its slope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fitting
from .fitting import FitModel, FitResult, fit_nonlinear
from .spinmodel import (A_PERP_MHZ, D_GS_MHZ, GAMMA_E_MHZ_PER_G)

T0_SLOPE_KELVIN = 297.0


@dataclass(frozen=True)
class FieldSeries:
    """Rows of (B, f1, f2) with optional per-row frequency uncertainty (MHz)."""

    b_gauss: np.ndarray
    f1_mhz: np.ndarray
    f2_mhz: np.ndarray
    sigma_mhz: np.ndarray | None = None

    def __post_init__(self):
        b = np.asarray(self.b_gauss, dtype=float)
        f1 = np.asarray(self.f1_mhz, dtype=float)
        f2 = np.asarray(self.f2_mhz, dtype=float)
        object.__setattr__(self, "b_gauss", b)
        object.__setattr__(self, "f1_mhz", f1)
        object.__setattr__(self, "f2_mhz", f2)
        if not (len(b) == len(f1) == len(f2)):
            raise ValueError("field series columns must have equal length")
        if len(np.unique(b)) != len(b):
            raise ValueError("field values must be distinct")
        if self.sigma_mhz is not None:
            sigma = np.asarray(self.sigma_mhz, dtype=float)
            object.__setattr__(self, "sigma_mhz", sigma)
            if len(sigma) != len(b):
                raise ValueError("sigma column length mismatch")

    def __len__(self):
        return len(self.b_gauss)


@dataclass(frozen=True)
class TemperatureSeries:
    """Rows of (T, f1, f2) taken at a fixed axial field."""

    t_kelvin: np.ndarray
    f1_mhz: np.ndarray
    f2_mhz: np.ndarray
    b_gauss: float = 484.0

    def __post_init__(self):
        t = np.asarray(self.t_kelvin, dtype=float)
        f1 = np.asarray(self.f1_mhz, dtype=float)
        f2 = np.asarray(self.f2_mhz, dtype=float)
        object.__setattr__(self, "t_kelvin", t)
        object.__setattr__(self, "f1_mhz", f1)
        object.__setattr__(self, "f2_mhz", f2)
        if not (len(t) == len(f1) == len(f2)):
            raise ValueError("temperature series columns must have equal length")
        if np.any(np.diff(t) <= 0):
            raise ValueError("temperatures must be strictly increasing")


class DModelRangeError(ValueError):
    """Temperature outside the validity range of the D(T) model."""


@dataclass(frozen=True)
class DModel:
    """Zero-field splitting D as a function of temperature (MHz vs K).

    Either an interpolated table or a polynomial with an explicit validity
    range; evaluation outside the covered range raises instead of
    extrapolating silently.
    """

    kind: str
    t_min: float
    t_max: float
    table_t: np.ndarray | None = None
    table_d: np.ndarray | None = None
    coefficients_mhz: np.ndarray | None = None

    @classmethod
    def from_table(cls, t_kelvin, d_mhz) -> "DModel":
        t = np.asarray(t_kelvin, dtype=float)
        d = np.asarray(d_mhz, dtype=float)
        if len(t) < 2 or len(t) != len(d):
            raise ValueError("table needs >= 2 matching (T, D) rows")
        if np.any(np.diff(t) <= 0):
            raise ValueError("table temperatures must be strictly increasing")
        return cls(kind="table", t_min=float(t[0]), t_max=float(t[-1]),
                   table_t=t, table_d=d)

    @classmethod
    def from_polynomial(cls, coefficients_mhz, t_range) -> "DModel":
        coefficients = np.asarray(coefficients_mhz, dtype=float)
        t_min, t_max = map(float, t_range)
        if t_min >= t_max:
            raise ValueError("t_range must be (min, max) with min < max")
        return cls(kind="polynomial", t_min=t_min, t_max=t_max,
                   coefficients_mhz=coefficients)

    @classmethod
    def constant(cls, d_mhz: float = D_GS_MHZ,
                 t_range=(0.0, 1000.0)) -> "DModel":
        return cls.from_polynomial([d_mhz], t_range)

    def __call__(self, t_kelvin):
        t = np.asarray(t_kelvin, dtype=float)
        if np.any(t < self.t_min - 1e-9) or np.any(t > self.t_max + 1e-9):
            raise DModelRangeError(
                f"temperature outside D(T) model range "
                f"[{self.t_min:g}, {self.t_max:g}] K")
        if self.kind == "table":
            out = np.interp(t, self.table_t, self.table_d)
        else:
            out = np.polynomial.polynomial.polyval(t, self.coefficients_mhz)
        return float(out) if np.isscalar(t_kelvin) else out


@dataclass(frozen=True)
class QPolynomial:
    """|Q|(T) quartic polynomial; coefficients a0..a4 in kHz, kHz/K, ..."""

    a_khz: tuple[float, float, float, float, float]

    def __call__(self, t_kelvin):
        return np.polynomial.polynomial.polyval(
            np.asarray(t_kelvin, dtype=float), np.asarray(self.a_khz))

    def slope_khz_per_k(self, t_kelvin: float) -> float:
        a = self.a_khz
        return float(sum(n * a[n] * t_kelvin ** (n - 1) for n in range(1, 5)))

    def slope_hz_per_k(self, t_kelvin: float) -> float:
        return 1e3 * self.slope_khz_per_k(t_kelvin)


# Measured quartic coefficient set for |Q|(T) in kHz, kHz/K, ... kHz/K^4.
Q_VS_T_COEFFICIENTS_KHZ = (4949.473, -9.32e-3, 9.2597e-5, -4.6294e-7, 3.983e-10)


def _correction_mhz(b_gauss, d_mhz, gamma_e, a_perp):
    return a_perp ** 2 * d_mhz / (d_mhz ** 2 - (gamma_e * np.asarray(b_gauss)) ** 2)


def mean_frequency_model(d_mhz: float, gamma_e: float, a_perp: float) -> FitModel:
    """(f1+f2)/2 versus B with the signed quadrupole constant free."""

    def fn(b, p):
        return np.abs(p[0] + _correction_mhz(b, d_mhz, gamma_e, a_perp))

    return FitModel(name="mean_transition_frequency", param_names=("q_mhz",), fn=fn)


def gyromagnetic_model(d_mhz: float, gamma_e: float, a_perp: float) -> FitModel:
    """(f1-f2)/2B versus B with the bare gyromagnetic ratio free."""

    def fn(b, p):
        return p[0] - gamma_e * a_perp ** 2 / (d_mhz ** 2 - (gamma_e * b) ** 2)

    return FitModel(name="effective_gyromagnetic_ratio",
                    param_names=("gamma_n_mhz_per_g",), fn=fn)


@dataclass(frozen=True)
class FieldSeriesResult:
    """Q and gamma_n recovered from a field series.

    Statistical errors come from the fit covariance.  The systematic terms
    are computed by refitting at the perturbed inputs and reported separately
    rather than folded into one number: sys_q_a_perp_mhz propagates an
    uncertainty on the fixed A_perp, and the *_drift terms propagate a
    caller-supplied uniform field error.
    """

    q_mhz: float
    q_stat_mhz: float
    q_abs_mhz: float
    gamma_n_mhz_per_g: float
    gamma_n_stat_mhz_per_g: float
    sys_q_a_perp_mhz: float
    sys_q_drift_mhz: float
    sys_gamma_n_drift_mhz_per_g: float
    fit_q: FitResult
    fit_gamma: FitResult


def _fit_field_series(series: FieldSeries, d_mhz, gamma_e, a_perp):
    b = series.b_gauss
    mean = 0.5 * (series.f1_mhz + series.f2_mhz)
    diff = (series.f1_mhz - series.f2_mhz) / (2.0 * b)
    sigma_mean = sigma_diff = None
    if series.sigma_mhz is not None:
        sigma_mean = series.sigma_mhz / math.sqrt(2.0)
        sigma_diff = series.sigma_mhz / (math.sqrt(2.0) * b)
    correction = _correction_mhz(b, d_mhz, gamma_e, a_perp)
    q_init = float(np.mean(-(mean + correction)))
    gamma_init = float(np.mean(diff + gamma_e * a_perp ** 2
                               / (d_mhz ** 2 - (gamma_e * b) ** 2)))
    fit_q = fit_nonlinear(mean_frequency_model(d_mhz, gamma_e, a_perp),
                          b, mean, {"q_mhz": q_init}, sigma=sigma_mean)
    fit_gamma = fit_nonlinear(gyromagnetic_model(d_mhz, gamma_e, a_perp),
                              b, diff, {"gamma_n_mhz_per_g": gamma_init},
                              sigma=sigma_diff)
    return fit_q, fit_gamma


def analyze_field_series(series: FieldSeries,
                         d_mhz: float = D_GS_MHZ,
                         gamma_e: float = GAMMA_E_MHZ_PER_G,
                         a_perp: float = A_PERP_MHZ,
                         a_perp_sigma_mhz: float = 0.0,
                         b_drift_gauss: float = 0.0) -> FieldSeriesResult:
    """Fit Q and gamma_n to a (B, f1, f2) series with D, gamma_e, A_perp fixed."""
    if len(series) < 3:
        raise ValueError("field series needs at least 3 rows")
    fit_q, fit_gamma = _fit_field_series(series, d_mhz, gamma_e, a_perp)
    q = fit_q.value("q_mhz")
    gamma_n = fit_gamma.value("gamma_n_mhz_per_g")

    sys_q_a_perp = 0.0
    if a_perp_sigma_mhz:
        q_hi, _ = _fit_field_series(series, d_mhz, gamma_e, a_perp + a_perp_sigma_mhz)
        q_lo, _ = _fit_field_series(series, d_mhz, gamma_e, a_perp - a_perp_sigma_mhz)
        sys_q_a_perp = 0.5 * abs(q_hi.value("q_mhz") - q_lo.value("q_mhz"))

    sys_q_drift = sys_gamma_drift = 0.0
    if b_drift_gauss:
        shifted_hi = FieldSeries(series.b_gauss + b_drift_gauss, series.f1_mhz,
                                 series.f2_mhz, series.sigma_mhz)
        shifted_lo = FieldSeries(series.b_gauss - b_drift_gauss, series.f1_mhz,
                                 series.f2_mhz, series.sigma_mhz)
        q_hi, g_hi = _fit_field_series(shifted_hi, d_mhz, gamma_e, a_perp)
        q_lo, g_lo = _fit_field_series(shifted_lo, d_mhz, gamma_e, a_perp)
        sys_q_drift = 0.5 * abs(q_hi.value("q_mhz") - q_lo.value("q_mhz"))
        sys_gamma_drift = 0.5 * abs(g_hi.value("gamma_n_mhz_per_g")
                                    - g_lo.value("gamma_n_mhz_per_g"))

    return FieldSeriesResult(
        q_mhz=q, q_stat_mhz=fit_q.error("q_mhz"), q_abs_mhz=abs(q),
        gamma_n_mhz_per_g=gamma_n,
        gamma_n_stat_mhz_per_g=fit_gamma.error("gamma_n_mhz_per_g"),
        sys_q_a_perp_mhz=sys_q_a_perp, sys_q_drift_mhz=sys_q_drift,
        sys_gamma_n_drift_mhz_per_g=sys_gamma_drift,
        fit_q=fit_q, fit_gamma=fit_gamma)


@dataclass(frozen=True)
class TemperatureSeriesResult:
    t_kelvin: np.ndarray
    q_abs_khz: np.ndarray
    polynomial: QPolynomial
    coefficient_stderr_khz: np.ndarray
    coefficient_covariance_khz: np.ndarray
    slope_hz_per_k: float
    slope_t_kelvin: float


def invert_mean_frequency(mean_mhz, d_mhz, gamma_e, a_perp, b_gauss):
    """|Q| from a measured (f1+f2)/2, removing the hyperfine correction.

    For the realized sign (Q < 0, positive correction) the mean frequency is
    |Q| - correction, so |Q| = mean + correction.
    """
    return np.asarray(mean_mhz) + _correction_mhz(b_gauss, d_mhz, gamma_e, a_perp)


def fit_q_polynomial(t_kelvin, q_abs_khz):
    """Quartic least squares in a scaled variable for conditioning.

    Returns (QPolynomial, standard errors, covariance), all in kHz units.
    """
    t = np.asarray(t_kelvin, dtype=float)
    q = np.asarray(q_abs_khz, dtype=float)
    scale = 100.0
    design = np.vander(t / scale, 5, increasing=True)
    coefficients_scaled, _, rank, _ = np.linalg.lstsq(design, q, rcond=None)
    if rank < 5:
        raise fitting.RankDeficiencyError("temperature grid cannot determine "
                                          "a quartic polynomial")
    dof = len(t) - 5
    rss = float(np.sum((design @ coefficients_scaled - q) ** 2))
    covariance_scaled = np.linalg.inv(design.T @ design) * (rss / dof if dof > 0 else 0.0)
    powers = scale ** np.arange(5)
    coefficients = coefficients_scaled / powers
    covariance = covariance_scaled / np.outer(powers, powers)
    stderr = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    return QPolynomial(a_khz=tuple(float(c) for c in coefficients)), stderr, covariance


def analyze_temperature_series(series: TemperatureSeries, d_model: DModel,
                               gamma_e: float = GAMMA_E_MHZ_PER_G,
                               a_perp: float = A_PERP_MHZ,
                               slope_t_kelvin: float = T0_SLOPE_KELVIN
                               ) -> TemperatureSeriesResult:
    """|Q|(T) table, quartic fit and slope from a temperature series.

    Each row's (f1+f2)/2 is inverted with D = d_model(T); the resulting
    |Q|(T) values (kHz) are fit to a quartic and the slope is evaluated
    analytically at slope_t_kelvin.
    """
    d_values = d_model(series.t_kelvin)  # raises DModelRangeError if uncovered
    mean = 0.5 * (series.f1_mhz + series.f2_mhz)
    q_abs_mhz = invert_mean_frequency(mean, d_values, gamma_e, a_perp,
                                      series.b_gauss)
    q_abs_khz = 1e3 * q_abs_mhz
    polynomial, stderr, covariance = fit_q_polynomial(series.t_kelvin, q_abs_khz)
    return TemperatureSeriesResult(
        t_kelvin=series.t_kelvin, q_abs_khz=q_abs_khz, polynomial=polynomial,
        coefficient_stderr_khz=stderr, coefficient_covariance_khz=covariance,
        slope_hz_per_k=polynomial.slope_hz_per_k(slope_t_kelvin),
        slope_t_kelvin=slope_t_kelvin)


@dataclass(frozen=True)
class RatioStats:
    mean: float
    std: float
    minimum: float
    maximum: float
    n_points: int


def fractional_shift_ratio(q_model, d_model, t_range, num: int = 101) -> RatioStats:
    """Pointwise ratio of the fractional shifts of two temperature models.

    Both models are callables T -> value; fractional shift is
    (m(T) - m(Tref))/m(Tref) with Tref = t_range[0].  The ratio
    shift_q / shift_d is evaluated on a grid excluding the reference point.
    """
    t_ref, t_end = map(float, t_range)
    q_ref = float(np.asarray(q_model(t_ref)))
    d_ref = float(np.asarray(d_model(t_ref)))
    if q_ref == 0.0 or d_ref == 0.0:
        raise ValueError("zero reference value: fractional shift undefined")
    grid = np.linspace(t_ref, t_end, num)[1:]
    shift_q = (np.asarray(q_model(grid), dtype=float) - q_ref) / q_ref
    shift_d = (np.asarray(d_model(grid), dtype=float) - d_ref) / d_ref
    usable = np.abs(shift_d) > 0
    if not np.any(usable):
        raise ValueError("denominator model has no shift over the range")
    ratio = shift_q[usable] / shift_d[usable]
    return RatioStats(mean=float(np.mean(ratio)), std=float(np.std(ratio)),
                      minimum=float(np.min(ratio)), maximum=float(np.max(ratio)),
                      n_points=int(np.sum(usable)))


def calibrate_field(f_plus_mhz: float, f_minus_mhz: float,
                    gamma_e: float = GAMMA_E_MHZ_PER_G) -> float:
    """Axial field (gauss) from the two electron resonance frequencies.

    B = (f+ - f-)/(2 gamma_e), with f+ and f- the m_S = 0 -> +1 and 0 -> -1
    central-line frequencies.
    """
    if f_plus_mhz < f_minus_mhz:
        raise ValueError("f_plus must not be below f_minus")
    return (f_plus_mhz - f_minus_mhz) / (2.0 * gamma_e)


def sensitivity(contrast: float, collection_efficiency: float, spin_count: float,
                t2_star_s: float, integration_s: float) -> float:
    """Minimum detectable precession-rate change, rad/s.

    delta_omega = 1 / (C sqrt(eta N T2* tau)) for readout contrast C,
    photon-collection efficiency eta, N interrogated spins, coherence time
    T2* and total integration time tau (both in seconds).
    """
    values = dict(contrast=contrast, collection_efficiency=collection_efficiency,
                  spin_count=spin_count, t2_star_s=t2_star_s,
                  integration_s=integration_s)
    for name, value in values.items():
        if not (value > 0 and math.isfinite(value)):
            raise ValueError(f"{name} must be positive and finite, got {value!r}")
    if contrast > 1 or collection_efficiency > 1:
        raise ValueError("contrast and collection_efficiency are fractions <= 1")
    return 1.0 / (contrast * math.sqrt(
        collection_efficiency * spin_count * t2_star_s * integration_s))
