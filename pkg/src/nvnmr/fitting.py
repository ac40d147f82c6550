"""Levenberg-Marquardt least squares and the spectroscopy model library.

The fitter is a plain damped Gauss-Newton loop over a user-supplied model
function: forward-difference Jacobian, additive damping seeded from the
normal-equation diagonal, x10 on a rejected step and /10 on an accepted one.
It is deliberately self-contained so the damping schedule, finite-difference
steps and convergence thresholds are exactly the documented ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

MAX_ITERATIONS_DEFAULT = 200
COST_TOL_DEFAULT = 1e-10
GRAD_TOL_DEFAULT = 1e-12
LAMBDA_SEED = 1e-3


class RankDeficiencyError(RuntimeError):
    """Normal equations are singular (too few points or degenerate model)."""


class FlatDataError(ValueError):
    """Data carry no usable structure for an initial estimate."""


@dataclass(frozen=True)
class FitModel:
    """A named model y = fn(x, values) with an ordered parameter list.

    `fixed` pins a subset of parameters; the fitter only varies the rest.
    """

    name: str
    param_names: tuple[str, ...]
    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.param_names) < 1:
            raise ValueError("model needs at least one parameter")
        unknown = set(self.fixed) - set(self.param_names)
        if unknown:
            raise ValueError(f"fixed parameters not in model: {sorted(unknown)}")

    @property
    def free_names(self) -> tuple[str, ...]:
        return tuple(n for n in self.param_names if n not in self.fixed)

    def fix(self, **values) -> "FitModel":
        return FitModel(name=self.name, param_names=self.param_names,
                        fn=self.fn, fixed={**self.fixed, **values})

    def __call__(self, x, **values):
        merged = {**self.fixed, **values}
        missing = set(self.param_names) - set(merged)
        if missing:
            raise ValueError(f"missing parameter values: {sorted(missing)}")
        vector = np.array([merged[n] for n in self.param_names], dtype=float)
        return self.fn(np.asarray(x, dtype=float), vector)


@dataclass(frozen=True)
class FitResult:
    """Estimated parameters with covariance-based uncertainties.

    `values` and `stderr` cover all model parameters in declaration order
    (fixed parameters get stderr 0); `covariance` spans free parameters only,
    in `free_names` order.
    """

    param_names: tuple[str, ...]
    free_names: tuple[str, ...]
    values: np.ndarray
    stderr: np.ndarray
    covariance: np.ndarray
    chi2_reduced: float
    iterations: int
    converged: bool

    def value(self, name: str) -> float:
        return float(self.values[self.param_names.index(name)])

    def error(self, name: str) -> float:
        return float(self.stderr[self.param_names.index(name)])

    def as_dict(self) -> dict:
        return {n: float(v) for n, v in zip(self.param_names, self.values)}


def _assemble(model: FitModel, free_values: np.ndarray) -> np.ndarray:
    merged = dict(model.fixed)
    for name, value in zip(model.free_names, free_values):
        merged[name] = value
    return np.array([merged[n] for n in model.param_names], dtype=float)


def _jacobian(model: FitModel, x, weights, free_values, baseline):
    """Forward-difference Jacobian of the weighted model, d(w*f)/dp.

    `baseline` is the unweighted model evaluated at `free_values`; with this
    sign convention the Gauss-Newton step is +(J^T J)^-1 J^T r for the
    weighted residual r = w*(y - f).
    """
    n = len(free_values)
    jac = np.empty((len(baseline), n))
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(n):
            step = max(1e-6 * abs(free_values[j]), 1e-9)
            bumped = free_values.copy()
            bumped[j] += step
            jac[:, j] = weights * (model.fn(x, _assemble(model, bumped))
                                   - baseline) / step
    return jac


def fit_nonlinear(model: FitModel, x, y, init: dict, sigma=None, bounds=None,
                  max_iterations: int = MAX_ITERATIONS_DEFAULT,
                  cost_tol: float = COST_TOL_DEFAULT,
                  grad_tol: float = GRAD_TOL_DEFAULT) -> FitResult:
    """Weighted Levenberg-Marquardt fit of `model` to (x, y).

    init maps every free parameter name to a starting value; sigma, when
    given, holds per-point standard deviations (weights 1/sigma).  bounds
    maps parameter names to (lo, hi) boxes; steps are projected onto the box.
    Reported standard errors come from the covariance (J^T J)^-1, scaled by
    the reduced chi-square when no sigma was supplied.

    Raises RankDeficiencyError when the data cannot determine the free
    parameters.  Hitting the iteration cap returns converged=False instead
    of raising; callers decide how to treat that.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    free_names = model.free_names
    n_free = len(free_names)
    if n_free == 0:
        raise ValueError("model has no free parameters")
    missing = set(free_names) - set(init)
    if missing:
        raise ValueError(f"init missing free parameters: {sorted(missing)}")
    if len(y) < n_free:
        raise RankDeficiencyError(
            f"{len(y)} data points cannot determine {n_free} parameters")
    if sigma is None:
        weights = np.ones_like(y)
    else:
        sigma = np.asarray(sigma, dtype=float)
        if np.any(sigma <= 0):
            raise ValueError("sigma values must be positive")
        weights = 1.0 / sigma

    lo = np.full(n_free, -np.inf)
    hi = np.full(n_free, np.inf)
    if bounds:
        for j, name in enumerate(free_names):
            if name in bounds:
                lo[j], hi[j] = bounds[name]

    p = np.array([float(init[n]) for n in free_names])
    if np.any(p < lo) or np.any(p > hi):
        raise ValueError("initial values violate bounds")

    def cost_of(values):
        # Exploration may wander into overflow territory (e.g. negative decay
        # constants); the resulting inf cost is simply rejected.
        with np.errstate(over="ignore", invalid="ignore"):
            baseline = model.fn(x, _assemble(model, values))
            residual = weights * (y - baseline)
            cost = float(residual @ residual) if np.all(np.isfinite(residual)) \
                else math.inf
        return baseline, residual, cost

    baseline, residual, cost = cost_of(p)
    if not math.isfinite(cost):
        raise ValueError("model is not finite at the initial parameters")
    jac = _jacobian(model, x, weights, p, baseline)
    if np.linalg.matrix_rank(jac) < n_free:
        raise RankDeficiencyError("singular normal equations: Jacobian is rank "
                                  f"deficient for parameters {free_names}")
    normal = jac.T @ jac
    gradient = jac.T @ residual
    lam = LAMBDA_SEED * float(np.max(np.diag(normal)))
    if lam <= 0 or not math.isfinite(lam):
        raise RankDeficiencyError("degenerate normal equations (zero curvature)")

    converged = False
    iterations = 0
    for iterations in range(1, max_iterations + 1):
        if float(np.linalg.norm(gradient)) < grad_tol:
            converged = True
            break
        accepted = False
        for _ in range(60):
            try:
                step = np.linalg.solve(normal + lam * np.eye(n_free), gradient)
            except np.linalg.LinAlgError as exc:
                raise RankDeficiencyError(f"singular normal equations: {exc}") from exc
            candidate = np.clip(p + step, lo, hi)
            baseline_new, residual_new, cost_new = cost_of(candidate)
            if math.isfinite(cost_new) and cost_new <= cost:
                relative_drop = (cost - cost_new) / max(cost, 1e-300)
                p, baseline, residual, cost = candidate, baseline_new, residual_new, cost_new
                lam = max(lam / 10.0, 1e-300)
                accepted = True
                if relative_drop < cost_tol:
                    converged = True
                break
            lam *= 10.0
        if not accepted:
            # Damping exhausted without improvement: stationary to float
            # precision, treat as converged.
            converged = True
            break
        if converged:
            break
        jac = _jacobian(model, x, weights, p, baseline)
        normal = jac.T @ jac
        gradient = jac.T @ residual

    jac = _jacobian(model, x, weights, p, baseline)
    normal = jac.T @ jac
    try:
        covariance = np.linalg.inv(normal)
    except np.linalg.LinAlgError as exc:
        raise RankDeficiencyError(f"singular normal equations: {exc}") from exc
    dof = len(y) - n_free
    chi2_reduced = cost / dof if dof > 0 else 0.0
    if sigma is None and dof > 0:
        covariance = covariance * chi2_reduced

    values = _assemble(model, p)
    stderr_full = np.zeros(len(model.param_names))
    stderr_free = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    for j, name in enumerate(free_names):
        stderr_full[model.param_names.index(name)] = stderr_free[j]
    return FitResult(param_names=model.param_names, free_names=free_names,
                     values=values, stderr=stderr_full, covariance=covariance,
                     chi2_reduced=chi2_reduced, iterations=iterations,
                     converged=converged)


# ---------------------------------------------------------------------------
# Model library


def _decaying_sinusoid(t, p):
    amplitude, frequency, phase, t2, offset = p
    return offset + amplitude * np.sin(2.0 * np.pi * frequency * t + phase) \
        * np.exp(-t / t2)


def decaying_sinusoid_model() -> FitModel:
    """offset + A sin(2 pi f t + phase) exp(-t/T2).

    With t in us and f in MHz this is the standard free-induction /
    driven-oscillation fit form.
    """
    return FitModel(name="decaying_sinusoid",
                    param_names=("amplitude", "frequency_mhz", "phase_rad",
                                 "t2_us", "offset"),
                    fn=_decaying_sinusoid)


def _lorentzian_comb(x, p, spacing):
    center, width, amp_low, amp_mid, amp_high, offset = p
    half_sq = (0.5 * width) ** 2
    value = np.full_like(x, offset, dtype=float)
    for amp, c in ((amp_low, center - spacing), (amp_mid, center),
                   (amp_high, center + spacing)):
        value = value + amp * half_sq / ((x - c) ** 2 + half_sq)
    return value


def lorentzian_comb_model(spacing_mhz: float = 2.2) -> FitModel:
    """Three equal-width Lorentzians at center -+ spacing (hyperfine triplet).

    The spacing is frozen into the model rather than fitted; amplitudes may
    be negative to describe dips below the baseline.
    """
    return FitModel(name="lorentzian_comb",
                    param_names=("center_mhz", "width_mhz", "amp_low",
                                 "amp_mid", "amp_high", "offset"),
                    fn=lambda x, p: _lorentzian_comb(x, p, spacing_mhz))


def _lorentzian_peak(x, p):
    center, fwhm, height, offset = p
    half_sq = (0.5 * fwhm) ** 2
    return offset + height * half_sq / ((x - center) ** 2 + half_sq)


def lorentzian_peak_model() -> FitModel:
    """Single Lorentzian, used for the readout-contrast-vs-field curve."""
    return FitModel(name="lorentzian_peak",
                    param_names=("center", "fwhm", "height", "offset"),
                    fn=_lorentzian_peak)


# ---------------------------------------------------------------------------
# Initial estimates

MIN_SAMPLES_FREQUENCY = 8


def estimate_init_sinusoid(x, y) -> dict:
    """Starting values for the decaying sinusoid from DFT peak + envelope.

    Frequency comes from the discrete Fourier peak (ties resolve toward the
    lower frequency), amplitude from the signal range, the decay constant
    from the slope of the log block-envelope.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < MIN_SAMPLES_FREQUENCY:
        raise ValueError(f"need at least {MIN_SAMPLES_FREQUENCY} samples, got {len(x)}")
    span = float(np.ptp(y))
    if span <= 0 or not np.isfinite(span):
        raise FlatDataError("constant data: no oscillation to estimate")
    dt = float(np.median(np.diff(x)))
    centered = y - float(np.mean(y))
    spectrum = np.fft.rfft(centered)
    magnitudes = np.abs(spectrum)
    magnitudes[0] = 0.0
    peak = int(np.argmax(magnitudes))  # argmax returns the first (lowest) bin on ties
    if peak == 0 or magnitudes[peak] <= 0:
        raise FlatDataError("no spectral peak found")
    frequency = peak / (len(x) * dt)
    phase = float(np.angle(spectrum[peak])) + 0.5 * np.pi

    # Block-wise envelope for the decay constant.
    blocks = 4
    edges = np.linspace(0, len(x), blocks + 1, dtype=int)
    amps, centers = [], []
    for k in range(blocks):
        segment = centered[edges[k]:edges[k + 1]]
        if len(segment) >= 2 and np.ptp(segment) > 0:
            amps.append(0.5 * np.ptp(segment))
            centers.append(0.5 * (x[edges[k]] + x[edges[k + 1] - 1]))
    t2 = float(x[-1] - x[0])
    if len(amps) >= 2 and amps[0] > 0:
        slope = np.polyfit(centers, np.log(amps), 1)[0]
        if slope < 0:
            t2 = -1.0 / slope
    return {"amplitude": 0.5 * span, "frequency_mhz": frequency,
            "phase_rad": phase, "t2_us": t2, "offset": float(np.mean(y))}


def estimate_init_lorentzian_comb(x, y, spacing: float = 2.2) -> dict:
    """Starting values for the hyperfine triplet from the strongest extremum.

    The extremum may be any of the three lines, so the three center
    hypotheses c, c - s, c + s are scored by how much signal they capture.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(y) <= 0:
        raise FlatDataError("constant data: no resonance to estimate")
    offset = float(np.median(y))
    deviation = y - offset
    anchor = float(x[int(np.argmax(np.abs(deviation)))])

    def captured(center):
        total = 0.0
        for c in (center - spacing, center, center + spacing):
            if x[0] - spacing / 2 <= c <= x[-1] + spacing / 2:
                total += abs(deviation[int(np.argmin(np.abs(x - c)))])
        return total

    center = max((anchor, anchor - spacing, anchor + spacing), key=captured)
    amps = []
    for c in (center - spacing, center, center + spacing):
        amps.append(float(deviation[int(np.argmin(np.abs(x - c)))]))
    width = max(float(x[-1] - x[0]) / 10.0, 2.0 * float(np.median(np.diff(x))))
    return {"center_mhz": center, "width_mhz": width, "amp_low": amps[0],
            "amp_mid": amps[1], "amp_high": amps[2], "offset": offset}


def fit_lorentzian_comb(x, y, spacing_mhz: float = 2.2, sigma=None) -> FitResult:
    """Fit the hyperfine triplet with multi-start over the center hypotheses.

    At realistic noise the strongest line need not be the central one, so a
    single data-driven init can land one spacing off; starting the fit from
    each of the three shifted centers and keeping the lowest-cost solution
    removes that failure mode.
    """
    model = lorentzian_comb_model(spacing_mhz)
    base_init = estimate_init_lorentzian_comb(x, y, spacing_mhz)
    best = None
    best_cost = math.inf
    for shift in (0.0, -spacing_mhz, spacing_mhz):
        init = dict(base_init)
        init["center_mhz"] = base_init["center_mhz"] + shift
        try:
            fit = fit_nonlinear(model, x, y, init, sigma=sigma)
        except RankDeficiencyError:
            continue
        cost = float(np.sum((np.asarray(y) - model.fn(np.asarray(x, dtype=float),
                                                      fit.values)) ** 2))
        if cost < best_cost:
            best, best_cost = fit, cost
    if best is None:
        raise RankDeficiencyError("no center hypothesis produced a valid fit")
    return best


def estimate_init_lorentzian_peak(x, y) -> dict:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.ptp(y) <= 0:
        raise FlatDataError("constant data: no peak to estimate")
    base = float(np.min(y))
    peak = int(np.argmax(y - base))
    above = np.flatnonzero(y - base > 0.5 * (y[peak] - base))
    fwhm = float(x[above[-1]] - x[above[0]]) if len(above) > 1 \
        else float(x[-1] - x[0]) / 10.0
    return {"center": float(x[peak]), "fwhm": max(fwhm, 1e-9),
            "height": float(y[peak] - base), "offset": base}


_INIT_DISPATCH = {
    "decaying_sinusoid": estimate_init_sinusoid,
    "lorentzian_peak": estimate_init_lorentzian_peak,
}


def estimate_init(model: FitModel, x, y) -> dict:
    """Data-driven starting values for a library model."""
    if model.name == "lorentzian_comb":
        return estimate_init_lorentzian_comb(x, y)
    try:
        estimator = _INIT_DISPATCH[model.name]
    except KeyError:
        raise ValueError(f"no initial estimator for model {model.name!r}") from None
    return estimator(x, y)
