"""Statistics and inversion: sample SDs, air normalisation, calibration fits,
index inversion, linear error propagation and the concentration line fit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import least_squares

from qplasmon import kernels
from qplasmon.errors import (AmbiguousBracketError, OutOfRangeError, QPlasmonError,
                             UnderdeterminedError)
from qplasmon.optics import ComplexPermittivity, StackModel, reflectance_vs_index

__all__ = [
    "SampleSeries",
    "CalibrationCurve",
    "CalibrationResult",
    "ConcentrationModel",
    "DEFAULT_BOUNDS",
    "DEFAULT_INIT",
    "sample_mean_sd",
    "normalize_to_air",
    "normalized_model",
    "fit_calibration",
    "calibration_from_stack",
    "invert_index",
    "propagate_error",
    "fit_concentration",
]

# (eps', eps'', d [nm], n)
DEFAULT_BOUNDS = ((-30.0, -10.0), (0.1, 3.0), (40.0, 80.0), (1.30, 1.36))
DEFAULT_INIT = (-20.0, 1.0, 55.0, 1.33)


@dataclass(frozen=True)
class SampleSeries:
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float).ravel())

    def __len__(self):
        return self.values.size


def sample_mean_sd(series: SampleSeries) -> tuple[float, float]:
    """Mean and SD with 1/mu normalisation (population form, not 1/(mu-1))."""
    v = series.values
    if v.size < 2:
        raise QPlasmonError(f"SD needs at least 2 repetitions, got {v.size}")
    mean = float(np.mean(v))
    return mean, float(np.sqrt(np.mean((v - mean) ** 2)))


def normalize_to_air(total: SampleSeries, air_reference_mean: float) -> SampleSeries:
    """T_prism(j) = T_total(j) / <T_total,air>."""
    if not air_reference_mean > 0:
        raise QPlasmonError(f"air reference mean must be > 0, got {air_reference_mean}")
    return SampleSeries(total.values / air_reference_mean, total.label)


@dataclass(frozen=True)
class CalibrationCurve:
    label: str
    angles: np.ndarray
    t_prism: np.ndarray
    sd: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        t = np.asarray(self.t_prism, dtype=float)
        if a.shape != t.shape or a.ndim != 1:
            raise QPlasmonError(f"curve {self.label!r}: angles and t_prism must match")
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "t_prism", t)
        if self.sd is not None:
            s = np.asarray(self.sd, dtype=float)
            if s.shape != a.shape:
                raise QPlasmonError(f"curve {self.label!r}: sd length mismatch")
            object.__setattr__(self, "sd", s)


@dataclass(frozen=True)
class CalibrationResult:
    gold_permittivity: ComplexPermittivity
    gold_thickness: float
    analyte_indices: Mapping[str, float]
    residual_rms: float
    converged: bool
    iterations: int
    prism_index: float = 1.5106
    wavelength: float = 799.0
    reference_index: float | None = None
    weighted: bool = False
    chi2_reduced: float = float("nan")
    message: str = ""

    def stack(self, analyte_index: float) -> StackModel:
        return StackModel(self.prism_index, self.gold_permittivity, self.gold_thickness,
                          analyte_index, self.wavelength)


@dataclass(frozen=True)
class ConcentrationModel:
    intercept: float
    slope: float
    slope_uncertainty: float
    intercept_uncertainty: float = 0.0
    weighted: bool = True


def calibration_from_stack(stack: StackModel, reference_index: float | None = None,
                           label: str = "analyte") -> CalibrationResult:
    """Wrap known stack parameters as an already-converged calibration."""
    return CalibrationResult(stack.gold_permittivity, stack.gold_thickness,
                             {label: stack.analyte_index}, 0.0, True, 0,
                             stack.prism_index, stack.wavelength, reference_index)


def normalized_model(stack: StackModel, theta_in, analyte_index, reference_index=None):
    """Expected T_prism: R_sp, divided by the reference-analyte R_sp when given."""
    r = reflectance_vs_index(stack, theta_in, analyte_index)
    if reference_index is None:
        return r
    return r / reflectance_vs_index(stack, theta_in, reference_index)


def fit_calibration(curves: Sequence[CalibrationCurve], prism_index: float = 1.5106,
                    wavelength: float = 799.0, bounds=DEFAULT_BOUNDS, init=DEFAULT_INIT,
                    reference_index: float | None = None, max_iter: int = 500,
                    ftol: float = 1e-10, rms_threshold: float = 0.05,
                    use_sd: bool = True) -> CalibrationResult:
    """Simultaneous fit of shared gold parameters and one analyte index per curve.

    Residuals are weighted by 1/sd when every curve carries SDs, uniform
    otherwise. Curves are processed in label order, so the result does not
    depend on the order of ``curves``.
    """
    if not curves:
        raise UnderdeterminedError("at least one curve is required")
    curves = sorted(curves, key=lambda c: c.label)
    labels = [c.label for c in curves]
    if len(set(labels)) != len(labels):
        raise QPlasmonError("curve labels must be unique")
    n_par = 3 + len(curves)
    for c in curves:
        if len(c.angles) < n_par:
            raise UnderdeterminedError(
                f"curve {c.label!r} has {len(c.angles)} points, needs >= {n_par}")
    (er, ei, dd, nn) = [tuple(map(float, b)) for b in bounds]
    for lo, hi in (er, ei, dd, nn):
        if not lo < hi:
            raise QPlasmonError(f"ill-ordered bounds {lo} >= {hi}")

    weighted = use_sd and all(c.sd is not None and np.all(c.sd > 0) for c in curves)
    theta = np.concatenate([np.radians(c.angles) for c in curves])
    data = np.concatenate([c.t_prism for c in curves])
    sigma = np.concatenate([c.sd for c in curves]) if weighted else np.ones_like(data)
    which = np.concatenate([np.full(len(c.angles), i) for i, c in enumerate(curves)])
    eps_prism = prism_index ** 2

    def model(p):
        eps_gold = complex(p[0], p[1])
        eps_a = (p[3:][which] ** 2).astype(complex)
        r = kernels.reflectance(theta, eps_a, eps_prism, eps_gold, p[2], wavelength)
        if reference_index is not None:
            ref = np.full(theta.shape, complex(reference_index ** 2))
            r = r / kernels.reflectance(theta, ref, eps_prism, eps_gold, p[2], wavelength)
        return r

    def resid(p):
        return (model(p) - data) / sigma

    lo = np.array([er[0], ei[0], dd[0]] + [nn[0]] * len(curves))
    hi = np.array([er[1], ei[1], dd[1]] + [nn[1]] * len(curves))
    x0 = np.clip(np.array(list(init[:3]) + [init[3]] * len(curves), dtype=float), lo, hi)
    sol = least_squares(resid, x0, bounds=(lo, hi), method="trf", x_scale="jac",
                        ftol=ftol, xtol=1e-12, gtol=1e-12, max_nfev=max_iter)
    p = sol.x
    raw = model(p) - data
    rms = float(np.sqrt(np.mean(raw ** 2)))
    dof = max(data.size - n_par, 1)
    chi2 = float(np.sum(sol.fun ** 2) / dof) if weighted else float("nan")
    converged = bool(sol.status > 0 and rms <= rms_threshold)
    return CalibrationResult(
        gold_permittivity=ComplexPermittivity(float(p[0]), float(p[1])),
        gold_thickness=float(p[2]),
        analyte_indices={lab: float(v) for lab, v in zip(labels, p[3:])},
        residual_rms=rms,
        converged=converged,
        iterations=int(sol.njev if sol.njev is not None else sol.nfev),
        prism_index=float(prism_index),
        wavelength=float(wavelength),
        reference_index=reference_index,
        weighted=weighted,
        chi2_reduced=chi2,
        message=str(sol.message),
    )


def _model_fn(calibration: CalibrationResult, theta_in: float):
    stack = calibration.stack(1.0)
    return lambda n: normalized_model(stack, theta_in, n, calibration.reference_index)


def invert_index(calibration: CalibrationResult, theta_in: float, t_prism_observed,
                 n_bracket=(1.3275, 1.3375), tol: float = 1e-10, check_points: int = 64):
    """Refractive index whose modelled T_prism at ``theta_in`` equals the observation.

    Accepts a scalar or an array of observations. The forward model must be
    strictly monotone on ``n_bracket``; this is checked on a coarse grid.
    """
    n_lo, n_hi = map(float, n_bracket)
    if not n_lo < n_hi:
        raise QPlasmonError(f"ill-ordered bracket {n_bracket}")
    model = _model_fn(calibration, theta_in)
    grid = np.linspace(n_lo, n_hi, check_points)
    m = model(grid)
    dm = np.diff(m)
    if not (np.all(dm > 0) or np.all(dm < 0)):
        k = int(np.argmax(m) if dm[0] > 0 else np.argmin(m))
        branches = ((n_lo, float(grid[k])), (float(grid[k]), n_hi))
        raise AmbiguousBracketError(
            f"T_prism(n) not monotone on {n_bracket} at {theta_in} deg; "
            f"candidate branches {branches[0]} and {branches[1]}", branches)
    increasing = bool(dm[0] > 0)
    lo_val, hi_val = float(min(m[0], m[-1])), float(max(m[0], m[-1]))

    obs = np.asarray(t_prism_observed, dtype=float)
    bad = (obs < lo_val) | (obs > hi_val)
    if np.any(bad):
        raise OutOfRangeError(
            f"{int(np.count_nonzero(bad))} observation(s) outside attainable range "
            f"[{lo_val:.9g}, {hi_val:.9g}] on bracket {n_bracket}")
    ref = 1.0
    if calibration.reference_index is not None:
        ref = float(reflectance_vs_index(calibration.stack(1.0), theta_in,
                                         calibration.reference_index))
    out = kernels.invert_bisect(obs.ravel(), np.radians(theta_in), n_lo, n_hi,
                                calibration.prism_index ** 2,
                                calibration.gold_permittivity.value,
                                calibration.gold_thickness, calibration.wavelength,
                                ref=ref, increasing=increasing, tol=tol)
    return float(out[0]) if obs.ndim == 0 else out.reshape(obs.shape)


def propagate_error(sd_t_prism: float, sensitivity_abs: float) -> float:
    """Linear error propagation: index SD = transmittance SD / |dT/dn|."""
    if not sensitivity_abs > 0:
        raise QPlasmonError("zero sensitivity: error propagation diverges at the dip bottom")
    if sd_t_prism < 0:
        raise QPlasmonError("sd must be >= 0")
    return sd_t_prism / sensitivity_abs


def fit_concentration(points: Sequence[tuple[float, SampleSeries]]) -> ConcentrationModel:
    """Straight line through (C, mean n), weighted by 1/sd^2.

    Falls back to ordinary least squares, with the uncertainty scaled by the
    residual scatter, if any point has zero SD (noise-free input).
    """
    if len(points) < 2:
        raise QPlasmonError("need at least two concentration points")
    c = np.array([float(p[0]) for p in points])
    if np.all(c == c[0]):
        raise QPlasmonError("all concentrations identical; slope undefined")
    y = np.empty(c.size)
    s = np.empty(c.size)
    for i, (_, series) in enumerate(points):
        if len(series) >= 2:
            y[i], s[i] = sample_mean_sd(series)
        else:
            y[i], s[i] = float(series.values[0]), 0.0

    weighted = bool(np.all(s > 0))
    w = 1.0 / s ** 2 if weighted else np.ones_like(c)
    S, Sx, Sy = w.sum(), (w * c).sum(), (w * y).sum()
    Sxx, Sxy = (w * c * c).sum(), (w * c * y).sum()
    delta = S * Sxx - Sx * Sx
    slope = (S * Sxy - Sx * Sy) / delta
    intercept = (Sxx * Sy - Sx * Sxy) / delta
    var_slope, var_icpt = S / delta, Sxx / delta
    if not weighted:
        dof = c.size - 2
        scale = float(np.sum((y - intercept - slope * c) ** 2) / dof) if dof > 0 else 0.0
        var_slope, var_icpt = var_slope * scale, var_icpt * scale
    return ConcentrationModel(float(intercept), float(slope), math.sqrt(var_slope),
                              math.sqrt(var_icpt), weighted)
