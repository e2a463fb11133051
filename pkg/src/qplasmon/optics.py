"""TM reflectance of the prism / gold / analyte (Kretschmann) stack.

Layers are numbered 1 (prism), 2 (gold film), 3 (analyte). Angles at the
API boundary are incidence angles inside the prism, in degrees; lengths
are in nm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from qplasmon import kernels
from qplasmon.errors import QPlasmonError, ResonanceNotFound

__all__ = [
    "ComplexPermittivity",
    "StackModel",
    "AngleScan",
    "DEFAULT_STACK",
    "normal_wavevector",
    "fresnel_p",
    "reflectance_spr",
    "reflectance_vs_index",
    "angle_scan",
    "sensitivity",
    "locate_minimum",
    "resonance_angle",
]

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ComplexPermittivity:
    real_part: float
    imag_part: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.real_part) and math.isfinite(self.imag_part)):
            raise QPlasmonError("permittivity must be finite")
        if self.imag_part < 0:
            raise QPlasmonError(f"gain medium rejected (imag_part={self.imag_part} < 0)")

    @classmethod
    def from_index(cls, n: float) -> "ComplexPermittivity":
        return cls(float(n) ** 2, 0.0)

    @property
    def value(self) -> complex:
        return complex(self.real_part, self.imag_part)


@dataclass(frozen=True)
class StackModel:
    """Three-layer stack at a single wavelength.

    ``prism_index`` defaults to 1.5106 (borosilicate near 800 nm); the gold
    and analyte defaults are the calibrated 799 nm values.
    """

    prism_index: float = 1.5106
    gold_permittivity: ComplexPermittivity = ComplexPermittivity(-18.2484, 0.8096)
    gold_thickness: float = 57.41
    analyte_index: float = 1.3284
    wavelength: float = 799.0

    def __post_init__(self):
        if not self.prism_index > 1:
            raise QPlasmonError(f"prism_index must exceed 1, got {self.prism_index}")
        if not self.gold_permittivity.real_part < 0:
            raise QPlasmonError("gold permittivity must have a negative real part")
        if not self.gold_thickness > 0:
            raise QPlasmonError(f"gold_thickness must be > 0, got {self.gold_thickness}")
        if not self.analyte_index >= 1:
            raise QPlasmonError(f"analyte_index must be >= 1, got {self.analyte_index}")
        if not self.wavelength > 0:
            raise QPlasmonError(f"wavelength must be > 0, got {self.wavelength}")

    def with_analyte(self, n: float) -> "StackModel":
        return replace(self, analyte_index=float(n))

    def permittivity(self, layer: int) -> complex:
        if layer == 1:
            return complex(self.prism_index ** 2, 0.0)
        if layer == 2:
            return self.gold_permittivity.value
        if layer == 3:
            return complex(self.analyte_index ** 2, 0.0)
        raise QPlasmonError(f"layer must be 1, 2 or 3, got {layer!r}")


DEFAULT_STACK = StackModel()


@dataclass(frozen=True)
class AngleScan:
    angles: np.ndarray
    reflectances: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.angles, dtype=float)
        r = np.asarray(self.reflectances, dtype=float)
        if a.shape != r.shape or a.ndim != 1:
            raise QPlasmonError("angles and reflectances must be 1-D and equally long")
        if a.size > 1 and not np.all(np.diff(a) > 0):
            raise QPlasmonError("angles must be strictly increasing")
        if np.any((r < 0) | (r > 1)):
            raise QPlasmonError("reflectances must lie in [0, 1]")
        object.__setattr__(self, "angles", a)
        object.__setattr__(self, "reflectances", r)

    def __len__(self):
        return self.angles.size


def _check_angle(theta_deg):
    t = np.asarray(theta_deg, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0.0) or np.any(t >= 90.0):
        raise QPlasmonError(f"incidence angle must lie in [0, 90) degrees, got {theta_deg}")
    return t


def normal_wavevector(stack: StackModel, layer_index: int, theta_in: float) -> complex:
    """Normal wavevector component k_l in rad/nm, branch chosen with Im(k_l) >= 0."""
    theta = math.radians(float(_check_angle(theta_in)))
    eps = stack.permittivity(layer_index)
    k = (2.0 * math.pi / stack.wavelength) * np.sqrt(eps - stack.prism_index ** 2 * math.sin(theta) ** 2)
    k = complex(k)
    if layer_index == 1:
        return complex(k.real, 0.0)
    return -k if k.imag < 0 else k


def fresnel_p(stack: StackModel, l: int, m: int, theta_in: float) -> complex:
    """TM amplitude reflection coefficient r_lm between layers ``l`` and ``m``."""
    if l == m:
        raise QPlasmonError("fresnel_p needs two distinct layers")
    ql = normal_wavevector(stack, l, theta_in) / stack.permittivity(l)
    qm = normal_wavevector(stack, m, theta_in) / stack.permittivity(m)
    return (ql - qm) / (ql + qm)


def _finish(r, scalar):
    if np.any(r > 1.0 + 1e-9) or np.any(r < -1e-12):
        raise QPlasmonError(f"reflectance left [0, 1]: min={r.min()}, max={r.max()}")
    r = np.clip(r, 0.0, 1.0)
    return float(r[0]) if scalar else r


def reflectance_vs_index(stack: StackModel, theta_in, analyte_index):
    """R_sp broadcast over angle(s) and analyte index(es); other layers from ``stack``."""
    t = _check_angle(theta_in)
    n = np.asarray(analyte_index, dtype=float)
    if np.any(n < 1.0):
        raise QPlasmonError("analyte index must be >= 1")
    scalar = t.ndim == 0 and n.ndim == 0
    t, n = np.broadcast_arrays(np.radians(t), n)
    shape = t.shape
    r = kernels.reflectance(t.ravel(), (n.ravel() ** 2).astype(complex), stack.prism_index ** 2,
                            stack.gold_permittivity.value, stack.gold_thickness, stack.wavelength)
    out = _finish(r, scalar)
    return out if scalar else out.reshape(shape)


def reflectance_spr(stack: StackModel, theta_in):
    """Kretschmann reflectance R_sp at ``theta_in`` degrees (scalar or array)."""
    return reflectance_vs_index(stack, theta_in, stack.analyte_index)


def angle_scan(stack: StackModel, theta_min: float, theta_max: float, steps: int) -> AngleScan:
    if not theta_min < theta_max:
        raise QPlasmonError(f"degenerate angle range [{theta_min}, {theta_max}]")
    if int(steps) < 2:
        raise QPlasmonError(f"steps must be >= 2, got {steps}")
    angles = np.linspace(theta_min, theta_max, int(steps))
    return AngleScan(angles, reflectance_spr(stack, angles))


def sensitivity(stack: StackModel, theta_in: float, delta_n: float = 1e-6) -> float:
    """Signed central difference dR_sp/dn of the analyte index, per RIU."""
    if not delta_n > 0:
        raise QPlasmonError("delta_n must be positive")
    theta = math.radians(float(_check_angle(theta_in)))
    n = stack.analyte_index
    # n - delta_n may dip below 1 for an air analyte; the kernel does not care
    eps = np.array([(n - delta_n) ** 2, (n + delta_n) ** 2], dtype=complex)
    r = kernels.reflectance(np.full(2, theta), eps, stack.prism_index ** 2,
                            stack.gold_permittivity.value, stack.gold_thickness, stack.wavelength)
    return float((r[1] - r[0]) / (2.0 * delta_n))


def locate_minimum(f, lo: float, hi: float, coarse: int = 201, tol: float = 1e-5) -> float:
    """Minimise a unimodal ``f`` on ``[lo, hi]``: coarse grid, then golden section.

    ``f`` must accept an array. Raises :class:`ResonanceNotFound` if the grid
    minimum sits on an edge or the grid has more than one local minimum.
    """
    x = np.linspace(lo, hi, coarse)
    y = np.asarray(f(x), dtype=float)
    i = int(np.argmin(y))
    if i == 0 or i == coarse - 1:
        raise ResonanceNotFound(f"no interior minimum in [{lo}, {hi}]")
    slope_sign = np.sign(np.diff(y))
    slope_sign = slope_sign[slope_sign != 0]
    if np.count_nonzero(np.diff(slope_sign) > 0) > 1:
        raise ResonanceNotFound(f"more than one local minimum in [{lo}, {hi}]")

    a, b = x[i - 1], x[i + 1]
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = float(f(np.array([c]))[0]), float(f(np.array([d]))[0])
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = float(f(np.array([c]))[0])
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = float(f(np.array([d]))[0])
    return 0.5 * (a + b)


def resonance_angle(stack: StackModel, window=(66.5, 69.0), tol: float = 1e-5) -> float:
    """Angle (degrees) of the SPR dip inside ``window``."""
    lo, hi = window
    _check_angle([lo, hi])
    if not lo < hi:
        raise QPlasmonError(f"degenerate window {window}")
    return locate_minimum(lambda a: reflectance_spr(stack, a), lo, hi, tol=tol)
