"""Hot loops: three-layer TM reflectance over grids and per-sample index inversion.

Each kernel exists twice, a scalar loop compiled with numba and a vectorised
numpy version. ``reflectance`` and ``invert_bisect`` dispatch on
:data:`qplasmon._accel.USE_NUMBA`; the ``*_numba`` / ``*_numpy`` names stay
importable so the two paths can be compared directly.
"""
import cmath
import math

import numpy as np

from qplasmon import _accel

__all__ = [
    "reflectance",
    "reflectance_numba",
    "reflectance_numpy",
    "invert_bisect",
    "invert_bisect_numba",
    "invert_bisect_numpy",
    "bisect_iterations",
]


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

@_accel.jit
def _kz(eps, eps_prism, sin2, k0):
    k = k0 * cmath.sqrt(eps - eps_prism * sin2)
    if k.imag < 0.0:
        k = -k
    return k


@_accel.jit
def _r_sp_scalar(theta, eps_analyte, eps_prism, eps_gold, thickness, wavelength):
    k0 = 2.0 * math.pi / wavelength
    s = math.sin(theta)
    sin2 = s * s
    e1 = complex(eps_prism, 0.0)
    k1 = _kz(e1, eps_prism, sin2, k0)
    k2 = _kz(eps_gold, eps_prism, sin2, k0)
    k3 = _kz(eps_analyte, eps_prism, sin2, k0)
    q1 = k1 / e1
    q2 = k2 / eps_gold
    q3 = k3 / eps_analyte
    r12 = (q1 - q2) / (q1 + q2)
    r23 = (q2 - q3) / (q2 + q3)
    ph = cmath.exp(2j * k2 * thickness)
    r = (ph * r23 + r12) / (ph * r23 * r12 + 1.0)
    return r.real * r.real + r.imag * r.imag


@_accel.jit
def _reflectance_loop(theta, eps_analyte, eps_prism, eps_gold, thickness, wavelength, out):
    for i in range(theta.shape[0]):
        out[i] = _r_sp_scalar(theta[i], eps_analyte[i], eps_prism, eps_gold,
                              thickness, wavelength)


@_accel.jit
def _invert_loop(targets, theta, n_lo, n_hi, eps_prism, eps_gold, thickness,
                 wavelength, ref, increasing, iters, out):
    for i in range(targets.shape[0]):
        lo = n_lo
        hi = n_hi
        t = targets[i]
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            m = _r_sp_scalar(theta, complex(mid * mid, 0.0), eps_prism, eps_gold,
                             thickness, wavelength) / ref
            if (m < t) == increasing:
                lo = mid
            else:
                hi = mid
        out[i] = 0.5 * (lo + hi)


def reflectance_numba(theta, eps_analyte, eps_prism, eps_gold, thickness, wavelength):
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    eps_analyte = np.ascontiguousarray(eps_analyte, dtype=np.complex128)
    out = np.empty(theta.shape[0])
    _reflectance_loop(theta, eps_analyte, float(eps_prism), complex(eps_gold),
                      float(thickness), float(wavelength), out)
    return out


def invert_bisect_numba(targets, theta, n_lo, n_hi, eps_prism, eps_gold, thickness,
                        wavelength, ref=1.0, increasing=True, tol=1e-10):
    targets = np.ascontiguousarray(targets, dtype=np.float64)
    out = np.empty(targets.shape[0])
    _invert_loop(targets, float(theta), float(n_lo), float(n_hi), float(eps_prism),
                 complex(eps_gold), float(thickness), float(wavelength), float(ref),
                 bool(increasing), bisect_iterations(n_lo, n_hi, tol), out)
    return out


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------

def _kz_np(eps, eps_prism, sin2, k0):
    k = k0 * np.sqrt(eps - eps_prism * sin2 + 0j)
    return np.where(k.imag < 0.0, -k, k)


def reflectance_numpy(theta, eps_analyte, eps_prism, eps_gold, thickness, wavelength):
    theta = np.asarray(theta, dtype=np.float64)
    eps_analyte = np.asarray(eps_analyte, dtype=np.complex128)
    k0 = 2.0 * np.pi / wavelength
    sin2 = np.sin(theta) ** 2
    k1 = _kz_np(complex(eps_prism), eps_prism, sin2, k0)
    k2 = _kz_np(complex(eps_gold), eps_prism, sin2, k0)
    k3 = _kz_np(eps_analyte, eps_prism, sin2, k0)
    q1 = k1 / eps_prism
    q2 = k2 / eps_gold
    q3 = k3 / eps_analyte
    r12 = (q1 - q2) / (q1 + q2)
    r23 = (q2 - q3) / (q2 + q3)
    ph = np.exp(2j * k2 * thickness)
    r = (ph * r23 + r12) / (ph * r23 * r12 + 1.0)
    return r.real ** 2 + r.imag ** 2


def invert_bisect_numpy(targets, theta, n_lo, n_hi, eps_prism, eps_gold, thickness,
                        wavelength, ref=1.0, increasing=True, tol=1e-10):
    targets = np.asarray(targets, dtype=np.float64)
    lo = np.full(targets.shape, float(n_lo))
    hi = np.full(targets.shape, float(n_hi))
    th = np.full(targets.shape, float(theta))
    for _ in range(bisect_iterations(n_lo, n_hi, tol)):
        mid = 0.5 * (lo + hi)
        m = reflectance_numpy(th, mid * mid, eps_prism, eps_gold, thickness, wavelength) / ref
        go_up = (m < targets) == increasing
        lo = np.where(go_up, mid, lo)
        hi = np.where(go_up, hi, mid)
    return 0.5 * (lo + hi)


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------

def bisect_iterations(n_lo, n_hi, tol):
    """Halvings needed to shrink ``[n_lo, n_hi]`` below ``tol``."""
    return max(1, int(math.ceil(math.log2(max(n_hi - n_lo, tol) / tol))) + 1)


def reflectance(theta, eps_analyte, eps_prism, eps_gold, thickness, wavelength):
    """R_sp for 1-D arrays ``theta`` (radians) and ``eps_analyte`` of equal length."""
    if _accel.USE_NUMBA:
        return reflectance_numba(theta, eps_analyte, eps_prism, eps_gold, thickness, wavelength)
    return reflectance_numpy(theta, eps_analyte, eps_prism, eps_gold, thickness, wavelength)


def invert_bisect(targets, theta, n_lo, n_hi, eps_prism, eps_gold, thickness,
                  wavelength, ref=1.0, increasing=True, tol=1e-10):
    """Solve ``R_sp(n)/ref == target`` for every target by bisection on a monotone bracket."""
    fn = invert_bisect_numba if _accel.USE_NUMBA else invert_bisect_numpy
    return fn(targets, theta, n_lo, n_hi, eps_prism, eps_gold, thickness, wavelength,
              ref=ref, increasing=increasing, tol=tol)
