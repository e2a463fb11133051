import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qplasmon.errors import (AmbiguousBracketError, OutOfRangeError, QPlasmonError,
                             UnderdeterminedError)
from qplasmon.estimation import (CalibrationCurve, SampleSeries, calibration_from_stack,
                                 fit_calibration, fit_concentration, invert_index,
                                 normalize_to_air, normalized_model, propagate_error,
                                 sample_mean_sd)
from qplasmon.optics import DEFAULT_STACK, reflectance_spr, reflectance_vs_index, sensitivity
from qplasmon.photons import (ChannelModel, ProbeModel, SamplingPlan, draw_counts,
                              enhancement_ratio, expected_sd_classical, expected_sd_quantum)

TRUTH = {"eps_re": -18.2484, "eps_im": 0.8096, "d": 57.41, "water": 1.3284, "bsa2": 1.3325}
ANGLES = np.linspace(66.5, 69.0, 26)
CAL = calibration_from_stack(DEFAULT_STACK)

finite_lists = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=2, max_size=60)


def clean_curves(sd=False):
    out = []
    for label in ("water", "bsa2"):
        r = reflectance_vs_index(DEFAULT_STACK, ANGLES, TRUTH[label])
        s = np.sqrt(r * (1 - r) / 1e4) if sd else None
        out.append(CalibrationCurve(label, ANGLES, r, s))
    return out


def noisy_curves(seed, nu=10_000, mu=1_000):
    rng = np.random.default_rng(seed)
    out = []
    for label in ("water", "bsa2"):
        r = reflectance_vs_index(DEFAULT_STACK, ANGLES, TRUTH[label])
        samples = rng.binomial(nu, r[:, None], size=(r.size, mu)) / nu
        out.append(CalibrationCurve(label, ANGLES, samples.mean(axis=1), samples.std(axis=1)))
    return out


# -- sample statistics ------------------------------------------------------------

def test_constant_series():
    mean, sd = sample_mean_sd(SampleSeries([0.3] * 1000))
    assert mean == pytest.approx(0.3) and sd == pytest.approx(0.0, abs=1e-15)


def test_two_point_series_uses_population_normalisation():
    assert sample_mean_sd(SampleSeries([0.0, 1.0])) == (0.5, 0.5)


def test_short_series_rejected():
    with pytest.raises(QPlasmonError):
        sample_mean_sd(SampleSeries([0.4]))


def test_seeded_heralded_sd():
    rec = draw_counts(ProbeModel.heralded(), ChannelModel(t_prism=0.25), SamplingPlan(10_000, 1_000, 8))
    _, sd = sample_mean_sd(SampleSeries(rec.transmittances))
    assert sd == pytest.approx(4.3301e-3, rel=0.10)


@given(finite_lists, st.randoms(use_true_random=False))
def test_sd_permutation_invariant(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a, b = sample_mean_sd(SampleSeries(values)), sample_mean_sd(SampleSeries(shuffled))
    assert b[1] == pytest.approx(a[1], rel=1e-9, abs=1e-9)


@given(finite_lists, st.floats(-100, 100).filter(lambda c: abs(c) > 1e-3))
def test_sd_scales_linearly(values, c):
    _, sd = sample_mean_sd(SampleSeries(values))
    _, sd_c = sample_mean_sd(SampleSeries(np.asarray(values) * c))
    assert sd_c == pytest.approx(abs(c) * sd, rel=1e-9, abs=1e-9)


# -- air normalisation ------------------------------------------------------------

def test_normalize_examples():
    assert normalize_to_air(SampleSeries([0.3]), 0.6).values[0] == pytest.approx(0.5)
    series = SampleSeries([0.1, 0.2, 0.7])
    assert np.array_equal(normalize_to_air(series, 1.0).values, series.values)
    for bad in (0.0, -0.5):
        with pytest.raises(QPlasmonError):
            normalize_to_air(series, bad)


@given(finite_lists, st.floats(1e-3, 10))
def test_normalize_commutes_with_statistics(values, a):
    m, s = sample_mean_sd(SampleSeries(values))
    mn, sn = sample_mean_sd(normalize_to_air(SampleSeries(values), a))
    assert mn == pytest.approx(m / a, rel=1e-12, abs=1e-12)
    assert sn == pytest.approx(s / a, rel=1e-9, abs=1e-9)


# -- calibration fit ------------------------------------------------------------

def _check_truth(res, rel):
    assert res.gold_permittivity.real_part == pytest.approx(TRUTH["eps_re"], rel=rel)
    assert res.gold_permittivity.imag_part == pytest.approx(TRUTH["eps_im"], rel=rel)
    assert res.gold_thickness == pytest.approx(TRUTH["d"], rel=rel)
    for label in ("water", "bsa2"):
        assert res.analyte_indices[label] == pytest.approx(TRUTH[label], rel=rel)


@pytest.mark.parametrize("sd", [False, True])
def test_noise_free_fit_recovers_truth(sd):
    res = fit_calibration(clean_curves(sd))
    assert res.converged and res.weighted is sd
    _check_truth(res, 1e-3)
    assert res.residual_rms < 1e-9


def test_fit_started_at_optimum_stops_immediately():
    init = (TRUTH["eps_re"], TRUTH["eps_im"], TRUTH["d"], TRUTH["water"])
    curves = [c for c in clean_curves() if c.label == "water"]
    res = fit_calibration(curves, init=init)
    assert res.converged and res.iterations <= 2
    assert res.residual_rms < 1e-12


def test_fit_independent_of_curve_order():
    curves = noisy_curves(3)
    a = fit_calibration(curves)
    b = fit_calibration(curves[::-1])
    assert a == b


def test_fit_reproduces_its_forward_model():
    curves = noisy_curves(4)
    res = fit_calibration(curves)
    resid = []
    for c in curves:
        model = reflectance_spr(res.stack(res.analyte_indices[c.label]), c.angles)
        resid.append(model - c.t_prism)
    assert math.sqrt(np.mean(np.concatenate(resid) ** 2)) == pytest.approx(res.residual_rms,
                                                                           rel=1e-9)


def test_fit_with_air_reference_model():
    curves = []
    for label in ("water", "bsa2"):
        m = normalized_model(DEFAULT_STACK, ANGLES, TRUTH[label], 1.0)
        curves.append(CalibrationCurve(label, ANGLES, m))
    res = fit_calibration(curves, reference_index=1.0)
    _check_truth(res, 1e-3)


def test_noisy_fit_over_seeds():
    fits = [fit_calibration(noisy_curves(s)) for s in range(20)]
    d_err = np.median([abs(f.gold_thickness - TRUTH["d"]) for f in fits])
    e_err = np.median([abs(f.gold_permittivity.real_part / TRUTH["eps_re"] - 1) for f in fits])
    assert d_err < 1.0
    assert e_err < 0.02
    assert all(f.converged for f in fits)


def test_iteration_cap_flags_non_convergence():
    res = fit_calibration(clean_curves(), max_iter=3)
    assert not res.converged


def test_short_curve_rejected():
    c = CalibrationCurve("x", [66.5, 67.0, 67.5], [0.5, 0.2, 0.3])
    with pytest.raises(UnderdeterminedError):
        fit_calibration([c])
    with pytest.raises(UnderdeterminedError):
        fit_calibration([])


def test_ill_ordered_bounds_rejected():
    bounds = ((-10, -30), (0.1, 3), (40, 80), (1.3, 1.36))
    with pytest.raises(QPlasmonError):
        fit_calibration(clean_curves(), bounds=bounds)


# -- inversion --------------------------------------------------------------------

@pytest.mark.parametrize("n", [1.3325, 1.3284])
def test_inversion_round_trip_reference_indices(n):
    t = reflectance_spr(DEFAULT_STACK.with_analyte(n), 67.5)
    assert invert_index(CAL, 67.5, t, (1.3275, 1.3375)) == pytest.approx(n, abs=1e-7)


def test_inversion_round_trip_grid():
    ns = np.linspace(1.3276, 1.3374, 50)
    t = reflectance_vs_index(DEFAULT_STACK, 67.5, ns)
    np.testing.assert_allclose(invert_index(CAL, 67.5, t, (1.3275, 1.3375)), ns, atol=1e-7)


def test_inversion_out_of_range():
    top = reflectance_spr(DEFAULT_STACK.with_analyte(1.3375), 67.5)
    with pytest.raises(OutOfRangeError):
        invert_index(CAL, 67.5, top + 1e-3, (1.3275, 1.3375))


def test_inversion_ambiguous_bracket_names_branches():
    with pytest.raises(AmbiguousBracketError) as info:
        invert_index(CAL, 67.5, 0.3, (1.320, 1.335))
    (a, b), (c, d) = info.value.branches
    assert a == 1.320 and d == 1.335 and b == c
    assert 1.325 < b < 1.3275


# -- error propagation ------------------------------------------------------------

def test_propagation_examples():
    assert propagate_error(0.01, 50) == pytest.approx(2e-4)
    assert propagate_error(0.0, 50) == 0
    with pytest.raises(QPlasmonError):
        propagate_error(0.01, 0.0)


@pytest.mark.parametrize("n", [1.3284, 1.3305, 1.3325])
def test_quantum_over_classical_index_error(n):
    stack = DEFAULT_STACK.with_analyte(n)
    t = 0.36 * reflectance_spr(stack, 67.5)
    slope = abs(sensitivity(stack, 67.5))
    dq = propagate_error(expected_sd_quantum(t, 1, 10_000), slope)
    dc = propagate_error(expected_sd_classical(t, 1, 10_000), slope)
    assert dq < dc
    assert dc / dq == pytest.approx(enhancement_ratio(t), rel=1e-12)


@pytest.mark.parametrize("n", [1.3284, 1.3325])
def test_propagation_matches_monte_carlo(n):
    r = reflectance_spr(DEFAULT_STACK.with_analyte(n), 67.5)
    rec = draw_counts(ProbeModel.heralded(), ChannelModel(t_prism=r), SamplingPlan(10_000, 1_000, 17))
    t_prism = SampleSeries(rec.transmittances)
    _, sd_t = sample_mean_sd(t_prism)
    _, sd_n = sample_mean_sd(SampleSeries(invert_index(CAL, 67.5, t_prism.values, (1.3275, 1.3375))))
    lepm = propagate_error(sd_t, abs(sensitivity(DEFAULT_STACK.with_analyte(n), 67.5)))
    assert sd_n == pytest.approx(lepm, rel=0.10)


# -- concentration line ---------------------------------------------------------------

def test_exact_line_recovered():
    cs = np.arange(0, 2.01, 0.25)
    pts = [(c, SampleSeries([1.3284 + 1.933e-3 * c])) for c in cs]
    fit = fit_concentration(pts)
    assert fit.slope == pytest.approx(1.933e-3, rel=1e-9)
    assert fit.intercept == pytest.approx(1.3284, rel=1e-12)


def test_weighted_line_uncertainty_formula():
    rng = np.random.default_rng(0)
    cs = np.arange(0, 2.01, 0.25)
    pts = [(c, SampleSeries(1.3284 + 1.933e-3 * c + 5e-5 * rng.standard_normal(1000))) for c in cs]
    fit = fit_concentration(pts)
    sds = np.array([sample_mean_sd(p[1])[1] for p in pts])
    w = 1 / sds ** 2
    cbar = np.sum(w * cs) / np.sum(w)
    assert fit.slope_uncertainty == pytest.approx(1 / math.sqrt(np.sum(w * (cs - cbar) ** 2)),
                                                  rel=1e-9)
    assert abs(fit.slope - 1.933e-3) < 2 * fit.slope_uncertainty


def test_flat_two_point_line():
    fit = fit_concentration([(0.0, SampleSeries([1.33, 1.33])), (1.0, SampleSeries([1.33, 1.33]))])
    assert fit.slope == pytest.approx(0.0, abs=1e-15)


def test_identical_concentrations_rejected():
    with pytest.raises(QPlasmonError):
        fit_concentration([(1.0, SampleSeries([1.33])), (1.0, SampleSeries([1.34]))])
