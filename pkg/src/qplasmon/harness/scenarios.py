"""The two simulated experiments plus calibration and analysis of CSV data.

Random substreams are keyed by (experiment, grid point, run, probe,
repetition), so every grid point can be computed on any thread and the
report is assembled in grid order.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from qplasmon.errors import ConfigError, UnderdeterminedError
from qplasmon.estimation import (CalibrationCurve, SampleSeries, calibration_from_stack,
                                 fit_calibration, fit_concentration, invert_index,
                                 normalize_to_air, normalized_model, propagate_error,
                                 sample_mean_sd)
from qplasmon.harness.config import ASSUMPTIONS, ScenarioConfig
from qplasmon.harness.report import RunReport, read_table
from qplasmon.optics import reflectance_vs_index, sensitivity
from qplasmon.photons import (ProbeKind, draw_counts, enhancement_ratio, expected_sd_classical,
                              expected_sd_quantum, total_transmittance)

log = logging.getLogger(__name__)

_EXP_ANGLE, _EXP_CONC = 1, 2
_AIR = 0
_PROBE_CODE = {ProbeKind.HERALDED: 0, ProbeKind.COHERENT: 1}

ANGLE_COLUMNS = [
    "label", "analyte_index", "theta_deg", "t_total_true", "t_total_mean",
    "t_total_air_mean", "t_prism_mean", "t_prism_model", "sd_t_total", "sd_t_prism",
    "sd_classical", "sd_quantum", "enhancement_ratio", "below_snl",
]

CONC_COLUMNS = [
    "concentration", "n_true", "t_total_true", "t_total_mean", "t_prism_mean",
    "sd_t_total", "sd_classical", "sd_quantum", "below_snl", "n_mean_q", "dn_q", "n_mean_c", "dn_c",
    "dn_lepm_q", "dn_lepm_c", "dn_ratio", "dn_ratio_lepm", "enhancement_ratio",
    "dn_below_snl",
]

CALIB_COLUMNS = ["label", "theta_deg", "t_prism", "sd_t_prism", "t_prism_fit", "residual"]

ANALYZE_COLUMNS = [
    "setting", "repetitions", "t_total_mean", "t_total_air_mean", "t_prism_mean",
    "sd_t_total", "sd_t_prism", "sd_classical", "sd_quantum", "enhancement_ratio", "below_snl",
    "n_mean", "dn", "dn_lepm_q",
]


def _provenance(cfg: ScenarioConfig) -> dict:
    return {"config_hash": cfg.config_hash(), "seed": cfg.seed, "assumptions": list(ASSUMPTIONS),
            "config": cfg.as_dict()}


def _map(cfg, fn, items):
    items = list(items)
    if cfg.threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(fn, items))


def _require(cfg, experiment):
    if cfg.experiment != experiment:
        raise ConfigError(f"experiment: expected {experiment!r}, got {cfg.experiment!r}")


def _transmittance_samples(cfg, probe, t_prism, key):
    """(T_total true value, per-repetition T_total samples or None in zero-noise mode)."""
    channel = cfg.channel(t_prism)
    t_true = total_transmittance(channel)
    if probe.kind is ProbeKind.HERALDED:
        t_true *= probe.heralding_efficiency
    if cfg.zero_noise:
        return t_true, None
    rec = draw_counts(probe, channel, cfg.plan(), key)
    return t_true, rec.transmittances


def _expected_sds(cfg, probe, t_true):
    n = probe.mean_photon_number
    return (expected_sd_classical(t_true, n, cfg.trials),
            expected_sd_quantum(t_true, max(n, 1.0), cfg.trials))


def _mean_sd(cfg, probe, t_true, samples):
    if samples is None:
        sd_c, sd_q = _expected_sds(cfg, probe, t_true)
        return t_true, (sd_q if probe.kind is ProbeKind.HERALDED else sd_c)
    return sample_mean_sd(SampleSeries(samples))


# --------------------------------------------------------------------------
# angle scan
# --------------------------------------------------------------------------

def run_angle_scan(cfg: ScenarioConfig) -> RunReport:
    """Transmittance statistics over an angle grid for each analyte, air-normalised."""
    _require(cfg, "angle_scan")
    probe = cfg.probe_model()
    pcode = _PROBE_CODE[probe.kind]
    stack = cfg.stack()
    angles = np.linspace(cfg.angle_min, cfg.angle_max, cfg.angle_steps)
    analytes = list(zip(cfg.analyte_labels, cfg.analyte_indices))

    def at_angle(i):
        theta = float(angles[i])
        r_air = float(reflectance_vs_index(stack, theta, cfg.reference_index))
        air_true, air = _transmittance_samples(cfg, probe, r_air, (_EXP_ANGLE, i, _AIR, pcode))
        air_mean = air_true if air is None else float(np.mean(air))
        rows = []
        for a, (label, n) in enumerate(analytes, start=1):
            r = float(reflectance_vs_index(stack, theta, n))
            t_true, samples = _transmittance_samples(cfg, probe, r, (_EXP_ANGLE, i, a, pcode))
            mean_t, sd_t = _mean_sd(cfg, probe, t_true, samples)
            sd_c, sd_q = _expected_sds(cfg, probe, t_true)
            if samples is None:
                mean_p, sd_p = mean_t / air_mean, sd_t / air_mean
            else:
                mean_p, sd_p = sample_mean_sd(normalize_to_air(SampleSeries(samples), air_mean))
            model = 1.0 if cfg.no_prism else float(
                normalized_model(stack, theta, n, cfg.model_reference))
            rows.append({
                "label": label, "analyte_index": n, "theta_deg": theta,
                "t_total_true": t_true, "t_total_mean": mean_t, "t_total_air_mean": air_mean,
                "t_prism_mean": mean_p, "t_prism_model": model, "sd_t_total": sd_t,
                "sd_t_prism": sd_p, "sd_classical": sd_c, "sd_quantum": sd_q,
                "enhancement_ratio": enhancement_ratio(t_true), "below_snl": bool(sd_t < sd_c),
            })
        return rows

    per_angle = _map(cfg, at_angle, range(len(angles)))
    # analyte-major order: one contiguous curve per label
    rows = [per_angle[i][a] for a in range(len(analytes)) for i in range(len(angles))]
    below = sum(r["below_snl"] for r in rows)
    summary = {"rows": len(rows), "below_snl_rows": below,
               "below_snl_fraction": below / len(rows) if rows else float("nan")}
    return RunReport("angle_scan", ANGLE_COLUMNS, rows, summary, _provenance(cfg))


# --------------------------------------------------------------------------
# concentration scan
# --------------------------------------------------------------------------

def run_concentration_scan(cfg: ScenarioConfig) -> RunReport:
    """Fixed-angle scan over concentrations: invert every repetition, then fit n(C)."""
    _require(cfg, "concentration_scan")
    theta = cfg.theta_in
    truth = cfg.stack()
    ref = cfg.model_reference
    calib = calibration_from_stack(truth, reference_index=ref)
    bracket = (cfg.n_bracket_low, cfg.n_bracket_high)
    probes = {"q": cfg.probe_model("heralded"), "c": cfg.probe_model("coherent")}
    r_air = float(reflectance_vs_index(truth, theta, cfg.reference_index))

    def at_conc(i):
        conc = float(cfg.concentrations[i])
        n_true = cfg.n_intercept + cfg.dn_dc * conc
        r = float(reflectance_vs_index(truth, theta, n_true))
        out = {"concentration": conc, "n_true": n_true}
        for tag, probe in probes.items():
            pcode = _PROBE_CODE[probe.kind]
            air_true, air = _transmittance_samples(cfg, probe, r_air, (_EXP_CONC, i, _AIR, pcode))
            t_true, samples = _transmittance_samples(cfg, probe, r, (_EXP_CONC, i, 1, pcode))
            air_mean = air_true if air is None else float(np.mean(air))
            mean_t, sd_t = _mean_sd(cfg, probe, t_true, samples)
            vals = np.array([t_true]) if samples is None else samples
            t_prism = normalize_to_air(SampleSeries(vals), air_mean)
            n_est = SampleSeries(invert_index(calib, theta, t_prism.values, bracket), tag)
            n_mean = float(np.mean(n_est.values))
            sens = abs(sensitivity(truth.with_analyte(n_mean), theta)) / (
                r_air if ref is not None else 1.0)
            sd_c, sd_q = _expected_sds(cfg, probe, t_true)
            sd_ref = sd_q if probe.kind is ProbeKind.HERALDED else sd_c
            dn_lepm = propagate_error(sd_ref / air_mean, sens)
            dn = dn_lepm if samples is None else sample_mean_sd(n_est)[1]
            out[tag] = dict(t_true=t_true, mean_t=mean_t, sd_t=sd_t, air_mean=air_mean,
                            mean_p=float(np.mean(t_prism.values)), sd_c=sd_c, sd_q=sd_q,
                            n_est=n_est, n_mean=n_mean, dn=dn, dn_lepm=dn_lepm)
        return out

    results = _map(cfg, at_conc, range(len(cfg.concentrations)))
    rows = []
    for res in results:
        q, c = res["q"], res["c"]
        rows.append({
            "concentration": res["concentration"], "n_true": res["n_true"],
            "t_total_true": q["t_true"], "t_total_mean": q["mean_t"], "t_prism_mean": q["mean_p"],
            "sd_t_total": q["sd_t"], "sd_classical": q["sd_c"], "sd_quantum": q["sd_q"],
            "below_snl": bool(q["sd_t"] < q["sd_c"]),
            "n_mean_q": q["n_mean"], "dn_q": q["dn"], "n_mean_c": c["n_mean"], "dn_c": c["dn"],
            "dn_lepm_q": q["dn_lepm"], "dn_lepm_c": c["dn_lepm"],
            "dn_ratio": c["dn"] / q["dn"], "dn_ratio_lepm": c["dn_lepm"] / q["dn_lepm"],
            "enhancement_ratio": enhancement_ratio(q["mean_t"]),
            "dn_below_snl": bool(q["dn"] < c["dn"]),
        })
    fit = fit_concentration([(res["concentration"], res["q"]["n_est"]) for res in results])
    summary = {"slope": fit.slope, "slope_uncertainty": fit.slope_uncertainty,
               "intercept": fit.intercept, "intercept_uncertainty": fit.intercept_uncertainty,
               "weighted": fit.weighted, "theta_in": theta, "true_slope": cfg.dn_dc}
    return RunReport("concentration_scan", CONC_COLUMNS, rows, summary, _provenance(cfg))


# --------------------------------------------------------------------------
# calibrate / analyze from CSV
# --------------------------------------------------------------------------

def read_calibration_curves(path) -> list[CalibrationCurve]:
    """Curves from a CSV with columns label, theta_deg, t_prism_mean, sd_t_prism.

    This is the layout written by the angle scan; extra columns are ignored.
    """
    rows = read_table(path, ["label", "theta_deg", "t_prism_mean", "sd_t_prism"],
                      ["theta_deg", "t_prism_mean", "sd_t_prism"])
    grouped = {}
    for row in rows:
        grouped.setdefault(row["label"], []).append(row)
    curves = []
    for label, rs in grouped.items():
        rs.sort(key=lambda r: r["theta_deg"])
        curves.append(CalibrationCurve(label, [r["theta_deg"] for r in rs],
                                       [r["t_prism_mean"] for r in rs],
                                       [r["sd_t_prism"] for r in rs]))
    return curves


def run_calibrate(cfg: ScenarioConfig, input_csv=None) -> RunReport:
    """Fit gold permittivity, thickness and per-curve indices to angle-scan data."""
    _require(cfg, "calibrate")
    path = input_csv or cfg.input_csv
    if not path:
        raise ConfigError("input_csv: required for calibrate")
    curves = read_calibration_curves(path)
    n_par = 3 + len(curves)
    if sum(len(c.angles) for c in curves) < n_par:
        raise UnderdeterminedError(f"{n_par} parameters but only "
                                   f"{sum(len(c.angles) for c in curves)} points")
    ref = cfg.model_reference
    res = fit_calibration(curves, cfg.prism_index, cfg.wavelength, reference_index=ref,
                          max_iter=cfg.fit_max_iter, rms_threshold=cfg.fit_rms_threshold,
                          use_sd=cfg.fit_weighted)
    rows = []
    for c in sorted(curves, key=lambda c: c.label):
        st = res.stack(res.analyte_indices[c.label])
        model = np.atleast_1d(normalized_model(st, c.angles, st.analyte_index, ref))
        for k in range(len(c.angles)):
            rows.append({"label": c.label, "theta_deg": c.angles[k], "t_prism": c.t_prism[k],
                         "sd_t_prism": c.sd[k], "t_prism_fit": model[k],
                         "residual": c.t_prism[k] - model[k]})
    summary = {
        "gold_eps_real": res.gold_permittivity.real_part,
        "gold_eps_imag": res.gold_permittivity.imag_part,
        "gold_thickness": res.gold_thickness,
        "analyte_indices": dict(res.analyte_indices),
        "residual_rms": res.residual_rms, "chi2_reduced": res.chi2_reduced,
        "converged": res.converged, "iterations": res.iterations,
        "weighted": res.weighted, "reference_index": ref, "message": res.message,
    }
    return RunReport("calibrate", CALIB_COLUMNS, rows, summary, _provenance(cfg))


def run_analyze(cfg: ScenarioConfig, input_csv=None) -> RunReport:
    """Per-setting statistics of measured repetitions.

    Input columns: ``setting, t_total, t_total_air`` with one row per
    repetition. Theory columns use the measured mean as the true
    transmittance. With ``invert = true`` each repetition is also inverted to
    a refractive index at ``theta_in`` using the configured stack.
    """
    _require(cfg, "analyze")
    path = input_csv or cfg.input_csv
    if not path:
        raise ConfigError("input_csv: required for analyze")
    data = read_table(path, ["setting", "t_total", "t_total_air"], ["t_total", "t_total_air"])
    grouped = {}
    for row in data:
        grouped.setdefault(row["setting"], []).append(row)
    stack = cfg.stack()
    ref = cfg.model_reference
    calib = calibration_from_stack(stack, reference_index=ref)
    r_air = float(reflectance_vs_index(stack, cfg.theta_in, cfg.reference_index))
    rows = []
    for setting, rs in grouped.items():
        total = SampleSeries([r["t_total"] for r in rs], setting)
        air_mean = float(np.mean([r["t_total_air"] for r in rs]))
        mean_t, sd_t = sample_mean_sd(total)
        prism = normalize_to_air(total, air_mean)
        mean_p, sd_p = sample_mean_sd(prism)
        sd_c = expected_sd_classical(mean_t, cfg.mean_photon_number, cfg.trials)
        sd_q = expected_sd_quantum(mean_t, 1.0, cfg.trials)
        row = {"setting": setting, "repetitions": len(rs), "t_total_mean": mean_t,
               "t_total_air_mean": air_mean, "t_prism_mean": mean_p, "sd_t_total": sd_t,
               "sd_t_prism": sd_p, "sd_classical": sd_c, "sd_quantum": sd_q,
               "enhancement_ratio": enhancement_ratio(mean_t), "below_snl": bool(sd_t < sd_c),
               "n_mean": float("nan"), "dn": float("nan"), "dn_lepm_q": float("nan")}
        if cfg.invert:
            n_est = SampleSeries(invert_index(calib, cfg.theta_in, prism.values,
                                              (cfg.n_bracket_low, cfg.n_bracket_high)))
            row["n_mean"], row["dn"] = sample_mean_sd(n_est)
            sens = abs(sensitivity(stack.with_analyte(row["n_mean"]), cfg.theta_in)) / (
                r_air if ref is not None else 1.0)
            row["dn_lepm_q"] = propagate_error(sd_q / air_mean, sens)
        rows.append(row)
    below = sum(r["below_snl"] for r in rows)
    summary = {"settings": len(rows), "below_snl_rows": below}
    return RunReport("analyze", ANALYZE_COLUMNS, rows, summary, _provenance(cfg))


RUNNERS = {
    "angle_scan": run_angle_scan,
    "concentration_scan": run_concentration_scan,
    "calibrate": run_calibrate,
    "analyze": run_analyze,
}
