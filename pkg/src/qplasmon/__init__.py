"""Kretschmann SPR sensing with heralded single photons versus coherent light."""

__version__ = "0.1.0"

from qplasmon.optics import (AngleScan, ComplexPermittivity, DEFAULT_STACK, StackModel,  # noqa: E402
                             angle_scan, fresnel_p, normal_wavevector, reflectance_spr,
                             resonance_angle, sensitivity)
from qplasmon.photons import (ChannelModel, CountRecord, ProbeModel, SamplingPlan,  # noqa: E402
                              cramer_rao_bound, draw_counts, enhancement_ratio,
                              expected_sd_classical, expected_sd_quantum, fisher_information,
                              total_transmittance)
from qplasmon.estimation import (CalibrationCurve, CalibrationResult,  # noqa: E402
                                 ConcentrationModel, SampleSeries, fit_calibration,
                                 fit_concentration, invert_index, normalize_to_air,
                                 propagate_error, sample_mean_sd)
