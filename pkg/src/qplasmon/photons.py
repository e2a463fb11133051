"""Probe states, lossy channel, seeded photon counting and the noise formulas.

Counting records are drawn one repetition at a time, each repetition from
its own Philox substream keyed by ``(seed, *key, repetition)``. Results are
therefore independent of how repetitions or grid points are scheduled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from qplasmon.errors import QPlasmonError

__all__ = [
    "ProbeKind",
    "ProbeModel",
    "ChannelModel",
    "SamplingPlan",
    "CountRecord",
    "substream",
    "total_transmittance",
    "draw_counts",
    "expected_sd_classical",
    "expected_sd_quantum",
    "enhancement_ratio",
    "fisher_information",
    "cramer_rao_bound",
]


class ProbeKind(str, Enum):
    HERALDED = "heralded_single_photon"
    COHERENT = "coherent"


def _unit(name, x):
    if not 0.0 <= x <= 1.0:
        raise QPlasmonError(f"{name} must lie in [0, 1], got {x}")


@dataclass(frozen=True)
class ProbeModel:
    kind: ProbeKind
    mean_photon_number: float = 1.0
    heralding_efficiency: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ProbeKind(self.kind))
        if self.kind is ProbeKind.HERALDED:
            if self.mean_photon_number != 1:
                raise QPlasmonError("heralded single-photon probe has N = 1")
            _unit("heralding_efficiency", self.heralding_efficiency)
        elif not self.mean_photon_number >= 0:
            raise QPlasmonError("coherent probe needs mean_photon_number >= 0")

    @classmethod
    def heralded(cls, heralding_efficiency: float = 1.0) -> "ProbeModel":
        return cls(ProbeKind.HERALDED, 1.0, heralding_efficiency)

    @classmethod
    def coherent(cls, mean_photon_number: float = 1.0) -> "ProbeModel":
        return cls(ProbeKind.COHERENT, mean_photon_number, 1.0)


@dataclass(frozen=True)
class ChannelModel:
    """Loss budget: before the prism, the prism itself, after it, and the detector."""

    t_before: float = 1.0
    t_prism: float = 1.0
    t_after: float = 1.0
    detector_efficiency: float = 1.0

    def __post_init__(self):
        for name in ("t_before", "t_prism", "t_after", "detector_efficiency"):
            _unit(name, getattr(self, name))


@dataclass(frozen=True)
class SamplingPlan:
    trials: int = 10_000
    repetitions: int = 1_000
    seed: int = 12345

    def __post_init__(self):
        if int(self.trials) < 1 or int(self.repetitions) < 1:
            raise QPlasmonError("trials and repetitions must be >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise QPlasmonError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class CountRecord:
    counts_per_repetition: np.ndarray
    plan: SamplingPlan
    probe: ProbeModel
    channel: ChannelModel
    key: tuple = field(default=())

    @property
    def transmittances(self) -> np.ndarray:
        """Per-repetition T_total(j) = N_t(j) / (nu N)."""
        photons = self.plan.trials * self.probe.mean_photon_number
        return self.counts_per_repetition / photons


def total_transmittance(channel: ChannelModel) -> float:
    return channel.t_before * channel.t_prism * channel.t_after * channel.detector_efficiency


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent Philox generator for the path ``(seed, *key)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def draw_counts(probe: ProbeModel, channel: ChannelModel, plan: SamplingPlan,
                key=()) -> CountRecord:
    """Simulate ``plan.repetitions`` samples of ``plan.trials`` probe uses.

    Heralded: N_t ~ Binomial(nu, h * T_total) with h the heralding efficiency.
    Coherent: N_t ~ Poisson(nu * N * T_total), one aggregate draw per repetition.
    ``key`` namespaces the substreams (e.g. grid point, analyte, probe).
    """
    t = total_transmittance(channel)
    key = tuple(int(k) for k in key)
    counts = np.empty(plan.repetitions, dtype=np.int64)
    if probe.kind is ProbeKind.HERALDED:
        p = probe.heralding_efficiency * t
        for j in range(plan.repetitions):
            counts[j] = substream(plan.seed, *key, j).binomial(plan.trials, p)
    else:
        lam = plan.trials * probe.mean_photon_number * t
        for j in range(plan.repetitions):
            counts[j] = substream(plan.seed, *key, j).poisson(lam)
    return CountRecord(counts, plan, probe, channel, key)


def expected_sd_classical(T_true: float, N: float, nu: int) -> float:
    """Shot-noise SD of the transmittance estimate, sqrt(T / (nu N))."""
    if not N > 0:
        raise QPlasmonError("classical SD needs N > 0")
    if nu < 1:
        raise QPlasmonError("nu must be >= 1")
    return math.sqrt(T_true / (nu * N))


def expected_sd_quantum(T_true: float, N: float, nu: int) -> float:
    """Fock-state SD of the transmittance estimate, sqrt(T (1 - T) / (nu N))."""
    if N < 1 or nu < 1:
        raise QPlasmonError("quantum SD needs N >= 1 and nu >= 1")
    return math.sqrt(T_true * (1.0 - T_true) / (nu * N))


def enhancement_ratio(T_total_true: float) -> float:
    if not 0.0 <= T_total_true < 1.0:
        raise QPlasmonError(f"enhancement ratio needs 0 <= T < 1, got {T_total_true}")
    return 1.0 / math.sqrt(1.0 - T_total_true)


def fisher_information(T_true: float, statistics: str, N: float = 1.0) -> float:
    if statistics == "poisson":
        var = T_true * N
    elif statistics == "binomial":
        var = T_true * (1.0 - T_true) * N
    else:
        raise QPlasmonError(f"statistics must be 'poisson' or 'binomial', got {statistics!r}")
    if not var > 0:
        raise QPlasmonError(f"zero variance at T={T_true}: Fisher information diverges")
    return 1.0 / var


def cramer_rao_bound(F: float, nu: int) -> float:
    if not F > 0 or nu < 1:
        raise QPlasmonError("Cramer-Rao bound needs F > 0 and nu >= 1")
    return (nu * F) ** -0.5
