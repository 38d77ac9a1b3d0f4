"""Problem data model and evaluation stack.

A scenario describes K vehicles uploading training samples to edge servers
over N time slots.  Each vehicle k has a per-slot channel power gain
g[k, n] (already reduced to its best serving station), a sample size D_k in
bits, an individual average-power cap, and a power-law learning curve
mapping its sample count to a model error.  The functions here evaluate
rates, sample counts, errors, the scalar training-quality objective, and
constraint feasibility for a candidate (bandwidth, power) allocation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

LN2 = math.log(2.0)


class DomainError(ValueError):
    """An input fell outside the mathematical domain of an operation."""


class Modality(Enum):
    POINT_CLOUD = "point_cloud"
    IMAGE = "image"


@dataclass(frozen=True)
class LearningCurve:
    """Power-law error model ``error(v) = amplitude * v ** -exponent``."""

    amplitude: float
    exponent: float

    def __post_init__(self):
        if not (math.isfinite(self.amplitude) and self.amplitude > 0):
            raise DomainError(f"curve amplitude must be positive, got {self.amplitude}")
        if not (math.isfinite(self.exponent) and self.exponent > 0):
            raise DomainError(f"curve exponent must be positive, got {self.exponent}")


@dataclass(frozen=True)
class CavProfile:
    """One data-collecting vehicle: its modality, sample size and limits."""

    modality: Modality
    sample_size_bits: float
    power_cap_watts: float
    curve: LearningCurve

    def __post_init__(self):
        if not (math.isfinite(self.sample_size_bits) and self.sample_size_bits > 0):
            raise DomainError(f"sample size must be positive, got {self.sample_size_bits}")
        if not (math.isfinite(self.power_cap_watts) and self.power_cap_watts > 0):
            raise DomainError(f"power cap must be positive, got {self.power_cap_watts}")


@dataclass
class Scenario:
    """A full problem instance.

    ``reduced_gains`` is the K x N matrix of per-slot channel power gains
    after each vehicle has been associated to its best station.  Units are
    fixed project-wide: Hz, W, W/Hz, seconds, bits.
    """

    cavs: list[CavProfile]
    num_slots: int
    slot_duration_s: float
    total_bandwidth_hz: float
    total_power_watts: float
    noise_density_w_per_hz: float
    reduced_gains: np.ndarray

    def __post_init__(self):
        if len(self.cavs) < 1:
            raise DomainError("scenario needs at least one vehicle")
        if self.num_slots < 1:
            raise DomainError("scenario needs at least one time slot")
        for name in ("slot_duration_s", "total_bandwidth_hz",
                     "total_power_watts", "noise_density_w_per_hz"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be positive, got {value}")
        gains = np.asarray(self.reduced_gains, dtype=float)
        if gains.shape != (len(self.cavs), self.num_slots):
            raise DomainError(
                f"gains shape {gains.shape} does not match "
                f"(K={len(self.cavs)}, N={self.num_slots})")
        if not np.all(np.isfinite(gains)) or np.any(gains <= 0):
            raise DomainError("all channel gains must be positive and finite")
        self.reduced_gains = gains
        # Per-vehicle vectors used all over the solvers.
        self.sample_bits = np.array([c.sample_size_bits for c in self.cavs])
        self.power_caps = np.array([c.power_cap_watts for c in self.cavs])
        self.curve_amp = np.array([c.curve.amplitude for c in self.cavs])
        self.curve_exp = np.array([c.curve.exponent for c in self.cavs])

    @property
    def num_cavs(self) -> int:
        return len(self.cavs)


@dataclass
class Allocation:
    """Bandwidth (Hz) and transmit power (W) per vehicle and slot, K x N."""

    bandwidth: np.ndarray
    power: np.ndarray

    def __post_init__(self):
        self.bandwidth = np.asarray(self.bandwidth, dtype=float)
        self.power = np.asarray(self.power, dtype=float)
        if self.bandwidth.ndim != 2 or self.bandwidth.shape != self.power.shape:
            raise DomainError(
                f"bandwidth {self.bandwidth.shape} and power {self.power.shape} "
                "must be matching K x N matrices")


@dataclass
class FeasibilityReport:
    """Signed constraint violations; feasible iff all are <= tolerance."""

    per_cav_power_violation: np.ndarray
    total_power_violation: float
    per_slot_bandwidth_violation: np.ndarray
    max_negativity: float
    feasible: bool


def achievable_rate(bandwidth_hz: float, power_w: float, gain: float,
                    noise_density: float) -> float:
    """Shannon rate ``w * log2(1 + h*q / (N0*w))`` in bits/s.

    The continuous extension at zero bandwidth is used: the rate is 0 when
    ``bandwidth_hz == 0`` regardless of power.
    """
    if bandwidth_hz < 0 or power_w < 0:
        raise DomainError("bandwidth and power must be nonnegative")
    if gain <= 0 or noise_density <= 0:
        raise DomainError("gain and noise density must be positive")
    if bandwidth_hz == 0:
        return 0.0
    return bandwidth_hz * math.log2(1.0 + gain * power_w / (noise_density * bandwidth_hz))


def rate_matrix(bandwidth: np.ndarray, power: np.ndarray,
                scenario: Scenario) -> np.ndarray:
    """Per-vehicle, per-slot rates (bits/s) with the w -> 0 limit applied."""
    U = np.asarray(bandwidth, dtype=float)
    P = np.asarray(power, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        snr = scenario.reduced_gains * P / (scenario.noise_density_w_per_hz * U)
        rates = U * (np.log1p(snr) / LN2)
    return np.where(U > 0, np.nan_to_num(rates, nan=0.0, posinf=0.0), 0.0)


def samples_from_matrices(bandwidth: np.ndarray, power: np.ndarray,
                          scenario: Scenario) -> np.ndarray:
    """Sample counts v_k = sum_n T * R[k, n] / (N * D_k), one per vehicle."""
    rates = rate_matrix(bandwidth, power, scenario)
    scale = scenario.slot_duration_s / (scenario.num_slots * scenario.sample_bits)
    return scale * rates.sum(axis=1)


def sample_count(alloc: Allocation, scenario: Scenario, cav_index: int) -> float:
    """Number of samples vehicle ``cav_index`` uploads under ``alloc``."""
    if not 0 <= cav_index < scenario.num_cavs:
        raise IndexError(f"vehicle index {cav_index} out of range")
    return float(samples_from_matrices(alloc.bandwidth, alloc.power, scenario)[cav_index])


def perception_error(v: float, curve: LearningCurve) -> float:
    """Model error after training on ``v`` samples.

    Returns ``+inf`` for ``v <= 0`` (the objective diverges there) so that
    evaluators never raise on degenerate allocations.
    """
    if v <= 0:
        return math.inf
    return curve.amplitude * v ** (-curve.exponent)


def objective_from_matrices(bandwidth: np.ndarray, power: np.ndarray,
                            scenario: Scenario) -> float:
    """Weighted error sum ``sum_k (a_k / K) * v_k ** -b_k``; +inf if any v_k = 0."""
    v = samples_from_matrices(bandwidth, power, scenario)
    if np.any(v <= 0):
        return math.inf
    weights = scenario.curve_amp / scenario.num_cavs
    return float(np.sum(weights * v ** (-scenario.curve_exp)))


def objective(alloc: Allocation, scenario: Scenario) -> float:
    """Training-quality objective of an allocation (lower is better)."""
    return objective_from_matrices(alloc.bandwidth, alloc.power, scenario)


def check_feasibility(alloc: Allocation, scenario: Scenario,
                      tol: float) -> FeasibilityReport:
    """Check the per-vehicle power caps, the shared power budget, the
    per-slot bandwidth budgets and elementwise nonnegativity.

    Violations are signed (negative means slack); the report is feasible iff
    every violation is at most ``tol``.  The bandwidth budget is an equality,
    so its violation is the absolute deviation of each slot's column sum.
    """
    if tol <= 0:
        raise DomainError(f"tolerance must be positive, got {tol}")
    U, P = alloc.bandwidth, alloc.power
    per_cav = P.mean(axis=1) - scenario.power_caps
    total = float(P.sum() / scenario.num_slots - scenario.total_power_watts)
    per_slot = np.abs(U.sum(axis=0) - scenario.total_bandwidth_hz)
    max_neg = float(max(0.0, -min(U.min(), P.min())))
    feasible = bool(
        np.all(per_cav <= tol) and total <= tol
        and np.all(per_slot <= tol) and max_neg <= tol)
    return FeasibilityReport(
        per_cav_power_violation=per_cav,
        total_power_violation=total,
        per_slot_bandwidth_violation=per_slot,
        max_negativity=max_neg,
        feasible=feasible,
    )
