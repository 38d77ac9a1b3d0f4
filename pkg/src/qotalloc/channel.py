"""Synthetic channel generation and best-station association reduction.

Raw gains are drawn from a distance-dependent path-loss model, one L x K x N
tensor of station/vehicle/slot power gains.  Since each vehicle talks to a
single station per slot and serving anything but the strongest station can
only waste resources, the tensor collapses to a K x N matrix by taking the
best station per (vehicle, slot).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import DomainError

FADING_KINDS = ("none", "rayleigh")


@dataclass(frozen=True)
class ChannelConfig:
    num_bs: int
    distance_range_m: tuple[float, float]
    pathloss_ref_db: float
    pathloss_exponent: float
    fading: str = "none"
    seed: int = 0
    hold_distance_slots: int = 1

    def __post_init__(self):
        if self.num_bs < 1:
            raise DomainError("need at least one base station")
        lo, hi = self.distance_range_m
        if not (0 < lo < hi):
            raise DomainError(f"distance range must satisfy 0 < min < max, got {lo}, {hi}")
        if self.pathloss_exponent < 0:
            raise DomainError("path-loss exponent must be nonnegative")
        if self.fading not in FADING_KINDS:
            raise DomainError(f"fading must be one of {FADING_KINDS}, got {self.fading!r}")
        if self.hold_distance_slots < 1:
            raise DomainError("hold_distance_slots must be >= 1")


def generate_raw_gains(cfg: ChannelConfig, num_cavs: int, num_slots: int) -> np.ndarray:
    """Draw the L x K x N gain tensor, deterministically for a given seed.

    Distances are uniform in the configured range, redrawn every
    ``hold_distance_slots`` slots.  A distance d maps to the linear power
    gain ``10 ** (-(ref_db + 10 * exponent * log10(d)) / 10)``, optionally
    scaled by a unit-mean exponential fading draw per entry.
    """
    if num_cavs < 1 or num_slots < 1:
        raise DomainError("num_cavs and num_slots must be >= 1")
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.distance_range_m
    blocks = math.ceil(num_slots / cfg.hold_distance_slots)
    d = rng.uniform(lo, hi, size=(cfg.num_bs, num_cavs, blocks))
    d = np.repeat(d, cfg.hold_distance_slots, axis=2)[:, :, :num_slots]
    loss_db = cfg.pathloss_ref_db + 10.0 * cfg.pathloss_exponent * np.log10(d)
    gains = 10.0 ** (-loss_db / 10.0)
    if cfg.fading == "rayleigh":
        gains = gains * rng.exponential(1.0, size=gains.shape)
    return gains


def reduce_association(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pick the strongest station per (vehicle, slot).

    Returns ``(assoc, reduced)`` where ``assoc[k, n]`` is the chosen station
    index (ties go to the lowest index) and ``reduced[k, n]`` the
    corresponding gain, i.e. the elementwise max over stations.
    """
    raw = np.asarray(raw, dtype=float)
    if raw.ndim != 3 or raw.size == 0:
        raise DomainError(f"expected a nonempty L x K x N tensor, got shape {raw.shape}")
    if not np.all(np.isfinite(raw)) or np.any(raw <= 0):
        raise DomainError("raw gains must be positive and finite")
    assoc = np.argmax(raw, axis=0)
    reduced = np.take_along_axis(raw, assoc[None, :, :], axis=0)[0]
    return assoc, reduced


def average_gains(reduced: np.ndarray) -> np.ndarray:
    """Time-averaged gain per vehicle (used by the static-channel baseline)."""
    reduced = np.asarray(reduced, dtype=float)
    if reduced.ndim != 2 or reduced.shape[1] < 1:
        raise DomainError(f"expected a K x N matrix with N >= 1, got shape {reduced.shape}")
    return reduced.mean(axis=1)
