"""Bandwidth block solver: accelerated gradient projection on the slot simplexes.

With power held fixed, the objective restricted to bandwidth is smooth and
convex on the product of per-slot budget simplexes.  The solver iterates a
Nesterov-accelerated projected gradient step: extrapolate along the last
displacement, step against the gradient, project back onto the simplexes.
A function-value restart drops the momentum whenever a step would increase
the objective, which keeps the recorded trace nonincreasing; if even the
plain projected step fails repeatedly, the step size is halved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import LN2, DomainError, Scenario
from .simplex import project_matrix

# Consecutive restarts tolerated before the step size is halved.
_RESTART_LIMIT = 10


@dataclass
class AgpParams:
    """Step-size of None means: calibrate 1/L from the curvature at the
    start point by a finite-difference power iteration (the fixed published
    initialization of 1e4 is used by the faithful mode instead)."""

    step_size: float | None = None
    max_iters: int = 2500
    rel_tol: float = 1e-8
    restart: bool = True
    min_bandwidth_floor: float | None = None

    def __post_init__(self):
        if self.step_size is not None and not self.step_size > 0:
            raise DomainError(f"step size must be positive, got {self.step_size}")
        if not self.rel_tol > 0:
            raise DomainError(f"rel_tol must be positive, got {self.rel_tol}")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")


@dataclass
class AgpState:
    current: np.ndarray
    previous: np.ndarray
    momentum_point: np.ndarray
    momentum_coeff: float
    prev_coeff: float
    step_size: float
    objective: float
    iter: int = 0


@dataclass
class AgpResult:
    bandwidth: np.ndarray
    trace: list[float]
    iters: int
    step_size: float
    restarts: int
    converged: bool


def momentum_coefficient(c_prev: float) -> float:
    """Next extrapolation coefficient: c -> (1 + sqrt(1 + 4 c^2)) / 2."""
    return 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * c_prev * c_prev))


class _BandwidthObjective:
    """Objective and gradient in the bandwidth block with power fixed.

    kind="qot" is the weighted learning-curve error sum; kind="throughput"
    is the negated total throughput in bits (used by the throughput
    baseline).  Bandwidths are floored at ``floor`` inside the gradient so
    the log singularity at zero never produces non-finite entries; the value
    itself uses the exact zero-bandwidth limit.
    """

    def __init__(self, power: np.ndarray, scenario: Scenario, floor: float,
                 kind: str = "qot"):
        if kind not in ("qot", "throughput"):
            raise DomainError(f"unknown objective kind {kind!r}")
        self.kind = kind
        self.floor = floor
        self.budget = scenario.total_bandwidth_hz
        # g * p / N0: the only way power and gains enter.
        self.snr_num = scenario.reduced_gains * np.asarray(power, dtype=float) \
            / scenario.noise_density_w_per_hz
        self.rate_scale = scenario.slot_duration_s / (
            scenario.num_slots * scenario.sample_bits)          # (K,)
        self.weights = scenario.curve_amp / scenario.num_cavs   # a_k / K
        self.exponents = scenario.curve_exp
        self.sample_bits = scenario.sample_bits
        self.slot_weight = scenario.slot_duration_s / scenario.num_slots

    def samples(self, U: np.ndarray) -> np.ndarray:
        snr = self.snr_num / np.maximum(U, self.floor)
        log_term = np.log1p(snr) * (1.0 / LN2)
        return self.rate_scale * (U * log_term).sum(axis=1)

    def value(self, U: np.ndarray) -> float:
        s = self.samples(U)
        if self.kind == "throughput":
            return float(-(s * self.sample_bits).sum())
        if np.any(s <= 0):
            return math.inf
        return float(np.sum(self.weights * s ** (-self.exponents)))

    def gradient(self, U: np.ndarray) -> np.ndarray:
        # The extrapolated momentum point may sit outside the feasible set,
        # so the floor applies to the sample count here as well.
        Uf = np.maximum(U, self.floor)
        snr = self.snr_num / Uf
        ratio = snr / (1.0 + snr)
        log_term = np.log1p(snr) * (1.0 / LN2)
        # d(w log2(1+c/w))/dw; identically 0 wherever power is 0.
        bracket = log_term - ratio * (1.0 / LN2)
        if self.kind == "throughput":
            return -self.slot_weight * bracket
        s = self.rate_scale * (Uf * log_term).sum(axis=1)
        if np.any(s <= 0):
            raise DomainError(
                "bandwidth gradient undefined: a vehicle has zero rate "
                "in every slot")
        coeff = -(self.weights * self.exponents * self.rate_scale) \
            * s ** (-self.exponents - 1.0)
        return coeff[:, None] * bracket


def gradient_bandwidth(U: np.ndarray, power_fixed: np.ndarray,
                       scenario: Scenario,
                       floor: float | None = None) -> np.ndarray:
    """Gradient of the training-quality objective with respect to bandwidth.

    Entry (k, n) is ``-(a_k b_k T / (K D_k N)) * v_k^(-b_k - 1) *
    [log2(1 + snr) - snr / ((1 + snr) ln 2)]`` with snr = g p / (N0 u).
    Raises if some vehicle's sample count is zero (the caller must start
    from an allocation giving every vehicle a positive rate).
    """
    if floor is None:
        floor = 1e-9 * scenario.total_bandwidth_hz
    obj = _BandwidthObjective(power_fixed, scenario, floor)
    return obj.gradient(np.asarray(U, dtype=float))


def estimate_step_size(obj: _BandwidthObjective, U0: np.ndarray,
                       iters: int = 12, seed: int = 0) -> float:
    """1/L estimate from a finite-difference power iteration on the Hessian."""
    rng = np.random.default_rng(seed)
    g0 = obj.gradient(U0)
    v = rng.standard_normal(U0.shape)
    v /= np.linalg.norm(v)
    eps = 1e-7 * obj.budget
    lam = 0.0
    for _ in range(iters):
        hv = (obj.gradient(U0 + eps * v) - g0) / eps
        lam = float(np.linalg.norm(hv))
        if lam <= 0 or not math.isfinite(lam):
            break
        v = hv / lam
    if lam <= 0 or not math.isfinite(lam):
        return 1e4
    return 0.9 / lam


def _step(state: AgpState, obj: _BandwidthObjective,
          restart: bool) -> tuple[AgpState, bool]:
    c_prev = state.momentum_coeff
    c_new = momentum_coefficient(c_prev)
    beta = (c_prev - 1.0) / c_new
    Q = state.current + beta * (state.current - state.previous)
    U_next = project_matrix(Q - state.step_size * obj.gradient(Q), obj.budget)
    f_next = obj.value(U_next)
    restarted = False
    if restart and f_next > state.objective:
        # Drop the momentum and retry as a plain projected gradient step.
        restarted = True
        c_prev = c_new = 1.0
        Q = state.current
        U_next = project_matrix(Q - state.step_size * obj.gradient(Q), obj.budget)
        f_next = obj.value(U_next)
        if f_next > state.objective:
            # Step too long even without momentum; hold position.
            U_next = state.current
            f_next = state.objective
    return AgpState(
        current=U_next,
        previous=state.current,
        momentum_point=Q,
        momentum_coeff=c_new,
        prev_coeff=c_prev,
        step_size=state.step_size,
        objective=f_next,
        iter=state.iter + 1,
    ), restarted


def agp_step(state: AgpState, power_fixed: np.ndarray, scenario: Scenario,
             restart: bool = True, floor: float | None = None) -> AgpState:
    """One accelerated projected gradient step (standalone form)."""
    if floor is None:
        floor = 1e-9 * scenario.total_bandwidth_hz
    obj = _BandwidthObjective(power_fixed, scenario, floor)
    new_state, _ = _step(state, obj, restart)
    return new_state


def agp_solve(power_fixed: np.ndarray, scenario: Scenario,
              params: AgpParams | None = None,
              warm_start: np.ndarray | None = None,
              objective_kind: str = "qot") -> AgpResult:
    """Minimize the bandwidth block to within ``rel_tol``.

    Stops when the objective change over a five-iteration window falls below
    ``rel_tol`` relative to the current value (only counted while steps are
    being accepted), or at ``max_iters``.
    """
    params = params or AgpParams()
    power_fixed = np.asarray(power_fixed, dtype=float)
    floor = params.min_bandwidth_floor
    if floor is None:
        floor = 1e-9 * scenario.total_bandwidth_hz
    obj = _BandwidthObjective(power_fixed, scenario, floor, kind=objective_kind)
    if objective_kind == "qot" and np.any(obj.snr_num.max(axis=1) <= 0):
        raise DomainError(
            "every vehicle needs at least one slot with positive power")

    K, N = scenario.num_cavs, scenario.num_slots
    if warm_start is None:
        U = np.full((K, N), scenario.total_bandwidth_hz / K)
    else:
        U = project_matrix(np.asarray(warm_start, dtype=float),
                           scenario.total_bandwidth_hz)
    eta = params.step_size
    if eta is None:
        eta = estimate_step_size(obj, U)

    state = AgpState(
        current=U, previous=U.copy(), momentum_point=U.copy(),
        momentum_coeff=1.0, prev_coeff=1.0, step_size=eta,
        objective=obj.value(U))
    trace = [state.objective]
    restarts = 0
    consecutive = 0
    clean_since = 0  # iterations since the last restart, for the stop window
    converged = False
    for _ in range(params.max_iters):
        state, restarted = _step(state, obj, params.restart)
        trace.append(state.objective)
        if restarted:
            restarts += 1
            consecutive += 1
            clean_since = 0
            if consecutive > _RESTART_LIMIT:
                state.step_size /= 2.0
                consecutive = 0
            continue
        consecutive = 0
        clean_since += 1
        if clean_since >= 5:
            ref = max(abs(trace[-1]), 1e-300)
            if abs(trace[-6] - trace[-1]) < params.rel_tol * ref:
                converged = True
                break
    return AgpResult(
        bandwidth=state.current,
        trace=trace,
        iters=state.iter,
        step_size=state.step_size,
        restarts=restarts,
        converged=converged,
    )
