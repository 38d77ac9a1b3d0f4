"""Benchmark allocation schemes sharing the evaluation stack.

All four baselines return a plain Allocation evaluated against the true
scenario, so comparisons against the proposed solver are apples-to-apples:

* equal_split: uniform bandwidth, caps-proportional constant power;
* throughput_max: same alternating machinery but maximizing total bits;
* qot_power_only: power optimized at a fixed equal bandwidth split;
* qot_static_channel: full solver on time-averaged gains, replicated.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .bandwidth import agp_solve
from .channel import average_gains
from .model import Allocation, Scenario, rate_matrix
from .power import dual_solve
from .solver import SolverParams, initial_allocation, solve


class SchemeId(Enum):
    EQUAL_SPLIT = "equal_split"
    THROUGHPUT_MAX = "throughput_max"
    QOT_POWER_ONLY = "qot_power_only"
    QOT_STATIC_CHANNEL = "qot_static_channel"
    PROPOSED = "proposed"


def scheme1_equal(scenario: Scenario) -> Allocation:
    """Uniform bandwidth; power split in proportion to the individual caps
    (so heterogeneous caps stay respected), constant over slots."""
    U, P = initial_allocation(scenario)
    return Allocation(bandwidth=U, power=P)


def total_throughput(alloc: Allocation, scenario: Scenario) -> float:
    """Total uploaded bits: sum over slots of T * R[k, n] / N."""
    rates = rate_matrix(alloc.bandwidth, alloc.power, scenario)
    return float(scenario.slot_duration_s / scenario.num_slots * rates.sum())


def scheme2_throughput(scenario: Scenario,
                       params: SolverParams | None = None) -> Allocation:
    """Maximize the summed throughput with the same alternating machinery.

    The bandwidth block runs the accelerated projection on the throughput
    gradient; the power block runs the same multiplier-priced water-filling
    with the learning-curve term replaced by the (negated) throughput, so
    each vehicle spends its full cap whenever the shared budget is slack.
    """
    params = params or SolverParams()
    U, P = initial_allocation(scenario)
    best = -total_throughput(Allocation(U, P), scenario)
    lam_warm = 0.0
    for _ in range(params.ao_max_iters):
        round_start = best
        agp_res = agp_solve(P, scenario, params.agp, warm_start=U,
                            objective_kind="throughput")
        cand = -total_throughput(Allocation(agp_res.bandwidth, P), scenario)
        if cand <= best:
            U, best = agp_res.bandwidth, cand
        dual_res = dual_solve(U, scenario, params.dual,
                              objective_kind="throughput", lam0=lam_warm)
        cand = -total_throughput(Allocation(U, dual_res.power), scenario)
        if cand <= best:
            P, best, lam_warm = dual_res.power, cand, dual_res.lam
        if abs(round_start - best) <= params.ao_rel_tol * max(abs(best), 1e-300):
            break
    return Allocation(bandwidth=U, power=P)


def scheme3_qot_power_only(scenario: Scenario,
                           params: SolverParams | None = None) -> Allocation:
    """Optimize power only, bandwidth pinned at the equal split."""
    params = params or SolverParams()
    U, _ = initial_allocation(scenario)
    dual_res = dual_solve(U, scenario, params.dual)
    return Allocation(bandwidth=U, power=dual_res.power)


def scheme4_static_channel(scenario: Scenario,
                           params: SolverParams | None = None) -> Allocation:
    """Solve a one-slot surrogate with time-averaged gains, replicate its
    allocation over all slots, and evaluate it on the true scenario."""
    params = params or SolverParams()
    mean_gains = average_gains(scenario.reduced_gains)
    surrogate = Scenario(
        cavs=scenario.cavs,
        num_slots=1,
        slot_duration_s=scenario.slot_duration_s,
        total_bandwidth_hz=scenario.total_bandwidth_hz,
        total_power_watts=scenario.total_power_watts,
        noise_density_w_per_hz=scenario.noise_density_w_per_hz,
        reduced_gains=mean_gains[:, None],
    )
    result = solve(surrogate, params)
    N = scenario.num_slots
    U = np.repeat(result.allocation.bandwidth, N, axis=1)
    P = np.repeat(result.allocation.power, N, axis=1)
    # Replication preserves the slot averages, so the caps cannot newly
    # break; rescale defensively if numerics ever disagree.
    avg = P.mean(axis=1)
    over = avg > scenario.power_caps
    if np.any(over):
        P[over] *= (scenario.power_caps[over] / avg[over])[:, None]
    total_avg = P.sum() / N
    if total_avg > scenario.total_power_watts:
        P *= scenario.total_power_watts / total_avg
    return Allocation(bandwidth=U, power=P)


def run_scheme(scheme: SchemeId, scenario: Scenario,
               params: SolverParams | None = None) -> Allocation:
    """Produce the allocation of any scheme, the proposed solver included."""
    if scheme is SchemeId.EQUAL_SPLIT:
        return scheme1_equal(scenario)
    if scheme is SchemeId.THROUGHPUT_MAX:
        return scheme2_throughput(scenario, params)
    if scheme is SchemeId.QOT_POWER_ONLY:
        return scheme3_qot_power_only(scenario, params)
    if scheme is SchemeId.QOT_STATIC_CHANNEL:
        return scheme4_static_channel(scenario, params)
    return solve(scenario, params).allocation
