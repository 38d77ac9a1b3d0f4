"""Alternating optimization driver and the small-scale reference solver.

``solve`` alternates the bandwidth block (accelerated projected gradient)
and the power block (dual decomposition) from a feasible equal-split start
until the objective stalls.  Both blocks solve convex problems over
non-coupled constraint sets, so the alternation converges to the joint
optimum; each block result is only accepted if it does not increase the
objective, which makes the recorded round trace nonincreasing by
construction.

``reference_solve`` is a deliberately plain verification oracle for desk
sizes: joint projected gradient descent on (bandwidth, power) with
multi-start, exact simplex projections for bandwidth, and a Dykstra
alternating projection for the power constraint intersection.  It shares
none of the alternation/water-filling/momentum machinery.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import AgpParams, agp_solve
from .model import (LN2, Allocation, DomainError, Scenario,
                    objective_from_matrices, samples_from_matrices)
from .power import DualParams, dual_solve
from .simplex import project_column, project_matrix

REFERENCE_SIZE_CAP = 64


@dataclass
class SolverParams:
    agp: AgpParams = field(default_factory=AgpParams)
    dual: DualParams = field(default_factory=DualParams)
    ao_max_iters: int = 50
    ao_rel_tol: float = 1e-6
    faithful_paper_mode: bool = False

    def __post_init__(self):
        if not self.ao_rel_tol > 0:
            raise DomainError("ao_rel_tol must be positive")
        if self.ao_max_iters < 1:
            raise DomainError("ao_max_iters must be >= 1")
        if self.faithful_paper_mode:
            # Published initialization: fixed step, no restarts, constant
            # multiplier step, derivative-sign slack search.
            if self.agp.step_size is None:
                self.agp.step_size = 1e4
            self.agp.restart = False
            self.dual.bracket_refine = False
            self.dual.t_search = "derivative_bisection"


@dataclass
class SolveResult:
    allocation: Allocation
    objective: float
    per_cav_samples: np.ndarray
    per_cav_errors: np.ndarray
    ao_trace: list[float]
    inner_traces: list[dict]
    wall_time_s: float
    converged: bool
    ao_rounds: int = 0
    agp_iters: int = 0
    dual_iters: int = 0
    agp_time_s: float = 0.0
    dual_time_s: float = 0.0


def initial_allocation(scenario: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Feasible start: equal bandwidth split, caps-proportional power.

    Every vehicle gets a strictly positive rate, which the bandwidth
    gradient requires.
    """
    K, N = scenario.num_cavs, scenario.num_slots
    U = np.full((K, N), scenario.total_bandwidth_hz / K)
    share = scenario.total_power_watts * scenario.power_caps / scenario.power_caps.sum()
    p = np.minimum(scenario.power_caps, share)
    P = np.repeat(p[:, None], N, axis=1)
    return U, P


def _per_cav_errors(v: np.ndarray, scenario: Scenario) -> np.ndarray:
    with np.errstate(divide="ignore"):
        errors = scenario.curve_amp * v ** (-scenario.curve_exp)
    return np.where(v > 0, errors, math.inf)


def solve(scenario: Scenario, params: SolverParams | None = None) -> SolveResult:
    """Run the alternating first-order solver on a scenario."""
    params = params or SolverParams()
    t0 = time.perf_counter()
    U, P = initial_allocation(scenario)
    f_cur = objective_from_matrices(U, P, scenario)
    ao_trace = [f_cur]
    inner_traces: list[dict] = []
    agp_iters = dual_iters = 0
    agp_time = dual_time = 0.0
    lam_warm = 0.0
    converged = False
    for _ in range(params.ao_max_iters):
        t_a = time.perf_counter()
        agp_res = agp_solve(P, scenario, params.agp, warm_start=U)
        agp_time += time.perf_counter() - t_a
        agp_iters += agp_res.iters
        f_bw = objective_from_matrices(agp_res.bandwidth, P, scenario)
        if f_bw <= f_cur:
            U = agp_res.bandwidth
            f_cur = f_bw

        t_d = time.perf_counter()
        dual_res = dual_solve(U, scenario, params.dual, lam0=lam_warm)
        dual_time += time.perf_counter() - t_d
        dual_iters += dual_res.iters
        f_pw = objective_from_matrices(U, dual_res.power, scenario)
        tol_power = params.dual.tol_power
        if tol_power is None:
            tol_power = 1e-6 * scenario.total_power_watts
        if f_pw <= f_cur and dual_res.violation <= tol_power:
            P = dual_res.power
            f_cur = f_pw
            lam_warm = dual_res.lam

        ao_trace.append(f_cur)
        inner_traces.append({
            "agp_iters": agp_res.iters,
            "agp_trace": agp_res.trace,
            "agp_restarts": agp_res.restarts,
            "dual_iters": dual_res.iters,
            "dual_trace": dual_res.trace,
        })
        if abs(ao_trace[-2] - f_cur) <= params.ao_rel_tol * max(abs(f_cur), 1e-300):
            converged = True
            break

    # The dual tolerance is relative to the budget; trim any residual
    # overshoot so the returned allocation is feasible in absolute terms.
    total_avg = P.sum() / scenario.num_slots
    if total_avg > scenario.total_power_watts:
        P = P * (scenario.total_power_watts / total_avg)
    over = P.mean(axis=1) > scenario.power_caps
    if np.any(over):
        P = P.copy()
        P[over] *= (scenario.power_caps[over] / P[over].mean(axis=1))[:, None]
    alloc = Allocation(bandwidth=U, power=P)
    v = samples_from_matrices(U, P, scenario)
    return SolveResult(
        allocation=alloc,
        objective=objective_from_matrices(U, P, scenario),
        per_cav_samples=v,
        per_cav_errors=_per_cav_errors(v, scenario),
        ao_trace=ao_trace,
        inner_traces=inner_traces,
        wall_time_s=time.perf_counter() - t0,
        converged=converged,
        ao_rounds=len(ao_trace) - 1,
        agp_iters=agp_iters,
        dual_iters=dual_iters,
        agp_time_s=agp_time,
        dual_time_s=dual_time,
    )


# ---------------------------------------------------------------------------
# Reference solver (verification oracle, desk sizes only)
# ---------------------------------------------------------------------------

def _joint_gradient(U: np.ndarray, P: np.ndarray, scenario: Scenario,
                    floor: float) -> tuple[np.ndarray, np.ndarray]:
    g = scenario.reduced_gains
    n0 = scenario.noise_density_w_per_hz
    Uf = np.maximum(U, floor)
    P = np.maximum(P, 0.0)
    snr = g * P / (n0 * Uf)
    log_term = np.log1p(snr) / LN2
    scale = scenario.slot_duration_s / (scenario.num_slots * scenario.sample_bits)
    s = scale * (U * log_term).sum(axis=1)
    if np.any(s <= 0):
        raise DomainError("joint gradient undefined at zero samples")
    weights = scenario.curve_amp / scenario.num_cavs
    outer = -(weights * scenario.curve_exp) * s ** (-scenario.curve_exp - 1.0)
    du = log_term - (snr / (1.0 + snr)) / LN2
    dp = (Uf * g) / ((n0 * Uf + g * P) * LN2)
    gu = (outer * scale)[:, None] * du
    gp = (outer * scale)[:, None] * dp
    return gu, gp


def _project_rows_capped(P: np.ndarray, caps_total: np.ndarray) -> np.ndarray:
    """Project each row onto {p >= 0, sum(p) <= cap} (cap already times N)."""
    out = np.maximum(P, 0.0)
    for k in range(P.shape[0]):
        if out[k].sum() > caps_total[k]:
            out[k] = project_column(P[k], caps_total[k])
    return out


def _project_total_capped(P: np.ndarray, total_cap: float) -> np.ndarray:
    pos = np.maximum(P, 0.0)
    if pos.sum() <= total_cap:
        return pos
    return project_column(P.ravel(), total_cap).reshape(P.shape)


def project_power_set(P: np.ndarray, scenario: Scenario,
                      tol: float = 1e-10, max_iters: int = 2000) -> np.ndarray:
    """Euclidean projection onto the intersection of the power constraints
    by Dykstra's alternating projections (per-vehicle caps, shared budget,
    nonnegativity)."""
    caps_total = scenario.power_caps * scenario.num_slots
    total_cap = scenario.total_power_watts * scenario.num_slots
    scale = max(total_cap, float(np.abs(P).max()), 1e-300)
    x = np.asarray(P, dtype=float).copy()
    inc_a = np.zeros_like(x)
    inc_b = np.zeros_like(x)
    for _ in range(max_iters):
        y = _project_rows_capped(x + inc_a, caps_total)
        inc_a = x + inc_a - y
        x_new = _project_total_capped(y + inc_b, total_cap)
        inc_b = y + inc_b - x_new
        if np.max(np.abs(x_new - x)) <= tol * scale:
            return x_new
        x = x_new
    return x


def _random_feasible_start(scenario: Scenario,
                           rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    K, N = scenario.num_cavs, scenario.num_slots
    U = rng.exponential(1.0, size=(K, N))
    U = U / U.sum(axis=0, keepdims=True) * scenario.total_bandwidth_hz
    P = rng.uniform(0.2, 1.0, size=(K, N))
    row_avg = P.mean(axis=1)
    target = 0.8 * np.minimum(
        scenario.power_caps,
        scenario.total_power_watts * scenario.power_caps / scenario.power_caps.sum())
    P *= (target / row_avg)[:, None]
    return U, P


def _pgd_minimize(scenario: Scenario, U0: np.ndarray, P0: np.ndarray,
                  budget: int, floor: float) -> tuple[float, np.ndarray, np.ndarray, int]:
    """Projected gradient descent on the joint variable.

    Bandwidth and power live on wildly different unit scales, so the descent
    runs in normalized variables (bandwidth over the slot budget, power over
    the shared budget); that is a fixed diagonal rescaling of the same
    problem.  The step starts at 1/L from a finite-difference power
    iteration on the rescaled Hessian and is backtracked whenever a step
    climbs above the recent watermark.
    """
    su = scenario.total_bandwidth_hz
    sp = scenario.total_power_watts
    U, P = U0.copy(), P0.copy()
    f = objective_from_matrices(U, P, scenario)
    rng = np.random.default_rng(12345)
    gu0, gp0 = _joint_gradient(U, P, scenario, floor)
    vu = rng.standard_normal(U.shape)
    vp = rng.standard_normal(P.shape)
    norm = math.sqrt(np.sum(vu**2) + np.sum(vp**2))
    vu /= norm
    vp /= norm
    eps = 1e-6
    lam = 0.0
    for _ in range(12):
        gu1, gp1 = _joint_gradient(U + eps * su * vu, P + eps * sp * vp,
                                   scenario, floor)
        hu = su * (gu1 - gu0) / eps
        hp = sp * (gp1 - gp0) / eps
        lam = math.sqrt(np.sum(hu**2) + np.sum(hp**2))
        if lam <= 0 or not math.isfinite(lam):
            break
        vu, vp = hu / lam, hp / lam
    eta0 = 0.9 / lam if lam > 0 and math.isfinite(lam) else 1.0
    eta_u = eta_p = eta0
    eta_min = eta0 / 1e8
    eta_max = eta0 * 1e8
    it = 0
    gu, gp = _joint_gradient(U, P, scenario, floor)
    # Per-block Barzilai-Borwein steps under a watermark (nonmonotone)
    # acceptance rule; the power block's stiff curvature must not strangle
    # bandwidth moves through flat slots.  The best point seen is what gets
    # returned.
    history = [f]
    f_best, U_best, P_best = f, U.copy(), P.copy()
    last_best = f
    rescued = False
    checkpoint = 250
    while it < budget:
        f_ref = max(history)
        accepted = False
        for _ in range(120):
            U2 = project_matrix(U - eta_u * su * su * gu, su)
            P2 = project_power_set(P - eta_p * sp * sp * gp, scenario)
            f2 = objective_from_matrices(U2, P2, scenario)
            it += 1
            if f2 <= f_ref:
                accepted = True
                break
            eta_u = max(eta_u / 2.0, eta_min)
            eta_p = max(eta_p / 2.0, eta_min)
        if not accepted:
            break
        gu2, gp2 = _joint_gradient(U2, P2, scenario, floor)
        dxu, dxp = (U2 - U) / su, (P2 - P) / sp
        dgu, dgp = su * (gu2 - gu), sp * (gp2 - gp)
        num_u = float(np.sum(dxu * dxu))
        den_u = float(np.sum(dxu * dgu))
        if den_u > 0 and math.isfinite(den_u) and num_u > 0:
            eta_u = min(max(num_u / den_u, eta_min), eta_max)
        num_p = float(np.sum(dxp * dxp))
        den_p = float(np.sum(dxp * dgp))
        if den_p > 0 and math.isfinite(den_p) and num_p > 0:
            eta_p = min(max(num_p / den_p, eta_min), eta_max)
        U, P, f = U2, P2, f2
        gu, gp = gu2, gp2
        history.append(f)
        if len(history) > 10:
            history.pop(0)
        if f < f_best:
            f_best, U_best, P_best = f, U, P
        if it >= checkpoint:
            checkpoint = it + 250
            if last_best - f_best <= 1e-11 * max(abs(f_best), 1e-300):
                if rescued:
                    break
                # A flat window can be a spectral-step limit cycle; restart
                # once from the best point with the probed step.
                rescued = True
                U, P, f = U_best.copy(), P_best.copy(), f_best
                gu, gp = _joint_gradient(U, P, scenario, floor)
                eta_u = eta_p = eta0
                history = [f]
            else:
                rescued = False
            last_best = f_best
    return f_best, U_best, P_best, it


def reference_solve(scenario: Scenario, budget: int = 8000, starts: int = 5,
                    seed: int = 0) -> SolveResult:
    """Joint projected-gradient oracle from multiple feasible starts.

    Refuses instances beyond K*N = 64.  The problem is convex, so the
    starts should agree; their individual outcomes are kept in
    ``inner_traces`` so tests can assert that agreement.
    """
    K, N = scenario.num_cavs, scenario.num_slots
    if K * N > REFERENCE_SIZE_CAP:
        raise ValueError(
            f"reference solver refused: K*N = {K * N} exceeds {REFERENCE_SIZE_CAP}")
    t0 = time.perf_counter()
    floor = 1e-9 * scenario.total_bandwidth_hz
    rng = np.random.default_rng(seed)
    best = None
    traces = []
    for s in range(starts):
        if s == 0:
            U0, P0 = initial_allocation(scenario)
        else:
            U0, P0 = _random_feasible_start(scenario, rng)
        f, U, P, iters = _pgd_minimize(scenario, U0, P0, budget, floor)
        traces.append({"start": s, "objective": f, "iters": iters})
        if best is None or f < best[0]:
            best = (f, U, P)
    _, U, P = best
    v = samples_from_matrices(U, P, scenario)
    return SolveResult(
        allocation=Allocation(bandwidth=U, power=P),
        objective=objective_from_matrices(U, P, scenario),
        per_cav_samples=v,
        per_cav_errors=_per_cav_errors(v, scenario),
        ao_trace=[t["objective"] for t in traces],
        inner_traces=traces,
        wall_time_s=time.perf_counter() - t0,
        converged=all(t["iters"] < budget for t in traces),
    )
