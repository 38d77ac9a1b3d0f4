"""Power block solver: dual decomposition with per-vehicle water-filling.

The shared average-power budget is relaxed with a multiplier ``lam``; for
fixed ``lam`` the problem splits into one subproblem per vehicle.  Each
subproblem is solved through a slack variable t (the vehicle's average
power spend): for fixed t the optimal slot profile is a closed-form
water-filling whose level is pinned down by a one-dimensional root find,
and t itself is located by a golden-section search over [0, cap] (the
reduced objective is uni-modal in t).  The multiplier follows the
constraint violation; once it is bracketed by iterates on both sides of
the optimum, the update is safeguarded into the bracket, which turns the
tail of the search into a bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import LN2, DomainError, Scenario

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass
class DualParams:
    xi: float = 1e-3
    max_iters: int = 300
    tol_power: float | None = None      # None: 1e-6 * total power budget
    t_tol: float = 1e-8                 # slack search width, relative to the cap
    power_match_rtol: float = 1e-9      # water-level root tolerance on total power
    bracket_refine: bool = True         # safeguard updates once lam* is bracketed
    diminishing: bool = False           # xi / sqrt(i) stepping
    t_search: str = "golden"            # "golden" | "derivative_bisection"

    def __post_init__(self):
        if not self.xi > 0:
            raise DomainError(f"xi must be positive, got {self.xi}")
        if self.max_iters < 1:
            raise DomainError("max_iters must be >= 1")
        if self.t_search not in ("golden", "derivative_bisection"):
            raise DomainError(f"unknown slack search {self.t_search!r}")


@dataclass
class DualState:
    """One multiplier iteration: the price, its step, and the primal reply."""

    lam: float
    step: float
    iter: int
    primal_power: np.ndarray
    violation: float


@dataclass
class SubproblemResult:
    power_row: np.ndarray
    slack: float            # t, the average power actually spent
    sub_objective: float
    water_level: float
    cap_marginal: float = -math.inf   # d(error term)/dt at the power cap


@dataclass
class DualResult:
    power: np.ndarray
    lam: float
    trace: list[tuple[float, float]]    # (lam, violation in W) per iteration
    converged: bool
    iters: int
    water_levels: np.ndarray
    slacks: np.ndarray
    violation: float = 0.0


def _waterfill_terms(bandwidths: np.ndarray, gains: np.ndarray,
                     scenario: Scenario, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-slot coefficients of the profile p_n(mu) = [coeff/mu - floor]^+."""
    u = np.asarray(bandwidths, dtype=float)
    coeffs = scenario.slot_duration_s * u / (
        scenario.num_slots * scenario.sample_bits[k] * LN2)
    floors = scenario.noise_density_w_per_hz * u / np.asarray(gains, dtype=float)
    return coeffs, floors


def power_profile(mu: float, bandwidths: np.ndarray, gains: np.ndarray,
                  scenario: Scenario, k: int) -> np.ndarray:
    """Water-filled slot powers ``[T u / (mu N D ln2) - N0 u / g]^+``.

    Slots with zero bandwidth get zero power (both terms vanish there).
    """
    if not mu > 0:
        raise DomainError(f"water level must be positive, got {mu}")
    coeffs, floors = _waterfill_terms(bandwidths, gains, scenario, k)
    return np.maximum(coeffs / mu - floors, 0.0)


def solve_water_level(bandwidths: np.ndarray, gains: np.ndarray,
                      scenario: Scenario, k: int, target: float,
                      rtol: float = 1e-9) -> float:
    """Find mu > 0 whose profile spends ``target`` watts in total.

    The total is continuous and strictly decreasing in mu until it hits
    zero, so a bracketing search on (mu_hi * 1e-12, mu_hi] converges; a
    false-position candidate is used inside the bracket because the total
    is piecewise linear in 1/mu.  ``target == 0`` returns the sentinel
    mu_hi, at which the profile is identically zero.
    """
    if target < 0:
        raise DomainError(f"target power must be nonnegative, got {target}")
    coeffs, floors = _waterfill_terms(bandwidths, gains, scenario, k)
    usable = coeffs > 0
    if not np.any(usable):
        if target == 0:
            return 1.0
        raise DomainError("no usable slot: all bandwidths are zero")
    c, f = coeffs[usable], floors[usable]
    mu_hi = float((c / f).max())   # all profile terms <= 0 at and above this
    if target == 0:
        return mu_hi

    def total(nu: float) -> float:
        return float(np.maximum(c * nu - f, 0.0).sum())

    nu_lo = 1.0 / mu_hi
    f_lo = total(nu_lo) - target            # <= 0 by construction
    nu_hi = 1e12 / mu_hi
    f_hi = total(nu_hi) - target
    while f_hi < 0:
        nu_hi *= 1e6
        f_hi = total(nu_hi) - target
    for _ in range(200):
        if f_hi > f_lo:
            nu = nu_hi - f_hi * (nu_hi - nu_lo) / (f_hi - f_lo)
            if not nu_lo < nu < nu_hi:
                nu = 0.5 * (nu_lo + nu_hi)
        else:
            nu = 0.5 * (nu_lo + nu_hi)
        err = total(nu) - target
        if abs(err) <= rtol * target:
            return 1.0 / nu
        if err < 0:
            nu_lo, f_lo = nu, err
        else:
            nu_hi, f_hi = nu, err
    return 1.0 / nu


class _Subproblem:
    """One vehicle's reduced problem over the slack t at a fixed multiplier."""

    def __init__(self, k: int, lam: float, U_fixed: np.ndarray,
                 scenario: Scenario, params: DualParams,
                 objective_kind: str = "qot"):
        self.k = k
        self.lam = lam
        self.scenario = scenario
        self.params = params
        self.kind = objective_kind
        self.u = np.asarray(U_fixed, dtype=float)[k]
        self.g = scenario.reduced_gains[k]
        if float((self.u * self.g).sum()) <= 0:
            raise DomainError(f"vehicle {k} has no usable slot")
        self.cap = float(scenario.power_caps[k])
        self.rate_scale = scenario.slot_duration_s / (
            scenario.num_slots * scenario.sample_bits[k])
        self.weight = scenario.curve_amp[k] / scenario.num_cavs
        self.exponent = scenario.curve_exp[k]

    def _profile(self, t: float) -> tuple[np.ndarray, float]:
        target = self.scenario.num_slots * min(self.cap, t)
        mu = solve_water_level(self.u, self.g, self.scenario, self.k, target,
                               rtol=self.params.power_match_rtol)
        return power_profile(mu, self.u, self.g, self.scenario, self.k), mu

    def samples(self, p: np.ndarray) -> float:
        with np.errstate(divide="ignore", invalid="ignore"):
            snr = self.g * p / (self.scenario.noise_density_w_per_hz * self.u)
        rates = np.where(self.u > 0, self.u * np.log1p(np.nan_to_num(snr)) / LN2, 0.0)
        return float(self.rate_scale * rates.sum())

    def error_term(self, v: float) -> float:
        if self.kind == "throughput":
            # negated throughput contribution in bits
            return -v * float(self.scenario.sample_bits[self.k])
        if v <= 0:
            return math.inf
        return self.weight * v ** (-self.exponent)

    def phi(self, t: float) -> float:
        if t <= 0:
            return self.error_term(0.0)
        p, _ = self._profile(t)
        return self.error_term(self.samples(p)) + self.lam * t

    def _marginal_from(self, v: float, mu: float) -> float:
        """d(error term)/dt at a water-filled profile; always <= 0.

        By the envelope argument the water level is the marginal sample
        value of total power, so dv/dt = N * mu.
        """
        dv_dt = self.scenario.num_slots * mu
        if self.kind == "throughput":
            return -float(self.scenario.sample_bits[self.k]) * dv_dt
        if v <= 0:
            return -math.inf
        return -self.weight * self.exponent * v ** (-self.exponent - 1.0) * dv_dt

    def dphi(self, t: float) -> float:
        """Exact derivative of the priced objective at the water-filled t."""
        p, mu = self._profile(t)
        return self._marginal_from(self.samples(p), mu) + self.lam

    def solve(self) -> SubproblemResult:
        p_cap, mu_cap = self._profile(self.cap)
        cap_marginal = self._marginal_from(self.samples(p_cap), mu_cap)
        if self.lam <= 0 or cap_marginal + self.lam <= 0:
            # The priced objective still decreases at the cap.
            t_star, p, mu = self.cap, p_cap, mu_cap
        else:
            if self.params.t_search == "golden":
                t_star = self._golden()
            else:
                t_star = self._derivative_bisection()
            p, mu = self._profile(t_star)
        return SubproblemResult(
            power_row=p,
            slack=t_star,
            sub_objective=self.error_term(self.samples(p)) + self.lam * t_star,
            water_level=mu,
            cap_marginal=cap_marginal,
        )

    def _golden(self) -> float:
        # Value comparisons drown in float noise once the bracket is a few
        # orders below the cap (the priced objective is flat-bottomed), so
        # the golden section only localizes coarsely; the exact envelope
        # derivative then bisects down to the requested width.
        lo, hi = 0.0, self.cap
        coarse_goal = max(1e-3 * self.cap, self.params.t_tol * self.cap)
        c = hi - _INV_GOLDEN * (hi - lo)
        d = lo + _INV_GOLDEN * (hi - lo)
        fc, fd = self.phi(c), self.phi(d)
        while hi - lo > coarse_goal:
            if fc <= fd:
                hi, d, fd = d, c, fc
                c = hi - _INV_GOLDEN * (hi - lo)
                fc = self.phi(c)
            else:
                lo, c, fc = c, d, fd
                d = lo + _INV_GOLDEN * (hi - lo)
                fd = self.phi(d)
        margin = hi - lo
        lo = max(0.0, lo - margin)
        hi = min(self.cap, hi + margin)
        if self.dphi(hi) < 0:
            hi = self.cap
        if lo > 0 and self.dphi(lo) > 0:
            lo = 0.0
        return self._bisect_slope(lo, hi, lambda t: self.dphi(t))

    def _bisect_slope(self, lo: float, hi: float, slope_fn) -> float:
        width_goal = self.params.t_tol * self.cap
        while hi - lo > width_goal:
            mid = 0.5 * (lo + hi)
            if slope_fn(mid) > 0:
                hi = mid
            else:
                lo = mid
        return 0.5 * (lo + hi)

    def _derivative_bisection(self) -> float:
        # Sign bisection on a central-difference estimate of the derivative.
        # The difference step stays well above the value-noise floor.
        h = 1e-5 * self.cap
        slope = lambda t: (self.phi(min(t + h, self.cap)) - self.phi(max(t - h, 0.0))) \
            / (min(t + h, self.cap) - max(t - h, 0.0))  # noqa: E731
        return self._bisect_slope(h, self.cap, slope)


def solve_subproblem(k: int, lam: float, U_fixed: np.ndarray,
                     scenario: Scenario, params: DualParams | None = None,
                     objective_kind: str = "qot") -> SubproblemResult:
    """Minimize one vehicle's error-plus-priced-power term at multiplier lam."""
    if lam < 0:
        raise DomainError(f"multiplier must be nonnegative, got {lam}")
    params = params or DualParams()
    return _Subproblem(k, lam, U_fixed, scenario, params, objective_kind).solve()


def dual_solve(U_fixed: np.ndarray, scenario: Scenario,
               params: DualParams | None = None,
               objective_kind: str = "qot",
               lam0: float = 0.0) -> DualResult:
    """Solve the power block at fixed bandwidth by the multiplier iteration.

    The multiplier moves by ``xi * violation`` (clamped at zero) until the
    average total power meets the budget within ``tol_power``; a zero
    multiplier with a slack budget also terminates.  If the iteration cap
    is hit first, the iterate with the smallest violation magnitude is
    returned with ``converged=False``.
    """
    params = params or DualParams()
    U_fixed = np.asarray(U_fixed, dtype=float)
    tol_power = params.tol_power
    if tol_power is None:
        tol_power = 1e-6 * scenario.total_power_watts
    lam = max(0.0, float(lam0))
    lam_lo = lam_hi = None   # bracket around the optimal multiplier
    v_lo = v_hi = 0.0
    lam_prev = v_prev = None
    trace: list[tuple[float, float]] = []
    best = None
    converged = False
    iters = 0
    boost = 1.0   # geometric step growth while the optimum is unbracketed
    for i in range(1, params.max_iters + 1):
        iters = i
        subs = [solve_subproblem(k, lam, U_fixed, scenario, params, objective_kind)
                for k in range(scenario.num_cavs)]
        power = np.stack([s.power_row for s in subs])
        violation = float(power.sum() / scenario.num_slots
                          - scenario.total_power_watts)
        state = DualState(lam=lam, step=params.xi, iter=i, primal_power=power,
                          violation=violation)
        trace.append((lam, violation))
        # Prefer budget-respecting iterates, then closeness to activity.
        key = (violation > tol_power, abs(violation))
        if best is None or key <= best[0]:
            best = (key, state, subs)
        if abs(violation) <= tol_power or (lam == 0.0 and violation <= tol_power):
            converged = True
            break
        if violation > 0:
            lam_lo, v_lo = lam, violation
        else:
            lam_hi, v_hi = lam, violation
        step = params.xi / math.sqrt(i) if params.diminishing else params.xi
        if params.bracket_refine and lam_lo is not None and lam_hi is not None:
            # Bracketed: the violation is monotone in the multiplier, so a
            # false-position/bisection hybrid closes in quickly.
            if lam_hi - lam_lo <= 1e-13 * max(1.0, lam_hi):
                break   # multiplier gap exhausted; keep the best iterate
            lam_prev, v_prev = lam, violation
            lam = (lam_lo * (-v_hi) + lam_hi * v_lo) / (v_lo - v_hi)
            if i % 3 == 0 or not lam_lo < lam < lam_hi:
                lam = 0.5 * (lam_lo + lam_hi)
        elif params.bracket_refine:
            move = max(step * boost * abs(violation), 0.002 * boost * lam)
            proposal = lam + math.copysign(move, violation)
            boost *= 2.0
            if violation > 0 and all(s.slack >= s_cap for s, s_cap in
                                     zip(subs, scenario.power_caps)):
                # Flat region: no cap binds the price yet, so the violation
                # cannot move before the smallest marginal value at the cap.
                knee = min(-s.cap_marginal for s in subs)
                if math.isfinite(knee):
                    proposal = max(proposal, knee)
            if lam_prev is not None and lam != lam_prev and violation != v_prev:
                slope = (violation - v_prev) / (lam - lam_prev)
                if slope < 0 and math.isfinite(slope):
                    secant = lam - violation / slope
                    if violation > 0 and secant > lam:
                        proposal = max(proposal, secant)
                    elif violation < 0 and 0.0 <= secant < lam:
                        proposal = min(proposal, secant)
            lam_prev, v_prev = lam, violation
            lam = max(0.0, proposal)
        else:
            lam = max(0.0, lam + step * violation)
    _, state, subs = best
    return DualResult(
        power=state.primal_power,
        lam=state.lam,
        trace=trace,
        converged=converged,
        iters=iters,
        water_levels=np.array([s.water_level for s in subs]),
        slacks=np.array([s.slack for s in subs]),
        violation=state.violation,
    )
