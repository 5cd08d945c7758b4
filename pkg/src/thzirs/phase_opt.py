"""Common phase profile for many (user, sub-band) targets at once.

Each allocated pair (u, i) demands |e_ui . phi|^2 >= t_ui where e_ui is the
power-and-gain scaled steering row of that link and phi the unit-modulus
reflection coefficients.  The quadratic form is minorized by its first-order
expansion around an anchor, and the resulting linear constraints are handled
with a priced (multiplier-weighted) penalty whose phase update is closed form.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import cascaded_gain
from .geometry import PhaseVector, path_length, steering_phase_profile


def effective_vector(sub_band, power_w, placement, scene, ue_index, absorption_per_m) -> np.ndarray:
    """Row vector e such that e . phi is the received amplitude of one link.

    Entry n carries sqrt(p) g exp(-j(theta_n + vartheta_n)); the first entry
    has zero steering phase.
    """
    if power_w < 0:
        raise ValueError(f"power must be non-negative, got {power_w}")
    d = path_length(placement, scene, ue_index)
    g = cascaded_gain(sub_band.center_hz, d, absorption_per_m)
    beta = steering_phase_profile(sub_band.center_hz, placement, scene, ue_index)
    return np.sqrt(power_w) * g * np.exp(-1j * beta)


@dataclass
class PhaseProblem:
    """Bundle of active links: one effective row and one target per (u, i)."""

    vectors: np.ndarray   # (K, N) complex
    targets: np.ndarray   # (K,)
    anchor: np.ndarray    # (N,) phase angles

    def __post_init__(self):
        self.vectors = np.atleast_2d(np.asarray(self.vectors, dtype=complex))
        self.targets = np.asarray(self.targets, dtype=float).reshape(-1)
        self.anchor = np.asarray(self.anchor, dtype=float).reshape(-1)
        if self.vectors.shape[0] != self.targets.shape[0]:
            raise ValueError("one target per effective vector required")
        if self.vectors.shape[1] != self.anchor.shape[0]:
            raise ValueError("anchor length must match vector width")
        if np.any(self.targets < 0):
            raise ValueError("targets must be non-negative")


@dataclass
class Surrogate:
    """Linear minorant data of |e . phi|^2 anchored at one phase profile."""

    theta: np.ndarray     # (K, N) rows conj(e.phi_hat) * e
    psi: np.ndarray       # (K,) |e.phi_hat|^2
    anchor: np.ndarray    # (N,) angles
    vectors: np.ndarray   # (K, N) kept for exact-value checks


def surrogate(vectors: np.ndarray, anchor_angles: np.ndarray) -> Surrogate:
    """Build the minorant 2 Re{theta . phi} - psi <= |e . phi|^2 at the anchor."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=complex))
    anchor_angles = np.asarray(anchor_angles, dtype=float).reshape(-1)
    phi_hat = np.exp(1j * anchor_angles)
    w = vectors @ phi_hat
    theta = np.conj(w)[:, None] * vectors
    psi = np.abs(w) ** 2
    return Surrogate(theta=theta, psi=psi, anchor=anchor_angles.copy(), vectors=vectors)


def surrogate_values(surr: Surrogate, angles: np.ndarray) -> np.ndarray:
    """2 Re{theta . phi} - psi per constraint at the given phases."""
    phi = np.exp(1j * np.asarray(angles, dtype=float))
    return 2.0 * np.real(surr.theta @ phi) - surr.psi


def exact_values(vectors: np.ndarray, angles: np.ndarray) -> np.ndarray:
    """|e . phi|^2 per constraint at the given phases."""
    phi = np.exp(1j * np.asarray(angles, dtype=float))
    return np.abs(np.atleast_2d(vectors) @ phi) ** 2


def penalized_phase_update(surr: Surrogate, prices: np.ndarray):
    """Unit-modulus maximizer of sum_k 2 rho_k Re{theta_k . phi}.

    Each entry independently maximizes Re{v_n exp(j phi_n)} for
    v = 2 rho . theta, so phi_n = -angle(v_n).  With all prices at zero the
    penalty is flat and the anchor is returned with a flag.
    """
    prices = np.asarray(prices, dtype=float)
    if np.any(prices < 0):
        raise ValueError("prices must be non-negative")
    if not np.any(prices > 0):
        return surr.anchor.copy(), True
    v = 2.0 * (prices @ surr.theta)
    return -np.angle(v), False


def price_update(prices: np.ndarray, slacks: np.ndarray, step: float) -> np.ndarray:
    """Projected subgradient step on the prices.

    Satisfied constraints (positive slack) see their price shrink toward
    zero, violated ones grow.
    """
    return np.maximum(0.0, prices - step * np.asarray(slacks, dtype=float))


@dataclass
class SgdResult:
    phases: PhaseVector
    converged: bool
    feasible: bool
    infeasible: bool
    iterations: int
    min_slack: float
    prices: np.ndarray
    prices_collapsed: bool = False


def sgd_solve(
    surr: Surrogate,
    targets: np.ndarray,
    init_prices=None,
    tolerance: float = 1e-4,
    max_iters: int = 500,
    stall_limit: int = 100,
) -> SgdResult:
    """Alternate the closed-form phase update with priced subgradient steps.

    Returns the iterate with the best minimum constraint slack seen (the
    anchor itself counts as iterate zero).  Steps decay as tau0/sqrt(t) with
    tau0 set from the largest achievable constraint level.
    """
    targets = np.asarray(targets, dtype=float).reshape(-1)
    k = targets.shape[0]
    prices = np.ones(k) if init_prices is None else np.asarray(init_prices, dtype=float).copy()
    if prices.shape != (k,) or np.any(prices < 0):
        raise ValueError("need one non-negative price per constraint")

    scale = float(np.max((np.sum(np.abs(surr.vectors), axis=1)) ** 2))
    if scale <= 0:
        raise ValueError("all effective vectors are zero")
    tau0 = 1.0 / scale
    feas_tol = 1e-6 * max(np.max(targets), np.finfo(float).tiny)

    # Hard certificate: the linear form 2 Re{theta.phi} tops out at
    # 2 sum|theta_n|, so a larger demand can never be met.
    upper = 2.0 * np.sum(np.abs(surr.theta), axis=1) - surr.psi
    certified_infeasible = bool(np.any(targets > upper + feas_tol))

    best_angles = surr.anchor.copy()
    best_slack = float(np.min(surrogate_values(surr, best_angles) - targets))
    prev_coeff = np.exp(1j * best_angles)

    converged = False
    collapsed = False
    stall = 0
    it = 0
    for it in range(1, max_iters + 1):
        angles, flat = penalized_phase_update(surr, prices)
        if flat:
            collapsed = True
            break
        slacks = surrogate_values(surr, angles) - targets
        worst = float(np.min(slacks))
        if worst > best_slack + 1e-15 * scale:
            best_slack = worst
            best_angles = angles
            stall = 0
        else:
            stall += 1
        prices = price_update(prices, slacks, tau0 / np.sqrt(it))
        coeff = np.exp(1j * angles)
        if np.linalg.norm(coeff - prev_coeff) <= tolerance:
            converged = True
            break
        prev_coeff = coeff
        if stall >= stall_limit and best_slack < -feas_tol:
            break

    feasible = best_slack >= -feas_tol
    return SgdResult(
        phases=PhaseVector(best_angles),
        converged=converged,
        feasible=feasible,
        infeasible=certified_infeasible or (not feasible and stall >= stall_limit),
        iterations=it,
        min_slack=best_slack,
        prices=prices,
        prices_collapsed=collapsed,
    )


@dataclass
class ScaResult:
    phases: PhaseVector
    converged: bool
    feasible: bool
    outer_iterations: int
    min_slack: float
    slack_trace: list = field(default_factory=list)


def sca_phase_optimize(
    problem: PhaseProblem,
    tolerance: float = 1e-4,
    max_outer: int = 50,
    sgd_max_iters: int = 500,
) -> ScaResult:
    """Minorize-maximize loop: rebuild the surrogate at the incumbent and
    re-solve until the phases stop moving.

    The recorded minimum true slack min_k(|e_k . phi|^2 - t_k) never
    decreases: the surrogate underestimates the true value everywhere and
    matches it at the anchor, and the incumbent is always kept as fallback.
    """
    targets = problem.targets
    scale_t = max(float(np.max(targets)) if targets.size else 0.0, np.finfo(float).tiny)
    feas_tol = 1e-6 * scale_t
    improve_tol = 1e-6 * scale_t

    best = problem.anchor.copy()
    best_slack = float(np.min(exact_values(problem.vectors, best) - targets))
    trace = [best_slack]
    # An anchor already strictly inside the feasible region needs no
    # restoration; a single pass is kept to pick up easy improvement.
    strict_start = best_slack > feas_tol

    converged = False
    outer = 0
    for outer in range(1, max_outer + 1):
        surr = surrogate(problem.vectors, best)
        res = sgd_solve(surr, targets, tolerance=tolerance, max_iters=sgd_max_iters)
        cand = res.phases.angles
        cand_slack = float(np.min(exact_values(problem.vectors, cand) - targets))
        moved = PhaseVector(cand).distance(best)
        improvement = cand_slack - best_slack
        if improvement > 0:
            best, best_slack = cand, cand_slack
        trace.append(best_slack)
        if strict_start or moved <= tolerance or improvement <= improve_tol:
            converged = True
            break

    return ScaResult(
        phases=PhaseVector(best),
        converged=converged,
        feasible=best_slack >= -feas_tol,
        outer_iterations=outer,
        min_slack=best_slack,
        slack_trace=trace,
    )
