"""Joint array placement, phase, assignment and power optimization.

``inner_solve`` alternates the exact sub-band allocation with a
successive-convex phase restoration at one fixed array position; the sum rate
never drops between rounds because the next allocation may always keep the
previous assignment and powers, and the phase stage never accepts a profile
whose worst received-power slack falls below the incumbent.  ``bcs_solve``
sweeps candidate positions over a coordinate lattice (block-coordinate
search) and keeps the best inner solution; the reference strategies reuse the
same inner machinery.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .allocation import solve_allocation
from .channel import absorption_coefficient
from .geometry import (
    IrsPlacement,
    PhaseVector,
    Scene,
    optimal_single_ue_phases,
    path_length,
    solve_min_total_distance,
)
from .phase_opt import PhaseProblem, effective_vector, sca_phase_optimize
from .rng import SplitMix64


@dataclass
class Solution:
    """One fully specified operating point of the downlink."""

    placement: IrsPlacement
    phases: PhaseVector
    winners: np.ndarray       # (I,) UE index per band
    powers: np.ndarray        # (I,)
    rates: np.ndarray         # (U,)
    sum_rate_bps: float
    feasible: bool
    converged: bool
    rounds: int
    rate_trace: list = field(default_factory=list)

    def validate(self, scene, sub_bands, p_max, rate_requirements, mixing_ratio,
                 tolerance: float = 1e-6) -> float:
        """Recompute every rate from placement, phases, winners and powers.

        Raises ValueError when the stored figures drift past tolerance;
        returns the recomputed sum rate.
        """
        u_count = scene.ue_count
        rate_req = np.broadcast_to(
            np.asarray(rate_requirements, dtype=float), (u_count,)
        )
        if np.any(self.powers < 0):
            raise ValueError("negative transmit power stored")
        total = float(np.sum(self.powers))
        if total > p_max * (1 + tolerance):
            raise ValueError(f"power budget exceeded: {total} > {p_max}")
        if np.any(self.winners < 0) or np.any(self.winners >= u_count):
            raise ValueError("assignment points at a UE outside the scene")

        if not self.feasible:
            if self.sum_rate_bps != 0.0:
                raise ValueError("infeasible solution carries a nonzero rate")
            return 0.0

        vectors = _link_vectors(scene, self.placement, sub_bands, mixing_ratio)
        gains = np.abs(vectors @ self.phases.coefficients) ** 2
        cols = np.arange(len(sub_bands))
        bw = np.array([b.bandwidth_hz for b in sub_bands])
        noise = np.array([b.noise_power_w for b in sub_bands])
        per_band = bw * np.log2(1.0 + gains[self.winners, cols] * self.powers / noise)
        rates = np.zeros(u_count)
        np.add.at(rates, self.winners, per_band)

        scale = max(float(np.max(rates)), 1.0)
        if np.max(np.abs(rates - self.rates)) > tolerance * scale:
            raise ValueError("stored per-UE rates do not match the geometry")
        if abs(float(np.sum(rates)) - self.sum_rate_bps) > tolerance * scale:
            raise ValueError("stored sum rate does not match the geometry")
        if np.any(rates < rate_req * (1 - tolerance) - tolerance * scale):
            raise ValueError("rate floor violated by a solution marked feasible")
        return float(np.sum(rates))


@dataclass
class SearchResult:
    """Best solution of a placement sweep plus the search trajectory."""

    solution: Solution
    best_trace: list
    points_evaluated: int
    anchor: Optional[Solution] = None


def _link_vectors(scene: Scene, placement: IrsPlacement, sub_bands, mixing_ratio: float) -> np.ndarray:
    """Unit-power effective rows for every (UE, band) pair, shape (U, I, N)."""
    u_count = scene.ue_count
    i_count = len(sub_bands)
    vectors = np.empty((u_count, i_count, placement.element_count), dtype=complex)
    for i, band in enumerate(sub_bands):
        absorb = float(absorption_coefficient(band.center_hz, mixing_ratio))
        for u in range(u_count):
            vectors[u, i] = effective_vector(band, 1.0, placement, scene, u, absorb)
    return vectors


def _initial_phases(scene, placement, sub_bands, rate_req) -> PhaseVector:
    """Matched profile for the hardest requirement at the plan's center.

    The UE with the largest rate floor (ties broken toward the longest
    path) is the one most likely to miss its floor, so the first
    allocation starts from the profile that protects it best.
    """
    dists = np.array([path_length(placement, scene, u) for u in range(scene.ue_count)])
    hardest = int(np.lexsort((dists, rate_req))[-1])
    lo = min(b.lo_hz for b in sub_bands)
    hi = max(b.hi_hz for b in sub_bands)
    return optimal_single_ue_phases(0.5 * (lo + hi), placement, scene, hardest)


def _repair_feasibility(vectors, phases, sub_bands, p_max, rate_req,
                        allocation_tolerance, max_repairs: int = 4):
    """Steer the profile toward the rate floors when no allocation meets them.

    Each pass gives every floored UE its highest-headroom free band (hardest
    UE first), asks the phase stage for the received powers those floors
    need at an even budget split, and retries the exact allocation.  Returns
    the last (phases, gains, allocation) triple; the allocation may still be
    infeasible when the floors are out of reach.
    """
    u_count, i_count, _ = vectors.shape
    bw = np.array([b.bandwidth_hz for b in sub_bands])
    noise = np.array([b.noise_power_w for b in sub_bands])
    p_eq = p_max / i_count
    # received power needed to hit each floor on each band, and the coherent
    # ceiling an even split could ever deliver there
    need = noise * (np.exp2(np.minimum(rate_req[:, None] / bw, 1023.0)) - 1.0)
    ceiling = p_eq * np.sum(np.abs(vectors), axis=2) ** 2

    floored = np.flatnonzero(rate_req > 0)
    headroom = ceiling[floored] / need[floored]
    order = floored[np.argsort(np.max(headroom, axis=1), kind="stable")]
    pairs_u, pairs_i = [], []
    taken = np.zeros(i_count, dtype=bool)
    for u in order:
        open_bands = np.flatnonzero(~taken)
        if open_bands.size == 0:
            break
        pick = int(open_bands[np.argmax(ceiling[u, open_bands] / need[u, open_bands])])
        pairs_u.append(int(u))
        pairs_i.append(pick)
        taken[pick] = True
    rows = np.sqrt(p_eq) * vectors[pairs_u, pairs_i]
    targets = np.minimum(1.5 * need[pairs_u, pairs_i], 0.9 * ceiling[pairs_u, pairs_i])

    gains = alloc = None
    for _ in range(max_repairs):
        sca = sca_phase_optimize(PhaseProblem(rows, targets, phases.angles))
        phases = sca.phases
        gains = np.abs(vectors @ phases.coefficients) ** 2
        alloc = solve_allocation(
            gains, sub_bands, p_max, rate_req, tolerance=allocation_tolerance
        )
        if alloc.feasible:
            break
    return phases, gains, alloc


def _infeasible(placement, phases, u_count, i_count, rounds) -> Solution:
    return Solution(
        placement=placement,
        phases=phases,
        winners=np.zeros(i_count, dtype=int),
        powers=np.zeros(i_count),
        rates=np.zeros(u_count),
        sum_rate_bps=0.0,
        feasible=False,
        converged=True,
        rounds=rounds,
        rate_trace=[],
    )


def inner_solve(
    scene: Scene,
    placement: IrsPlacement,
    sub_bands,
    p_max: float,
    rate_requirements,
    mixing_ratio: float,
    phases=None,
    optimize_phases: bool = True,
    tolerance: float = 1e-3,
    max_rounds: int = 30,
    allocation_tolerance: float = 1e-6,
) -> Solution:
    """Alternate allocation and phase restoration at one array position.

    ``tolerance`` is relative on the sum rate between consecutive rounds.
    With ``optimize_phases`` off the allocation is already exact for the
    given profile and a single round suffices.
    """
    u_count = scene.ue_count
    i_count = len(sub_bands)
    rate_req = np.broadcast_to(
        np.asarray(rate_requirements, dtype=float), (u_count,)
    ).copy()
    vectors = _link_vectors(scene, placement, sub_bands, mixing_ratio)

    if phases is None:
        phases = _initial_phases(scene, placement, sub_bands, rate_req)
    elif not isinstance(phases, PhaseVector):
        phases = PhaseVector(phases)

    gains = np.abs(vectors @ phases.coefficients) ** 2
    alloc = solve_allocation(
        gains, sub_bands, p_max, rate_req, tolerance=allocation_tolerance
    )
    if not alloc.feasible and optimize_phases and np.any(rate_req > 0):
        # the starting profile may simply point the wrong way; let the phase
        # stage chase the floors before writing the point off
        phases, gains, alloc = _repair_feasibility(
            vectors, phases, sub_bands, p_max, rate_req, allocation_tolerance
        )
    if not alloc.feasible:
        return _infeasible(placement, phases, u_count, i_count, 1)
    trace = [alloc.objective]

    if not optimize_phases or not np.any(alloc.powers > 0):
        return Solution(
            placement=placement,
            phases=phases,
            winners=alloc.winners,
            powers=alloc.powers,
            rates=alloc.rates,
            sum_rate_bps=alloc.objective,
            feasible=True,
            converged=True,
            rounds=1,
            rate_trace=trace,
        )

    prev_rate = alloc.objective
    converged = False
    rounds = 1
    for rounds in range(2, max_rounds + 1):
        active = np.flatnonzero(alloc.powers > 0)
        if active.size == 0:
            converged = True
            rounds -= 1
            break
        held_phases, held_alloc = phases, alloc

        rows = np.sqrt(alloc.powers[active])[:, None] * vectors[alloc.winners[active], active]
        targets = alloc.powers[active] * gains[alloc.winners[active], active]
        sca = sca_phase_optimize(PhaseProblem(rows, targets, phases.angles))
        phases = sca.phases

        gains = np.abs(vectors @ phases.coefficients) ** 2
        alloc = solve_allocation(
            gains,
            sub_bands,
            p_max,
            rate_req,
            tolerance=allocation_tolerance,
            warm_winners=held_alloc.winners,
            init_lam=held_alloc.dual.lam,
            init_mu=held_alloc.dual.mu,
        )
        if not alloc.feasible:
            # cannot happen when the slack chain holds; keep the last
            # consistent state rather than propagate a numerical glitch
            phases, alloc = held_phases, held_alloc
            converged = True
            rounds -= 1
            break
        trace.append(alloc.objective)
        if abs(alloc.objective - prev_rate) <= tolerance * max(prev_rate, 1.0):
            converged = True
            break
        prev_rate = alloc.objective

    return Solution(
        placement=placement,
        phases=phases,
        winners=alloc.winners,
        powers=alloc.powers,
        rates=alloc.rates,
        sum_rate_bps=alloc.objective,
        feasible=True,
        converged=converged,
        rounds=rounds,
        rate_trace=trace,
    )


def admissible_y_span(scene: Scene, element_count: int, spacing_m: float) -> float:
    """Largest anchor y so the whole array stays inside the room."""
    y_hi = scene.room_length_m - (element_count - 1) * spacing_m
    if y_hi <= 0:
        raise ValueError("array does not fit the room along y")
    return y_hi


def candidate_grid(
    scene: Scene,
    element_count: int,
    spacing_m: float,
    grid_step_x: float = 0.25,
    grid_step_y: float = 0.25,
):
    """Interior lattice of admissible anchor positions, x-major order."""
    if grid_step_x <= 0 or grid_step_y <= 0:
        raise ValueError("grid steps must be positive")
    y_hi = admissible_y_span(scene, element_count, spacing_m)
    nx = int(np.floor(scene.room_width_m / grid_step_x + 1e-9))
    ny = int(np.floor(y_hi / grid_step_y + 1e-9))
    xs = grid_step_x * np.arange(1, nx + 1)
    ys = grid_step_y * np.arange(1, ny + 1)
    return [(float(x), float(y)) for x in xs for y in ys]


def _better(candidate: Solution, incumbent: Solution) -> bool:
    # feasible beats infeasible, then strictly larger sum rate
    if candidate.feasible != incumbent.feasible:
        return candidate.feasible
    return candidate.sum_rate_bps > incumbent.sum_rate_bps


def bcs_solve(
    scene: Scene,
    sub_bands,
    element_count: int,
    spacing_m: float,
    p_max: float,
    rate_requirements,
    mixing_ratio: float,
    grid_step_x: float = 0.25,
    grid_step_y: float = 0.25,
    tolerance: float = 1e-3,
) -> SearchResult:
    """Grid search over anchor positions with the full inner solver at each.

    The minimum-total-distance point is evaluated first as an extra
    candidate (outside the lattice counter), so the search never returns
    less than the distance heuristic it refines.
    """
    y_hi = admissible_y_span(scene, element_count, spacing_m)
    ax, ay = solve_min_total_distance(scene, y_max=y_hi)
    anchor = inner_solve(
        scene,
        IrsPlacement(ax, ay, element_count, spacing_m),
        sub_bands,
        p_max,
        rate_requirements,
        mixing_ratio,
        tolerance=tolerance,
    )

    best = anchor
    trace = [best.sum_rate_bps if best.feasible else 0.0]
    points = candidate_grid(scene, element_count, spacing_m, grid_step_x, grid_step_y)
    for x, y in points:
        candidate = inner_solve(
            scene,
            IrsPlacement(x, y, element_count, spacing_m),
            sub_bands,
            p_max,
            rate_requirements,
            mixing_ratio,
            tolerance=tolerance,
        )
        if _better(candidate, best):
            best = candidate
        trace.append(best.sum_rate_bps if best.feasible else 0.0)

    return SearchResult(
        solution=best,
        best_trace=trace,
        points_evaluated=len(points),
        anchor=anchor,
    )


def baseline_mini_dis(
    scene: Scene,
    sub_bands,
    element_count: int,
    spacing_m: float,
    p_max: float,
    rate_requirements,
    mixing_ratio: float,
    tolerance: float = 1e-3,
) -> Solution:
    """Array at the minimum-total-distance point, full inner optimization."""
    y_hi = admissible_y_span(scene, element_count, spacing_m)
    x, y = solve_min_total_distance(scene, y_max=y_hi)
    return inner_solve(
        scene,
        IrsPlacement(x, y, element_count, spacing_m),
        sub_bands,
        p_max,
        rate_requirements,
        mixing_ratio,
        tolerance=tolerance,
    )


def baseline_ran_loc(
    scene: Scene,
    sub_bands,
    element_count: int,
    spacing_m: float,
    p_max: float,
    rate_requirements,
    mixing_ratio: float,
    rng: SplitMix64,
    tolerance: float = 1e-3,
) -> Solution:
    """Uniformly random admissible placement (x then y), full inner loop."""
    y_hi = admissible_y_span(scene, element_count, spacing_m)
    x = rng.uniform(0.0, scene.room_width_m)
    y = rng.uniform(0.0, y_hi)
    return inner_solve(
        scene,
        IrsPlacement(x, y, element_count, spacing_m),
        sub_bands,
        p_max,
        rate_requirements,
        mixing_ratio,
        tolerance=tolerance,
    )


def baseline_ran_phi(
    scene: Scene,
    sub_bands,
    element_count: int,
    spacing_m: float,
    p_max: float,
    rate_requirements,
    mixing_ratio: float,
    rng: SplitMix64,
    grid_step_x: float = 0.25,
    grid_step_y: float = 0.25,
    tolerance: float = 1e-3,
) -> SearchResult:
    """Same placement sweep as the full search but one frozen random phase
    profile and no phase restoration."""
    angles = np.array([rng.uniform(0.0, 2.0 * np.pi) for _ in range(element_count)])
    phases = PhaseVector(angles)

    best = None
    trace = []
    points = candidate_grid(scene, element_count, spacing_m, grid_step_x, grid_step_y)
    for x, y in points:
        candidate = inner_solve(
            scene,
            IrsPlacement(x, y, element_count, spacing_m),
            sub_bands,
            p_max,
            rate_requirements,
            mixing_ratio,
            phases=phases,
            optimize_phases=False,
            tolerance=tolerance,
        )
        if best is None or _better(candidate, best):
            best = candidate
        trace.append(best.sum_rate_bps if best.feasible else 0.0)

    return SearchResult(solution=best, best_trace=trace, points_evaluated=len(points))
