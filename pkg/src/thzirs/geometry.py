"""Room geometry, array steering phases, and reflecting-surface placement.

Coordinates: x across the room width W, y along the room length L, z up.
The reflecting array hangs on the ceiling plane z = H with its elements laid
out along +y from the anchor element at (X, Y, H).
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import SPEED_OF_LIGHT


@dataclass(frozen=True)
class Scene:
    """Static layout: room box, access point, and user terminals."""

    room_length_m: float
    room_width_m: float
    ceiling_height_m: float
    ap_position_m: np.ndarray
    ue_positions_m: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "ap_position_m", np.asarray(self.ap_position_m, dtype=float))
        object.__setattr__(self, "ue_positions_m", np.atleast_2d(np.asarray(self.ue_positions_m, dtype=float)))
        L, W, H = self.room_length_m, self.room_width_m, self.ceiling_height_m
        if not (L > 0 and W > 0 and H > 0):
            raise ValueError(f"room dimensions must be positive, got L={L} W={W} H={H}")
        ap = self.ap_position_m
        if ap.shape != (3,):
            raise ValueError(f"AP position must be a 3-vector, got shape {ap.shape}")
        if not (0 <= ap[0] <= W and 0 <= ap[1] <= L and 0 <= ap[2] <= H):
            raise ValueError(f"AP position {ap} outside the room box")
        ues = self.ue_positions_m
        if ues.ndim != 2 or ues.shape[1] != 3 or ues.shape[0] < 1:
            raise ValueError(f"UE positions must be (U, 3), got {ues.shape}")
        for k, p in enumerate(ues):
            if not (0 <= p[0] <= W and 0 <= p[1] <= L and 0 <= p[2] < H):
                raise ValueError(f"UE {k} at {p} outside the room box (z must stay below H)")

    @property
    def ue_count(self) -> int:
        return self.ue_positions_m.shape[0]


@dataclass(frozen=True)
class IrsPlacement:
    """Anchor location and layout of the reflecting array on the ceiling."""

    x_m: float
    y_m: float
    element_count: int
    spacing_m: float

    def __post_init__(self):
        if int(self.element_count) != self.element_count or self.element_count < 1:
            raise ValueError(f"element count must be a positive integer, got {self.element_count}")
        if not np.isfinite(self.spacing_m) or self.spacing_m <= 0:
            raise ValueError(f"element spacing must be positive, got {self.spacing_m}")
        if not (np.isfinite(self.x_m) and np.isfinite(self.y_m)):
            raise ValueError("placement coordinates must be finite")

    @property
    def span_m(self) -> float:
        """Extent of the array along y."""
        return (self.element_count - 1) * self.spacing_m

    def fits_room(self, scene: Scene) -> bool:
        return (
            0 <= self.x_m <= scene.room_width_m
            and 0 <= self.y_m
            and self.y_m + self.span_m <= scene.room_length_m
        )

    def anchor_position(self, scene: Scene) -> np.ndarray:
        return np.array([self.x_m, self.y_m, scene.ceiling_height_m])


@dataclass
class PhaseVector:
    """Per-element phase shifts stored as angles, so unit modulus is exact."""

    angles: np.ndarray

    def __post_init__(self):
        self.angles = np.asarray(self.angles, dtype=float).reshape(-1)
        if not np.all(np.isfinite(self.angles)):
            raise ValueError("phase angles must be finite")

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(1j * self.angles)

    def distance(self, other) -> float:
        """Euclidean distance between the complex coefficient vectors,
        safe against angle wrapping."""
        o = np.asarray(getattr(other, "angles", other), dtype=float)
        return float(np.linalg.norm(self.coefficients - np.exp(1j * o)))


def incident_vector(placement: IrsPlacement, scene: Scene) -> np.ndarray:
    """Vector from the AP to the anchor element."""
    return placement.anchor_position(scene) - scene.ap_position_m


def departure_vector(placement: IrsPlacement, scene: Scene, ue_index: int) -> np.ndarray:
    """Vector from the anchor element to UE ``ue_index``."""
    return scene.ue_positions_m[ue_index] - placement.anchor_position(scene)


def path_length(placement: IrsPlacement, scene: Scene, ue_index: int) -> float:
    """Total two-hop distance AP -> anchor -> UE."""
    d0 = np.linalg.norm(incident_vector(placement, scene))
    du = np.linalg.norm(departure_vector(placement, scene, ue_index))
    if d0 == 0 or du == 0:
        raise ValueError("AP or UE coincides with the array anchor")
    return float(d0 + du)


def incident_steering_phase(frequency_hz: float, placement: IrsPlacement, scene: Scene, n: int) -> float:
    """Phase advance of element n (1-based) on the incident leg.

    Element n sits (n-1) spacings along +y from the anchor; the phase is the
    projection of that offset onto the AP direction times the wavenumber.
    """
    r0 = incident_vector(placement, scene)
    norm = np.linalg.norm(r0)
    if norm == 0:
        raise ValueError("AP coincides with the array anchor")
    k = 2.0 * np.pi * frequency_hz / SPEED_OF_LIGHT
    return float(k * (placement.y_m - scene.ap_position_m[1]) * (n - 1) * placement.spacing_m / norm)


def departure_steering_phase(
    frequency_hz: float, placement: IrsPlacement, scene: Scene, ue_index: int, n: int
) -> float:
    """Phase advance of element n (1-based) on the departure leg toward one UE."""
    ru = departure_vector(placement, scene, ue_index)
    norm = np.linalg.norm(ru)
    if norm == 0:
        raise ValueError("UE coincides with the array anchor")
    k = 2.0 * np.pi * frequency_hz / SPEED_OF_LIGHT
    return float(
        k * (scene.ue_positions_m[ue_index][1] - placement.y_m) * (n - 1) * placement.spacing_m / norm
    )


def steering_phase_profile(
    frequency_hz: float, placement: IrsPlacement, scene: Scene, ue_index: int
) -> np.ndarray:
    """theta_n + vartheta_n for all N elements at once (vectorized hot path)."""
    r0 = incident_vector(placement, scene)
    ru = departure_vector(placement, scene, ue_index)
    n0, nu = np.linalg.norm(r0), np.linalg.norm(ru)
    if n0 == 0 or nu == 0:
        raise ValueError("AP or UE coincides with the array anchor")
    k = 2.0 * np.pi * frequency_hz / SPEED_OF_LIGHT
    slope = (placement.y_m - scene.ap_position_m[1]) / n0
    slope += (scene.ue_positions_m[ue_index][1] - placement.y_m) / nu
    offsets = np.arange(placement.element_count) * placement.spacing_m
    return k * slope * offsets


def optimal_single_ue_phases(
    frequency_hz: float, placement: IrsPlacement, scene: Scene, ue_index: int
) -> PhaseVector:
    """Phases that align every element response for one UE, giving the full
    N^2 array power gain."""
    return PhaseVector(steering_phase_profile(frequency_hz, placement, scene, ue_index))


def endpoint_distance_hessian(xy, endpoint, ceiling_height_m) -> np.ndarray:
    """2x2 Hessian in (X, Y) of the distance from (X, Y, H) to one endpoint."""
    dx = xy[0] - endpoint[0]
    dy = xy[1] - endpoint[1]
    hz2 = (ceiling_height_m - endpoint[2]) ** 2
    q = dx * dx + dy * dy + hz2
    d3 = q ** 1.5
    if d3 == 0:
        raise ValueError("degenerate geometry: anchor coincides with an endpoint")
    return np.array([[dy * dy + hz2, -dx * dy], [-dx * dy, dx * dx + hz2]]) / d3


def _distance_terms(xy, endpoints, weights, height):
    """Objective, gradient and Hessian of sum_k w_k * dist((X,Y,H), endpoint_k)."""
    f = 0.0
    g = np.zeros(2)
    h = np.zeros((2, 2))
    for (ex, ey, ez), w in zip(endpoints, weights):
        dx, dy = xy[0] - ex, xy[1] - ey
        hz2 = (height - ez) ** 2
        q = dx * dx + dy * dy + hz2
        dist = np.sqrt(q)
        if dist == 0:
            raise ValueError("degenerate geometry: anchor coincides with an endpoint")
        f += w * dist
        g += w * np.array([dx, dy]) / dist
        h += (w / q ** 1.5) * np.array([[dy * dy + hz2, -dx * dy], [-dx * dy, dx * dx + hz2]])
    return f, g, h


def _projected_descent(endpoints, weights, height, lo, hi, x0, tol, max_iters=800):
    """Projected gradient with backtracking, then guarded Newton polish.

    The objective (a weighted sum of point-to-plane-point distances) is convex,
    so the stationary point inside the box is the global minimum.
    """
    x = np.clip(np.asarray(x0, dtype=float), lo, hi)
    f, g, _ = _distance_terms(x, endpoints, weights, height)
    step = 1.0
    for _ in range(max_iters):
        pg = x - np.clip(x - g, lo, hi)
        if np.linalg.norm(pg) <= tol:
            break
        t = step
        for _ in range(60):
            cand = np.clip(x - t * g, lo, hi)
            fc, gc, _ = _distance_terms(cand, endpoints, weights, height)
            if fc <= f - 1e-4 * float(g @ (x - cand)):
                break
            t *= 0.5
        x, f, g = cand, fc, gc
        step = min(2.0 * t, 4.0)

    # Newton polish while the iterate stays interior; quadratic convergence
    # pushes the residual to machine precision.
    for _ in range(30):
        interior = np.all(x > lo + 1e-12) and np.all(x < hi - 1e-12)
        if not interior:
            break
        _, g, h = _distance_terms(x, endpoints, weights, height)
        det = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
        if det <= 1e-30:
            break
        d = np.array(
            [h[1, 1] * g[0] - h[0, 1] * g[1], -h[1, 0] * g[0] + h[0, 0] * g[1]]
        ) / det
        cand = np.clip(x - d, lo, hi)
        fc, _, _ = _distance_terms(cand, endpoints, weights, height)
        if fc > f + 1e-15:
            break
        x, f = cand, fc
        if np.linalg.norm(d) < 1e-14:
            break
    return x


def solve_single_ue_placement(scene: Scene, ue_index: int, tolerance: float = 1e-8, y_max=None):
    """Anchor (X, Y) on the ceiling minimizing the two-hop distance to one UE.

    The minimand D0 + Du is convex in (X, Y); with the optimum interior it
    matches mirroring the UE across the ceiling plane.  ``y_max`` shrinks the
    admissible y range when the array span must fit inside the room.
    """
    lo = np.array([0.0, 0.0])
    hi = np.array([scene.room_width_m, scene.room_length_m if y_max is None else y_max])
    if hi[1] <= 0:
        raise ValueError("array does not fit the room along y")
    ap = scene.ap_position_m
    ue = scene.ue_positions_m[ue_index]
    x0 = 0.5 * (ap[:2] + ue[:2])
    xy = _projected_descent(
        [ap, ue], [1.0, 1.0], scene.ceiling_height_m, lo, hi, x0, tolerance
    )
    return float(xy[0]), float(xy[1])


def solve_min_total_distance(scene: Scene, tolerance: float = 1e-8, y_max=None):
    """Anchor (X, Y) minimizing the summed two-hop distance over all UEs.

    Each UE link shares the AP leg, so the AP endpoint carries weight U.
    """
    lo = np.array([0.0, 0.0])
    hi = np.array([scene.room_width_m, scene.room_length_m if y_max is None else y_max])
    if hi[1] <= 0:
        raise ValueError("array does not fit the room along y")
    u = scene.ue_count
    endpoints = [scene.ap_position_m] + [scene.ue_positions_m[k] for k in range(u)]
    weights = [float(u)] + [1.0] * u
    x0 = np.mean([e[:2] for e in endpoints], axis=0)
    xy = _projected_descent(endpoints, weights, scene.ceiling_height_m, lo, hi, x0, tolerance)
    return float(xy[0]), float(xy[1])
