"""Trajectory generation: trapezoidal, jerk-limited S-curve and splined
contour profiles, plus conversion of a profile into a step schedule.

Profiles are piecewise polynomials of position measured in steps from
the move origin.  A profile is turned into drive pulses by emitting one
ENA edge each time the position crosses a half-step boundary (k + 0.5),
which centers the quantization error of the step lattice; the REV level
of each pulse follows the local velocity sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .drive import DriveConfig, StepPulse, StepSchedule
from .errors import ConstraintError


@dataclass(frozen=True)
class MoveConstraints:
    """Kinematic limits for a move, in steps, steps/s, steps/s^2, steps/s^3.

    ``j_max`` participates only in S-curve planning; acceleration and
    deceleration limits are separate settings and may differ.
    """

    v_max: float
    a_max: float
    d_max: float
    j_max: float | None = None

    def __post_init__(self):
        for name in ("v_max", "a_max", "d_max"):
            if getattr(self, name) <= 0:
                raise ConstraintError(f"MoveConstraints.{name} must be > 0")
        if self.j_max is not None and self.j_max <= 0:
            raise ConstraintError("MoveConstraints.j_max must be > 0")

    def require_jerk(self) -> float:
        if self.j_max is None:
            raise ConstraintError("S-curve planning requires j_max")
        return self.j_max


@dataclass(frozen=True)
class ProfileSegment:
    """One polynomial piece: position(tau) = sum coeffs[i] * tau**i, tau local."""

    duration: float
    coeffs: tuple[float, ...]

    def position(self, tau: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * tau + c
        return acc

    def velocity(self, tau: float) -> float:
        acc = 0.0
        for i in range(len(self.coeffs) - 1, 0, -1):
            acc = acc * tau + i * self.coeffs[i]
        return acc

    def acceleration(self, tau: float) -> float:
        acc = 0.0
        for i in range(len(self.coeffs) - 1, 1, -1):
            acc = acc * tau + i * (i - 1) * self.coeffs[i]
        return acc


@dataclass(frozen=True)
class MotionProfile:
    """Piecewise-polynomial position plan ending at rest on a whole step.

    Evaluation clamps: before the start the position is 0, at and after
    ``total_time`` it is exactly ``total_steps``.
    """

    segments: tuple[ProfileSegment, ...]
    total_steps: int
    total_time: float

    def _locate(self, t: float) -> tuple[ProfileSegment, float] | None:
        acc = 0.0
        for seg in self.segments:
            if t <= acc + seg.duration:
                return seg, t - acc
            acc += seg.duration
        return None

    def position(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        if t >= self.total_time:
            return float(self.total_steps)
        hit = self._locate(t)
        if hit is None:
            return float(self.total_steps)
        seg, tau = hit
        return seg.position(tau)

    def velocity(self, t: float) -> float:
        if t < 0.0 or t >= self.total_time:
            return 0.0
        hit = self._locate(t)
        if hit is None:
            return 0.0
        seg, tau = hit
        return seg.velocity(tau)

    def acceleration(self, t: float) -> float:
        if t < 0.0 or t >= self.total_time:
            return 0.0
        hit = self._locate(t)
        if hit is None:
            return 0.0
        seg, tau = hit
        return seg.acceleration(tau)

    def sample(self, t: float) -> tuple[float, float, float]:
        return self.position(t), self.velocity(t), self.acceleration(t)


_EMPTY = MotionProfile(segments=(), total_steps=0, total_time=0.0)


def _mirror(profile: MotionProfile, distance: int) -> MotionProfile:
    """Negate a positive-going plan for a negative move distance."""
    segs = tuple(
        ProfileSegment(s.duration, tuple(-c for c in s.coeffs)) for s in profile.segments
    )
    return MotionProfile(segments=segs, total_steps=distance, total_time=profile.total_time)


def _build_segments(pieces: list[tuple[float, float]]) -> tuple[ProfileSegment, ...]:
    """Chain (jerk, duration) pieces into position polynomials from rest."""
    p = 0.0
    v = 0.0
    a = 0.0
    out: list[ProfileSegment] = []
    for jerk, dur in pieces:
        if dur <= 0.0:
            continue
        out.append(ProfileSegment(dur, (p, v, a / 2.0, jerk / 6.0)))
        p = p + v * dur + 0.5 * a * dur * dur + jerk * dur**3 / 6.0
        v = v + a * dur + 0.5 * jerk * dur * dur
        a = a + jerk * dur
    return tuple(out)


def plan_trapezoid(distance: int, c: MoveConstraints) -> MotionProfile:
    """Accelerate at a_max, cruise at v_max, decelerate at d_max to rest
    exactly at ``distance``; degenerates to a triangular profile when the
    cruise velocity is unreachable."""
    if distance == 0:
        return _EMPTY
    if distance < 0:
        return _mirror(plan_trapezoid(-distance, c), distance)
    d = float(distance)
    a, dec, v = c.a_max, c.d_max, c.v_max
    v_tri = math.sqrt(2.0 * a * dec * d / (a + dec))
    if v_tri <= v:
        v_pk = v_tri
        t_cruise = 0.0
    else:
        v_pk = v
        t_cruise = (d - v_pk * v_pk / (2.0 * a) - v_pk * v_pk / (2.0 * dec)) / v_pk
    t_a = v_pk / a
    t_d = v_pk / dec
    p_a = 0.5 * a * t_a * t_a
    p_c = p_a + v_pk * t_cruise
    segs: list[ProfileSegment] = [ProfileSegment(t_a, (0.0, 0.0, a / 2.0))]
    if t_cruise > 0.0:
        segs.append(ProfileSegment(t_cruise, (p_a, v_pk)))
    segs.append(ProfileSegment(t_d, (p_c, v_pk, -dec / 2.0)))
    return MotionProfile(
        segments=tuple(segs),
        total_steps=distance,
        total_time=t_a + t_cruise + t_d,
    )


def _scurve_phase(v_pk: float, a_lim: float, j: float) -> tuple[float, float]:
    """Jerk-limited ramp 0 -> v_pk: (jerk time, constant-accel time)."""
    if v_pk >= a_lim * a_lim / j:
        t_j = a_lim / j
        t_c = v_pk / a_lim - a_lim / j
    else:
        t_j = math.sqrt(v_pk / j)
        t_c = 0.0
    return t_j, t_c


def _scurve_span(v_pk: float, a_lim: float, j: float) -> float:
    """Distance covered by one jerk-limited ramp between rest and v_pk."""
    t_j, t_c = _scurve_phase(v_pk, a_lim, j)
    return v_pk * (2.0 * t_j + t_c) / 2.0


def plan_scurve(distance: int, c: MoveConstraints) -> MotionProfile:
    """Seven-segment jerk-limited profile: jerk is piecewise constant in
    {+j, 0, -j}, acceleration stays within a_max/d_max, velocity within
    v_max, and the move ends at rest exactly at ``distance``.  Smoothing
    never beats the trapezoid's time for the same limits."""
    if distance == 0:
        return _EMPTY
    if distance < 0:
        return _mirror(plan_scurve(-distance, c), distance)
    d = float(distance)
    j = c.require_jerk()
    a, dec, v = c.a_max, c.d_max, c.v_max

    def ramps_span(v_pk: float) -> float:
        return _scurve_span(v_pk, a, j) + _scurve_span(v_pk, dec, j)

    if ramps_span(v) <= d:
        v_pk = v
        t_cruise = (d - ramps_span(v)) / v
    else:
        lo, hi = 0.0, v
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if ramps_span(mid) > d:
                hi = mid
            else:
                lo = mid
        v_pk = lo
        t_cruise = 0.0
    tj_a, tc_a = _scurve_phase(v_pk, a, j)
    tj_d, tc_d = _scurve_phase(v_pk, dec, j)
    pieces = [
        (j, tj_a),
        (0.0, tc_a),
        (-j, tj_a),
        (0.0, t_cruise),
        (-j, tj_d),
        (0.0, tc_d),
        (j, tj_d),
    ]
    segs = _build_segments(pieces)
    total_time = sum(s.duration for s in segs)
    return MotionProfile(segments=segs, total_steps=distance, total_time=total_time)


def plan_contour(
    waypoints: list[tuple[float, float]],
    boundary: str = "clamped",
) -> MotionProfile:
    """Cubic spline through (t, position) waypoints.

    The default clamps the end velocities to zero (moves start and end
    at rest); ``boundary="natural"`` uses free ends instead.  Times must
    be strictly increasing; the net displacement must land on a whole
    step.  The spline interpolates every waypoint exactly and is C2
    inside the span.
    """
    from scipy.interpolate import CubicSpline

    if len(waypoints) < 2:
        raise ConstraintError("contour needs at least 2 waypoints")
    times = [float(t) for t, _ in waypoints]
    pos = [float(x) for _, x in waypoints]
    for earlier, later in zip(times, times[1:]):
        if later <= earlier:
            raise ConstraintError("contour waypoint times must be strictly increasing")
    if boundary == "clamped":
        bc = ((1, 0.0), (1, 0.0))
    elif boundary == "natural":
        bc = "natural"
    else:
        raise ConstraintError(f"unknown contour boundary '{boundary}'")
    net = pos[-1] - pos[0]
    total_steps = round(net)
    if abs(net - total_steps) > 1e-9:
        raise ConstraintError(
            f"contour must end on a whole step, net displacement {net}"
        )
    t0 = times[0]
    shifted = [t - t0 for t in times]
    spline = CubicSpline(shifted, [x - pos[0] for x in pos], bc_type=bc)
    segs = []
    for i in range(len(shifted) - 1):
        dur = shifted[i + 1] - shifted[i]
        c3, c2, c1, c0 = (float(spline.c[k, i]) for k in range(4))
        segs.append(ProfileSegment(dur, (c0, c1, c2, c3)))
    return MotionProfile(
        segments=tuple(segs),
        total_steps=total_steps,
        total_time=shifted[-1],
    )


def validate_against(profile: MotionProfile, c: MoveConstraints, samples: int = 2048) -> None:
    """Reject a profile whose sampled velocity/acceleration break the limits.

    Used for contour moves, which are interpolated exactly at the given
    times rather than rescaled to fit the constraints.
    """
    if profile.total_time <= 0.0:
        return
    tol = 1.0 + 1e-9
    for i in range(samples + 1):
        t = profile.total_time * i / samples
        v = profile.velocity(t)
        acc = profile.acceleration(t)
        if abs(v) > c.v_max * tol:
            raise ConstraintError(
                f"profile velocity {v:.6g} exceeds v_max {c.v_max:.6g} at t={t:.6g}"
            )
        if acc > c.a_max * tol or -acc > c.d_max * tol:
            raise ConstraintError(
                f"profile acceleration {acc:.6g} outside limits at t={t:.6g}"
            )


def _bisect_crossing(
    profile: MotionProfile, target: float, lo: float, hi: float, rising: bool
) -> float:
    """Time in [lo, hi] where position crosses ``target`` (monotone bracket)."""
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        above = profile.position(mid) >= target
        if above == rising:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def profile_to_steps(
    profile: MotionProfile,
    direction_aware: bool = True,
    cfg: DriveConfig | None = None,
    start: float = 0.0,
) -> StepSchedule:
    """Emit one ENA edge per half-step boundary crossing of the profile.

    Edge times are found by a dense scan plus bisection, so the schedule
    is deterministic and exact to the bisection tolerance.  For a
    monotone profile the edge count equals |total_steps|; a profile with
    velocity sign changes emits direction flips at the matching edges.
    Pulse widths are half the local edge spacing, mirroring the
    constant-rate clock's half-period convention.
    """
    cfg = cfg or DriveConfig()
    if profile.total_time <= 0.0 or not profile.segments:
        return StepSchedule(())
    # Scan finely enough that no half-step boundary can be hopped over
    # between consecutive samples.
    edges: list[tuple[float, bool]] = []
    t_acc = 0.0
    for seg in profile.segments:
        dur = seg.duration
        v_bound = 0.0
        for i in range(1, len(seg.coeffs)):
            v_bound += i * abs(seg.coeffs[i]) * max(dur, 1.0) ** (i - 1)
        n = max(16, int(math.ceil(dur * v_bound / 0.25)) + 1)
        prev_t = t_acc
        prev_cell = math.floor(profile.position(prev_t) + 0.5)
        for k in range(1, n + 1):
            t = t_acc + dur * k / n
            if k == n:
                t = t_acc + dur
            cell = math.floor(profile.position(t) + 0.5)
            while cell > prev_cell:
                prev_cell += 1
                tc = _bisect_crossing(profile, prev_cell - 0.5, prev_t, t, rising=True)
                edges.append((tc, True))
            while cell < prev_cell:
                prev_cell -= 1
                tc = _bisect_crossing(profile, prev_cell + 0.5, prev_t, t, rising=False)
                edges.append((tc, False))
            prev_t = t
        t_acc += dur
    pulses: list[StepPulse] = []
    for i, (t, forward) in enumerate(edges):
        if i + 1 < len(edges):
            gap = edges[i + 1][0] - t
        elif i > 0:
            gap = t - edges[i - 1][0]
        else:
            gap = min(profile.total_time - t, 0.02) or 0.02
        width = max(gap / 2.0, 1e-6)
        if not direction_aware or forward:
            rev = cfg.logic_low
        else:
            rev = cfg.logic_high
        pulses.append(StepPulse(t=start + t, width=width, rev_level=rev))
    return StepSchedule(tuple(pulses))
