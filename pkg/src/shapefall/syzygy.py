"""The brake-to-syzygy map and probes of its image.

A brake orbit starts at rest on the Hill boundary (r = V/h) over a shape
(x0, y0) in the open disk and falls.  For zero angular momentum and
negative energy the height z = 1 - x^2 - y^2 decreases monotonically until
the orbit hits the collinear circle z = 0: its first syzygy.  first_syzygy
computes that crossing; image_scan and winding_degree probe the resulting
map from brake shapes to syzygy configurations.

Grazing crossings are the numerical hazard here: the first dip of z below
zero can be a window of width ~1e-2 in rescaled time with |z| only ~1e-3
deep, which a step-endpoint sign check can jump across entirely (and then
happily report the *third* crossing as the first).  The detector therefore
runs two events in parallel: the terminal falling crossing of z itself,
and a non-terminal event on dz/ds = 0 whose minima are checked for z < 0
and refined backwards with bracketed root-finding.  Whichever crossing
comes first wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.optimize import brentq

from .core import MassParams
from .dynamics import blowup_rhs_timed
from .integrate import EventSpec, Trajectory, brake_lift, integrate
from .potential import chart_scalar

__all__ = [
    "SyzygyRecord",
    "NoSyzygyError",
    "LagrangeHomotheticError",
    "first_syzygy",
    "continue_to_syzygy",
    "reverse_velocity",
    "image_scan",
    "winding_degree",
    "idot_monotonicity_probe",
]

COLLISION_GUARD = 1e-4       # min normalized mutual distance before we flag a collision
NEAR_TRIPLE_R = 1e-6         # size below which a crossing is low-confidence
S_HORIZON = 1e3              # default rescaled-time budget


class NoSyzygyError(RuntimeError):
    """No syzygy found within the rescaled-time horizon; carries diagnostics."""

    def __init__(self, msg: str, final_state=None, s_end: float | None = None):
        super().__init__(msg)
        self.final_state = final_state
        self.s_end = s_end


class LagrangeHomotheticError(NoSyzygyError):
    """The brake shape is the equilateral point: the orbit is homothetic and
    falls straight into triple collision without ever reaching syzygy."""


@dataclass
class SyzygyRecord:
    """One value of the brake-to-syzygy map."""

    x0: float                 # brake shape
    y0: float
    angle: float              # chart angle of the syzygy configuration
    r: float                  # size at crossing
    state: np.ndarray         # full blown-up state (r, v, x, y, x', y')
    s0: float                 # rescaled time of crossing
    t0: float                 # physical time of crossing
    collision: bool           # stopped on the binary-collision guard surface
    type_tag: int             # which mass is in the middle (1, 2, or 3)
    flags: list[str] = dc_field(default_factory=list)


def reverse_velocity(state) -> np.ndarray:
    """Flip all velocities of a blown-up state: (r,v,x,y,x',y') -> (r,-v,x,y,-x',-y')."""
    out = np.asarray(state, dtype=float).copy()
    out[1] = -out[1]
    out[4] = -out[4]
    out[5] = -out[5]
    return out


def _type_tag(x: float, y: float, mp: MassParams) -> int:
    """Middle mass at a collinear configuration: opposite the longest side."""
    _, _, _, _, _, _, _, _, r12, r13, r23 = chart_scalar(x, y, mp)
    longest = max((r12, 3), (r13, 2), (r23, 1))  # (distance, middle mass)
    return longest[1]


def _syzygy_events(mp: MassParams) -> list[EventSpec]:
    def z_of(t, yy, *_):
        return 1.0 - yy[2] * yy[2] - yy[3] * yy[3]

    def zdot_of(t, yy, *_):
        return -2.0 * (yy[2] * yy[4] + yy[3] * yy[5])

    def guard_of(t, yy, *_):
        N, _, _, _, _, _, _, _, r12, r13, r23 = chart_scalar(yy[2], yy[3], mp)
        return min(r12, r13, r23) / math.sqrt(N) - COLLISION_GUARD

    return [
        EventSpec(g=z_of, direction=-1, terminal=True, tol=1e-12, name="z-cross"),
        EventSpec(g=zdot_of, direction=+1, terminal=False, tol=math.inf, name="z-min"),
        EventSpec(g=guard_of, direction=-1, terminal=True, tol=1e-9, name="collision-guard"),
    ]


def _earliest_crossing(traj: Trajectory, s_lo: float) -> tuple[float, bool] | None:
    """First z = 0 crossing after s_lo, reconciling the two detectors.

    Returns (s0, via_graze) or None.  A grazing dip that the terminal z
    event overstepped shows up as a z-minimum with z < 0; the true first
    crossing is then bracketed between the last point known to have z > 0
    and that minimum, and polished by root-finding on the interpolant.
    """
    sol = traj.sol

    def z_at(s):
        yy = sol(s)
        return 1.0 - yy[2] * yy[2] - yy[3] * yy[3]

    candidates: list[tuple[float, bool]] = []
    for s_ev, _y_ev in traj.events.get("z-cross", []):
        if s_ev > s_lo:
            candidates.append((s_ev, False))

    graze_mins = [s for s, yy in traj.events.get("z-min", [])
                  if s > s_lo and (1.0 - yy[2] ** 2 - yy[3] ** 2) < 0.0]
    if graze_mins:
        s_neg = min(graze_mins)
        # bracket back to the last sample with z > 0
        left = s_lo
        for s_grid in traj.t:
            if s_lo < s_grid < s_neg and z_at(s_grid) > 0.0:
                left = max(left, s_grid)
        if z_at(left) > 0.0 > z_at(s_neg):
            s_g = brentq(z_at, left, s_neg, xtol=1e-15, rtol=8.9e-16)
            candidates.append((s_g, True))

    if not candidates:
        return None
    return min(candidates, key=lambda c: c[0])


def _monotone_audit(traj: Trajectory, s0: float, n: int = 400) -> bool:
    """True iff z is nonincreasing on [0, s0] along the dense output."""
    ss = np.linspace(traj.t[0], s0, n)
    ys = traj.sol(ss)
    z = 1.0 - ys[2] ** 2 - ys[3] ** 2
    return bool(np.all(np.diff(z) <= 1e-10))


def continue_to_syzygy(
    state,
    mp: MassParams,
    h: float,
    *,
    s_max: float = S_HORIZON,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    arm_height: float = 1e-8,
    x0: float | None = None,
    y0: float | None = None,
) -> tuple[SyzygyRecord, Trajectory]:
    """Integrate a blown-up state forward to its next syzygy.

    Used directly for continuation from a crossing (e.g. the stutter
    property): if the state starts with |z| below arm_height, the z events
    are armed only once z has risen back above it, so the crossing we are
    standing on does not re-fire.
    """
    y7 = np.zeros(7)
    y7[:6] = np.asarray(state, dtype=float)[:6]
    x0 = float(y7[2]) if x0 is None else x0
    y0_ = float(y7[3]) if y0 is None else y0

    s_start = 0.0
    z_init = 1.0 - y7[2] ** 2 - y7[3] ** 2
    if z_init <= arm_height:
        # climb away from the collinear circle first
        arm = integrate(
            blowup_rhs_timed, y7, (0.0, s_max),
            rtol=rtol, atol=atol, args=(mp,),
            events=[EventSpec(g=lambda t, yy, *_: 1.0 - yy[2] ** 2 - yy[3] ** 2 - arm_height,
                              direction=+1, terminal=True, tol=1e-13, name="armed")],
        )
        if not arm.events["armed"]:
            raise NoSyzygyError(
                "state never climbed above the arming height; cannot look for the next syzygy",
                final_state=arm.y_end, s_end=arm.t_end,
            )
        s_start, y7 = arm.events["armed"][0][0], arm.events["armed"][0][1].copy()

    traj = integrate(
        blowup_rhs_timed, y7, (s_start, s_max),
        rtol=rtol, atol=atol, args=(mp,), events=_syzygy_events(mp),
    )
    found = _earliest_crossing(traj, s_start)

    guard_hits = [s for s, _ in traj.events.get("collision-guard", [])]
    if guard_hits and (found is None or guard_hits[0] < found[0]):
        s0 = guard_hits[0]
        y_at = traj.sol(s0)
        flags = ["collision-guard"]
        rec = SyzygyRecord(
            x0=x0, y0=y0_,
            angle=math.atan2(y_at[3], y_at[2]),
            r=float(y_at[0]), state=np.asarray(y_at[:6], dtype=float),
            s0=float(s0), t0=float(y_at[6]),
            collision=True, type_tag=_type_tag(float(y_at[2]), float(y_at[3]), mp),
            flags=flags,
        )
        return rec, traj

    if found is None:
        raise NoSyzygyError(
            f"no syzygy within rescaled-time horizon {s_max}",
            final_state=traj.y_end, s_end=traj.t_end,
        )
    s0, grazed = found
    y_at = traj.sol(s0)
    flags = []
    if grazed:
        flags.append("grazing")
    if y_at[0] < NEAR_TRIPLE_R:
        flags.append("near-triple-collision")
    rec = SyzygyRecord(
        x0=x0, y0=y0_,
        angle=math.atan2(y_at[3], y_at[2]),
        r=float(y_at[0]), state=np.asarray(y_at[:6], dtype=float),
        s0=float(s0), t0=float(y_at[6]),
        collision=False, type_tag=_type_tag(float(y_at[2]), float(y_at[3]), mp),
        flags=flags,
    )
    return rec, traj


def first_syzygy(
    x0: float,
    y0: float,
    mp: MassParams,
    h: float,
    *,
    s_max: float = S_HORIZON,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    keep_trajectory: bool = False,
):
    """First syzygy of the brake orbit over shape (x0, y0) at energy -h.

    Returns a SyzygyRecord (and the trajectory too if keep_trajectory).
    Raises LagrangeHomotheticError at the equilateral shape (0, 0) — that
    orbit shrinks homothetically to triple collision and has no syzygy —
    and NoSyzygyError with diagnostics if the horizon is exhausted.

    The record's z-monotonicity is audited along the dense output; a
    violation is recorded in flags rather than raised, so scans stay
    honest about individual failures without dying.
    """
    if x0 * x0 + y0 * y0 == 0.0:
        raise LagrangeHomotheticError(
            "brake shape is the equilateral point: homothetic orbit, no syzygy"
        )
    st = brake_lift(x0, y0, mp, h)
    rec, traj = continue_to_syzygy(
        np.asarray(st, dtype=float), mp, h,
        s_max=s_max, rtol=rtol, atol=atol, x0=x0, y0=y0,
    )
    if not rec.collision and not _monotone_audit(traj, rec.s0):
        rec.flags.append("z-nonmonotone")
    if keep_trajectory:
        return rec, traj
    return rec


def image_scan(
    mp: MassParams,
    h: float,
    n_lat: int = 20,
    n_lon: int = 36,
    *,
    s_max: float = S_HORIZON,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> list[SyzygyRecord]:
    """Sample the brake-to-syzygy map on a latitude/longitude grid.

    Latitudes are disk radii (i+1)/(n_lat+1), longitudes equally spaced
    angles.  Per-point failures (homothetic start, exhausted horizon,
    event trouble) are recorded in the point's flags and the scan moves
    on; exactly n_lat * n_lon records come back.
    """
    records = []
    for i in range(n_lat):
        rho = (i + 1) / (n_lat + 1)
        for j in range(n_lon):
            alpha = 2.0 * math.pi * j / n_lon
            x0, y0 = rho * math.cos(alpha), rho * math.sin(alpha)
            try:
                rec = first_syzygy(x0, y0, mp, h, s_max=s_max, rtol=rtol, atol=atol)
            except NoSyzygyError as e:
                rec = SyzygyRecord(
                    x0=x0, y0=y0, angle=math.nan, r=math.nan,
                    state=np.full(6, math.nan), s0=math.nan, t0=math.nan,
                    collision=False, type_tag=0,
                    flags=[f"failed: {e}"],
                )
            except Exception as e:  # keep scanning; record what went wrong
                rec = SyzygyRecord(
                    x0=x0, y0=y0, angle=math.nan, r=math.nan,
                    state=np.full(6, math.nan), s0=math.nan, t0=math.nan,
                    collision=False, type_tag=0,
                    flags=[f"failed: {type(e).__name__}: {e}"],
                )
            records.append(rec)
    return records


def winding_degree(
    latitude: float,
    n: int,
    mp: MassParams,
    h: float,
    *,
    reverse: bool = False,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    max_evals: int = 4000,
) -> int:
    """Degree of the syzygy-angle map on a brake circle of radius `latitude`.

    Computes first syzygies around the circle, unwraps the image angles,
    and counts total turns.  The image never passes through the origin
    (r > 0 at every crossing), so the degree is well defined.

    The image angle moves very fast where the circle passes the preimages
    of the collision rays, so a fixed grid of n points is only the seed:
    any interval whose wrapped image step exceeds pi/2 is bisected in the
    input angle until resolved (or max_evals is exhausted, which raises).
    """
    if not (0.0 < latitude < 1.0):
        raise ValueError(f"latitude must be a disk radius in (0, 1), got {latitude}")
    sign = -1.0 if reverse else 1.0

    def image_angle(alpha: float) -> float:
        rec = first_syzygy(latitude * math.cos(sign * alpha),
                           latitude * math.sin(sign * alpha),
                           mp, h, rtol=rtol, atol=atol)
        if rec.r <= 0:
            raise RuntimeError("syzygy image touched zero size; degree undefined")
        return rec.angle

    def wrap(d: float) -> float:
        return (d + math.pi) % (2.0 * math.pi) - math.pi

    pts = [(2.0 * math.pi * k / n, image_angle(2.0 * math.pi * k / n)) for k in range(n)]
    pts.append((2.0 * math.pi, pts[0][1]))  # close the loop
    evals = n

    i = 0
    while i < len(pts) - 1:
        (a0, p0), (a1, p1) = pts[i], pts[i + 1]
        if abs(wrap(p1 - p0)) <= 0.5 * math.pi or (a1 - a0) < 1e-9:
            i += 1
            continue
        if evals >= max_evals:
            raise RuntimeError(
                f"winding sampling not resolved after {evals} evaluations; "
                f"worst step {abs(wrap(p1 - p0)):.3f} rad at input angle {a0:.6f}"
            )
        am = 0.5 * (a0 + a1)
        pts.insert(i + 1, (am, image_angle(am)))
        evals += 1

    total = sum(wrap(p1 - p0) for (_, p0), (_, p1) in zip(pts[:-1], pts[1:]))
    deg = total / (2.0 * math.pi)
    if abs(deg - round(deg)) > 0.05:
        raise RuntimeError(f"image loop does not close to an integer degree: {total}")
    return int(round(deg))


def idot_monotonicity_probe(
    n: int,
    mp: MassParams,
    h: float,
    *,
    seed: int,
    exclusion: float = 0.02,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    samples_per_orbit: int = 200,
) -> dict:
    """Check Idot < 0 strictly after the brake instant on random brake orbits.

    Draws n shapes uniformly from the disk minus `exclusion`-balls around
    the equilateral point and the three collision points, runs each to its
    first syzygy, and evaluates Idot = 2 v sqrt(r) on a dense grid of each
    arc (excluding s = 0 where it vanishes by construction).  Returns a
    report dict; a healthy run has reached == n and no violations.
    """
    rng = np.random.default_rng(seed)
    collision_pts = [(1.0, 0.0), (-0.5, math.sqrt(3) / 2), (-0.5, -math.sqrt(3) / 2)]
    report = {"n": n, "reached": 0, "violations": [], "max_idot": -math.inf,
              "failures": [], "z_violations": []}
    done = 0
    while done < n:
        x0, y0 = rng.uniform(-1.0, 1.0, 2)
        rr = math.hypot(x0, y0)
        if rr >= 1.0 - 1e-9 or rr <= exclusion:
            continue
        if any(math.hypot(x0 - px, y0 - py) <= exclusion for px, py in collision_pts):
            continue
        done += 1
        try:
            rec, traj = first_syzygy(x0, y0, mp, h, rtol=rtol, atol=atol,
                                     keep_trajectory=True)
        except NoSyzygyError as e:
            report["failures"].append({"x0": x0, "y0": y0, "error": str(e)})
            continue
        report["reached"] += 1
        if "z-nonmonotone" in rec.flags:
            report["z_violations"].append({"x0": x0, "y0": y0})
        ss = np.linspace(0.0, rec.s0, samples_per_orbit + 1)[1:]
        ys = traj.sol(ss)
        idot = 2.0 * ys[1] * np.sqrt(np.maximum(ys[0], 0.0))
        worst = float(idot.max())
        report["max_idot"] = max(report["max_idot"], worst)
        if worst > 1e-10:
            report["violations"].append({"x0": x0, "y0": y0, "max_idot": worst})
    return report
