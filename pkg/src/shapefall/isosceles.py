"""Isosceles three-body subsystem: collision-manifold branches and the
periodic brake orbit.

Masses (1, 1, m3), the equal pair on a horizontal segment of length a and
the third mass on their perpendicular bisector at height b.  In shape
coordinates the motion reduces to (r, v, theta, w) with theta in
(-pi, 0]:

    theta = -pi/2        binary collision of the equal pair (a = 0),
    theta = 0            collinear configuration (b = 0, syzygy),
    theta = +-theta*     equilateral shape.

With s = sin(theta), c = cos(theta), A = 1 + s^2, u = s^2 and the slice
potential written through W = c^2 V,

    W(u) = (1 + u)/sqrt(2) + 2 sqrt(2) m3 (1 - u^2)/D,
    D    = sqrt((1 + u)^2 + (8/m3) u),

the time-rescaled equations (energy constant -1, i.e. h = 1) are

    r' = v r c^2
    v' = v^2 c^2 / 2 + w^2 A^2 / 4 - W
    theta' = w A^2 / 4
    w' = W' - v w c^2 / 2 + s c (2 r + v^2 - w^2 A / 2)

with the conserved combination E = v^2 c^2/2 + w^2 A^2/8 - W + r c^2.

Restpoints on r = 0 sit at the critical angles of V; the two relevant to
brake dynamics are the equilateral ones at theta = theta* - pi and
theta = -theta*.  Each ejects a single unstable branch toward increasing
theta (gamma and gamma-prime); a branch survives as long as
2 W - v^2 c^2 > 0 and dies where that expression vanishes.  The triple
(v1, v2, v3) = (v_gamma(-pi/2), v_gamma(0), v_gamma'(0)) decides
admissibility of the mass ratio, and for admissible m3 a brake orbit that
closes up after four quarter-periods is found by shooting from the zero
velocity curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .dynamics import (
    _m3_of,
    collision_slope,
    iso_energy_residual,
    iso_potential,
    iso_rhs,
    iso_w,
    iso_w_prime,
)
from .integrate import EventSpec, Trajectory, integrate

__all__ = [
    "theta_star",
    "iso_restpoint_linearization",
    "BranchTrace",
    "trace_branch",
    "AdmissibilityReport",
    "admissible",
    "admissibility_threshold",
    "PeriodicBrakeOrbit",
    "find_periodic_brake",
    "reflect_orbit",
    "newtonian_crosscheck",
    "iso_to_planar",
]

TWO_PI = 2.0 * math.pi


def theta_star(m3) -> float:
    """Angle of the equilateral shape on the isosceles slice (in (0, pi/2)).

    Solving V'(theta) = 0 for the equilateral root gives
    sin^2(theta*) as the smaller root of  u^2 - (2 + Q) u + 1 = 0  with
    Q = 4 (2 + m3) / (3 m3).
    """
    m3 = _m3_of(m3)
    Q = 4.0 * (2.0 + m3) / (3.0 * m3)
    u = ((2.0 + Q) - math.sqrt((2.0 + Q) ** 2 - 4.0)) / 2.0
    return math.asin(math.sqrt(u))


def _w_second(theta: float, m3: float) -> float:
    """W''(theta), Richardson central differences of the analytic W'."""
    hh = 2e-4
    d1 = (iso_w_prime(theta + hh, m3) - iso_w_prime(theta - hh, m3)) / (2 * hh)
    d2 = (iso_w_prime(theta + hh / 2, m3) - iso_w_prime(theta - hh / 2, m3)) / hh
    return (4.0 * d2 - d1) / 3.0


def iso_restpoint_linearization(theta0: float, m3) -> dict:
    """Linear data of the collision restpoint at theta0 (a critical angle
    of V) restricted to the invariant set r = 0.

    On r = 0 the (v, theta, w) Jacobian at (v0, theta0, 0) is

        [ v0 c0^2      0         0      ]
        [   0          0       A0^2/4   ]
        [ 2 s0 c0 v0   K     -v0 c0^2/2 ]

    with K = W''(theta0) + v0^2 cos(2 theta0).  Eigenvalues are v0 c0^2 and
    the roots of  lam^2 + (v0 c0^2 / 2) lam - K A0^2 / 4 = 0.  The unstable
    branch leaves along the positive eigenvalue lam_u with the quadratic
    profile  v(theta0 + d) = v0 + a d^2,  w(theta0 + d) = 4 a d  where
    a = lam_u / A0^2.
    """
    m3 = _m3_of(m3)
    s0, c0 = math.sin(theta0), math.cos(theta0)
    A0 = 1.0 + s0 * s0
    V0 = iso_potential(theta0, m3)
    v0 = -math.sqrt(2.0 * V0)          # collision restpoint (v0 < 0)
    K = _w_second(theta0, m3) + v0 * v0 * math.cos(2.0 * theta0)

    lam1 = v0 * c0 * c0
    # roots of lam^2 + (v0 c0^2/2) lam - K A0^2/4
    bq = 0.5 * v0 * c0 * c0
    disc = bq * bq + K * A0 * A0
    if disc >= 0:
        root = math.sqrt(disc)
        lam2 = 0.5 * (-bq + root)
        lam3 = 0.5 * (-bq - root)
        eigs = np.array([lam1, lam2, lam3])
        lam_u = max(lam1, lam2, lam3)
    else:  # complex pair (does not occur at the equilateral angles)
        root = math.sqrt(-disc)
        eigs = np.array([lam1, complex(-bq / 2, root / 2), complex(-bq / 2, -root / 2)])
        lam_u = lam1
    a = lam_u / (A0 * A0)
    return {
        "theta0": theta0, "v0": v0, "K": K,
        "W_second": K - v0 * v0 * math.cos(2.0 * theta0),
        "eigenvalues": eigs, "lambda_u": float(lam_u),
        "a": float(a), "b": float(4.0 * a),
    }


@dataclass
class BranchTrace:
    """The unstable branch of a collision restpoint, traced on r = 0."""

    which: str                       # "gamma" or "gamma_prime"
    m3: float
    theta0: float
    s: np.ndarray
    theta: np.ndarray
    v: np.ndarray
    w: np.ndarray
    reached_zero: bool
    died: bool
    term_theta: float                # theta where the trace stopped
    v_at: dict                       # {-3pi/4: v, -pi/2: v, 0.0: v} (present keys only)
    energy_residual: float
    flags: list[str] = dc_field(default_factory=list)


def trace_branch(which: str, m3, *, delta: float = 1e-6,
                 rtol: float = 1e-12, atol: float = 1e-14,
                 s_max: float = 60.0) -> BranchTrace:
    """Trace gamma (from theta* - pi) or gamma_prime (from -theta*) along
    the unstable direction until it reaches theta = 0 or dies on the
    collision-velocity curve 2 W = v^2 c^2.

    The start point sits a parameter delta along the local unstable
    manifold: theta = theta0 + delta, v = v0 + a delta^2, w = 4 a delta,
    all on r = 0 (which is invariant, so r is pinned to zero exactly).
    """
    m3 = _m3_of(m3)
    if which == "gamma":
        theta0 = theta_star(m3) - math.pi
    elif which == "gamma_prime":
        theta0 = -theta_star(m3)
    else:
        raise ValueError("which must be 'gamma' or 'gamma_prime'")
    lin = iso_restpoint_linearization(theta0, m3)
    a, v0 = lin["a"], lin["v0"]
    y0 = np.array([0.0, v0 + a * delta * delta, theta0 + delta, 4.0 * a * delta])

    targets = [t for t in (-3.0 * math.pi / 4.0, -math.pi / 2.0) if t > theta0]
    events = []
    for tgt in targets:
        events.append(EventSpec(
            g=(lambda t, y, *_ , _tg=tgt: y[2] - _tg),
            direction=+1, terminal=False, name=f"theta={tgt:.6f}"))
    events.append(EventSpec(g=lambda t, y, *_: y[2], direction=+1,
                            terminal=True, name="theta=0"))

    def g_die(t, y, *_):
        c2 = math.cos(y[2]) ** 2
        return 2.0 * iso_w(y[2], m3) - y[1] * y[1] * c2 - 1e-14

    events.append(EventSpec(g=g_die, direction=-1, terminal=True,
                            tol=1e-9, name="died"))

    traj = integrate(iso_rhs, y0, (0.0, s_max), rtol=rtol, atol=atol,
                     events=events, args=(m3,),
                     residual=lambda y: iso_energy_residual(y, m3))

    reached = len(traj.events.get("theta=0", [])) > 0
    died = len(traj.events.get("died", [])) > 0
    v_at = {}
    for tgt in targets:
        hits = traj.events.get(f"theta={tgt:.6f}", [])
        if hits:
            v_at[tgt] = float(hits[0][1][1])
    if reached:
        v_at[0.0] = float(traj.events["theta=0"][0][1][1])

    flags = []
    if not reached and not died:
        flags.append("hit s_max without resolution")
    return BranchTrace(
        which=which, m3=m3, theta0=theta0,
        s=traj.t, theta=traj.y[:, 2], v=traj.y[:, 1], w=traj.y[:, 3],
        reached_zero=reached, died=died,
        term_theta=float(traj.y[-1, 2]),
        v_at=v_at,
        energy_residual=float(traj.stats.get("max_residual", 0.0)),
        flags=flags,
    )


@dataclass
class AdmissibilityReport:
    m3: float
    admissible: bool
    v1: float | None                 # v_gamma(-pi/2)
    v2: float | None                 # v_gamma(0)
    v3: float | None                 # v_gamma'(0)
    reason: str


def admissible(m3) -> AdmissibilityReport:
    """Admissibility of the mass ratio for the brake-orbit construction:
    gamma and gamma_prime both reach the syzygy angle, with
    v_gamma(-pi/2) < 0,  v_gamma(0) > 0  and  v_gamma'(0) < 0."""
    m3 = _m3_of(m3)
    g = trace_branch("gamma", m3)
    gp = trace_branch("gamma_prime", m3)
    v1 = g.v_at.get(-math.pi / 2.0)
    v2 = g.v_at.get(0.0)
    v3 = gp.v_at.get(0.0)
    if not g.reached_zero:
        return AdmissibilityReport(m3, False, v1, None, v3,
                                   f"gamma dies at theta = {g.term_theta:.6f}")
    if not gp.reached_zero:
        return AdmissibilityReport(m3, False, v1, v2, None,
                                   f"gamma_prime dies at theta = {gp.term_theta:.6f}")
    ok = (v1 is not None and v1 < 0.0) and v2 > 0.0 and v3 < 0.0
    reason = "ok" if ok else (
        f"sign pattern violated: v1={v1}, v2={v2}, v3={v3}")
    return AdmissibilityReport(m3, ok, v1, v2, v3, reason)


def admissibility_threshold(lo: float = 2.0, hi: float = 3.0,
                            xtol: float = 1e-4) -> float:
    """Largest admissible m3, located by bisection on the sign of
    v_gamma(0) (positive below the threshold, negative above)."""

    def v2(m3):
        g = trace_branch("gamma", m3)
        if not g.reached_zero:
            return -1.0  # dying branch counts as inadmissible
        return g.v_at[0.0]

    flo, fhi = v2(lo), v2(hi)
    if flo <= 0 or fhi >= 0:
        raise ValueError(f"bracket does not straddle the threshold: "
                         f"v2({lo})={flo}, v2({hi})={fhi}")
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if v2(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ----------------------------------------------------------------- shooting

def _iso_rhs_timed(s, y, m3):
    """(r, v, theta, w, t) with dt/ds = r^(3/2) cos^2(theta)."""
    d = np.empty(5)
    d[:4] = iso_rhs(s, y[:4], m3)
    d[4] = max(y[0], 0.0) ** 1.5 * math.cos(y[2]) ** 2
    return d


def _shot(theta0: float, m3: float, *, rtol: float, atol: float,
          s_max: float = 30.0) -> dict:
    """Integrate from the brake point over theta0 (r = V, v = w = 0) until
    the second syzygy angle theta = 0, recording first-syzygy crossings
    (theta = -pi/2: the binary collision of the equal pair, regularized by
    the cos^2 time factor) and funnel exits (w falling through zero).

    Shots that leave the shooting window for good are cut short by two
    heuristic terminal guards -- falling below theta* - pi by a margin, or
    the size r blowing past 3 r0 + 5 (an escaping configuration) -- since
    continuing them is expensive (the escaping pair keeps bouncing) and
    they can no longer produce the single-crossing orbit."""
    r0 = iso_potential(theta0, m3)
    th_exit = theta_star(m3) - math.pi - 0.1
    r_exit = 3.0 * r0 + 5.0
    y0 = np.array([r0, 0.0, theta0, 0.0])
    events = [
        EventSpec(g=lambda t, y, *_: y[2] + math.pi / 2.0, direction=+1,
                  terminal=False, name="first-syzygy"),
        EventSpec(g=lambda t, y, *_: y[2], direction=+1, terminal=True,
                  name="end"),
        EventSpec(g=lambda t, y, *_: y[3], direction=-1, terminal=False,
                  tol=1e-9, name="w-zero"),
        EventSpec(g=lambda t, y, *_: y[2] - th_exit, direction=-1,
                  terminal=True, tol=1e-9, name="left-exit"),
        EventSpec(g=lambda t, y, *_: r_exit - y[0], direction=-1,
                  terminal=True, tol=1e-6, name="escape"),
    ]
    traj = integrate(iso_rhs, y0, (0.0, s_max), rtol=rtol, atol=atol,
                     events=events, args=(m3,), dense=False)
    ends = traj.events.get("end", [])
    return {
        "theta0": theta0,
        "v_end": float(ends[0][1][1]) if ends else float("nan"),
        "s_end": float(ends[0][0]) if ends else float("nan"),
        "crossings": len(traj.events.get("first-syzygy", [])),
        "w_exits": len(traj.events.get("w-zero", [])),
        "dead": ("left-exit" if traj.events.get("left-exit") else
                 "escape" if traj.events.get("escape") else
                 "horizon" if not ends else None),
    }


@dataclass
class PeriodicBrakeOrbit:
    m3: float
    theta0: float                  # brake angle of the selected root
    r0: float                      # brake size V(theta0)
    T2: float                      # rescaled-time length of the quarter orbit
    t_quarter: float               # physical-time length of the quarter orbit
    quarter: Trajectory            # 5-dim (r, v, theta, w, t) dense quarter
    s_syzygy: float                # rescaled time of the -pi/2 crossing
    v_syzygy: float                # v at the -pi/2 crossing
    r_end: float                   # r at theta = 0
    w_end: float                   # w at theta = 0
    closure_error: float           # direct 4 T2 integration, relative
    roots: list                    # all brake roots found: (theta0, crossings)
    flags: list[str]


def find_periodic_brake(m3=1.0, *, n_grid: int = 96, pad_frac: float = 0.02,
                        rtol: float = 1e-10, atol: float = 1e-12,
                        v_tol: float = 1e-10, s_max: float = 30.0,
                        bracket: tuple[float, float] | None = None,
                        ) -> PeriodicBrakeOrbit:
    """Shooting construction of the symmetric periodic brake orbit.

    Brake starts (r = V(theta0), v = w = 0) are scanned over the angular
    window (theta* - pi, -pi/2), shrunk by pad_frac at both ends (near the
    right end the brake size V/h ~ 1/cos^2 diverges and the shots cost a
    fortune while staying far from the symmetric orbit).  Each shot runs to
    the second syzygy angle theta = 0 and records v there; sign changes of
    v(theta0) are refined by bisection to |v| < v_tol.  Among the roots,
    the orbit of the intended symmetry class crosses theta = -pi/2 exactly
    once per quarter; one such root must exist and is returned with its
    quarter trajectory and a direct closure check over the full period
    4 T2.  Passing an explicit bracket skips the grid scan.
    """
    m3 = _m3_of(m3)
    rep = admissible(m3)
    if not rep.admissible:
        raise ValueError(f"m3 = {m3} is not admissible: {rep.reason}")

    flags = []

    def f(th):
        return _shot(th, m3, rtol=rtol, atol=atol, s_max=s_max)["v_end"]

    if bracket is not None:
        brackets = [tuple(bracket)]
    else:
        th_lo = theta_star(m3) - math.pi
        th_hi = -math.pi / 2.0
        pad = pad_frac * (th_hi - th_lo)
        grid = np.linspace(th_lo + pad, th_hi - pad, n_grid)
        shots = [_shot(th, m3, rtol=rtol, atol=atol, s_max=s_max)
                 for th in grid]
        vs = np.array([sh["v_end"] for sh in shots])
        n_dead = int(np.sum(np.isnan(vs)))
        if n_dead:
            flags.append(f"{n_dead}/{n_grid} shots left the funnel "
                         "before the second syzygy")
        brackets = []
        for i in range(n_grid - 1):
            va, vb = vs[i], vs[i + 1]
            if math.isnan(va) or math.isnan(vb) or va * vb > 0.0:
                continue
            brackets.append((grid[i], grid[i + 1]))

    roots = []
    for (ta, tb) in brackets:
        th_root = brentq(f, ta, tb, xtol=1e-14, rtol=4 * np.finfo(float).eps)
        sh = _shot(th_root, m3, rtol=rtol, atol=atol, s_max=s_max)
        if abs(sh["v_end"]) > v_tol:
            flags.append(f"root at {th_root:.12f} refined only to "
                         f"|v| = {abs(sh['v_end']):.2e}")
        roots.append((th_root, sh["crossings"]))

    simple = [r for r in roots if r[1] == 1]
    if not simple:
        raise RuntimeError(f"no single-crossing brake root among {roots}")
    if len(simple) > 1:
        flags.append(f"multiple single-crossing roots: {simple}")
    theta0 = simple[0][0]

    # final quarter with the physical-time quadrature
    r0 = iso_potential(theta0, m3)
    y0 = np.array([r0, 0.0, theta0, 0.0, 0.0])
    events = [
        EventSpec(g=lambda t, y, *_: y[2] + math.pi / 2.0, direction=+1,
                  terminal=False, name="first-syzygy"),
        EventSpec(g=lambda t, y, *_: y[2], direction=+1, terminal=True,
                  name="end"),
    ]
    quarter = integrate(_iso_rhs_timed, y0, (0.0, s_max), rtol=rtol, atol=atol,
                        events=events, args=(m3,),
                        residual=lambda y: iso_energy_residual(y[:4], m3))
    s_syz, y_syz = quarter.events["first-syzygy"][0]
    s_end, y_end = quarter.events["end"][0]

    # closure over the full period by direct integration
    closure = integrate(iso_rhs, y0[:4], (0.0, 4.0 * s_end),
                        rtol=rtol, atol=atol, args=(m3,), dense=False)
    scale = max(1.0, float(np.max(np.abs(y0[:4]))))
    closure_error = float(np.max(np.abs(closure.y_end - y0[:4]))) / scale

    return PeriodicBrakeOrbit(
        m3=m3, theta0=theta0, r0=r0,
        T2=float(s_end), t_quarter=float(y_end[4]),
        quarter=quarter,
        s_syzygy=float(s_syz), v_syzygy=float(y_syz[1]),
        r_end=float(y_end[0]), w_end=float(y_end[3]),
        closure_error=closure_error,
        roots=roots, flags=flags,
    )


def reflect_orbit(t: np.ndarray, y: np.ndarray, *,
                  reverse_time: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Reflect an isosceles orbit segment about the syzygy line theta = 0
    (theta -> -theta, w -> -w); the result solves the same equations.

    With reverse_time=True the segment is additionally run backwards
    (order reversed, t -> t_end - t, v -> -v, w -> -w), which composes the
    mirror with the brake time-reversal: applied to a quarter orbit ending
    at theta = 0 it produces the second quarter.  Applying the same call
    twice returns the original segment.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    out = y.copy()
    out[:, 2] = -out[:, 2]
    out[:, 3] = -out[:, 3]
    if reverse_time:
        out = out[::-1].copy()
        out[:, 1] = -out[:, 1]
        out[:, 3] = -out[:, 3]
        t = (t[-1] - t[::-1]).copy()
    return t, out


# ------------------------------------------------- physical-space crosscheck

def iso_to_planar(y, m3: float) -> tuple[float, float]:
    """Map (r, v, theta, w) to the physical lengths (a, b): equal-pair
    separation and height of the third mass over the pair's midpoint."""
    r, _, th, _ = y[0], y[1], y[2], y[3]
    s, c = math.sin(th), math.cos(th)
    A = 1.0 + s * s
    mu2 = 2.0 * m3 / (2.0 + m3)
    a = math.sqrt(2.0) * r * c * c / A
    b = 2.0 * r * s / (math.sqrt(mu2) * A)
    return a, b


def newtonian_crosscheck(orbit: PeriodicBrakeOrbit, *, n: int = 60,
                         margin: float = 0.15) -> dict:
    """Re-integrate the selected brake orbit directly in the physical
    lengths (a, b) with the Newtonian equations

        mu1 a'' = -1/a^2 - 2 m3 (a/4) / (a^2/4 + b^2)^(3/2)
        mu2 b'' = -2 m3 b / (a^2/4 + b^2)^(3/2)

    and compare with the shape-coordinate quarter through the physical-time
    quadrature.  The comparison window stops short of the pair collision at
    theta = -pi/2 (where a -> 0 and the planar chart degenerates)."""
    m3 = orbit.m3
    mu1, mu2 = 0.5, 2.0 * m3 / (2.0 + m3)

    def rhs(t, z):
        a, b, ad, bd = z
        p = (a * a / 4.0 + b * b) ** 1.5
        return [ad, bd,
                (-1.0 / (a * a) - 2.0 * m3 * (a / 4.0) / p) / mu1,
                (-2.0 * m3 * b / p) / mu2]

    a0, b0 = iso_to_planar(orbit.quarter.y[0], m3)
    z0 = [a0, b0, 0.0, 0.0]

    # sample the quarter before the syzygy crossing, away from theta = -pi/2
    s_samples = np.linspace(0.0, orbit.s_syzygy, 400)
    ys = np.array([orbit.quarter(s) for s in s_samples])
    keep = ys[:, 2] < -math.pi / 2.0 - margin
    ys, s_samples = ys[keep], s_samples[keep]
    idx = np.linspace(0, len(ys) - 1, min(n, len(ys))).astype(int)
    ys = ys[idx]
    t_targets = ys[:, 4]

    sol = solve_ivp(rhs, (0.0, float(t_targets[-1]) * 1.0000001), z0,
                    method="RK45", rtol=1e-11, atol=1e-13, dense_output=True)
    if sol.status < 0:
        raise RuntimeError(f"planar integration failed: {sol.message}")

    dev_a = dev_b = 0.0
    for y4, tt in zip(ys, t_targets):
        a_iso, b_iso = iso_to_planar(y4, m3)
        a_n, b_n = sol.sol(tt)[0], sol.sol(tt)[1]
        dev_a = max(dev_a, abs(a_iso - a_n))
        dev_b = max(dev_b, abs(b_iso - b_n))
    return {"max_dev_a": dev_a, "max_dev_b": dev_b,
            "n_samples": len(ys), "t_max": float(t_targets[-1])}
