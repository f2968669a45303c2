"""Equations of motion: Newtonian, blown-up shape coordinates, isosceles.

Three views of the same flow at fixed energy -h (h > 0):

1. newtonian_field: the plain Jacobi-coordinate equations in physical time.
   Used as an independent oracle for everything else.

2. blowup_field: the size-regularized system in coordinates
   (r, v, x, y, x', y') where r is the configuration size, v = sqrt(r) rdot,
   (x, y) the shape chart, and primes are derivatives in the rescaled time
   ds = dt / r^(3/2).  The triple collision r = 0 becomes an invariant
   boundary (the collision manifold) carrying restpoints instead of a
   singularity.  The field is

       r' = v r
       v' = v^2/2 + kappa (x'^2 + y'^2) - V
       x'' = [Vx - kappa v x'/2 + kx P/2 - (kx x' + ky y') x'] / kappa
       y'' = [Vy - kappa v y'/2 + ky P/2 - (kx x' + ky y') y'] / kappa

   with P = x'^2 + y'^2.  Note h appears nowhere: the energy relation

       E_h = v^2/2 + kappa P/2 - V + r h = 0

   satisfies E_h' = v E_h identically, so each energy level is invariant
   and the level is selected purely by the initial condition.

3. iso_field: the isosceles subproblem (m1 = m2, body 3 on the symmetry
   axis) in its own blown-up coordinates (r, v, theta, w), with the double
   binary collision at theta = +-pi/2 regularized away.  Masses are fixed
   to m1 = m2 = 1 and energy to h = 1; only m3 varies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import JacobiState, MassParams
from .potential import chart_scalar, chart_terms

__all__ = [
    "CollisionSingularity",
    "ReducedState",
    "IsoState",
    "SyzygyDiagnostic",
    "newtonian_field",
    "newtonian_energy",
    "blowup_field",
    "blowup_rhs",
    "blowup_rhs_timed",
    "energy_residual",
    "reduced_accel",
    "syzygy_diagnostic",
    "z_second_derivative",
    "interaction_constant",
    "iso_potential",
    "iso_w",
    "iso_w_prime",
    "iso_field",
    "iso_rhs",
    "iso_energy_residual",
    "collision_slope",
    "tau_star",
]


class CollisionSingularity(ValueError):
    """Attempt to evaluate the Newtonian field at a two- or three-body collision."""


class ReducedState(NamedTuple):
    """State of the blown-up system: (r, v, x, y, x', y')."""

    r: float
    v: float
    x: float
    y: float
    xp: float
    yp: float

    @classmethod
    def from_array(cls, arr) -> "ReducedState":
        return cls(*(float(a) for a in arr))


class IsoState(NamedTuple):
    """State of the blown-up isosceles system: (r, v, theta, w)."""

    r: float
    v: float
    theta: float
    w: float

    @classmethod
    def from_array(cls, arr) -> "IsoState":
        return cls(*(float(a) for a in arr))


# ----------------------------------------------------------------------
# Newtonian oracle in Jacobi variables
# ----------------------------------------------------------------------

def _jacobi_separations(state: JacobiState, mp: MassParams):
    d12 = state.xi1
    d13 = state.xi2 + mp.nu2 * state.xi1
    d23 = state.xi2 - mp.nu1 * state.xi1
    return d12, d13, d23


def newtonian_field(state: JacobiState, mp: MassParams) -> JacobiState:
    """Time derivative of a JacobiState under the Newtonian equations.

    Returns a JacobiState whose position slots hold the velocities and whose
    velocity slots hold the accelerations.  Raises CollisionSingularity if
    any mutual distance vanishes.
    """
    d12, d13, d23 = _jacobi_separations(state, mp)
    r12, r13, r23 = abs(d12), abs(d13), abs(d23)
    if r12 == 0.0 or r13 == 0.0 or r23 == 0.0:
        raise CollisionSingularity(
            f"collision configuration: mutual distances ({r12}, {r13}, {r23})"
        )
    f12 = mp.m1 * mp.m2 / r12**3
    f13 = mp.m1 * mp.m3 / r13**3
    f23 = mp.m2 * mp.m3 / r23**3
    acc1 = (-f12 * d12 - mp.nu2 * f13 * d13 + mp.nu1 * f23 * d23) / mp.mu1
    acc2 = (-f13 * d13 - f23 * d23) / mp.mu2
    return JacobiState(xi1=state.xi1dot, xi2=state.xi2dot, xi1dot=acc1, xi2dot=acc2)


def newtonian_energy(state: JacobiState, mp: MassParams) -> float:
    """Total energy K - U (negative throughout this project: we fix K - U = -h)."""
    d12, d13, d23 = _jacobi_separations(state, mp)
    U = mp.m1 * mp.m2 / abs(d12) + mp.m1 * mp.m3 / abs(d13) + mp.m2 * mp.m3 / abs(d23)
    K = 0.5 * (mp.mu1 * abs(state.xi1dot) ** 2 + mp.mu2 * abs(state.xi2dot) ** 2)
    return K - U


# ----------------------------------------------------------------------
# Blown-up planar system
# ----------------------------------------------------------------------

def blowup_rhs(s, y, mp: MassParams):
    """Right-hand side in solve_ivp calling convention; y = (r, v, x, y, x', y').

    Independent of the rescaled time s and of the energy parameter h.
    """
    r, v, x, yy, xp, yp = y
    _, V, Vx, Vy, kap, kx, ky, _, _, _, _ = chart_scalar(x, yy, mp)
    P = xp * xp + yp * yp
    mix = kx * xp + ky * yp
    return [
        v * r,
        0.5 * v * v + kap * P - V,
        xp,
        yp,
        (Vx - 0.5 * kap * v * xp + 0.5 * kx * P - mix * xp) / kap,
        (Vy - 0.5 * kap * v * yp + 0.5 * ky * P - mix * yp) / kap,
    ]


def blowup_field(state, mp: MassParams, h: float | None = None) -> np.ndarray:
    """Blown-up field as a function of state alone.

    The h argument is accepted for signature symmetry with the energy
    relation but is not used: the field is the same on every energy level
    (see module docstring).
    """
    return np.asarray(blowup_rhs(0.0, np.asarray(state, dtype=float), mp))


def blowup_rhs_timed(s, y, mp: MassParams):
    """Blown-up field augmented with physical time: y = (r, v, x, y, x', y', t).

    dt/ds = r^(3/2) reconstructs the physical clock alongside the flow.
    """
    core = blowup_rhs(s, y[:6], mp)
    r = y[0]
    return core + [max(r, 0.0) ** 1.5]


def energy_residual(state, mp: MassParams, h: float) -> float:
    """E_h = v^2/2 + kappa (x'^2 + y'^2)/2 - V + r h; zero on the energy shell."""
    r, v, x, y, xp, yp = (float(a) for a in np.asarray(state, dtype=float)[:6])
    _, V, _, _, kap, _, _, _, _, _, _ = chart_scalar(x, y, mp)
    return 0.5 * v * v + 0.5 * kap * (xp * xp + yp * yp) - V + r * h


def reduced_accel(r, x, y, rdot, xdot, ydot, mp: MassParams):
    """Physical-time accelerations (rddot, xddot, yddot) of the reduced system.

    The reduced Lagrangian is (rdot^2 + kappa r^2 (xdot^2 + ydot^2))/2 + V/r.
    Used to residual-check reconstructed trajectories.
    """
    t = chart_terms(x, y, mp)
    V, Vx, Vy = float(t["V"]), float(t["Vx"]), float(t["Vy"])
    kap, kx, ky = float(t["kappa"]), float(t["kx"]), float(t["ky"])
    P = xdot * xdot + ydot * ydot
    mix = kx * xdot + ky * ydot
    rdd = kap * r * P - V / r**2
    xdd = (0.5 * kx * P - mix * xdot) / kap + Vx / (kap * r**3) - 2.0 * rdot * xdot / r
    ydd = (0.5 * ky * P - mix * ydot) / kap + Vy / (kap * r**3) - 2.0 * rdot * ydot / r
    return rdd, xdd, ydd


# ----------------------------------------------------------------------
# Syzygy diagnostics
# ----------------------------------------------------------------------

def interaction_constant(mp: MassParams) -> float:
    """c = 3 m1 m2 m3 (m1 m2 + m1 m3 + m2 m3) / m^2.

    The constant in the identity kappa + (x kx + y ky)/2 = c (1 - x^2 - y^2)/N^3,
    which drives the convexity of the height coordinate z along orbits.
    """
    return (
        3.0 * mp.m1 * mp.m2 * mp.m3
        * (mp.m1 * mp.m2 + mp.m1 * mp.m3 + mp.m2 * mp.m3)
        / mp.m**2
    )


@dataclass(frozen=True)
class SyzygyDiagnostic:
    """Quantities controlling the approach to the collinear set.

    z    = 1 - x^2 - y^2, the height above the collinear circle;
    p1   = the momentum conjugate to z (vanishes exactly when zdot does);
    F1   = the restoring coefficient in zddot ~ -F1 z: strictly positive
           away from the Lagrange homothety, which forces z to cross zero;
    I    = r^2, the moment of inertia, and Idot its physical time derivative
           (brake orbits have Idot < 0 strictly after the brake instant).
    """

    z: float
    p1: float
    F1: float
    I: float
    Idot: float


def syzygy_diagnostic(state, mp: MassParams, h: float | None = None) -> SyzygyDiagnostic:
    """Evaluate the syzygy diagnostics at a blown-up state.

    h is accepted for signature symmetry but unused; every entry is a
    function of the state alone.
    """
    r, v, x, y, xp, yp = (float(a) for a in np.asarray(state, dtype=float)[:6])
    N, _, _, _, kap, _, _, phi, _, _, _ = chart_scalar(x, y, mp)
    c = interaction_constant(mp)
    z = 1.0 - x * x - y * y
    # physical zdot = -2 (x x' + y y') / r^(3/2); p1 = kappa r^2 zdot / 2
    p1 = -kap * math.sqrt(r) * (x * xp + y * yp)
    F1 = phi / r + c * (xp * xp + yp * yp) / (r * N**3)
    return SyzygyDiagnostic(z=z, p1=p1, F1=F1, I=r * r, Idot=2.0 * v * math.sqrt(r))


def z_second_derivative(state, mp: MassParams) -> float:
    """d^2 z / ds^2 along the blown-up flow (rescaled time).

    Negative whenever 0 < z < 1 and dz/ds = 0: interior critical points of
    the height are strict maxima, which is the mechanism behind monotone
    descent to syzygy.
    """
    r, v, x, y, xp, yp = (float(a) for a in np.asarray(state, dtype=float)[:6])
    f = blowup_rhs(0.0, [r, v, x, y, xp, yp], mp)
    return -2.0 * (xp * xp + yp * yp) - 2.0 * (x * f[4] + y * f[5])


# ----------------------------------------------------------------------
# Isosceles subsystem (m1 = m2 = 1, h = 1)
# ----------------------------------------------------------------------

def _m3_of(masses) -> float:
    """Accept either a bare m3 > 0 or a MassParams with m1 = m2 = 1."""
    if isinstance(masses, MassParams):
        if not (masses.m1 == 1.0 and masses.m2 == 1.0):
            raise ValueError("isosceles subsystem requires m1 = m2 = 1")
        return masses.m3
    m3 = float(masses)
    if not (m3 > 0 and math.isfinite(m3)):
        raise ValueError(f"m3 must be positive and finite, got {m3}")
    return m3


def iso_potential(theta: float, masses) -> float:
    """Shape potential V(theta) of the isosceles family.

    theta parameterizes the isosceles shape circle: theta = 0 is the
    collinear (Euler) shape with body 3 between the pair, theta = +-pi/2 the
    double binary collision of the pair, and the two equilateral shapes sit
    at theta* and theta* - pi.  Blows up like 1/cos^2 at +-pi/2.
    """
    m3 = _m3_of(masses)
    s = math.sin(theta)
    c2 = math.cos(theta) ** 2
    A = 1.0 + s * s
    D = math.sqrt(A * A + (8.0 / m3) * s * s)
    return A * (1.0 / (math.sqrt(2.0) * c2) + 2.0 * math.sqrt(2.0) * m3 / D)


def iso_w(theta: float, masses) -> float:
    """Regularized potential W = cos^2(theta) V(theta).

    Finite everywhere; W(+-pi/2) = sqrt(2) for every m3, which is what makes
    the double-collision regularization work.
    """
    m3 = _m3_of(masses)
    s = math.sin(theta)
    u = s * s
    A = 1.0 + u
    D = math.sqrt(A * A + (8.0 / m3) * u)
    return A / math.sqrt(2.0) + 2.0 * math.sqrt(2.0) * m3 * (1.0 - u * u) / D


def iso_w_prime(theta: float, masses) -> float:
    """dW/dtheta, analytic."""
    m3 = _m3_of(masses)
    u = math.sin(theta) ** 2
    A = 1.0 + u
    D2 = A * A + (8.0 / m3) * u
    D = math.sqrt(D2)
    dWdu = 1.0 / math.sqrt(2.0) + 2.0 * math.sqrt(2.0) * m3 * (
        -(2.0 * u * D2 + (1.0 - u * u) * (A + 4.0 / m3))
    ) / (D2 * D)
    return dWdu * math.sin(2.0 * theta)


def iso_rhs(s, y, masses):
    """Isosceles blown-up field in solve_ivp convention; y = (r, v, theta, w).

    The double binary collision theta = +-pi/2 is a regular point of this
    field (the trajectory passes through it; physically the pair bounces).
    Energy is fixed to h = 1, which only enters through the r cos^2 term.
    """
    m3 = _m3_of(masses)
    r, v, th, w = y
    c = math.cos(th)
    sn = math.sin(th)
    c2 = c * c
    A = 1.0 + sn * sn
    W = iso_w(th, m3)
    Wp = iso_w_prime(th, m3)
    return [
        v * r * c2,
        0.5 * v * v * c2 + 0.25 * w * w * A * A - W,
        0.25 * w * A * A,
        Wp - 0.5 * v * w * c2 + sn * c * (2.0 * r + v * v - 0.5 * w * w * A),
    ]


def iso_field(state, masses) -> np.ndarray:
    """Isosceles field as a function of state alone (see iso_rhs)."""
    return np.asarray(iso_rhs(0.0, np.asarray(state, dtype=float), masses))


def iso_energy_residual(state, masses) -> float:
    """E = v^2 cos^2/2 + w^2 (1+sin^2)^2/8 - W + r cos^2; zero on the h = 1 shell."""
    m3 = _m3_of(masses)
    r, v, th, w = (float(a) for a in np.asarray(state, dtype=float)[:4])
    c2 = math.cos(th) ** 2
    A = 1.0 + math.sin(th) ** 2
    return 0.5 * v * v * c2 + 0.125 * w * w * A * A - iso_w(th, m3) + r * c2


def collision_slope(theta: float, v: float, masses) -> float:
    """|dv/dtheta| along an orbit of the collision manifold (r = 0).

    On r = 0 the energy relation ties w to (v, theta), leaving the graph
    slope

        dv/dtheta = sqrt(2 W(theta) - v^2 cos^2 theta) / (1 + sin^2 theta)
                  = |cos theta| sqrt(2 V - v^2) / (1 + sin^2 theta).

    Requires v^2 <= 2 V(theta) (the branch exists); returns 0 exactly on the
    boundary v^2 = 2 V.
    """
    m3 = _m3_of(masses)
    c2 = math.cos(theta) ** 2
    A = 1.0 + math.sin(theta) ** 2
    rad = 2.0 * iso_w(theta, m3) - v * v * c2
    if rad < 0.0:
        raise ValueError(
            f"no collision-manifold branch at theta={theta}, v={v}: v^2 > 2 V(theta)"
        )
    return math.sqrt(rad) / A


def tau_star(masses, h: float) -> float:
    """Threshold time for syzygies of solutions that stay bounded by r -> 0.

    Any solution existing on a time interval longer than tau* = (2h)^(-3/2)
    * (mi^2 mj^2 / (mi + mj))^(3/2) -- built from the two largest masses --
    must have had a syzygy or a collision.  Scales like h^(-3/2) and is
    invariant under permuting the masses.
    """
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"energy parameter h must be positive, got {h}")
    if isinstance(masses, MassParams):
        ms = sorted((masses.m1, masses.m2, masses.m3))
    else:
        ms = sorted(float(v) for v in masses)
        if len(ms) != 3 or ms[0] <= 0:
            raise ValueError(f"need three positive masses, got {masses}")
    mi, mj = ms[1], ms[2]
    return (mi * mi * mj * mj / (mi + mj)) ** 1.5 / (2.0 * h) ** 1.5
