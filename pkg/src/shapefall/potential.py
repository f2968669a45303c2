"""Shape potential, conformal factor, and central configurations.

All geometry lives on the section of configuration space picked out by the
chart: the configuration with xi1 = 1 - w, xi2 = l+ - l- w, whose mutual
distances turn out to be the *mass-independent* quadratics

    r12^2 = (x - 1)^2 + y^2
    r13^2 = (x + 1/2)^2 + (y - sqrt(3)/2)^2
    r23^2 = (x + 1/2)^2 + (y + sqrt(3)/2)^2

(the distances from w to the three cube roots of unity).  The moment of
inertia of the section configuration is

    N(x, y) = a3 r12^2 + a2 r13^2 + a1 r23^2,      a_i = m_j m_k / m,

so the size-normalized mutual distances are rho_ij = r_ij / sqrt(N) and the
shape potential (the Newtonian potential evaluated on the r = 1 sphere) is

    V(x, y) = sqrt(N) * (m1 m2 / r12 + m1 m3 / r13 + m2 m3 / r23).

The conformal factor of the shape-sphere metric in this chart is

    kappa(x, y) = 3 mu1 mu2 / N^2.

Both V and kappa blow up nowhere in the open disk except V at the three
collision points.  The radial derivative identity

    x Vx + y Vy = phi(x, y) * (1 - x^2 - y^2)

holds with phi >= 0 given by an explicit symmetric expression in the
mutual distances; phi is what makes the height z = 1 - x^2 - y^2 decrease
monotonically along falling orbits.

Everything here accepts numpy arrays for (x, y) and broadcasts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import MassParams

__all__ = [
    "PotentialEval",
    "EulerPoint",
    "mutual_distances",
    "section_inertia",
    "chart_terms",
    "chart_scalar",
    "shape_potential",
    "radial_factor",
    "hill_radius",
    "collinear_central_configs",
    "slice_derivative",
    "COLLISION_ANGLES",
]

_SQ3_2 = math.sqrt(3.0) / 2.0

# Chart angles of the three binary collision points (cube roots of unity).
COLLISION_ANGLES = {"12": 0.0, "13": 2.0 * math.pi / 3.0, "23": 4.0 * math.pi / 3.0}


def mutual_distances(x, y):
    """Chart-section mutual distances (r12, r13, r23); mass independent."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r12 = np.sqrt((x - 1.0) ** 2 + y**2)
    r13 = np.sqrt((x + 0.5) ** 2 + (y - _SQ3_2) ** 2)
    r23 = np.sqrt((x + 0.5) ** 2 + (y + _SQ3_2) ** 2)
    return r12, r13, r23


def section_inertia(x, y, mp: MassParams):
    """Moment of inertia N(x, y) of the section configuration."""
    r12, r13, r23 = mutual_distances(x, y)
    return mp.a3 * r12**2 + mp.a2 * r13**2 + mp.a1 * r23**2


def chart_terms(x, y, mp: MassParams) -> dict:
    """All chart fields at once: V, its gradient, kappa, its gradient, N, phi.

    Array-friendly workhorse behind shape_potential / radial_factor and the
    equations of motion.  No collision handling: at a collision point the
    entries come out inf/nan and the caller decides what that means.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r12, r13, r23 = mutual_distances(x, y)
    b12, b13, b23 = mp.m1 * mp.m2, mp.m1 * mp.m3, mp.m2 * mp.m3

    N = (b12 * r12**2 + b13 * r13**2 + b23 * r23**2) / mp.m
    sqrtN = np.sqrt(N)

    with np.errstate(divide="ignore", invalid="ignore"):
        S = b12 / r12 + b13 / r13 + b23 / r23
        # d/dx of r^2-terms: the section distances are distances to the three
        # fixed collision points p_ij, so each gradient term is (w - p_ij).
        Nx = 2.0 * (b12 * (x - 1.0) + b13 * (x + 0.5) + b23 * (x + 0.5)) / mp.m
        Ny = 2.0 * (b12 * y + b13 * (y - _SQ3_2) + b23 * (y + _SQ3_2)) / mp.m
        Sx = -(b12 * (x - 1.0) / r12**3 + b13 * (x + 0.5) / r13**3 + b23 * (x + 0.5) / r23**3)
        Sy = -(b12 * y / r12**3 + b13 * (y - _SQ3_2) / r13**3 + b23 * (y + _SQ3_2) / r23**3)

        V = sqrtN * S
        Vx = 0.5 * Nx * S / sqrtN + sqrtN * Sx
        Vy = 0.5 * Ny * S / sqrtN + sqrtN * Sy

        kappa = 3.0 * mp.mu1 * mp.mu2 / N**2
        kx = -2.0 * kappa * Nx / N
        ky = -2.0 * kappa * Ny / N

        # phi: the positive factor in  x Vx + y Vy = phi * (1 - x^2 - y^2).
        g1 = (r13**2 - r12**2) * (1.0 / r12**3 - 1.0 / r13**3)
        g2 = (r23**2 - r12**2) * (1.0 / r12**3 - 1.0 / r23**3)
        g3 = (r23**2 - r13**2) * (1.0 / r13**3 - 1.0 / r23**3)
        phi = (mp.m1 * mp.m2 * mp.m3 / (2.0 * mp.m * sqrtN)) * (
            mp.m1 * g1 + mp.m2 * g2 + mp.m3 * g3
        )

    return {
        "N": N, "V": V, "Vx": Vx, "Vy": Vy,
        "kappa": kappa, "kx": kx, "ky": ky,
        "phi": phi, "r12": r12, "r13": r13, "r23": r23,
    }


def chart_scalar(x: float, y: float, mp: MassParams) -> tuple:
    """Scalar fast path of chart_terms for ODE right-hand sides.

    Pure-math duplicate of chart_terms (kept in lockstep by tests); returns

        (N, V, Vx, Vy, kappa, kx, ky, phi, r12, r13, r23).

    The numpy version costs ~40 microseconds per call on scalars, which
    dominates integration time; this one is an order of magnitude cheaper.
    """
    dx12, dy12 = x - 1.0, y
    dx13, dy13 = x + 0.5, y - _SQ3_2
    dx23, dy23 = x + 0.5, y + _SQ3_2
    s12 = dx12 * dx12 + dy12 * dy12
    s13 = dx13 * dx13 + dy13 * dy13
    s23 = dx23 * dx23 + dy23 * dy23
    r12, r13, r23 = math.sqrt(s12), math.sqrt(s13), math.sqrt(s23)
    b12, b13, b23 = mp.m1 * mp.m2, mp.m1 * mp.m3, mp.m2 * mp.m3

    N = (b12 * s12 + b13 * s13 + b23 * s23) / mp.m
    sqrtN = math.sqrt(N)
    c12, c13, c23 = b12 / (s12 * r12), b13 / (s13 * r13), b23 / (s23 * r23)

    S = b12 / r12 + b13 / r13 + b23 / r23
    Nx = 2.0 * (b12 * dx12 + b13 * dx13 + b23 * dx23) / mp.m
    Ny = 2.0 * (b12 * dy12 + b13 * dy13 + b23 * dy23) / mp.m
    Sx = -(c12 * dx12 + c13 * dx13 + c23 * dx23)
    Sy = -(c12 * dy12 + c13 * dy13 + c23 * dy23)

    V = sqrtN * S
    Vx = 0.5 * Nx * S / sqrtN + sqrtN * Sx
    Vy = 0.5 * Ny * S / sqrtN + sqrtN * Sy

    kappa = 3.0 * mp.mu1 * mp.mu2 / (N * N)
    kx = -2.0 * kappa * Nx / N
    ky = -2.0 * kappa * Ny / N

    g1 = (s13 - s12) * (1.0 / (s12 * r12) - 1.0 / (s13 * r13))
    g2 = (s23 - s12) * (1.0 / (s12 * r12) - 1.0 / (s23 * r23))
    g3 = (s23 - s13) * (1.0 / (s13 * r13) - 1.0 / (s23 * r23))
    phi = (mp.m1 * mp.m2 * mp.m3 / (2.0 * mp.m * sqrtN)) * (
        mp.m1 * g1 + mp.m2 * g2 + mp.m3 * g3
    )
    return (N, V, Vx, Vy, kappa, kx, ky, phi, r12, r13, r23)


@dataclass(frozen=True)
class PotentialEval:
    """Shape potential evaluation at a single chart point."""

    V: float
    Vx: float
    Vy: float
    kappa: float
    rho12: float
    rho13: float
    rho23: float
    collision: str | None = None  # "12"/"13"/"23" when sitting exactly on one


def shape_potential(x: float, y: float, mp: MassParams) -> PotentialEval:
    """Evaluate V, grad V, kappa, and normalized mutual distances at (x, y).

    At an exact binary collision the value is a tagged infinity (V = inf,
    gradient nan) rather than an exception, so scan code can classify the
    point and move on.
    """
    r12, r13, r23 = (float(v) for v in mutual_distances(x, y))
    collision = None
    if r12 == 0.0:
        collision = "12"
    elif r13 == 0.0:
        collision = "13"
    elif r23 == 0.0:
        collision = "23"

    t = chart_terms(x, y, mp)
    sqrtN = math.sqrt(float(t["N"]))
    if collision is not None:
        return PotentialEval(
            V=math.inf, Vx=math.nan, Vy=math.nan,
            kappa=float(t["kappa"]),
            rho12=r12 / sqrtN, rho13=r13 / sqrtN, rho23=r23 / sqrtN,
            collision=collision,
        )
    return PotentialEval(
        V=float(t["V"]), Vx=float(t["Vx"]), Vy=float(t["Vy"]),
        kappa=float(t["kappa"]),
        rho12=r12 / sqrtN, rho13=r13 / sqrtN, rho23=r23 / sqrtN,
        collision=None,
    )


def radial_factor(x, y, mp: MassParams):
    """phi(x, y): the nonnegative factor in x Vx + y Vy = phi (1 - x^2 - y^2).

    Goes to +inf at the binary collision points.
    """
    return chart_terms(x, y, mp)["phi"]


def hill_radius(x: float, y: float, mp: MassParams, h: float) -> float:
    """Size of the zero-velocity (Hill boundary) configuration over shape (x, y)."""
    if h <= 0:
        raise ValueError(f"energy parameter h must be positive, got {h}")
    return float(chart_terms(x, y, mp)["V"]) / h


@dataclass(frozen=True)
class EulerPoint:
    """A collinear central configuration on the unit circle of the chart."""

    angle: float        # chart angle alpha, shape at (cos a, sin a)
    V: float            # potential value there
    interior: int       # which mass sits between the other two (1, 2, or 3)


def collinear_central_configs(mp: MassParams) -> list[EulerPoint]:
    """The three collinear central configurations.

    The collinear circle is cut into three arcs by the collision points; V
    restricted to each arc blows up at both ends, so it has an interior
    minimum.  That minimum is the unique central configuration of the arc
    (one per choice of interior mass).  Roots are located by bracketed
    root-finding on dV/d(angle) to 1e-12 in angle.

    Between the two collisions that involve mass k, it is mass k that
    passes between the other two, so the arc's Euler point has interior k.
    """
    def dV_dangle(alpha: float) -> float:
        c, s = math.cos(alpha), math.sin(alpha)
        t = chart_terms(c, s, mp)
        return float(-s * t["Vx"] + c * t["Vy"])

    a12, a13, a23 = (COLLISION_ANGLES[k] for k in ("12", "13", "23"))
    arcs = [
        (a12, a13, 1),              # collisions 12 and 13 share mass 1
        (a13, a23, 3),              # collisions 13 and 23 share mass 3
        (a23, a12 + 2.0 * math.pi, 2),
    ]
    out = []
    for lo, hi, interior in arcs:
        eps = 1e-6 * (hi - lo)
        root = brentq(dV_dangle, lo + eps, hi - eps, xtol=1e-13, rtol=8.9e-16)
        root = math.remainder(root, 2.0 * math.pi)  # wrap to (-pi, pi]
        t = chart_terms(math.cos(root), math.sin(root), mp)
        out.append(EulerPoint(angle=root, V=float(t["V"]), interior=interior))
    return out


def slice_derivative(u: float, c: float, mp: MassParams) -> float:
    """dV/du along a constrained slice of squared mutual distances.

    The slice: squared distances s = (s1, s2, s3) with s3 = c held fixed,
    s2 = u the parameter, and s1 determined by the unit-size condition
    a1 s1 + a2 s2 + a3 s3 = 1.  Here s1 = r23^2, s2 = r13^2, s3 = r12^2
    (each s paired with the a-coefficient of the complementary pair).

    Raises ValueError when (s1, s2, s3) does not describe a planar triangle
    (some s <= 0, or the Heron quadratic 2(s1 s2 + s2 s3 + s3 s1) - s1^2 -
    s2^2 - s3^2 = 16 Area^2 goes negative).

    The second derivative of V in u is strictly positive on the admissible
    interval, so the restriction of V to the slice is convex: useful as a
    one-line uniqueness argument for isosceles minimizers.
    """
    s2 = float(u)
    s3 = float(c)
    s1 = (1.0 - mp.a2 * s2 - mp.a3 * s3) / mp.a1
    if not (s1 > 0.0 and s2 > 0.0 and s3 > 0.0):
        raise ValueError(f"slice point leaves the triangle cone: s = ({s1}, {s2}, {s3})")
    heron = 2.0 * (s1 * s2 + s2 * s3 + s3 * s1) - s1 * s1 - s2 * s2 - s3 * s3
    if heron < 0.0:
        raise ValueError(f"no planar triangle with squared distances ({s1}, {s2}, {s3})")
    return 0.5 * mp.m * mp.a2 * (s1 ** -1.5 - s2 ** -1.5)
