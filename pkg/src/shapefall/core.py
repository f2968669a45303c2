"""Mass parameters, Jacobi coordinates, and the conformal shape chart.

A planar three-body configuration, reduced by translations, is encoded by
the two Jacobi vectors

    xi1 = q2 - q1,            xi2 = q3 - (m1*q1 + m2*q2)/(m1 + m2),

treated as complex numbers.  Reducing further by rotations and scalings
leaves the *shape*: the point zeta = xi2/xi1 on the Riemann sphere.  We chart
the shape sphere by a Moebius-transformed coordinate w = x + i y chosen so
that the two equilateral shapes sit at w = 0 and w = infinity and the three
binary collisions sit at the cube roots of unity:

    r12 = 0  at  w = 1,
    r13 = 0  at  w = exp(+2 pi i/3),
    r23 = 0  at  w = exp(-2 pi i/3),

for *every* choice of masses.  Collinear shapes form the unit circle
|w| = 1, and the open unit disk is one hemisphere of shapes (body 3 on one
side of the line through bodies 1 and 2).

The overall size of a configuration is measured by

    r = sqrt(mu1 |xi1|^2 + mu2 |xi2|^2),

the square root of the moment of inertia about the center of mass, with the
usual reduced masses mu1, mu2.  Everything downstream works in the
coordinates (r, x, y).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

__all__ = [
    "MassParams",
    "JacobiState",
    "ShapePoint",
    "TripleCollisionError",
    "derive_mass_params",
    "jacobi_to_shape",
    "shape_to_jacobi",
    "jacobi_to_cartesian",
    "angular_momentum",
    "kinetic_energy",
    "shape_to_sphere",
]


class TripleCollisionError(ValueError):
    """Raised when a configuration with xi1 = xi2 = 0 is fed to the chart."""


@dataclass(frozen=True)
class MassParams:
    """The three masses plus every derived constant the formulas need.

    mu1, mu2 are the Jacobi reduced masses, nu1, nu2 the convex weights of
    bodies 1 and 2 inside their pair, lplus/lminus the two fixed points of
    the Moebius map defining the chart, and a1, a2, a3 the coefficients of
    the mass metric in squared-mutual-distance coordinates
    (a_i = m_j m_k / m, indices complementary).
    """

    m1: float
    m2: float
    m3: float
    m: float        # total mass
    mu1: float      # m1 m2 / (m1 + m2)
    mu2: float      # (m1 + m2) m3 / m
    nu1: float      # m1 / (m1 + m2)
    nu2: float      # m2 / (m1 + m2)
    lplus: complex
    lminus: complex
    a1: float       # m2 m3 / m
    a2: float       # m1 m3 / m
    a3: float       # m1 m2 / m

    @property
    def masses(self) -> tuple[float, float, float]:
        return (self.m1, self.m2, self.m3)


def derive_mass_params(m1: float, m2: float, m3: float) -> MassParams:
    """Validate masses and precompute the constants used everywhere else."""
    for label, mi in (("m1", m1), ("m2", m2), ("m3", m3)):
        if not (mi > 0 and math.isfinite(mi)):
            raise ValueError(f"{label} must be a positive finite number, got {mi}")
    m = m1 + m2 + m3
    m12 = m1 + m2
    nu1 = m1 / m12
    nu2 = m2 / m12
    # l+- = (nu1 - nu2)/2 +- i sqrt(3)/2: the chart images of the two
    # equilateral shapes before the Moebius map sends them to 0 and infinity.
    re = 0.5 * (nu1 - nu2)
    im = 0.5 * math.sqrt(3.0)
    return MassParams(
        m1=m1, m2=m2, m3=m3, m=m,
        mu1=m1 * m2 / m12,
        mu2=m12 * m3 / m,
        nu1=nu1, nu2=nu2,
        lplus=complex(re, im),
        lminus=complex(re, -im),
        a1=m2 * m3 / m,
        a2=m1 * m3 / m,
        a3=m1 * m2 / m,
    )


@dataclass(frozen=True)
class JacobiState:
    """Jacobi vectors and their velocities, as complex numbers."""

    xi1: complex
    xi2: complex
    xi1dot: complex = 0j
    xi2dot: complex = 0j

    def size(self, mp: MassParams) -> float:
        """Configuration size r = sqrt(mu1 |xi1|^2 + mu2 |xi2|^2)."""
        return math.sqrt(mp.mu1 * abs(self.xi1) ** 2 + mp.mu2 * abs(self.xi2) ** 2)


@dataclass(frozen=True)
class ShapePoint:
    """A point of the shape chart together with the size coordinate."""

    x: float
    y: float
    r: float

    @property
    def w(self) -> complex:
        return complex(self.x, self.y)

    @property
    def z(self) -> float:
        """Height above the collinear circle: z = 1 - x^2 - y^2."""
        return 1.0 - self.x * self.x - self.y * self.y


def jacobi_to_shape(state: JacobiState, mp: MassParams) -> ShapePoint:
    """Project a configuration to the shape chart.

    Raises TripleCollisionError at xi1 = xi2 = 0 (the chart point is
    undefined there; every shape is a limit shape of the triple collision).
    The antipode of the equilateral shape at w = 0 lives at w = infinity and
    is rejected with ValueError, since the (x, y) chart cannot hold it.
    """
    xi1, xi2 = state.xi1, state.xi2
    r = state.size(mp)
    if r == 0.0:
        raise TripleCollisionError("triple collision: shape undefined at xi1 = xi2 = 0")
    if xi1 == 0:
        # zeta = infinity; the Moebius map sends it to w = 1 (the r12 = 0 collision).
        return ShapePoint(x=1.0, y=0.0, r=r)
    zeta = xi2 / xi1
    den = mp.lminus - zeta
    if den == 0:
        raise ValueError(
            "shape is the equilateral antipode (w = infinity); not representable in this chart"
        )
    w = (mp.lplus - zeta) / den
    return ShapePoint(x=w.real, y=w.imag, r=r)


def shape_to_jacobi(point: ShapePoint, mp: MassParams) -> JacobiState:
    """A right inverse of jacobi_to_shape on positions.

    Fixes the rotation gauge by making xi1 real and positive (and xi2 real
    positive in the degenerate case w = 1 where xi1 = 0).  Velocities are
    set to zero; callers who need moving configurations attach them
    separately.
    """
    if point.r <= 0 or not math.isfinite(point.r):
        raise ValueError(f"size r must be positive and finite, got {point.r}")
    w = point.w
    if w == 1:
        # r12 = 0: the pair sits at a point, xi1 = 0 and r is carried by xi2.
        return JacobiState(xi1=0j, xi2=complex(point.r / math.sqrt(mp.mu2), 0.0))
    zeta = (mp.lplus - w * mp.lminus) / (1 - w)
    xi1 = point.r / math.sqrt(mp.mu1 + mp.mu2 * abs(zeta) ** 2)
    return JacobiState(xi1=complex(xi1, 0.0), xi2=xi1 * zeta)


def jacobi_to_cartesian(
    state: JacobiState, mp: MassParams
) -> tuple[complex, complex, complex]:
    """Positions of the three bodies (center of mass at the origin)."""
    q3 = ((mp.m1 + mp.m2) / mp.m) * state.xi2
    base = -(mp.m3 / mp.m) * state.xi2
    q1 = base - mp.nu2 * state.xi1
    q2 = base + mp.nu1 * state.xi1
    return q1, q2, q3


def angular_momentum(state: JacobiState, mp: MassParams) -> float:
    """Total angular momentum omega = Im(mu1 conj(xi1) xi1dot + mu2 conj(xi2) xi2dot)."""
    return (
        mp.mu1 * (state.xi1.conjugate() * state.xi1dot).imag
        + mp.mu2 * (state.xi2.conjugate() * state.xi2dot).imag
    )


def kinetic_energy(state: JacobiState, mp: MassParams) -> float:
    """K = (mu1 |xi1dot|^2 + mu2 |xi2dot|^2) / 2."""
    return 0.5 * (
        mp.mu1 * abs(state.xi1dot) ** 2 + mp.mu2 * abs(state.xi2dot) ** 2
    )


def shape_to_sphere(x: float, y: float) -> tuple[float, float, float]:
    """Inverse stereographic projection of the chart onto the unit shape sphere.

    The disk maps to the upper hemisphere, the collinear circle to the
    equator (s3 = 0), the equilateral point w = 0 to the north pole.
    """
    n = 1.0 + x * x + y * y
    return (2.0 * x / n, 2.0 * y / n, (1.0 - x * x - y * y) / n)
