"""Mass parameters, Jacobi coordinates, and the shape chart."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapefall.core import (
    JacobiState,
    ShapePoint,
    TripleCollisionError,
    angular_momentum,
    derive_mass_params,
    jacobi_to_cartesian,
    jacobi_to_shape,
    kinetic_energy,
    shape_to_jacobi,
    shape_to_sphere,
)

EQ = derive_mass_params(1.0, 1.0, 1.0)
UN = derive_mass_params(1.0, 2.0, 10.0)

# Cartesian brake configuration over shape (0.3, -0.2) at size 1.3, equal
# masses, in the section gauge xi1 = (1 - w0) s, xi2 = (l+ - l- w0) s
# (independent 30-digit quadrature of the same construction).
ANCHOR_Q1 = complex(-0.4986343031717006609795, -0.581234715261432951135)
ANCHOR_Q2 = complex(0.3574216870573728754169, -0.3366472894816976550218)
ANCHOR_Q3 = complex(0.1412126161143277855626, 0.9178820047431306061568)


def disk_points():
    return st.tuples(
        st.floats(-0.97, 0.97), st.floats(-0.97, 0.97)
    ).filter(lambda p: p[0] * p[0] + p[1] * p[1] < 0.95)


def mass_triples():
    return st.tuples(
        st.floats(0.05, 50.0), st.floats(0.05, 50.0), st.floats(0.05, 50.0)
    )


def test_derived_constants_equal_masses():
    assert EQ.m == 3.0
    assert EQ.mu1 == 0.5
    assert EQ.mu2 == pytest.approx(2.0 / 3.0, rel=1e-15)
    assert EQ.nu1 == EQ.nu2 == 0.5
    assert EQ.lplus == pytest.approx(complex(0.0, math.sqrt(3) / 2))
    assert EQ.lminus == EQ.lplus.conjugate()
    assert EQ.a1 == EQ.a2 == EQ.a3 == pytest.approx(1.0 / 3.0)
    # (1,2,10): l+ = -1/6 + i sqrt(3)/2
    assert UN.lplus == pytest.approx(complex(-1.0 / 6.0, math.sqrt(3) / 2))


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_masses_must_be_positive_finite(bad):
    with pytest.raises(ValueError):
        derive_mass_params(1.0, bad, 1.0)


@given(mass_triples())
def test_collision_points_are_mass_independent(ms):
    """The three binary collisions sit at the cube roots of unity for
    every choice of masses: xi1 = 0 always maps to w = 1, and the
    configurations with body 3 on top of body 1 or 2 map to the other
    two roots."""
    mp = derive_mass_params(*ms)
    # r12 = 0
    p = jacobi_to_shape(JacobiState(xi1=0j, xi2=1.0 + 0.5j), mp)
    assert (p.x, p.y) == (1.0, 0.0)
    # r13 = 0: q3 = q1, i.e. xi2 = -nu2 xi1
    lam = cmath.exp(2j * math.pi / 3)
    p = jacobi_to_shape(JacobiState(xi1=1.0 + 0j, xi2=-mp.nu2), mp)
    assert abs(p.w - lam) < 1e-12
    # r23 = 0: q3 = q2, xi2 = nu1 xi1
    p = jacobi_to_shape(JacobiState(xi1=1.0 + 0j, xi2=mp.nu1), mp)
    assert abs(p.w - lam.conjugate()) < 1e-12


@given(disk_points(), st.floats(0.1, 10.0), mass_triples())
@settings(max_examples=200)
def test_chart_round_trip(pt, r, ms):
    mp = derive_mass_params(*ms)
    p = ShapePoint(x=pt[0], y=pt[1], r=r)
    back = jacobi_to_shape(shape_to_jacobi(p, mp), mp)
    assert back.x == pytest.approx(p.x, abs=1e-9)
    assert back.y == pytest.approx(p.y, abs=1e-9)
    assert back.r == pytest.approx(p.r, rel=1e-12)


def test_round_trip_at_the_pair_collision():
    p = ShapePoint(x=1.0, y=0.0, r=2.0)
    st_ = shape_to_jacobi(p, EQ)
    assert st_.xi1 == 0j
    back = jacobi_to_shape(st_, EQ)
    assert (back.x, back.y, back.r) == (1.0, 0.0, pytest.approx(2.0))


def test_triple_collision_and_antipode_are_rejected():
    with pytest.raises(TripleCollisionError):
        jacobi_to_shape(JacobiState(xi1=0j, xi2=0j), EQ)
    # zeta = lminus is the equilateral shape antipodal to the chart origin
    with pytest.raises(ValueError, match="antipode"):
        jacobi_to_shape(JacobiState(xi1=1 + 0j, xi2=EQ.lminus), EQ)


@given(disk_points(), st.floats(0.1, 5.0), mass_triples())
@settings(max_examples=150)
def test_cartesian_reduction_invariants(pt, r, ms):
    """Center of mass at the origin and moment of inertia r^2, for any
    shape, size, and masses."""
    mp = derive_mass_params(*ms)
    state = shape_to_jacobi(ShapePoint(x=pt[0], y=pt[1], r=r), mp)
    q1, q2, q3 = jacobi_to_cartesian(state, mp)
    com = mp.m1 * q1 + mp.m2 * q2 + mp.m3 * q3
    assert abs(com) < 1e-12 * r
    inertia = mp.m1 * abs(q1) ** 2 + mp.m2 * abs(q2) ** 2 + mp.m3 * abs(q3) ** 2
    assert inertia == pytest.approx(r * r, rel=1e-12)
    assert state.size(mp) == pytest.approx(r, rel=1e-14)


def test_cartesian_anchor_in_the_section_gauge():
    # rebuild the oracle's gauge explicitly instead of using shape_to_jacobi
    w0 = complex(0.3, -0.2)
    xi1 = 1.0 - w0
    xi2 = EQ.lplus - EQ.lminus * w0
    nrm = math.sqrt(EQ.mu1 * abs(xi1) ** 2 + EQ.mu2 * abs(xi2) ** 2)
    s = 1.3 / nrm
    state = JacobiState(xi1=xi1 * s, xi2=xi2 * s)
    q1, q2, q3 = jacobi_to_cartesian(state, EQ)
    assert abs(q1 - ANCHOR_Q1) < 1e-14
    assert abs(q2 - ANCHOR_Q2) < 1e-14
    assert abs(q3 - ANCHOR_Q3) < 1e-14
    p = jacobi_to_shape(state, EQ)
    assert (p.x, p.y) == (pytest.approx(0.3, abs=1e-14),
                          pytest.approx(-0.2, abs=1e-14))
    assert p.r == pytest.approx(1.3, rel=1e-14)


def test_momentum_and_kinetic_energy():
    st_ = JacobiState(xi1=1.0 + 0j, xi2=0.5j, xi1dot=0.25j, xi2dot=-0.5 + 0j)
    # omega = mu1 Im(conj(xi1) xi1dot) + mu2 Im(conj(xi2) xi2dot)
    want = EQ.mu1 * 0.25 + EQ.mu2 * (complex(0, -0.5) * complex(-0.5, 0)).imag
    assert angular_momentum(st_, EQ) == pytest.approx(want, rel=1e-15)
    assert kinetic_energy(st_, EQ) == pytest.approx(
        0.5 * (EQ.mu1 * 0.0625 + EQ.mu2 * 0.25), rel=1e-15)
    brake = JacobiState(xi1=1.0 + 2j, xi2=-0.3 + 0.1j)
    assert angular_momentum(brake, EQ) == 0.0
    assert kinetic_energy(brake, EQ) == 0.0


def test_shape_sphere_projection():
    assert shape_to_sphere(0.0, 0.0) == (0.0, 0.0, 1.0)
    sx, sy, sz = shape_to_sphere(1.0, 0.0)
    assert (sx, sy, sz) == (1.0, 0.0, 0.0)
    for x, y in [(0.3, -0.2), (-0.7, 0.6), (2.0, 1.0)]:
        s = shape_to_sphere(x, y)
        assert sum(c * c for c in s) == pytest.approx(1.0, rel=1e-14)
    # collinear circle -> equator
    assert shape_to_sphere(math.cos(1.0), math.sin(1.0))[2] == pytest.approx(0.0, abs=1e-15)


def test_shape_point_height():
    assert ShapePoint(x=0.0, y=0.0, r=1.0).z == 1.0
    assert ShapePoint(x=0.6, y=0.8, r=1.0).z == pytest.approx(0.0)
    assert ShapePoint(x=0.3, y=-0.2, r=1.0).w == complex(0.3, -0.2)


def test_shape_to_jacobi_rejects_bad_size():
    for r in (0.0, -1.0, math.inf):
        with pytest.raises(ValueError):
            shape_to_jacobi(ShapePoint(x=0.1, y=0.1, r=r), EQ)


def test_isosceles_shapes_sit_on_the_y_equals_zero_axis():
    """x-axis of the chart = configurations with r13 = r23 (bodies 1, 2
    symmetric about body 3): built directly from Cartesian positions."""
    for u, yy in [(0.4, 0.9), (1.0, -0.3), (0.2, 0.0)]:
        q1, q2, q3 = complex(-u, 0.0), complex(u, 0.0), complex(0.0, yy)
        com = (q1 + q2 + q3) / 3.0
        st_ = JacobiState(xi1=q2 - q1, xi2=q3 - (q1 + q2) / 2.0)
        assert abs(q3 - com) >= 0.0  # com irrelevant for Jacobi differences
        p = jacobi_to_shape(st_, EQ)
        assert p.y == pytest.approx(0.0, abs=1e-15)
        d13 = abs(q3 - q1)
        d23 = abs(q3 - q2)
        assert d13 == pytest.approx(d23, rel=1e-15)
