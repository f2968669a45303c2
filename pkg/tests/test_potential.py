"""Shape-chart potential data: V, kappa, their derivatives, and the
radial-monotonicity identity."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shapefall.core import ShapePoint, derive_mass_params, shape_to_jacobi, jacobi_to_cartesian
from shapefall.potential import (
    COLLISION_ANGLES,
    chart_terms,
    hill_radius,
    mutual_distances,
    section_inertia,
)

EQ = derive_mass_params(1.0, 1.0, 1.0)
UN = derive_mass_params(1.0, 2.0, 10.0)

# 30-digit quadrature of the chart data at (x, y) = (0.3, -0.2); frozen.
FROZEN = {
    "equal": dict(
        V=3.278921082481417811958197,
        Vx=1.685913762301079909797400,
        Vy=-0.1783858264497825513464457,
        kappa=0.7831466833737959119743128,
        kx=-0.8316601947332345967868808,
        ky=0.5544401298221563978579206,
        phi=0.6223578091727361875959876,
    ),
    "unequal": dict(
        V=52.00124993976932881569201,
        Vx=4.425756596056169375159849,
        Vy=-8.164043450155155396104972,
        kappa=0.4756335998427818452336633,
        kx=-1.061768701046036623644189,
        ky=-0.1061888050352253771843214,
        phi=3.402914561894117116975804,
    ),
}


def disk_points():
    return st.tuples(st.floats(-0.97, 0.97), st.floats(-0.97, 0.97)).filter(
        lambda p: p[0] ** 2 + p[1] ** 2 < 0.95
    )


@pytest.mark.parametrize("mp,key", [(EQ, "equal"), (UN, "unequal")])
def test_chart_terms_frozen_point(mp, key):
    t = chart_terms(0.3, -0.2, mp)
    f = FROZEN[key]
    for name in ("V", "Vx", "Vy", "kappa", "kx", "ky", "phi"):
        assert t[name] == pytest.approx(f[name], rel=1e-12), name


def test_special_values_equal_masses():
    t0 = chart_terms(0.0, 0.0, EQ)
    assert t0["V"] == pytest.approx(3.0, abs=1e-14)
    assert abs(t0["Vx"]) < 1e-14 and abs(t0["Vy"]) < 1e-14
    te = chart_terms(-1.0, 0.0, EQ)
    assert te["V"] == pytest.approx(5.0 / math.sqrt(2.0), abs=1e-13)
    assert te["kappa"] == pytest.approx(0.25, rel=1e-12)


def test_kappa_at_origin():
    # kappa = 3 mu1 mu2 / N^2 and N(0,0) = 1 for equal masses
    t = chart_terms(0.0, 0.0, EQ)
    assert t["N"] == pytest.approx(1.0, rel=1e-13)
    assert t["kappa"] == pytest.approx(3.0 * EQ.mu1 * EQ.mu2, rel=1e-13)


@given(disk_points(), st.tuples(st.floats(0.05, 50.0), st.floats(0.05, 50.0), st.floats(0.05, 50.0)))
@settings(max_examples=200, deadline=None)
def test_radial_identity_everywhere(pt, ms):
    """x Vx + y Vy = phi (1 - x^2 - y^2) with phi >= 0: V increases
    along outward rays from the chart origin inside the disk."""
    mp = derive_mass_params(*ms)
    x, y = pt
    t = chart_terms(x, y, mp)
    lhs = x * t["Vx"] + y * t["Vy"]
    rhs = t["phi"] * (1.0 - x * x - y * y)
    scale = max(1.0, abs(lhs), abs(rhs))
    assert abs(lhs - rhs) <= 1e-9 * scale
    assert t["phi"] >= 0.0


@given(disk_points(), st.floats(0.1, 5.0))
@settings(max_examples=100, deadline=None)
def test_chart_V_matches_cartesian_potential(pt, r):
    """sqrt(r) * U(cartesian config of size r) must equal V(x, y)."""
    x, y = pt
    state = shape_to_jacobi(ShapePoint(x=x, y=y, r=r), EQ)
    q1, q2, q3 = jacobi_to_cartesian(state, EQ)
    u = (1.0 / abs(q1 - q2) + 1.0 / abs(q1 - q3) + 1.0 / abs(q2 - q3))
    assert math.sqrt(r) * u == pytest.approx(chart_terms(x, y, EQ)["V"], rel=1e-11)


def test_finite_differences_match_reported_gradients():
    h = 1e-6
    for mp in (EQ, UN):
        t = chart_terms(0.3, -0.2, mp)
        tp = chart_terms(0.3 + h, -0.2, mp)
        tm = chart_terms(0.3 - h, -0.2, mp)
        assert (tp["V"] - tm["V"]) / (2 * h) == pytest.approx(t["Vx"], rel=1e-8)
        assert (tp["kappa"] - tm["kappa"]) / (2 * h) == pytest.approx(t["kx"], rel=1e-7)
        tp = chart_terms(0.3, -0.2 + h, mp)
        tm = chart_terms(0.3, -0.2 - h, mp)
        assert (tp["V"] - tm["V"]) / (2 * h) == pytest.approx(t["Vy"], rel=1e-8)
        assert (tp["kappa"] - tm["kappa"]) / (2 * h) == pytest.approx(t["ky"], rel=1e-7)


def test_v_blows_up_at_collisions():
    for ang in COLLISION_ANGLES.values():
        near = chart_terms(0.999 * math.cos(ang), 0.999 * math.sin(ang), EQ)
        far = chart_terms(0.5 * math.cos(ang), 0.5 * math.sin(ang), EQ)
        assert near["V"] > 30.0
        assert near["V"] > far["V"]


def test_collision_angles_layout():
    assert COLLISION_ANGLES["12"] == 0.0
    assert COLLISION_ANGLES["13"] == pytest.approx(2 * math.pi / 3)
    assert COLLISION_ANGLES["23"] == pytest.approx(4 * math.pi / 3)


@pytest.mark.parametrize("mp", [EQ, UN])
def test_mutual_distances_are_conformal(mp):
    """Chart distances to the three collision points equal the physical
    mutual distances up to one common factor, so all distance *ratios*
    are faithful."""
    d = np.array(mutual_distances(0.3, -0.2))
    state = shape_to_jacobi(ShapePoint(x=0.3, y=-0.2, r=1.0), mp)
    q1, q2, q3 = jacobi_to_cartesian(state, mp)
    phys = np.array([abs(q1 - q2), abs(q1 - q3), abs(q2 - q3)])
    ratio = d / phys
    assert ratio.max() == pytest.approx(ratio.min(), rel=1e-12)


@given(st.floats(-0.9, 0.9), st.floats(0.05, 0.9))
@settings(max_examples=80)
def test_axis_means_isosceles(x, yy):
    """On y = 0 the two distances to body 3 agree; off axis they don't."""
    _, d13, d23 = mutual_distances(x, 0.0)
    assert d13 == pytest.approx(d23, rel=1e-12)
    _, e13, e23 = mutual_distances(x, yy)
    if abs(yy) > 0.05 and abs(x) < 0.8:
        assert abs(e13 - e23) > 1e-6


def test_hill_radius():
    t = chart_terms(0.3, -0.2, EQ)
    assert hill_radius(0.3, -0.2, EQ, 1.0) == pytest.approx(t["V"], rel=1e-14)
    assert hill_radius(0.3, -0.2, EQ, 2.0) == pytest.approx(t["V"] / 2.0, rel=1e-14)


def test_section_inertia_positive():
    for x, y in [(0.0, 0.0), (0.3, -0.2), (-0.6, 0.1)]:
        n = section_inertia(x, y, EQ)
        assert n > 0.0
    # consistency with the kappa reported by chart_terms
    n = section_inertia(0.3, -0.2, EQ)
    t = chart_terms(0.3, -0.2, EQ)
    assert 3.0 * EQ.mu1 * EQ.mu2 / n**2 == pytest.approx(t["kappa"], rel=1e-12)
