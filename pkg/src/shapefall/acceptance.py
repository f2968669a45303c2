"""End-to-end verification battery.

Each criterion_k() runs one acceptance check and returns a CriterionResult;
run_all() executes the battery and prints one pass/fail line per criterion.
The checks are deterministic (fixed seeds) and self-contained; together
they exercise every module of the package at its stated tolerances.

Criterion 6 carries a known red: the last of the five branch bounds,
v_gamma(0) >= (pi/2 - 1) sqrt(3) ~ 0.9886, does not hold for the branch
actually traced at m3 = 1 (v_gamma(0) = 0.6554, stable under tolerance
halving and consistent with the admissibility sign pattern, which only
needs v_gamma(0) > 0).  It is reported as a failure rather than patched
away; see the bound-by-bound detail in the result.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp

from .core import JacobiState, derive_mass_params, jacobi_to_shape, shape_to_jacobi, ShapePoint
from .dynamics import blowup_rhs_timed, newtonian_field
from .integrate import brake_lift
from .isosceles import (admissibility_threshold, find_periodic_brake,
                        theta_star, trace_branch)
from .jm import (
    DiscretePath,
    homothetic_path,
    jm_action,
    minimize_to_boundary,
    ordering_check,
    path_syzygy_count,
    seifert_scaling_probe,
)
from .potential import chart_terms, mutual_distances
from .restpoints import find_restpoints, linearize, spiraling_test
from .syzygy import idot_monotonicity_probe, image_scan, winding_degree


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    runtime: float
    details: list[str] = dc_field(default_factory=list)

    def line(self) -> str:
        tag = "pass" if self.passed else "FAIL"
        return f"criterion {self.index:2d} [{tag}] {self.name} ({self.runtime:.1f}s)"


def _result(index, name, t0, checks) -> CriterionResult:
    """checks: list of (label, bool)."""
    details = [f"{'ok  ' if ok else 'BAD '} {label}" for label, ok in checks]
    return CriterionResult(index, name, all(ok for _, ok in checks),
                           time.time() - t0, details)


EQUAL = derive_mass_params(1.0, 1.0, 1.0)
UNEQUAL = derive_mass_params(1.0, 2.0, 10.0)


def criterion_1() -> CriterionResult:
    """Potential identities on random disk points."""
    t0 = time.time()
    rng = np.random.default_rng(11)
    checks = []
    for label, mp in (("equal", EQUAL), ("(1,2,10)", UNEQUAL)):
        pts = []
        while len(pts) < 10_000:
            cand = rng.uniform(-1.0, 1.0, (4096, 2))
            rad2 = np.sum(cand * cand, axis=1)
            keep = cand[(rad2 < 0.98) & (rad2 > 1e-6)]
            pts.extend(map(tuple, keep))
        pts = np.array(pts[:10_000])
        t = chart_terms(pts[:, 0], pts[:, 1], mp)
        lhs = pts[:, 0] * t["Vx"] + pts[:, 1] * t["Vy"]
        rhs = t["phi"] * (1.0 - pts[:, 0] ** 2 - pts[:, 1] ** 2)
        rel = np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-30))
        checks.append((f"{label}: x Vx + y Vy = phi (1-x^2-y^2), rel {rel:.2e}",
                       bool(rel < 1e-8)))
        checks.append((f"{label}: phi >= 0 everywhere", bool(np.all(t["phi"] >= 0))))
    V0 = float(chart_terms(0.0, 0.0, EQUAL)["V"])
    V1 = float(chart_terms(-1.0, 0.0, EQUAL)["V"])
    checks.append((f"V(0,0) = 3 (got {V0!r})", abs(V0 - 3.0) < 1e-12))
    checks.append((f"V(-1,0) = 5/sqrt(2) (got {V1!r})",
                   abs(V1 - 5.0 / math.sqrt(2.0)) < 1e-12))
    return _result(1, "potential identities", t0, checks)


def _newtonian_flat_rhs(t, u, mp):
    st = JacobiState(xi1=complex(u[0], u[1]), xi2=complex(u[2], u[3]),
                     xi1dot=complex(u[4], u[5]), xi2dot=complex(u[6], u[7]))
    d = newtonian_field(st, mp)
    return [d.xi1.real, d.xi1.imag, d.xi2.real, d.xi2.imag,
            d.xi1dot.real, d.xi1dot.imag, d.xi2dot.real, d.xi2dot.imag]


def criterion_2() -> CriterionResult:
    """Blow-up flow vs plain Newtonian integration from matched brake starts."""
    t0 = time.time()
    mp, h = EQUAL, 1.0
    rng = np.random.default_rng(7)
    collisions = [(1.0, 0.0), (-0.5, math.sqrt(3) / 2), (-0.5, -math.sqrt(3) / 2)]
    worst = 0.0
    n_done = 0
    while n_done < 20:
        x0, y0 = rng.uniform(-0.8, 0.8, 2)
        rr = math.hypot(x0, y0)
        if rr < 0.05 or rr > 0.8:
            continue
        if any(math.hypot(x0 - cx, y0 - cy) < 0.25 for cx, cy in collisions):
            continue
        n_done += 1
        st = brake_lift(x0, y0, mp, h)

        # reduced, blown-up side: run the 7th (clock) component to t = 1
        y7 = np.array([st.r, st.v, st.x, st.y, st.xp, st.yp, 0.0])
        ev = lambda s, y, *_: y[6] - 1.0
        ev.terminal = True
        ev.direction = 1
        sol = solve_ivp(blowup_rhs_timed, (0.0, 50.0), y7, args=(mp,),
                        rtol=1e-11, atol=1e-13, events=ev, dense_output=False)
        assert sol.status == 1, "clock event not reached"
        rb, xb, yb = sol.y_events[0][0][[0, 2, 3]]

        # unreduced side: same configuration, velocities zero, physical time
        jac = shape_to_jacobi(ShapePoint(x=x0, y=y0, r=st.r), mp)
        u0 = [jac.xi1.real, jac.xi1.imag, jac.xi2.real, jac.xi2.imag,
              0.0, 0.0, 0.0, 0.0]
        soln = solve_ivp(_newtonian_flat_rhs, (0.0, 1.0), u0, args=(mp,),
                         rtol=1e-11, atol=1e-13)
        u = soln.y[:, -1]
        sp = jacobi_to_shape(JacobiState(xi1=complex(u[0], u[1]),
                                         xi2=complex(u[2], u[3])), mp)
        dev = max(abs(sp.r - rb), abs(sp.x - xb), abs(sp.y - yb))
        worst = max(worst, dev)
    checks = [(f"20 matched brake starts, max |(r,x,y)| deviation {worst:.2e} "
               "at t = 1", worst < 1e-6)]
    return _result(2, "reduced vs Newtonian oracle", t0, checks)


def criterion_3() -> CriterionResult:
    """Random brake starts all reach syzygy with monotone z and Idot < 0."""
    t0 = time.time()
    rep = idot_monotonicity_probe(1000, EQUAL, 1.0, seed=23)
    checks = [
        (f"all 1000 starts reach first syzygy ({rep['reached']} reached, "
         f"{len(rep['failures'])} failures)", rep["reached"] == 1000),
        (f"z monotone nonincreasing on every arc "
         f"({len(rep['z_violations'])} violations)", not rep["z_violations"]),
        (f"Idot < 0 after the brake instant (max {rep['max_idot']:.2e}, "
         f"{len(rep['violations'])} violations)", not rep["violations"]),
    ]
    return _result(3, "syzygy existence probe", t0, checks)


def criterion_4() -> CriterionResult:
    """Winding degree one on latitude-0.05 circles."""
    t0 = time.time()
    checks = []
    for label, mp in (("equal", EQUAL), ("(1,2,10)", UNEQUAL)):
        deg = winding_degree(0.05, 24, mp, 1.0)
        checks.append((f"{label}: degree {deg}", deg == 1))
    return _result(4, "syzygy map degree one", t0, checks)


def criterion_5() -> CriterionResult:
    """Restpoint values, stability dimensions, spiraling."""
    t0 = time.time()
    mp = EQUAL
    rps = {(rp.kind, rp.sign): rp for rp in find_restpoints(mp)}
    vplus = rps[("lagrange", 1)].v
    vminus = rps[("lagrange", -1)].v
    checks = [
        (f"Lagrange v+ = sqrt(6) to 1e-10 (got {vplus!r})",
         abs(vplus - math.sqrt(6.0)) < 1e-10),
        (f"Lagrange v- = -sqrt(6) to 1e-10 (got {vminus!r})",
         abs(vminus + math.sqrt(6.0)) < 1e-10),
    ]
    lin_L = linearize(rps[("lagrange", -1)], mp)
    checks.append((f"L- stable/unstable dims ({lin_L.stable_dim},"
                   f"{lin_L.unstable_dim})",
                   (lin_L.stable_dim, lin_L.unstable_dim) == (3, 2)))
    euler_minus = [rp for rp in rps.values()
                   if rp.kind.startswith("euler") and rp.sign < 0]
    dims_ok = True
    for rp in euler_minus:
        lin = linearize(rp, mp)
        dims_ok &= (lin.stable_dim, lin.unstable_dim) == (2, 3)
    checks.append((f"all E- stable/unstable dims (2,3) "
                   f"({len(euler_minus)} points)", dims_ok))
    spin = spiraling_test(mp)
    euler_keys = [k for k in spin if k.startswith("euler")]
    checks.append((f"all three E+ spiraling ({ {k: spin[k] for k in euler_keys} })",
                   len(euler_keys) == 3 and all(spin[k] is True for k in euler_keys)))
    return _result(5, "triple-collision restpoints", t0, checks)


def criterion_6() -> CriterionResult:
    """The five hand bounds on the m3 = 1 collision-manifold branches.

    The fifth bound is a known red; see the module docstring.
    """
    t0 = time.time()
    g = trace_branch("gamma", 1.0, rtol=1e-10, atol=1e-12)
    gp = trace_branch("gamma_prime", 1.0, rtol=1e-10, atol=1e-12)
    v_34 = g.v_at[-3.0 * math.pi / 4.0]
    v_12 = g.v_at[-math.pi / 2.0]
    v_0 = g.v_at[0.0]
    vp_0 = gp.v_at[0.0]
    inc = v_12 - v_34
    bound5 = (math.pi / 2.0 - 1.0) * math.sqrt(3.0)
    checks = [
        (f"v_gamma'(0) <= -1.3 (got {vp_0:.6f})", vp_0 <= -1.3),
        (f"v_gamma(-3pi/4) <= -1.6 (got {v_34:.6f})", v_34 <= -1.6),
        (f"increment on [-3pi/4, -pi/2] <= 1.56 (got {inc:.6f})", inc <= 1.56),
        (f"v_gamma(-pi/2) in [-sqrt(3), 0) (got {v_12:.6f})",
         -math.sqrt(3.0) <= v_12 < 0.0),
        (f"v_gamma(0) >= (pi/2-1) sqrt(3) = {bound5:.6f} (got {v_0:.6f})",
         v_0 >= bound5),
    ]
    return _result(6, "isosceles branch bounds", t0, checks)


def criterion_7() -> CriterionResult:
    """Admissibility threshold in m3."""
    t0 = time.time()
    thr = admissibility_threshold(2.0, 3.0, xtol=1e-3)
    checks = [(f"upper admissibility threshold {thr:.6f} = 2.662 +- 0.01",
               abs(thr - 2.662) <= 0.01)]
    return _result(7, "admissibility threshold", t0, checks)


def criterion_8() -> CriterionResult:
    """Symmetric periodic brake orbit at m3 = 1."""
    t0 = time.time()
    orb = find_periodic_brake(1.0)
    _, y_end = orb.quarter.events["end"][0]
    v_end = abs(float(y_end[1]))
    ts = theta_star(1.0)
    checks = [
        (f"brake angle {orb.theta0:.6f} in (theta* - pi, -pi/2) "
         f"= ({ts - math.pi:.6f}, {-math.pi / 2:.6f})",
         ts - math.pi < orb.theta0 < -math.pi / 2.0),
        (f"|v| at the second syzygy theta = 0: {v_end:.2e} < 1e-10",
         v_end < 1e-10),
        (f"full-period closure error {orb.closure_error:.2e} < 1e-6",
         orb.closure_error < 1e-6),
        (f"v at first syzygy (theta = -pi/2) negative (got {orb.v_syzygy:.6f})",
         orb.v_syzygy < 0.0),
    ]
    return _result(8, "periodic brake orbit", t0, checks)


def criterion_9() -> CriterionResult:
    """Homothetic action value, boundary-path zero, Seifert exponent."""
    t0 = time.time()
    mp, h = EQUAL, 1.0
    target = 1.5 * math.pi
    A = {N: jm_action(homothetic_path(mp, h, N), mp, h) for N in (2048, 4096)}
    rich = A[4096] + (A[4096] - A[2048]) / 3.0   # second-order Richardson
    checks = [
        (f"homothetic action at N=4096 Richardson: {rich!r} "
         f"(err {rich - target:+.2e})", abs(rich - target) < 1e-4),
    ]

    # polylines on the zero-velocity boundary must cost exactly nothing
    def boundary_path(shapes):
        V = chart_terms(shapes[:, 0], shapes[:, 1], mp)["V"]
        return DiscretePath(np.column_stack([V / h, shapes]), end_mode="fixed")

    th = np.linspace(0.0, 0.5 * math.pi, 41)
    quarter = boundary_path(np.column_stack([0.3 * np.cos(th), 0.3 * np.sin(th)]))
    th = np.linspace(0.0, 2.0 * math.pi, 41)
    full = boundary_path(np.column_stack([0.3 * np.cos(th), 0.3 * np.sin(th)]))
    tt = np.linspace(0.0, 1.0, 21)
    arc = boundary_path(np.column_stack([0.2 + 0.1 * tt, 0.1 - 0.05 * tt]))
    xs = np.linspace(0.0, 0.5, 31)
    slide = boundary_path(np.column_stack([xs, np.zeros_like(xs)]))
    zeros = [jm_action(p, mp, h) for p in (quarter, full, arc, slide)]
    checks.append((f"four boundary polylines cost exactly 0.0 (got {zeros})",
                   all(z == 0.0 for z in zeros)))

    probe = seifert_scaling_probe(0.2, 0.1, mp, h)
    checks.append((f"Seifert exponent {probe['exponent_small']:.6f} = 1.5 +- 0.01",
                   abs(probe["exponent_small"] - 1.5) <= 0.01))
    checks.append((f"physical-time ratio {probe['ratio_small']:.6f} = 8 +- 0.1",
                   abs(probe["ratio_small"] - 8.0) <= 0.1))
    return _result(9, "action values and scaling", t0, checks)


def criterion_10() -> CriterionResult:
    """Minimizer structure from collision and collinear starts.

    Deterministic template starts (n_starts=1): the behaviors under test
    are symmetry confinements of the minimizer, and jittered multistarts
    only add reparameterization noise along the near-tied valley (the
    multistart machinery is exercised separately by the fixed-endpoint
    tests).
    """
    t0 = time.time()
    mp, h = EQUAL, 1.0
    checks = []

    res_b = minimize_to_boundary((1.0, 1.0, 0.0), 128, mp, h,
                                 end_guess=(0.6, 0.0), n_starts=1, seed=0,
                                 with_reconstruction=False)
    nb = res_b.path.nodes
    _, d13, d23 = mutual_distances(nb[:, 1], nb[:, 2])
    conf = float(np.max(np.abs(d13 - d23)))
    checks.append((f"binary-collision start, m1=m2: max|rho13-rho23| "
                   f"= {conf:.2e} < 1e-3", conf < 1e-3))

    res_t = minimize_to_boundary((0.0, 0.0, 0.0), 128, mp, h,
                                 n_starts=1, seed=0,
                                 with_reconstruction=False)
    nt = res_t.path.nodes
    dev = float(np.max(np.hypot(nt[:, 1], nt[:, 2])))
    checks.append((f"triple-collision limit: shape stays within "
                   f"{dev:.2e} < 1e-3 of (0,0)", dev < 1e-3))

    ang = math.pi / 6.0
    xc, yc = math.cos(ang), math.sin(ang)
    Vc = float(chart_terms(xc, yc, mp)["V"])
    res_c = minimize_to_boundary((0.5 * Vc / h, xc, yc), 128, mp, h,
                                 n_starts=1, seed=0,
                                 with_reconstruction=False)
    n_syz = path_syzygy_count(res_c.path)
    checks.append((f"collinear start: {n_syz} collinear node(s) -- the start "
                   "only, no interior syzygy", n_syz == 1))
    oc = ordering_check(res_c.path, mp)
    checks.append(("collinear start: mutual-distance ordering preserved "
                   f"(first violation node {oc['first_violation_node']})",
                   oc["preserved"]))
    return _result(10, "minimizer structure", t0, checks)


def criterion_11() -> CriterionResult:
    """Qualitative containments of the syzygy-map image (set membership).

    The exact image boundary is explicitly out of scope; the scan must
    reproduce: crossings near all three binary-collision rays, and small
    image loops around the origin for high-latitude (small-radius) circles.
    """
    t0 = time.time()
    recs = image_scan(EQUAL, 1.0, 20, 36)
    ok = [r for r in recs if not any(f.startswith("failed") for f in r.flags)]
    checks = [(f"{len(ok)}/720 grid points produced a syzygy", len(ok) == 720)]

    rays = {0.0: [], 2.0 * math.pi / 3.0: [], -2.0 * math.pi / 3.0: []}
    for r in ok:
        for a in rays:
            d = abs((r.angle - a + math.pi) % (2.0 * math.pi) - math.pi)
            rays[a].append(d)
    near = {a: min(d) for a, d in rays.items()}
    checks.append((f"image approaches all three collision rays "
                   f"(nearest angular distances "
                   f"{[round(v, 3) for v in near.values()]})",
                   all(v < 0.15 for v in near.values())))

    # rings are emitted latitude-major: ring i = records [36 i, 36 (i+1))
    good = lambda r: not any(f.startswith("failed") for f in r.flags)
    inner = [r for r in recs[:36] if good(r)]     # radius 1/21, near the pole
    outer = [r for r in recs[-36:] if good(r)]    # radius 20/21, near collinear
    inner_r = max(r.r for r in inner)
    outer_r = float(np.median([r.r for r in outer]))
    span = float(np.ptp(np.unwrap([r.angle for r in inner])))
    checks.append((f"innermost ring maps to small image radii (max "
                   f"{inner_r:.3f}) vs the outermost ring's (median "
                   f"{outer_r:.3f})", inner_r < 0.5 * outer_r))
    checks.append((f"innermost ring image loops around the origin "
                   f"(angle span {span:.2f} rad)", span > 5.5))
    return _result(11, "syzygy image containments", t0, checks)


ALL_CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4,
                criterion_5, criterion_6, criterion_7, criterion_8,
                criterion_9, criterion_10, criterion_11]


def run_all(verbose: bool = True) -> list[CriterionResult]:
    results = []
    for fn in ALL_CRITERIA:
        res = fn()
        results.append(res)
        if verbose:
            print(res.line())
            if not res.passed:
                for d in res.details:
                    print(f"    {d}")
    if verbose:
        n_pass = sum(r.passed for r in results)
        print(f"{n_pass}/{len(results)} criteria pass")
    return results


if __name__ == "__main__":
    import sys
    rs = run_all()
    sys.exit(0 if all(r.passed for r in rs) else 4)
