"""Discrete action of the energy-h variational principle and its minimizers.

A path in the reduced configuration space (r, x, y) is scored by

    A = sum over segments of sqrt(U_mid - h) * segment length

with U = V/r evaluated at the segment midpoint and lengths measured in the
kinetic metric  ds^2 = dr^2 + kappa r^2 (dx^2 + dy^2); segments whose
midpoint falls outside the region U > h contribute zero (clamp).  Paths on
the zero-velocity boundary r = V/h therefore score zero, and minimizers
between interior points reparameterize to genuine solutions of energy -h
via  dt = ds / sqrt(2 (U - h)).

Two minimization problems are supported: both endpoints fixed, and free
endpoint constrained to the boundary r = V/h (eliminated analytically, so
the optimizer sees only unconstrained variables).  A scaling probe for the
action of short brake arcs (the delta^(3/2) law) completes the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq, minimize as _scipy_minimize

from .core import MassParams, ShapePoint
from .dynamics import blowup_rhs, blowup_rhs_timed
from .integrate import EventSpec, brake_lift, integrate
from .potential import chart_scalar, chart_terms, mutual_distances


def _make_clock_event(t_end):
    def clock(s, y, *_):
        return y[6] - t_end
    clock.terminal = True
    clock.direction = 1
    return clock

__all__ = [
    "DiscretePath",
    "JMResult",
    "jm_action",
    "homothetic_path",
    "minimize_to_boundary",
    "minimize_fixed",
    "reconstruct",
    "path_syzygy_count",
    "ordering_check",
    "seifert_scaling_probe",
    "brake_arc_minimality",
    "collision_start_study",
]

_CLAMP = 1e-14  # U - h below this counts as "on the boundary" for gradients


@dataclass
class DiscretePath:
    """Polygonal path of nodes (r_i, x_i, y_i), i = 0..N.

    end_mode: "fixed" (both endpoints fixed data) or "boundary" (last node
    constrained to the zero-velocity surface r = V/h).
    grading: free-text descriptor of how the mesh was spaced.
    """

    nodes: np.ndarray          # (N+1, 3) columns r, x, y
    end_mode: str = "fixed"
    grading: str = "uniform"

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 3:
            raise ValueError("nodes must be an (N+1, 3) array of (r, x, y)")
        if self.nodes.shape[0] < 2:
            raise ValueError("a path needs at least two nodes")

    @property
    def n_segments(self) -> int:
        return self.nodes.shape[0] - 1

    def validate(self, mp: MassParams, h: float, slack: float = 1e-12) -> None:
        """Domain check: every node inside the closed Hill region."""
        r, x, y = self.nodes[:, 0], self.nodes[:, 1], self.nodes[:, 2]
        if np.any(r < -slack):
            raise ValueError("node with negative size r")
        terms = chart_terms(x, y, mp)
        with np.errstate(invalid="ignore"):
            bad = r > terms["V"] / h + slack   # V = inf at collision shapes
        if np.any(np.nan_to_num(bad)):
            i = int(np.argmax(np.nan_to_num(bad)))
            raise ValueError(
                f"node {i} outside the Hill region: r = {r[i]}, "
                f"V/h = {terms['V'][i] / h}")
        d = np.diff(self.nodes, axis=0)
        if np.any(np.all(d == 0.0, axis=1)):
            raise ValueError("consecutive nodes coincide")


def _action_and_grad(nodes: np.ndarray, mp: MassParams, h: float,
                     want_grad: bool = True):
    """Midpoint-rule action and its exact gradient in all node coordinates.

    The gradient of sqrt(U - h) is cut to zero on clamped segments (the
    objective is only one-sidedly differentiable on the boundary; the
    clamp's subgradient 0 keeps descent methods stable there).
    """
    r0, r1 = nodes[:-1, 0], nodes[1:, 0]
    x0, x1 = nodes[:-1, 1], nodes[1:, 1]
    y0, y1 = nodes[:-1, 2], nodes[1:, 2]
    rm, xm, ym = 0.5 * (r0 + r1), 0.5 * (x0 + x1), 0.5 * (y0 + y1)
    dr, dx, dy = r1 - r0, x1 - x0, y1 - y0

    t = chart_terms(xm, ym, mp)
    V, Vx, Vy = t["V"], t["Vx"], t["Vy"]
    kap, kx, ky = t["kappa"], t["kx"], t["ky"]

    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(rm > 0, V / rm - h, np.inf)
    # rm = 0 forces a zero-length segment (both nodes at the collision),
    # which contributes nothing; exclude it from the live set so the
    # inf * 0 product never forms.
    live = (g > _CLAMP) & (rm > 0)
    f = np.sqrt(np.where(live, g, 0.0))

    dsig2 = dx * dx + dy * dy
    ell2 = dr * dr + kap * rm * rm * dsig2
    ell = np.sqrt(ell2)
    A = float(np.sum(f * ell))
    if not want_grad:
        return A, None

    grad = np.zeros_like(nodes)
    ok = live & (ell > 0) & np.isfinite(g)
    inv_f = np.where(ok, 1.0 / np.maximum(f, 1e-300), 0.0)
    inv_l = np.where(ell > 0, 1.0 / np.maximum(ell, 1e-300), 0.0)

    # d(f)/d(mid coords); factor 1/2 each endpoint applied at scatter time
    with np.errstate(divide="ignore", invalid="ignore"):
        df_drm = np.where(ok, -V / (rm * rm) * 0.5 * inv_f, 0.0)
        df_dxm = np.where(ok, Vx / rm * 0.5 * inv_f, 0.0)
        df_dym = np.where(ok, Vy / rm * 0.5 * inv_f, 0.0)

    # d(ell)/d(mid coords) and d(ell)/d(differences)
    dl_drm = np.where(ok, kap * rm * dsig2 * inv_l, 0.0)
    dl_dxm = np.where(ok, 0.5 * kx * rm * rm * dsig2 * inv_l, 0.0)
    dl_dym = np.where(ok, 0.5 * ky * rm * rm * dsig2 * inv_l, 0.0)
    dl_ddr = np.where(ok, dr * inv_l, 0.0)
    dl_ddx = np.where(ok, kap * rm * rm * dx * inv_l, 0.0)
    dl_ddy = np.where(ok, kap * rm * rm * dy * inv_l, 0.0)

    sr = f * dl_drm + ell * df_drm      # dA/d(rm)
    sx = f * dl_dxm + ell * df_dxm
    sy = f * dl_dym + ell * df_dym
    ar = f * dl_ddr                     # dA/d(dr)
    ax = f * dl_ddx
    ay = f * dl_ddy

    grad[:-1, 0] += 0.5 * sr - ar
    grad[1:, 0] += 0.5 * sr + ar
    grad[:-1, 1] += 0.5 * sx - ax
    grad[1:, 1] += 0.5 * sx + ax
    grad[:-1, 2] += 0.5 * sy - ay
    grad[1:, 2] += 0.5 * sy + ay
    return A, grad


def jm_action(path: DiscretePath, mp: MassParams, h: float) -> float:
    """Action of a path (validated against the Hill region first)."""
    path.validate(mp, h)
    A, _ = _action_and_grad(path.nodes, mp, h, want_grad=False)
    return A


def homothetic_path(mp: MassParams, h: float, N: int, *,
                    shape: tuple[float, float] = (0.0, 0.0)) -> DiscretePath:
    """Radial path over a fixed shape from r = 0 to the Hill boundary
    r = V/h.  The integrand sqrt(V/r - h) has square-root-type trouble at
    both ends (blowing up at r = 0, vanishing at the turning point
    r = V/h), so node sizes follow the doubly graded map
    tau(u) = 6u^5 - 5u^6 -- quintic clustering at the collision end,
    quadratic at the boundary -- which restores clean second-order
    convergence of the midpoint rule (quartic still leaves an N^-2 log N
    tail from the r^-1/2 blow-up)."""
    x0, y0 = shape
    V = float(chart_terms(x0, y0, mp)["V"])
    u = np.arange(N + 1, dtype=float) / N
    tau = 6.0 * u ** 5 - 5.0 * u ** 6
    nodes = np.column_stack([V / h * tau,
                             np.full(N + 1, x0), np.full(N + 1, y0)])
    return DiscretePath(nodes, end_mode="boundary",
                        grading="double-graded 6u^5-5u^6")


# ------------------------------------------------------------ minimization


@dataclass
class JMResult:
    path: DiscretePath
    action: float
    grad_norm: float               # in the free variables at termination
    multipliers: np.ndarray        # per-node boundary multipliers (KKT)
    converged: bool
    reconstruction: dict | None    # see reconstruct()
    local_minima: list             # (action, end shape, nodes) over starts
    flags: list[str] = dc_field(default_factory=list)
    # first node on the zero-velocity boundary (the transversal landing
    # point when the discrete tail degenerates into a free boundary run;
    # the action is exactly zero along the boundary, so everything past
    # this node is gauge).  -1 when the path stays strictly interior.
    first_contact: int = -1


def _pack_free(nodes, end_mode):
    """Optimization variables: interior nodes; plus (x_N, y_N) if the end
    is boundary-constrained (its r_N = V/h is eliminated)."""
    z = [nodes[1:-1].ravel()]
    if end_mode == "boundary":
        z.append(nodes[-1, 1:])
    return np.concatenate(z) if z else np.zeros(0)


def _unpack_free(z, nodes_template, end_mode, mp, h):
    nodes = nodes_template.copy()
    ni = nodes.shape[0] - 2
    nodes[1:-1] = z[: 3 * ni].reshape(ni, 3)
    if end_mode == "boundary":
        xe, ye = z[3 * ni], z[3 * ni + 1]
        Ve = float(chart_terms(xe, ye, mp)["V"])
        nodes[-1] = (Ve / h, xe, ye)
    return nodes


_PEN = 10.0  # one-sided weight keeping iterates inside the closed Hill region


def _segment_fractions(nodes):
    """Coordinate-length fraction of each segment (parameterization of the
    polyline, nothing metric)."""
    e = np.linalg.norm(np.diff(nodes, axis=0), axis=1)
    tot = float(np.sum(e))
    return e / tot if tot > 0 else np.full(e.shape, 1.0 / len(e))


_PIN = 1.0  # weight of the mesh-fraction pin (per-segment, normalized by N)


def _free_objective(z, template, end_mode, mp, h, frac=None):
    """Action plus regularizations of the discrete problem.

    One-sided quadratic penalties that vanish identically on admissible
    paths, so interior minimizers are untouched:

    * nodes with r > V/h (beyond the Hill boundary the clamped action is
      flat in value and gradient, so without a restoring force nodes can
      wander outside and stall there);
    * segment midpoints with U - h < 0 (a zig-zag polyline can otherwise
      thread every chord midpoint through the forbidden region, making
      whole stretches of the path spuriously free -- legitimate
      minimizers keep U > h strictly on the interior and meet the
      boundary only at the constrained end node).

    And a parameterization pin: node placement along a fixed curve is an
    action-flat direction (up to mesh resolution), so the node-position
    minimum is attained by distorting the mesh, not the curve -- worst at
    an integrable singularity of the integrand, where one coarse head
    segment undercounts the quadrature by a finite amount however large N
    is.  Pinning each segment's share of the polyline's coordinate length
    to the graded template's share (relative deviations, weight _PIN/N)
    removes the flat directions without any first-order bias of the curve
    geometry."""
    nodes = _unpack_free(z, template, end_mode, mp, h)
    A, G = _action_and_grad(nodes, mp, h)

    if frac is not None:
        diffs = np.diff(nodes, axis=0)
        e = np.linalg.norm(diffs, axis=1)
        E = float(np.sum(e))
        n_seg = e.shape[0]
        w = _PIN / n_seg
        if E > 0:
            s = e / (frac * E) - 1.0
            A = A + w * float(np.sum(s * s))
            # dP/de_j = 2w [ s_j/(frac_j E) - (sum_i s_i e_i/frac_i)/E^2 ]
            coupling = float(np.sum(s * e / frac)) / (E * E)
            dPde = 2.0 * w * (s / (frac * E) - coupling)
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(e[:, None] > 0, diffs / np.maximum(
                    e, 1e-300)[:, None], 0.0)
            contrib = dPde[:, None] * unit
            G[:-1] -= contrib
            G[1:] += contrib

    t = chart_terms(nodes[1:-1, 1], nodes[1:-1, 2], mp)
    with np.errstate(invalid="ignore"):
        cap = np.nan_to_num(t["V"], nan=np.inf, posinf=np.inf) / h
    over = np.maximum(nodes[1:-1, 0] - cap, 0.0)
    A = A + _PEN * float(np.sum(over ** 2))
    G[1:-1, 0] += 2.0 * _PEN * over
    out = over > 0
    if np.any(out):
        G[1:-1, 1] -= np.where(out, 2.0 * _PEN * over * t["Vx"] / h, 0.0)
        G[1:-1, 2] -= np.where(out, 2.0 * _PEN * over * t["Vy"] / h, 0.0)

    rm = 0.5 * (nodes[:-1, 0] + nodes[1:, 0])
    xm = 0.5 * (nodes[:-1, 1] + nodes[1:, 1])
    ym = 0.5 * (nodes[:-1, 2] + nodes[1:, 2])
    tm = chart_terms(xm, ym, mp)
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(rm > 0, tm["V"] / rm - h, np.inf)
    deficit = np.maximum(np.where(np.isfinite(g), -g, -1.0), 0.0)
    exited = deficit > 0
    if np.any(exited):
        A = A + _PEN * float(np.sum(deficit ** 2))
        with np.errstate(invalid="ignore"):
            sr = np.where(exited, 2.0 * _PEN * deficit * tm["V"] / rm ** 2, 0.0)
            sx = np.where(exited, -2.0 * _PEN * deficit * tm["Vx"] / rm, 0.0)
            sy = np.where(exited, -2.0 * _PEN * deficit * tm["Vy"] / rm, 0.0)
        G[:-1, 0] += 0.5 * sr
        G[1:, 0] += 0.5 * sr
        G[:-1, 1] += 0.5 * sx
        G[1:, 1] += 0.5 * sx
        G[:-1, 2] += 0.5 * sy
        G[1:, 2] += 0.5 * sy

    ni = nodes.shape[0] - 2
    gz = np.empty_like(z)
    gz[: 3 * ni] = G[1:-1].ravel()
    if end_mode == "boundary":
        xe, ye = nodes[-1, 1], nodes[-1, 2]
        te = chart_terms(xe, ye, mp)
        # chain rule through the eliminated r_N = V(x_N, y_N)/h
        gz[3 * ni] = G[-1, 1] + G[-1, 0] * float(te["Vx"]) / h
        gz[3 * ni + 1] = G[-1, 2] + G[-1, 0] * float(te["Vy"]) / h
    return A, gz


def _descent(z0, fun, *, gtol_switch=1e-3, gtol=1e-8, max_gd=400,
             max_qn=6000, lower=None, upper_fn=None):
    """Backtracking gradient descent, upgraded to a quasi-Newton (L-BFGS-B)
    polish once the gradient norm falls below gtol_switch (or the descent
    stalls).  lower: optional per-variable lower bounds (r >= 0 -- without
    them a node can dive to negative size, which voids its two segments'
    contributions and fakes a shortcut).  upper_fn: optional state-dependent
    upper bounds (r <= V(x, y)/h -- the clamp zeroes any segment whose
    midpoint leaves the Hill region, so without a hard cap the cheapest
    "path" parks nodes outside the boundary where the action cannot see
    them).  The caps move with the shape variables, so they are refreshed
    at every restart and re-imposed by clipping afterwards."""

    lo = np.full(z0.shape, -np.inf) if lower is None else lower

    def project(zz):
        zz = np.maximum(zz, lo)
        if upper_fn is not None:
            zz = np.minimum(zz, upper_fn(zz))
        return zz

    def proj_gn(zz, gg):
        """KKT measure: gradient components pointing out of the feasible
        box at an active bound do not count against stationarity."""
        gp = gg.copy()
        gp[(zz <= lo) & (gg > 0.0)] = 0.0
        if upper_fn is not None:
            gp[(zz >= upper_fn(zz)) & (gg < 0.0)] = 0.0
        return float(np.linalg.norm(gp))

    def gd_phase(z, A, g, iters):
        step = 1.0
        for _ in range(iters):
            gn = proj_gn(z, g)
            if gn < gtol_switch or not np.isfinite(A):
                break
            step = min(step * 2.0, 1.0)
            while step > 1e-14:
                zn = project(z - step * g)
                An, gnew = fun(zn)
                if np.isfinite(An) and An < A - 1e-6 * step * gn * gn:
                    z, A, g = zn, An, gnew
                    break
                step *= 0.5
            else:
                break
        return z, A, g

    z = project(z0.copy())
    A, g = fun(z)
    z, A, g = gd_phase(z, A, g, max_gd)
    best = (proj_gn(z, g), A, z)
    zf, prev = z, math.inf
    for cycle in range(5):
        if lower is None and upper_fn is None:
            bounds = None
        else:
            hi = np.full(zf.shape, np.inf) if upper_fn is None else upper_fn(zf)
            bounds = [(None if not np.isfinite(a) else a,
                       None if not np.isfinite(b) else b)
                      for a, b in zip(lo, hi)]
        res = _scipy_minimize(fun, zf, jac=True, method="L-BFGS-B",
                              bounds=bounds,
                              options={"maxiter": max_qn, "maxfun": 2 * max_qn,
                                       "ftol": 0.0, "gtol": gtol * 0.1,
                                       "maxcor": 25})
        zf = project(res.x)
        Af, gf = fun(zf)
        gnf = proj_gn(zf, gf)
        if Af < best[1] - 1e-15 or (abs(Af - best[1]) <= 1e-15
                                    and gnf < best[0]):
            best = (gnf, Af, zf)
        if gnf < gtol:
            break
        if gnf > 0.7 * prev and cycle < 4:
            # quasi-Newton stalled (kinked objective: clamp switches, active
            # caps); a projected-gradient stretch moves past the kink
            zf, Af, gf = gd_phase(zf, Af, gf, 200)
            gnf = proj_gn(zf, gf)
            if Af < best[1] - 1e-15 or (abs(Af - best[1]) <= 1e-15
                                        and gnf < best[0]):
                best = (gnf, Af, zf)
            if gnf < gtol:
                break
        prev = gnf
    gn, A, z = best
    return z, A, gn


def _initial_nodes(q0, q_end, N, *, eps_offset=1e-4, offset_direction=None):
    """Straight-line initial polyline, graded: square-root clustering at
    the boundary end always, and quintic clustering at the start too when
    the start is singular (r = 0 or a collision shape, where the integrand
    blows up like an inverse square root).  A singular start additionally
    gets its first interior node at a graded offset eps along the initial
    direction (the straight-line one, or offset_direction when supplied)."""
    q0 = np.asarray(q0, dtype=float)
    q_end = np.asarray(q_end, dtype=float)
    u = np.linspace(0.0, 1.0, N + 1)
    d12, d13, d23 = mutual_distances(q0[1], q0[2])
    singular = q0[0] == 0.0 or min(d12, d13, d23) == 0.0
    if singular:
        tau = 6.0 * u ** 5 - 5.0 * u ** 6   # quintic head, quadratic tail
    else:
        tau = 1.0 - (1.0 - u) ** 2          # nodes crowd toward the far end
    nodes = q0[None, :] + tau[:, None] * (q_end - q0)[None, :]
    if singular:
        # shift the grading so it starts at the regularizing offset eps
        # (monotone mesh: the quintic head would otherwise place the first
        # couple of nodes far closer to the singularity than eps)
        length = float(np.linalg.norm(q_end - q0))
        te = min(eps_offset / max(length, 1e-300), 0.5)
        tau_s = te + (1.0 - te) * tau[1:-1]
        nodes[1:-1] = q0[None, :] + tau_s[:, None] * (q_end - q0)[None, :]
        if offset_direction is not None:
            direction = np.asarray(offset_direction, dtype=float)
            nrm = np.linalg.norm(direction)
            if nrm > 0:
                nodes[1] = q0 + (eps_offset / nrm) * direction
    return nodes


def _clip_into_hill(nodes, mp, h, margin=0.0):
    V = chart_terms(nodes[:, 1], nodes[:, 2], mp)["V"]
    with np.errstate(invalid="ignore"):
        cap = np.where(np.isfinite(V), V / h - margin, np.inf)
    nodes[:, 0] = np.clip(nodes[:, 0], 0.0, np.maximum(cap, 0.0))
    return nodes


def _mesh_scales(template, end_mode):
    """Per-packed-variable scales: each node's coordinates move in units of
    its local template mesh size.  Without this the graded meshes are
    cripplingly ill-conditioned -- a head segment of relative size 1e-5
    turns the parameterization pin (and the near-singular integrand) into
    gradients four orders of magnitude steeper than the tail's."""
    e = np.linalg.norm(np.diff(template, axis=0), axis=1)
    e = np.maximum(e, 1e-8 * max(float(np.sum(e)), 1e-300))
    node_scale = np.empty(template.shape[0])
    node_scale[0] = e[0]
    node_scale[-1] = e[-1]
    node_scale[1:-1] = 0.5 * (e[:-1] + e[1:])
    S = [np.repeat(node_scale[1:-1], 3)]
    if end_mode == "boundary":
        S.append([node_scale[-1], node_scale[-1]])
    return np.concatenate(S)


def _multistart(template, end_mode, mp, h, n_starts, seed, gtol):
    rng = np.random.default_rng(seed)
    N = template.shape[0] - 1
    results = []
    envelope = np.sin(math.pi * np.arange(N + 1) / N)[:, None]
    scale = max(1.0, float(np.max(np.abs(template[:, 0]))))
    frac = _segment_fractions(template)
    S = _mesh_scales(template, end_mode)
    for k in range(n_starts):
        nodes = template.copy()
        if k > 0:
            jitter = rng.normal(0.0, 0.05, size=nodes.shape) * envelope
            jitter[:, 0] *= scale
            # respect the graded head: jitter in units of the local mesh
            loc = np.concatenate([[1.0], np.minimum(
                S[0: 3 * (N - 1): 3] / max(float(S.max()), 1e-300), 1.0), [1.0]])
            jitter *= loc[:, None]
            nodes = _clip_into_hill(nodes + jitter, mp, h)
        z0 = _pack_free(nodes, end_mode) / S
        lower = np.full(z0.shape, -np.inf)
        lower[: 3 * (N - 1): 3] = 0.0        # node sizes r >= 0
        fun = lambda z: _scaled_objective(z, S, nodes, end_mode, mp, h, frac)
        caps = lambda z: _caps_scaled(z, S, nodes, end_mode, mp, h)
        zf, Af, gnf = _descent(z0, fun, gtol=gtol, lower=lower, upper_fn=caps)
        final = _unpack_free(zf * S, nodes, end_mode, mp, h)
        results.append((Af, gnf, final))
    results.sort(key=lambda t: t[0])
    return results


def _scaled_objective(z, S, template, end_mode, mp, h, frac):
    A, g = _free_objective(z * S, template, end_mode, mp, h, frac)
    return A, g * S


def _caps_scaled(z, S, template, end_mode, mp, h):
    """Upper bounds (in the preconditioned variables) keeping every interior
    node inside the closed Hill region: r_i <= V(x_i, y_i)/h."""
    nodes = _unpack_free(z * S, template, end_mode, mp, h)
    V = chart_terms(nodes[1:-1, 1], nodes[1:-1, 2], mp)["V"]
    with np.errstate(invalid="ignore"):
        cap = np.where(np.isfinite(V), V / h, np.inf)
    hi = np.full(z.shape, np.inf)
    n_int = nodes.shape[0] - 2
    hi[: 3 * n_int: 3] = cap / S[: 3 * n_int: 3]
    return hi


def _dedupe(results):
    out = []
    for A, gn, nodes in results:
        end = nodes[-1]
        if any(abs(A - A2) < 1e-6 and np.linalg.norm(end - n2[-1]) < 1e-3
               for A2, _, n2 in out):
            continue
        out.append((A, gn, nodes))
    return out


def _as_q(q) -> np.ndarray:
    """Accept a ShapePoint or an (r, x, y) triple."""
    if isinstance(q, ShapePoint):
        return np.array([q.r, q.x, q.y], dtype=float)
    q = np.asarray(q, dtype=float)
    if q.shape != (3,):
        raise ValueError("expected ShapePoint or (r, x, y) triple")
    return q


def _finish(results, end_mode, mp, h, gtol, with_reconstruction, grading):
    # Node redistribution along the same polyline moves the discrete action
    # only at the mesh-resolution level, so multistarts produce near-tied
    # actions at very different convergence quality; among near-ties, take
    # the best-converged representative.
    tie = max(1e-9, 3e-5 * abs(results[0][0]))
    best_A, best_gn, best_nodes = min(
        (r for r in results if r[0] <= results[0][0] + tie),
        key=lambda r: r[1])
    flags = []
    converged = best_gn < gtol
    if not converged:
        flags.append(f"gradient norm {best_gn:.2e} above {gtol:.0e} "
                     "(partial result)")
    path = DiscretePath(best_nodes.copy(), end_mode=end_mode, grading=grading)

    # optimizer values carry the feasibility penalties; report the plain
    # action (identical whenever the path is admissible)
    best_A, G = _action_and_grad(best_nodes, mp, h)
    mult = np.zeros(best_nodes.shape[0])
    if end_mode == "boundary":
        mult[-1] = -float(G[-1, 0])
    # containment diagnostics: a terminal run of clamped segments is the
    # expected discrete signature of a boundary end (the action vanishes
    # identically on the boundary, leaving the tail mesh free); touching
    # the boundary anywhere before that layer is a genuine warning
    mids = 0.5 * (best_nodes[:-1] + best_nodes[1:])
    g_mid = (chart_terms(mids[:, 1], mids[:, 2], mp)["V"] / mids[:, 0] - h)
    clamped = np.where(g_mid <= 0)[0]
    layer = 0 if clamped.size == 0 else g_mid.shape[0] - int(clamped[0])
    if layer and end_mode == "boundary" and layer < g_mid.shape[0]:
        flags.append(f"terminal boundary layer: last {layer} of "
                     f"{g_mid.shape[0]} segments are clamped")
    V = chart_terms(best_nodes[1:-1, 1], best_nodes[1:-1, 2], mp)["V"]
    slack = V / h - best_nodes[1:-1, 0]
    # clipping against the cap leaves 1-ulp residue; only count genuine
    # contact (a node parked exactly on its bound, or clearly beyond)
    contact = (slack == 0.0) | (slack < -1e-11)
    layer_start = best_nodes.shape[0] - 1 - layer   # node index; end if no layer
    first_contact = layer_start if layer else -1
    if np.any(contact):
        c0 = int(np.argmax(contact)) + 1            # first contact node
        first_contact = c0 if first_contact < 0 else min(first_contact, c0)
        # contact that the path genuinely leaves again (returns to the
        # interior) is a warning; contact that only leads into the
        # terminal boundary run is part of the free-tail gauge
        r_scale = max(float(np.max(best_nodes[:, 0])), 1e-300)
        if np.any(slack[c0 - 1:] > 1e-3 * r_scale):
            flags.append("interior node touching the Hill boundary")

    rec = None
    if with_reconstruction:
        try:
            rec = reconstruct(path, mp, h)
        except ValueError as e:
            flags.append(f"reconstruction unavailable: {e}")
    return JMResult(
        path=path, action=best_A, grad_norm=best_gn,
        multipliers=mult, converged=converged,
        reconstruction=rec,
        local_minima=[(A, (n[-1, 1], n[-1, 2]), n) for A, _, n in results],
        flags=flags, first_contact=first_contact,
    )


def minimize_to_boundary(q0, N: int, mp: MassParams, h: float, *,
                         end_guess: tuple[float, float] | None = None,
                         n_starts: int = 8, seed: int = 0,
                         gtol: float = 1e-8,
                         eps_offset: float = 1e-4,
                         offset_direction=None,
                         with_reconstruction: bool = True) -> JMResult:
    """Minimize the action from q0 (fixed) to a free endpoint on the Hill
    boundary r = V/h.  The end node's size is eliminated through the
    constraint, so the optimizer runs unconstrained; its multiplier is
    recovered for the report.  n_starts seeded perturbations are all
    optimized and the distinct local minima reported.

    A q0 at a collision configuration (r = 0 or a collision shape) is kept
    as the fixed first node -- only segment midpoints are ever evaluated,
    and the action integrand is integrable there -- while the first
    interior node is seeded at distance eps_offset along the initial
    direction (see collision_start_study for the stability run)."""
    q0 = _as_q(q0)
    if end_guess is not None:
        xe, ye = end_guess
        if xe * xe + ye * ye >= 1.0:
            raise ValueError("end_guess must be a shape inside the unit disk")
    else:
        xe, ye = q0[1], q0[2]
        rad = math.hypot(xe, ye)
        if rad >= 1.0:               # collinear start: aim inward
            xe, ye = 0.9 * xe / rad, 0.9 * ye / rad
    Ve = float(chart_terms(xe, ye, mp)["V"])
    template = _initial_nodes(q0, np.array([Ve / h, xe, ye]), N,
                              eps_offset=eps_offset,
                              offset_direction=offset_direction)
    template = _clip_into_hill(template, mp, h)
    results = _dedupe(_multistart(template, "boundary", mp, h,
                                  n_starts, seed, gtol))
    return _finish(results, "boundary", mp, h, gtol, with_reconstruction,
                   grading="sqrt-graded toward boundary end")


def minimize_fixed(q0, q1, N: int, mp: MassParams, h: float, *,
                   n_starts: int = 8, seed: int = 0, gtol: float = 1e-8,
                   with_reconstruction: bool = True) -> JMResult:
    """Minimize the action between two fixed points of the Hill region."""
    q0, q1 = _as_q(q0), _as_q(q1)
    if np.all(q0 == q1):
        nodes = np.vstack([q0, q1])
        path = DiscretePath(nodes, end_mode="fixed", grading="degenerate")
        return JMResult(path=path, action=0.0, grad_norm=0.0,
                        multipliers=np.zeros(2), converged=True,
                        reconstruction=None,
                        local_minima=[(0.0, (q1[1], q1[2]), nodes)],
                        flags=["degenerate zero path"])
    template = _initial_nodes(q0, q1, N)
    template = _clip_into_hill(template, mp, h)
    results = _dedupe(_multistart(template, "fixed", mp, h,
                                  n_starts, seed, gtol))
    return _finish(results, "fixed", mp, h, gtol, with_reconstruction,
                   grading="sqrt-graded toward end")


def collision_start_study(q0, N: int, mp: MassParams, h: float, *,
                          eps_list=(1e-3, 1e-4, 1e-5),
                          **kwargs) -> list[tuple[float, float]]:
    """Convergence study for paths starting at a collision configuration:
    minimize_to_boundary is re-run with the first interior node seeded at
    each offset eps along the previous solution's initial direction.
    Returns (eps, action) pairs, which should settle as eps decreases (the
    action integrand is integrable at the collision)."""
    q0 = _as_q(q0)
    out = []
    direction = None
    for eps in eps_list:
        res = minimize_to_boundary(q0, N, mp, h, eps_offset=eps,
                                   offset_direction=direction, **kwargs)
        nodes = res.path.nodes
        direction = nodes[2] - nodes[0]   # converged initial direction
        out.append((eps, res.action))
    return out


# ---------------------------------------------------------- reconstruction


def reconstruct(path: DiscretePath, mp: MassParams, h: float,
                trim: float = 0.1) -> dict:
    """Physical-time reparameterization  dt = ds / sqrt(2 (U - h))  of a
    path, with consistency residuals of the reconstructed trajectory.

    Returns node times t, node velocities (centered differences), the
    energy residual max |E + h| over the interior nodes (a fraction trim
    excluded at each end), and a Newton residual: the reduced equations of
    motion are integrated from the reconstructed state at the quarter-way
    node and the flow is compared against the path nodes out to the
    three-quarter mark.  (A pointwise second-difference check would
    amplify optimizer noise by 1/dt^2; matching against the integrated
    flow measures the same thing stably.)

    A boundary-end minimizer typically carries a short terminal run of
    clamped segments (the discrete action is exactly zero on the boundary,
    so the mesh is free there); those segments have no time
    parameterization and are cut off before reconstructing.  Clamped
    segments anywhere else are a genuine obstruction and raise."""
    nodes = path.nodes
    r0, r1 = nodes[:-1, 0], nodes[1:, 0]
    xm, ym = 0.5 * (nodes[:-1, 1] + nodes[1:, 1]), 0.5 * (nodes[:-1, 2] + nodes[1:, 2])
    rm = 0.5 * (r0 + r1)
    t_mid = chart_terms(xm, ym, mp)
    g = t_mid["V"] / rm - h
    clamped = np.where(g <= 0)[0]
    layer = 0 if clamped.size == 0 else g.shape[0] - int(clamped[0])
    if layer == g.shape[0]:
        raise ValueError("path lies on the zero-velocity boundary; "
                         "it has no time parameterization")
    if layer and path.end_mode != "boundary":
        raise ValueError("path touches the boundary away from its ends; "
                         "time reparameterization is singular there")
    if layer and g.shape[0] - layer < 4:
        raise ValueError("fewer than four segments precede the boundary "
                         "contact; nothing to reconstruct")
    if layer:
        nodes = nodes[: nodes.shape[0] - layer]
        r0, r1 = nodes[:-1, 0], nodes[1:, 0]
        xm = 0.5 * (nodes[:-1, 1] + nodes[1:, 1])
        ym = 0.5 * (nodes[:-1, 2] + nodes[1:, 2])
        rm = 0.5 * (r0 + r1)
        t_mid = chart_terms(xm, ym, mp)
        g = t_mid["V"] / rm - h
    dr = np.diff(nodes[:, 0])
    dx = np.diff(nodes[:, 1])
    dy = np.diff(nodes[:, 2])
    ell = np.sqrt(dr * dr + t_mid["kappa"] * rm * rm * (dx * dx + dy * dy))
    dt = ell / np.sqrt(2.0 * g)
    t = np.concatenate([[0.0], np.cumsum(dt)])

    n = nodes.shape[0]
    vel = np.zeros_like(nodes)
    # nonuniform centered differences at interior nodes
    t0, t1, t2 = t[:-2], t[1:-1], t[2:]
    h0, h1 = (t1 - t0)[:, None], (t2 - t1)[:, None]
    vel[1:-1] = (h0 * h0 * nodes[2:] - (h0 * h0 - h1 * h1) * nodes[1:-1]
                 - h1 * h1 * nodes[:-2]) / (h0 * h1 * (h0 + h1))
    vel[0] = (nodes[1] - nodes[0]) / max(t[1] - t[0], 1e-300)
    vel[-1] = (nodes[-1] - nodes[-2]) / max(t[-1] - t[-2], 1e-300)

    # windows by arc length, not node count: graded meshes concentrate
    # half their nodes in a head of negligible length, where the velocity
    # is singular and finite differences have nothing to offer
    cum = np.concatenate([[0.0], np.cumsum(ell)])
    L = float(cum[-1])
    lo = max(1, int(np.searchsorted(cum, trim * L)))
    hi = min(n - 1, int(np.searchsorted(cum, (1.0 - trim) * L, side="right")))
    tn = chart_terms(nodes[lo:hi, 1], nodes[lo:hi, 2], mp)
    rr = nodes[lo:hi, 0]
    K = 0.5 * (vel[lo:hi, 0] ** 2
               + tn["kappa"] * rr * rr * (vel[lo:hi, 1] ** 2 + vel[lo:hi, 2] ** 2))
    E = K - tn["V"] / rr
    energy_residual = float(np.max(np.abs(E + h))) if hi > lo else 0.0

    i0 = max(1, int(np.searchsorted(cum, 0.25 * L)))
    i1 = min(n - 2, int(np.searchsorted(cum, 0.75 * L)))
    if i1 <= i0:
        i0, i1 = max(1, n // 4), min(n - 2, (3 * n) // 4)
    newton_residual = math.inf
    if i1 > i0:
        ri, xi, yi = nodes[i0]
        y0 = np.array([ri, math.sqrt(ri) * vel[i0, 0], xi, yi,
                       ri ** 1.5 * vel[i0, 1], ri ** 1.5 * vel[i0, 2],
                       t[i0]])
        t_end = t[i1] + 1e-6 * (t[i1] - t[i0])   # overshoot: keeps every
        s_cap = 20.0 * (1.0 + (t_end - t[i0])    # node time strictly inside
                        / max(float(np.min(nodes[i0:i1 + 1, 0])), 1e-2) ** 1.5)
        sol = solve_ivp(blowup_rhs_timed, (0.0, s_cap), y0, args=(mp,),
                        rtol=1e-11, atol=1e-13, dense_output=True,
                        events=_make_clock_event(t_end))
        if sol.status == 1:          # clock event reached t_end
            newton_residual = 0.0
            for i in range(i0 + 1, i1 + 1):
                s_i = brentq(lambda s: sol.sol(s)[6] - t[i], 0.0, sol.t[-1])
                got = sol.sol(s_i)[[0, 2, 3]]
                newton_residual = max(newton_residual, float(np.max(
                    np.abs(got - nodes[i]) / (1.0 + np.abs(nodes[i])))))
    return {"t": t, "velocity": vel,
            "energy_residual": energy_residual,
            "newton_residual": newton_residual,
            "newton_window": (int(i0), int(i1)),
            "layer_segments": int(layer),
            "trim": trim}


# ------------------------------------------------------- structure checks


def path_syzygy_count(path: DiscretePath, tol: float = 1e-9) -> int:
    """Number of nodes on the collinear locus (1 - x^2 - y^2 <= tol)."""
    z = 1.0 - path.nodes[:, 1] ** 2 - path.nodes[:, 2] ** 2
    return int(np.sum(z <= tol))


def ordering_check(path: DiscretePath, mp: MassParams) -> dict:
    """Check that the normalized mutual-distance ordering of the start node
    persists at every node of the path (reported, never silently dropped:
    a violation is a counterexample candidate for the ordering-persistence
    conjecture and needs mesh-refinement evidence before being believed)."""
    d12, d13, d23 = mutual_distances(path.nodes[:, 1], path.nodes[:, 2])
    dists = np.stack([d12, d13, d23])
    start_order = np.argsort(dists[:, 0], kind="stable")
    ok = np.ones(dists.shape[1], dtype=bool)
    for a, b in zip(start_order[:-1], start_order[1:]):
        ok &= dists[a] <= dists[b] + 1e-12
    first_bad = int(np.argmin(ok)) if not ok.all() else -1
    return {"preserved": bool(ok.all()),
            "first_violation_node": first_bad,
            "order": [("r12", "r13", "r23")[i] for i in start_order]}


# ------------------------------------------------------------ scaling probe


def seifert_scaling_probe(x: float, y: float, mp: MassParams, h: float, *,
                          t0: float = 2.5e-4, rtol: float = 1e-11,
                          atol: float = 1e-13) -> dict:
    """Action growth of the brake arc leaving the Hill boundary above the
    shape (x, y): integrates the blown-up flow with quadratures for
    physical time t, action A = sqrt(2) int (U - h) dt and metric arc
    length L = int sqrt(2 (U - h)) dt, sampled at t0, 2 t0, 4 t0.

    Expected: A ~ L^(3/2) (exponent -> 3/2 as t0 -> 0) and the pure-time
    ratio A(2t)/A(t) -> 8."""
    st = brake_lift(x, y, mp, h)
    y0 = np.array([st.r, 0.0, st.x, st.y, 0.0, 0.0, 0.0, 0.0, 0.0])

    def rhs(s, yy, m):
        d = np.empty(9)
        d[:6] = blowup_rhs(s, yy[:6], m)
        r = max(yy[0], 0.0)
        r32 = r ** 1.5
        V = chart_scalar(yy[2], yy[3], m)[1]
        g = max(V / r - h, 0.0) if r > 0 else 0.0
        d[6] = r32
        d[7] = math.sqrt(2.0) * g * r32
        d[8] = math.sqrt(2.0 * g) * r32
        return d

    marks = [t0, 2.0 * t0]
    events = [EventSpec(g=(lambda s, yy, *_ , _m=m: yy[6] - _m),
                        direction=+1, terminal=False, tol=1e-12,
                        name=f"t={m:g}") for m in marks]
    events.append(EventSpec(g=lambda s, yy, *_: yy[6] - 4.0 * t0,
                            direction=+1, terminal=True, tol=1e-12,
                            name="t-final"))
    traj = integrate(rhs, y0, (0.0, 10.0), rtol=rtol, atol=atol,
                     events=events, args=(mp,))
    A, L = {}, {}
    for m in marks:
        _, ye = traj.events[f"t={m:g}"][0]
        A[m], L[m] = float(ye[7]), float(ye[8])
    _, ye = traj.events["t-final"][0]
    A[4 * t0], L[4 * t0] = float(ye[7]), float(ye[8])

    ratio_small = A[2 * t0] / A[t0]
    ratio_large = A[4 * t0] / A[2 * t0]
    exp_small = math.log(ratio_small) / math.log(L[2 * t0] / L[t0])
    exp_large = math.log(ratio_large) / math.log(L[4 * t0] / L[2 * t0])
    # first-order Richardson in t toward t -> 0
    exponent = exp_small + (exp_small - exp_large)
    return {"t0": t0, "A": A, "L": L,
            "ratio_small": ratio_small, "ratio_large": ratio_large,
            "exponent_small": exp_small, "exponent_large": exp_large,
            "exponent": exponent,
            "state_at_4t0": ye[:6].copy()}


def brake_arc_minimality(x: float, y: float, mp: MassParams, h: float, *,
                         t_in: float = 1e-3, n_polylines: int = 50,
                         n_nodes: int = 24, seed: int = 0,
                         rtol: float = 1e-11, atol: float = 1e-13) -> dict:
    """Compare the brake arc from the boundary over (x, y) down to its
    point at physical time t_in against random comparison polylines joining
    that interior point back to the Hill boundary.  The arc's action should
    be the minimum."""
    probe = seifert_scaling_probe(x, y, mp, h, t0=t_in / 4.0,
                                  rtol=rtol, atol=atol)
    st6 = probe["state_at_4t0"]
    A_arc = probe["A"][t_in]
    q_in = np.array([st6[0], st6[2], st6[3]])

    rng = np.random.default_rng(seed)
    actions = []
    for _ in range(n_polylines):
        xe = x + rng.normal(0.0, 0.01)
        ye_ = y + rng.normal(0.0, 0.01)
        Ve = float(chart_terms(xe, ye_, mp)["V"])
        q_end = np.array([Ve / h, xe, ye_])
        u = np.linspace(0.0, 1.0, n_nodes + 1)[:, None]
        nodes = q_in[None, :] * (1.0 - u) + q_end[None, :] * u
        jitter = rng.normal(0.0, 0.002, size=nodes.shape)
        jitter *= np.sin(math.pi * u)
        nodes = _clip_into_hill(nodes + jitter, mp, h)
        A, _ = _action_and_grad(nodes, mp, h, want_grad=False)
        actions.append(float(A))
    return {"A_arc": A_arc, "A_polylines_min": min(actions),
            "A_polylines": actions, "q_in": q_in}
