"""Adaptive integration with dense output and hardened event location.

Thin layer over scipy's RK45 (Dormand-Prince 5(4)) that adds:

* EventSpec/Trajectory types so downstream code never touches scipy's
  attribute-flag event convention directly;
* post-hoc verification of every located event: the solver's root is
  re-polished with bracketed root-finding on g(sol(t)) and must satisfy
  |g| < tol, otherwise we fail loudly with the bracket instead of
  returning a sloppy crossing;
* step-size-underflow near singularities is reported as a partial
  trajectory with diagnostics, not an exception;
* brake_lift: the standard way of producing initial conditions on the
  energy shell (zero velocity at size r = V/h over a given shape).

Defaults rtol = 1e-10, atol = 1e-12 everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .core import MassParams
from .dynamics import ReducedState
from .potential import chart_terms, mutual_distances

__all__ = [
    "EventSpec",
    "Trajectory",
    "EventRefinementError",
    "integrate",
    "brake_lift",
]


class EventRefinementError(RuntimeError):
    """An event root could not be polished to |g| < tol; carries the bracket."""


@dataclass(frozen=True)
class EventSpec:
    """A scalar event function g(t, y) with crossing semantics.

    direction: +1 fire only on increasing crossings, -1 decreasing, 0 both.
    terminal:  stop the integration at the crossing.
    tol:       required |g| at the refined crossing.
    """

    g: Callable[[float, np.ndarray], float]
    direction: int = 0
    terminal: bool = False
    tol: float = 1e-12
    name: str = "event"


@dataclass
class Trajectory:
    """Integration output: accepted steps, dense interpolant, refined events."""

    t: np.ndarray
    y: np.ndarray  # shape (n_steps, dim)
    sol: object | None
    events: dict[str, list[tuple[float, np.ndarray]]]
    status: int          # 0 span completed, 1 terminal event, -1 step underflow
    message: str
    stats: dict

    def __call__(self, t):
        if self.sol is None:
            raise ValueError("trajectory was computed without dense output")
        return self.sol(t)

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.y[-1]


def _wrap_event(spec: EventSpec, args: tuple):
    def g(t, y, *a):
        return spec.g(t, y, *a)

    g.terminal = spec.terminal
    g.direction = float(spec.direction)
    return g


def _refine_event(spec: EventSpec, sol, t_grid: np.ndarray, te: float, args: tuple):
    """Re-polish one event root on the dense interpolant; verify |g| < tol."""
    def gval(t):
        return float(spec.g(t, sol(t), *args))

    ge = gval(te)
    if abs(ge) < spec.tol:
        return te
    # bracket = the accepted step containing te
    ts = np.sort(t_grid)
    i = int(np.searchsorted(ts, te))
    lo = ts[max(i - 1, 0)]
    hi = ts[min(i, len(ts) - 1)]
    if lo == hi:  # te at the very edge of the grid
        lo, hi = te - 1e-9 * max(1.0, abs(te)), te + 1e-9 * max(1.0, abs(te))
        lo = max(lo, ts[0])
        hi = min(hi, ts[-1])
    glo, ghi = gval(lo), gval(hi)
    if glo * ghi <= 0.0 and lo < hi:
        te = brentq(gval, lo, hi, xtol=1e-15, rtol=8.9e-16)
        ge = gval(te)
    if abs(ge) >= spec.tol:
        raise EventRefinementError(
            f"event '{spec.name}': |g| = {abs(ge):.3e} >= tol {spec.tol:.1e} "
            f"after refinement in bracket [{lo}, {hi}]"
        )
    return te


def integrate(
    rhs: Callable,
    y0,
    span: tuple[float, float],
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    events: Sequence[EventSpec] = (),
    dense: bool = True,
    max_step: float = np.inf,
    args: tuple = (),
    residual: Callable[[np.ndarray], float] | None = None,
) -> Trajectory:
    """Integrate rhs(t, y, *args) over span with RK45 and refined events.

    residual, if given, is evaluated on every accepted step and its maximum
    absolute value reported in stats['max_residual'] (e.g. an energy shell
    function that should stay at zero).
    """
    y0 = np.asarray(y0, dtype=float)
    wrapped = [_wrap_event(e, args) for e in events]
    res = solve_ivp(
        rhs, span, y0,
        method="RK45", rtol=rtol, atol=atol,
        dense_output=dense, events=wrapped or None,
        max_step=max_step, args=args or None,
    )
    if res.status == -1 and "step size" not in res.message.lower():
        raise RuntimeError(f"integration failed: {res.message}")

    ev_out: dict[str, list[tuple[float, np.ndarray]]] = {e.name: [] for e in events}
    if events and res.t_events is not None:
        for spec, t_ev in zip(events, res.t_events):
            for te in t_ev:
                if res.sol is not None:
                    te = _refine_event(spec, res.sol, res.t, float(te), args)
                    ye = np.asarray(res.sol(te), dtype=float)
                else:
                    ye = res.y[:, -1]
                ev_out[spec.name].append((float(te), ye))

    nfev = int(res.nfev)
    accepted = len(res.t) - 1
    attempted = max((nfev - 1) // 6, accepted)  # RK45: ~6 evals per attempt
    stats = {
        "steps": accepted,
        "rejections": attempted - accepted,  # estimate from nfev bookkeeping
        "nfev": nfev,
    }
    if residual is not None and len(res.t):
        stats["max_residual"] = float(
            max(abs(residual(res.y[:, i])) for i in range(res.y.shape[1]))
        )

    return Trajectory(
        t=res.t.copy(),
        y=res.y.T.copy(),
        sol=res.sol,
        events=ev_out,
        status=int(res.status),
        message=str(res.message),
        stats=stats,
    )


def brake_lift(x: float, y: float, mp: MassParams, h: float) -> ReducedState:
    """Zero-velocity state of energy -h over the shape (x, y).

    The energy relation with v = x' = y' = 0 forces r = V(x, y)/h; the
    residual of the returned state is zero by construction (exactly, in
    floating point, since it is computed from the same V).

    Domain: (x, y) strictly inside the unit disk and away from collisions
    (on the open disk there are none, but the check is kept explicit).
    """
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"energy parameter h must be positive, got {h}")
    if x * x + y * y >= 1.0:
        raise ValueError(
            f"brake lift needs a shape strictly inside the unit disk, got ({x}, {y})"
        )
    r12, r13, r23 = (float(d) for d in mutual_distances(x, y))
    if min(r12, r13, r23) == 0.0:
        raise ValueError(f"brake lift undefined at a collision shape ({x}, {y})")
    V = float(chart_terms(x, y, mp)["V"])
    return ReducedState(r=V / h, v=0.0, x=float(x), y=float(y), xp=0.0, yp=0.0)
