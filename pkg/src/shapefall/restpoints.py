"""Restpoints of the blown-up flow and their linear structure.

On the triple-collision manifold r = 0 the blown-up field has restpoints
exactly at the central configurations, in conjugate pairs

    p(-) = (0, -sqrt(2 V(p)), p, 0),    p(+) = (0, +sqrt(2 V(p)), p, 0),

one pair at the equilateral shape w = 0 (Lagrange) and one pair over each
of the three collinear central configurations (Euler).  The antipodal
equilateral shape carries a second Lagrange pair at w = infinity; it is
equivalent to the one at the origin under the inversion symmetry of the
chart and is reported symbolically rather than numerically.

At a restpoint the 6 x 6 Jacobian of the field has the exact block form

    [ v0  .   .     .     .     .  ]        (r row)
    [ .   v0  .     .     .     .  ]        (v row)
    [ .   .   0     0     1     0  ]
    [ .   .   0     0     0     1  ]
    [ .   .  Hxx/k Hxy/k -v0/2  0  ]
    [ .   .  Hxy/k Hyy/k  0   -v0/2]

with H the Hessian of V at the central configuration and k = kappa there:
each Hessian eigenvalue mu contributes the root pair of

    lambda^2 + (v0/2) lambda - mu / kappa = 0.

The flow preserves the energy function E_h, whose differential at a
restpoint is (h, v0, 0, 0, 0, 0); restricting the Jacobian to ker dE_h
removes one copy of the eigenvalue v0 and leaves 5 eigenvalues, one of
which is again v0 with an eigenvector transverse to r = 0 (the homothety
direction).  Spiraling of nearby orbits is decided by whether the
eigenvalue pair attached to the negative Hessian direction of an Euler
point is a non-real conjugate pair.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.linalg import null_space

from .core import MassParams
from .dynamics import blowup_field
from .potential import chart_scalar, collinear_central_configs

__all__ = [
    "Restpoint",
    "Linearization",
    "find_restpoints",
    "linearize",
    "hessian_V",
    "spiraling_test",
    "spiraling_scan",
    "ANTIPODAL_NOTE",
]

ANTIPODAL_NOTE = (
    "second equilateral pair at w = infinity: images of the pair at the "
    "origin under the inversion symmetry w -> 1/conj(w); not representable "
    "in the finite chart"
)


@dataclass(frozen=True)
class Restpoint:
    """A restpoint of the blown-up flow on the collision manifold."""

    kind: str          # "lagrange" or "euler-<interior mass>"
    sign: int          # +1 ejection (v0 > 0), -1 collision (v0 < 0)
    x: float
    y: float
    v: float           # v0 = sign * sqrt(2 V(x, y))
    V: float

    @property
    def state(self) -> np.ndarray:
        return np.array([0.0, self.v, self.x, self.y, 0.0, 0.0])


def find_restpoints(mp: MassParams, h: float | None = None) -> list[Restpoint]:
    """All restpoints visible in the chart: the Lagrange pair at the origin
    and the three Euler pairs on the unit circle (see ANTIPODAL_NOTE for the
    pair at infinity).

    h is accepted for signature symmetry and ignored: restpoints live on
    r = 0 where the energy relation v^2/2 = V does not involve h.
    """
    out = []
    _, V0, _, _, _, _, _, _, _, _, _ = chart_scalar(0.0, 0.0, mp)
    for sign in (-1, +1):
        out.append(Restpoint(kind="lagrange", sign=sign, x=0.0, y=0.0,
                             v=sign * math.sqrt(2.0 * V0), V=V0))
    for ep in collinear_central_configs(mp):
        x, y = math.cos(ep.angle), math.sin(ep.angle)
        for sign in (-1, +1):
            out.append(Restpoint(kind=f"euler-{ep.interior}", sign=sign,
                                 x=x, y=y, v=sign * math.sqrt(2.0 * ep.V), V=ep.V))
    return out


def hessian_V(x: float, y: float, mp: MassParams, step: float = 1e-5) -> np.ndarray:
    """Hessian of the shape potential by Richardson-extrapolated central
    differences of the analytic gradient (accurate to ~1e-11 here)."""
    def grad(xx, yy):
        _, _, Vx, Vy, _, _, _, _, _, _, _ = chart_scalar(xx, yy, mp)
        return np.array([Vx, Vy])

    def diff(hh):
        gxp, gxm = grad(x + hh, y), grad(x - hh, y)
        gyp, gym = grad(x, y + hh), grad(x, y - hh)
        Hcol_x = (gxp - gxm) / (2.0 * hh)
        Hcol_y = (gyp - gym) / (2.0 * hh)
        return np.column_stack([Hcol_x, Hcol_y])

    H1, H2 = diff(step), diff(step / 2.0)
    H = (4.0 * H2 - H1) / 3.0
    return 0.5 * (H + H.T)  # symmetrize


def _jacobian_analytic(rp: Restpoint, mp: MassParams) -> np.ndarray:
    """Exact Jacobian of the blown-up field at a restpoint (see module doc)."""
    _, _, _, _, kap, _, _, _, _, _, _ = chart_scalar(rp.x, rp.y, mp)
    H = hessian_V(rp.x, rp.y, mp)
    J = np.zeros((6, 6))
    J[0, 0] = rp.v
    J[1, 1] = rp.v
    J[2, 4] = 1.0
    J[3, 5] = 1.0
    J[4:6, 2:4] = H / kap
    J[4, 4] = -0.5 * rp.v
    J[5, 5] = -0.5 * rp.v
    return J


def _jacobian_fd(state: np.ndarray, mp: MassParams, step: float = 1e-6) -> np.ndarray:
    """Richardson central-difference Jacobian of the full field (cross-check)."""
    n = 6

    def col(j, hh):
        e = np.zeros(n)
        e[j] = hh
        return (blowup_field(state + e, mp) - blowup_field(state - e, mp)) / (2.0 * hh)

    J1 = np.column_stack([col(j, step) for j in range(n)])
    J2 = np.column_stack([col(j, step / 2.0) for j in range(n)])
    return (4.0 * J2 - J1) / 3.0


@dataclass
class Linearization:
    """Energy-restricted linear data at a restpoint."""

    restpoint: Restpoint
    jacobian: np.ndarray               # unrestricted 6 x 6
    eigenvalues: np.ndarray            # 5 restricted eigenvalues (complex)
    eigenvectors: np.ndarray           # 6 x 5, restricted eigenvectors lifted back
    stable_dim: int
    unstable_dim: int
    homothety_eigenvalue: complex      # the one with an r-transverse eigenvector
    restriction_residual: float        # | dE . J . Q | -- invariance of ker dE
    fd_residual: float                 # max |J_analytic - J_fd|
    flags: list[str] = dc_field(default_factory=list)


def linearize(rp: Restpoint, mp: MassParams, h: float = 1.0) -> Linearization:
    """Linearize at a restpoint and restrict to the energy shell.

    The analytic Jacobian is cross-checked against a finite-difference one
    (they must agree to 1e-6, or the result is flagged).  The differential
    dE_h = (h, v0, 0, 0, 0, 0) at the restpoint has a 5-dimensional kernel;
    the restricted spectrum is eig(Q^T J Q) for an orthonormal kernel basis
    Q.  Eigenvalues within 1e-8 of each other are flagged near-defective.
    """
    J = _jacobian_analytic(rp, mp)
    Jfd = _jacobian_fd(rp.state, mp)
    fd_residual = float(np.max(np.abs(J - Jfd)))
    flags = []
    if fd_residual > 1e-6:
        flags.append(f"fd-mismatch: {fd_residual:.2e}")

    dE = np.array([[h, rp.v, 0.0, 0.0, 0.0, 0.0]])
    Q = null_space(dE)  # 6 x 5 orthonormal
    B = Q.T @ J @ Q
    lam, W = np.linalg.eig(B)
    vecs = Q @ W

    restriction_residual = float(np.linalg.norm(dE @ J @ Q) / max(np.linalg.norm(J), 1.0))

    order = np.argsort(lam.real)
    lam, vecs = lam[order], vecs[:, order]

    # homothety direction: the restricted eigenvector with the largest size
    # (r) component; its eigenvalue must be v0 and the component nonzero.
    r_comp = np.abs(vecs[0, :])
    i_hom = int(np.argmax(r_comp))
    if r_comp[i_hom] < 1e-8:
        flags.append("homothety eigenvector has vanishing r-component")

    if np.min(np.abs(np.subtract.outer(lam, lam)) + np.eye(5)) < 1e-8:
        flags.append("near-defective spectrum")

    stable = int(np.sum(lam.real < -1e-10))
    unstable = int(np.sum(lam.real > 1e-10))
    return Linearization(
        restpoint=rp, jacobian=J,
        eigenvalues=lam, eigenvectors=vecs,
        stable_dim=stable, unstable_dim=unstable,
        homothety_eigenvalue=complex(lam[i_hom]),
        restriction_residual=restriction_residual,
        fd_residual=fd_residual,
        flags=flags,
    )


def spiraling_test(mp: MassParams, h: float = 1.0) -> dict:
    """Decide, for each ejection Euler restpoint E(+), whether nearby orbits
    spiral: the eigenvalue pair attached to the circle-transverse (negative)
    Hessian direction is a non-real conjugate pair.

    Returns {"euler-k": True/False/None} (None = within 1e-10 of the
    real/non-real border, numerically indeterminate) plus the supporting
    eigenvalues under "detail".
    """
    out: dict = {"detail": {}}
    for rp in find_restpoints(mp):
        if rp.kind == "lagrange" or rp.sign < 0:
            continue
        lin = linearize(rp, mp, h)
        im_max = float(np.max(np.abs(lin.eigenvalues.imag)))
        if im_max > 1e-10:
            verdict = True
        else:
            # borderline check on the explicit discriminant of the
            # transverse pair: lambda^2 + v0/2 lambda - mu_neg/kappa
            H = hessian_V(rp.x, rp.y, mp)
            mu_neg = float(np.min(np.linalg.eigvalsh(H)))
            _, _, _, _, kap, _, _, _, _, _, _ = chart_scalar(rp.x, rp.y, mp)
            disc = rp.v**2 / 4.0 + 4.0 * mu_neg / kap
            verdict = None if abs(disc) < 1e-10 else False
        out[rp.kind] = verdict
        out["detail"][rp.kind] = lin.eigenvalues
    return out


def spiraling_scan(mass_triples, h: float = 1.0) -> list[dict]:
    """spiraling_test over a list of mass triples; masses are reported
    normalized to m1 + m2 + m3 = 1 so rows are comparable."""
    from .core import derive_mass_params

    rows = []
    for m1, m2, m3 in mass_triples:
        tot = m1 + m2 + m3
        mp = derive_mass_params(m1, m2, m3)
        res = spiraling_test(mp, h)
        row = {
            "m1": m1 / tot, "m2": m2 / tot, "m3": m3 / tot,
            "spiral_euler_1": res.get("euler-1"),
            "spiral_euler_2": res.get("euler-2"),
            "spiral_euler_3": res.get("euler-3"),
        }
        for k, lam in res["detail"].items():
            row[f"eigs_{k}"] = [complex(z) for z in lam]
        rows.append(row)
    return rows
