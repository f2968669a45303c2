"""Numerical laboratory for the planar three-body problem at negative energy
and zero angular momentum, in blown-up shape coordinates.

Subpackages by role:

core        masses, Jacobi coordinates, the conformal shape chart
potential   shape potential V, conformal factor kappa, central configurations
dynamics    Newtonian / blown-up / isosceles equations of motion
integrate   adaptive RK with hardened event location; brake lift
syzygy      brake-to-syzygy map, image scans, winding degree
restpoints  triple-collision restpoints, linearization, spiraling tests
isosceles   collision-manifold branches, admissibility, periodic brake orbit
jm          length-minimization in the Jacobi-Maupertuis metric
acceptance  end-to-end verification battery
cli         command-line entry points
"""

from .core import (
    JacobiState,
    MassParams,
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
from .potential import (
    EulerPoint,
    PotentialEval,
    collinear_central_configs,
    hill_radius,
    mutual_distances,
    radial_factor,
    shape_potential,
    slice_derivative,
)
from .dynamics import (
    CollisionSingularity,
    IsoState,
    ReducedState,
    SyzygyDiagnostic,
    blowup_field,
    collision_slope,
    energy_residual,
    iso_field,
    newtonian_field,
    syzygy_diagnostic,
    tau_star,
)
from .integrate import EventSpec, Trajectory, brake_lift, integrate
from .syzygy import (
    LagrangeHomotheticError,
    NoSyzygyError,
    SyzygyRecord,
    first_syzygy,
    idot_monotonicity_probe,
    image_scan,
    winding_degree,
)
from .restpoints import (
    Linearization,
    Restpoint,
    find_restpoints,
    hessian_V,
    linearize,
    spiraling_scan,
    spiraling_test,
)
from .isosceles import (
    AdmissibilityReport,
    BranchTrace,
    PeriodicBrakeOrbit,
    admissibility_threshold,
    admissible,
    find_periodic_brake,
    newtonian_crosscheck,
    theta_star,
    trace_branch,
)
from .jm import (
    DiscretePath,
    JMResult,
    brake_arc_minimality,
    collision_start_study,
    homothetic_path,
    jm_action,
    minimize_fixed,
    minimize_to_boundary,
    ordering_check,
    path_syzygy_count,
    reconstruct,
    seifert_scaling_probe,
)

__version__ = "0.1.0"
