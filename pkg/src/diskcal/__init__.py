"""Calabi invariants of area-preserving diffeomorphisms of the closed unit disk.

Three independent computations (action-function average, chord-winding double
integral, Hamiltonian time integral), rotation numbers with rigorous error
bars, continued-fraction diagnostics, and the rigidity experiments relating
them.  All angles are in turns; the area form is normalized to total mass 1.
"""

from .arithmetic import (
    ContinuedFraction,
    best_approx_check,
    classify,
    continued_fraction,
    from_quotients,
    synthetic_non_bruno,
    synthetic_super_liouville,
)
from .calabi import (
    ActionFunction,
    CalabiReport,
    Cal1Result,
    Cal2Result,
    DiskMeasure,
    PairSampler,
    action_function,
    angle_function,
    birkhoff_angle,
    c_mu_tilde,
    cal1,
    cal2_tilde,
    cal3_tilde,
    uniform_disk_measure,
    verify_link,
)
from .circle import (
    BoundaryMeasure,
    LiftedCircleMap,
    RotationNumberEstimate,
    invariant_measure,
    lift_from_isotopy,
    rotation_number,
)
from .errors import (
    BoundaryNotConstant,
    ConfigError,
    DiskcalError,
    NotAreaPreserving,
    OrbitCollision,
    PointOutsideDisk,
    QMaxExceeded,
    ScaleTooLarge,
    StepTooCoarse,
    ZeroVector,
)
from .fields import HamiltonianField, hamiltonian_vector_field
from .flow import (
    ConcatIsotopy,
    ConjugatedIsotopy,
    FieldIsotopy,
    MapBundle,
    RadialIsotopy,
    area_residual,
    chord_windings,
    flow_jacobian,
    flow_jacobian_fd,
    flow_map,
)
from .geometry import Jacobian2, area_density, liouville_eval, unwrap_angle
from .experiments import (
    ExperimentResult,
    exp_c0_discontinuity,
    exp_c1_continuity,
    exp_rigidity,
    sup_distance_to_identity,
)
from .zoo import (
    boundary_shear_conjugator,
    bump,
    compose,
    conjugate,
    conjugated_rotation,
    from_spec,
    identity,
    inverse,
    iterate,
    off_center_conjugator,
    quadratic_twist,
    radial_twist,
    rotation,
)

__version__ = "0.1.0"
