"""Virial identities for mechanical Lagrangians on a Riemannian chart.

Submodules: :mod:`geometry` (pointwise tensor algebra and field
classification), :mod:`dynamics` (states, RK4 integration, tangent-bundle
lifts), :mod:`virial` (time averages and virial residuals), :mod:`systems`
(bundled examples) and :mod:`cli`.
"""

from .dynamics import (
    CatalogEntry, IntegratorConfig, State, SystemSpec, Trajectory, acceleration, complete_lift_eval,
    energy, hamiltonian_vector_field, hamiltonian_vf_affine, integrate, liouville,
)
from .errors import (
    DegenerateDegrees, GuardViolation, InsufficientSamples, InvalidParameter, RejectedTrajectory,
    RelationFieldMissing, SingularMetric, StepLimitExceeded, VirialGeoError,
)
from .fields import MetricField, ScalarField, VectorFieldDef, compiled_guard
from .geometry import (
    ConformalClassification, christoffel, classify_vector_field, covariant_derivative_flat,
    derivative_crosscheck, flat_map, kinetic_energy, lie_derivative_metric, metric_inverse, sharp_map,
)
from .systems import SystemId, build_system, reference_initial_states
from .virial import (
    Observable, Partition, RunningAverage, VirialRelation, VirialReport, affine_virial,
    homogeneous_partition, time_average, virial_residual,
)

__version__ = "0.1.0"
