"""hypowave: a numerical laboratory for damped wave, Schrodinger and plate
equations driven by Grushin-type hypoelliptic operators.

The package discretizes the model operators, computes non-Hermitian spectra
and energy-metric resolvent norms, builds tunneling quasimodes, evolves the
damped systems in time, and evaluates the abstract constants chain from
observability cost to logarithmic decay envelope.
"""

from .operators import (
    DampingProfile,
    FourierModeSet,
    Grid1D,
    HermitianOperator,
    assemble_damping,
    assemble_flat_laplacian,
    assemble_grushin_full,
    assemble_grushin_mode,
)
from .generators import (
    DampedGenerator,
    EigensolverError,
    KernelProjector,
    SpectrumReport,
    damped_wave_generator,
    kernel_projector,
    plate_generator,
    quadratic_pencil,
    schrodinger_generator,
    shifted_schrodinger_pencil,
    spectrum,
)
from .resolvent import (
    FitResult,
    GapCheckResult,
    GapRegion,
    Quasimode,
    ResolventSweep,
    fit_exponent,
    fit_gap_region,
    fit_log_linear,
    quasimode,
    quasimode_defect,
    resolvent_norm,
    resolvent_sweep,
    spectral_gap_check,
)
from .pipeline import (
    BoundFunction,
    CostFunction,
    DecayCertificate,
    DecayEnvelope,
    PipelineParams,
    certificate_from_measurements,
    damped_resolvent_bound,
    decay_envelope,
    free_resolvent_bound,
    gap_curve,
    m_log,
    m_log_inverse,
    plate_M,
    schrodinger_M,
    wave_M,
)
from .timestepping import (
    DecayMeasurement,
    ObservabilityProbe,
    State,
    Trajectory,
    dissipation_residual,
    energy,
    energy_norm,
    evolve,
    measure_decay,
    observability_cost_probe,
    superposition_initial_data,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
