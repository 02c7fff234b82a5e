"""Exponentially damped incompressible Navier-Stokes on the periodic box.

Pseudo-spectral integration of the truncated system with the absorption
term alpha (exp(beta |u|^2) - 1) u, an energy ledger that records every
norm and dissipation functional entering the a priori estimates, margin
verdicts for each energy inequality and the perturbation drift bound,
and randomized falsification campaigns for the pointwise lemmas behind
them.
"""

from .damping_ops import (
    DampingFunctionals,
    DampingParams,
    damping_functionals,
    damping_term,
    implicit_damping_solve,
    series_check,
)
from .energy_ledger import (
    CumulativeIntegrals,
    LedgerRow,
    MarginReport,
    budget_residuals,
    continuity_check,
    inequality_series,
    read_ledger_csv,
    record,
    stability_experiment,
    verify_eqth1,
    verify_eqth2,
    verify_eqth3,
    verify_eqth21,
    verify_eqth22,
    write_ledger_csv,
)
from .errors import (
    BlowUpError,
    CheckpointError,
    ConfigError,
    DimensionMismatchError,
    EdnsError,
    HypothesisViolationError,
    NewtonConvergenceError,
    NonHermitianError,
    OverflowGuardError,
)
from .inequality_lab import (
    CampaignResult,
    LemmaMargin,
    c2k_bound_check,
    c_alpha,
    gronwall_variant_check,
    lemma4_margin,
    lemma44_margin,
    run_c2k_campaign,
    run_gronwall_campaign,
    run_lemma4_campaign,
    run_lemma44_campaign,
)
from .integrator import (
    FluidParams,
    SimulationState,
    StepperConfig,
    cfl_dt,
    nonlinear_term,
    perturb,
    prepare_initial_state,
    random_divfree,
    resolve_dt,
    run,
    step,
    taylor_green,
)
from .cli_io import (
    RunConfig,
    parse_config,
    read_checkpoint,
    write_checkpoint,
)
from .spectral_core import (
    GridSpec,
    PhysicalField,
    SpectralField,
    WaveVector,
    aniso_norm,
    derivative,
    divergence,
    forward_transform,
    friedrich_truncate,
    hermitian_defect,
    inverse_transform,
    l2_inner,
    leray_project,
    sobolev_norm,
    velocity_and_gradients,
    wavevector,
    xi_arrays,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
