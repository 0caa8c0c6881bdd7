"""Pseudospectral toolkit for the generalized Boussinesq equation

    u_tt - Lap u + Lap^2 u = beta Lap(|u|^{alpha-1} u)

on periodic boxes: exact linear flow and integrating-factor RK4 evolution of
the Schroedinger-type form, ground-state profiles with the sharp threshold
constants, and the diagnostic functionals (energy, momentum, virial,
Morawetz, Strichartz-type norms, scattering residuals) used to verify the
global/blowup dichotomy and scattering behavior numerically.
"""

from .spectral import (
    Field,
    Grid,
    GridMismatchError,
    MultiplierSymbol,
    ZeroModeError,
    apply_multiplier,
    dyadic_project,
    field_from_function,
    inner,
    make_grid,
    norm,
    riesz_commutator,
    transform,
    zero_field,
)
from .propagator import (
    BlowupSuspected,
    ModelParams,
    RunOutcome,
    State,
    StepperConfig,
    evolve,
    from_v,
    linear_flow,
    nonlinear_term,
    read_checkpoint,
    step,
    to_v,
    wrap_around_time,
    write_checkpoint,
)
from .ground_state import (
    GroundState,
    GroundStateConvergenceError,
    constants_from_phi,
    petviashvili,
    sech_profile,
)
from .diagnostics import (
    DiagnosticsRecord,
    MorawetzWeight,
    admissible_pairs,
    compute_record,
    decay_rate_fit,
    energy,
    momentum,
    morawetz_quantity,
    morawetz_weight,
    radial_sobolev_check,
    scattering_residual,
    spacetime_integral,
    static_functionals,
    strichartz_norm,
    theta_exponent,
    virial,
    virial_second,
)
from .experiments import (
    Classification,
    Lemma7Roots,
    SweepCell,
    classify,
    confirm_dichotomy,
    initial_data,
    lemma7_roots,
    scattering_probe,
    sweep,
)

__version__ = "0.1.0"
