"""Friction-driven crawler simulation.

A two-body (or p-body chain) crawler moves on a line under Coulomb dry
friction while a prescribed periodic linkage gait drives the bodies.  The
package computes the motion three independent ways and cross-checks them:

* a penalized solver smooths the friction law and refines the smoothing
  index along a certified Cauchy schedule (`crawlsim.penalized`),
* an event-driven stick-slip solver advances closed-form arcs between
  regime-switching events (`crawlsim.stickslip`),
* a verification layer tests any candidate trajectory against the
  governing system of variational inequalities (`crawlsim.vi`).
"""

from .model import (
    STICK_BAND,
    BodyState,
    ConstantGait,
    GaitProgram,
    InitialConditions,
    PhysicalParams,
    PiecewiseParabolicGait,
    Regime,
    SinusoidGait,
    SplineGait,
    contact_force,
    coulomb_force,
    forcing_breakpoints,
    gait_eval,
    net_displacement_per_period,
    reconstruct_positions,
)
from .regularization import (
    FrictionPotential,
    RegularizationIndex,
    envelope,
    gradient,
    monotonicity_margin,
    resolvent,
    subdifferential,
)
from .penalized import (
    ConvergenceCertificate,
    PenalizedTrajectory,
    RefineResult,
    SolverConfig,
    SolverError,
    cauchy_bound,
    integrate,
    refine,
    rhs,
)
from .stickslip import (
    Event,
    EventConfig,
    EventTrajectory,
    OracleError,
    Phase,
    classify_regime,
    phase_forces,
    phase_values,
    simulate_events,
)
from .vi import (
    CandidateTrajectory,
    CheckRow,
    VerificationReport,
    candidate_from_events,
    candidate_from_penalized,
    linear_relation_residual,
    stieltjes_midpoint,
    test_family,
    uniqueness_gap,
    verify_trajectory,
    vi_residual,
    vi_tolerance,
)
from .chain import (
    ChainSpec,
    ChainTrajectory,
    chain_cauchy_bound,
    chain_integrate,
    chain_positions,
)
from .config import ConfigError, RunSetup, load_config, parse_config

__version__ = "0.1.0"
