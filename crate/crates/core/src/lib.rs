//! Transformed unadjusted Langevin sampling for heavy-tailed isotropic targets.

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod quadrature;
pub mod sampler;
pub mod targets;
pub mod transform;

pub use analysis::{
    check_assumption, classify_regime, corollary_bound, default_grid, effective_sample_size,
    estimate_lsi, gradient_check, kl_quadrature_1d, radial_diagnostics, Assumption,
    AssumptionReport, GradCheckReport, LsiEstimate, RadialDiagnostics, RadialReference, Regime,
    RegimeInput, RegimeVerdict,
};
pub use dynamics::{HessianEigenvalues, ItoDiffusion, TransformedPotential};
pub use error::{Result, TulaError};
pub use sampler::{
    plan_step_size, run_tula, run_tula_with_schedule, run_ula, tula_step, Chain, ChainRun,
    InitialPoint, SamplerConfig, StepPlan,
};
pub use targets::{
    make_example, make_multivariate_t, radial_log_density, zoo_by_name, ClosedForm,
    IsotropicPotential, TargetZooEntry, ZooExample,
};
pub use transform::{G1Check, G1Report, GinSpec, RadialTransform, Tail};
