//! Quasistationary Floquet occupations and energy dissipation of periodically
//! driven quantum systems weakly coupled to a thermal oscillator bath.
//!
//! Pipeline: [`floquet_solve`] -> [`partial_rates`] -> [`steady_state`] ->
//! [`dissipation_rate`]. Units are `hbar = k_B = 1`.

pub mod bath;
pub mod error;
pub mod floquet;
pub mod kinetics;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod rates;

pub use bath::{thermal_weight, BathSpec, SpectralDensity};
pub use error::{ClosedClass, Error, Result};
pub use floquet::{
    evolution_grid, floquet_solve, propagate_period, FloquetFunction, FloquetSolution, FourierHamiltonian,
    MonodromyOperator, SolveOptions,
};
pub use kinetics::{
    channel_balance_defect, detailed_balance_defect, dissipation_rate, steady_state, ChannelFlow,
    DissipationReport, SteadyState,
};
pub use linalg::{CMatrix, CVector};
pub use rates::{
    first_order_probability, fourier_matrix_elements, partial_rates, total_rates, transition_frequencies, Channel,
    CouplingOperator, FirstOrderProbability, FourierElements, RateTable, TransitionFrequencies,
};
pub use pipeline::{evaluate, run_pipeline, suggested_steps, PipelineResult};
pub use num_complex::Complex64;
