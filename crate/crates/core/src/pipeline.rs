//! End-to-end evaluation: Floquet solve, rates, steady state, dissipation.

use crate::bath::BathSpec;
use crate::error::Result;
use crate::floquet::{floquet_solve, FloquetSolution, FourierHamiltonian, SolveOptions};
use crate::kinetics::{dissipation_rate, steady_state, DissipationReport, SteadyState};
use crate::rates::{partial_rates, CouplingOperator, RateTable};

/// Largest `dt * ||H||` for which the default step count is considered safe.
pub const STEP_PHASE: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub solution: FloquetSolution,
    pub table: RateTable,
    pub steady: SteadyState,
    pub dissipation: DissipationReport,
}

/// Smallest power-of-two step count (at least `min_steps`) with
/// `(T / steps) * ||H|| <= STEP_PHASE`, using the component norm bound.
pub fn suggested_steps(h: &FourierHamiltonian, min_steps: usize) -> usize {
    let phase = h.period() * h.norm_bound();
    let mut steps = min_steps.max(64).next_power_of_two();
    while (phase / steps as f64) > STEP_PHASE && steps < (1 << 20) {
        steps *= 2;
    }
    steps
}

pub fn run_pipeline(
    h: &FourierHamiltonian,
    v: &CouplingOperator,
    bath: &BathSpec,
    opts: &SolveOptions,
    ell_max: Option<usize>,
) -> Result<PipelineResult> {
    let solution = floquet_solve(h, opts)?;
    evaluate(solution, v, bath, ell_max)
}

/// Rates, steady state and dissipation for an existing solution.
pub fn evaluate(
    solution: FloquetSolution,
    v: &CouplingOperator,
    bath: &BathSpec,
    ell_max: Option<usize>,
) -> Result<PipelineResult> {
    let table = partial_rates(&solution, v, bath, ell_max)?;
    let steady = steady_state(table.totals())?;
    let dissipation = dissipation_rate(&table, &steady)?;
    Ok(PipelineResult { solution, table, steady, dissipation })
}
