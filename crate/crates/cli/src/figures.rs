//! Data behind the two-level figures, in units of `omega0 = Gamma0 = 1`.

use floquet_flow::models::{tls_floquet, TwoLevelParams, MINUS, PLUS};
use floquet_flow::FloquetSolution;
use rayon::prelude::*;

use crate::config::{Engine, Figure, SolverSettings};
use crate::error::CliResult;
use crate::runner::{tls_numeric_states, tls_point, DataTable, TlsPoint};

pub const FIG1_OMEGAS: [f64; 2] = [0.5, 1.5];
pub const FIG2_OMEGA: f64 = 1.5;
pub const TEMPERATURES: [f64; 4] = [0.1, 0.5, 1.0, 5.0];
pub const FIG4_TEMPERATURE: f64 = 1.0;
pub const FIG4_DRIVES: [f64; 5] = [0.25, 0.5, 0.75, 1.0, 1.25];
pub const MAX_DRIVE: f64 = 4.0;
pub const MAX_OMEGA: f64 = 3.0;

/// `muF_i = 4 i / (points - 1)`, from 0 to 4 inclusive.
pub fn drive_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| MAX_DRIVE * i as f64 / (points - 1) as f64).collect()
}

/// `w_i = 3 (i + 1) / points`, excluding the static limit.
pub fn omega_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| MAX_OMEGA * (i + 1) as f64 / points as f64).collect()
}

pub fn emit_figure(which: Figure, points: usize, engine: Engine, solver: &SolverSettings) -> CliResult<DataTable> {
    match which {
        Figure::Fig1 => fig1(points, engine, solver),
        Figure::Fig2 => population_figure(points, engine, solver, "p_minus", |q| q.p_minus),
        Figure::Fig3 => population_figure(points, engine, solver, "R_scaled", |q| q.r),
        Figure::Fig4 => fig4(points, engine, solver),
    }
}

/// Quasienergies on the representatives that connect to the bare levels.
fn fig1(points: usize, engine: Engine, solver: &SolverSettings) -> CliResult<DataTable> {
    let drives = drive_grid(points);
    let mut t = DataTable::new(["omega_scaled", "muF_scaled", "eps_plus_scaled", "eps_minus_scaled"]);
    for w in FIG1_OMEGAS {
        let curve: Vec<(f64, f64)> = match engine {
            Engine::Analytic => drives
                .par_iter()
                .map(|&mf| {
                    let f = tls_floquet(&TwoLevelParams::normalized(1.0, w, mf))?;
                    Ok((f.bare_plus, f.bare_minus))
                })
                .collect::<CliResult<_>>()?,
            Engine::Numeric => continued_levels(w, &drives, solver)?,
        };
        for (mf, (ep, em)) in drives.iter().zip(curve) {
            t.rows.push(vec![w, *mf, ep, em]);
        }
    }
    Ok(t)
}

/// Numeric quasienergies followed from the undriven levels by overlap
/// continuation along the drive grid.
fn continued_levels(w: f64, drives: &[f64], solver: &SolverSettings) -> CliResult<Vec<(f64, f64)>> {
    let sols: Vec<FloquetSolution> = drives
        .par_iter()
        .map(|&mf| Ok(tls_numeric_states(&TwoLevelParams::normalized(1.0, w, mf), solver)?.solution))
        .collect::<CliResult<_>>()?;
    // Undriven states are bare levels: put each on its own energy +-1/2.
    let mut prev = sols[0].clone();
    for s in 0..2 {
        let u = prev.floquet_function_at(s, 0.0)?;
        let bare = if u[0].norm() >= u[1].norm() { 0.5 } else { -0.5 };
        let shift = ((bare - prev.quasienergy(s)) / w).round() as i64;
        prev = prev.shift_representative(s, shift)?;
    }
    let mut out = Vec::with_capacity(drives.len());
    out.push((prev.quasienergy(PLUS), prev.quasienergy(MINUS)));
    for sol in &sols[1..] {
        let cur = sol.align_to(&prev)?;
        out.push((cur.quasienergy(PLUS), cur.quasienergy(MINUS)));
        prev = cur;
    }
    Ok(out)
}

fn population_figure(
    points: usize,
    engine: Engine,
    solver: &SolverSettings,
    column: &str,
    pick: fn(&TlsPoint) -> f64,
) -> CliResult<DataTable> {
    let drives = drive_grid(points);
    let grid: Vec<(f64, f64)> = TEMPERATURES.iter().flat_map(|&kt| drives.iter().map(move |&mf| (kt, mf))).collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&(kt, mf)| {
            let p = TwoLevelParams::normalized(1.0, FIG2_OMEGA, mf);
            tls_point(&p, 1.0 / kt, engine, solver).map(|q| pick(&q))
        })
        .collect::<CliResult<_>>()?;
    let mut t = DataTable::new(["kT_scaled", "muF_scaled", column]);
    for ((kt, mf), v) in grid.into_iter().zip(values) {
        t.rows.push(vec![kt, mf, v]);
    }
    Ok(t)
}

fn fig4(points: usize, engine: Engine, solver: &SolverSettings) -> CliResult<DataTable> {
    let omegas = omega_grid(points);
    let grid: Vec<(f64, f64)> = FIG4_DRIVES.iter().flat_map(|&mf| omegas.iter().map(move |&w| (mf, w))).collect();
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&(mf, w)| {
            let p = TwoLevelParams::normalized(1.0, w, mf);
            tls_point(&p, 1.0 / FIG4_TEMPERATURE, engine, solver).map(|q| q.r)
        })
        .collect::<CliResult<_>>()?;
    let mut t = DataTable::new(["muF_scaled", "omega_scaled", "R_scaled"]);
    for ((mf, w), v) in grid.into_iter().zip(values) {
        t.rows.push(vec![mf, w, v]);
    }
    Ok(t)
}
