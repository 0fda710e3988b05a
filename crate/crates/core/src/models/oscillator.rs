//! Linearly forced harmonic oscillator,
//! `H = p^2/2M + M w0^2 x^2/2 + F x cos(wt)`, coupled through `V = gamma x`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::floquet::FourierHamiltonian;
use crate::linalg::CMatrix;
use crate::rates::{Channel, CouplingOperator, RateTable};

pub const DEFAULT_LEVELS: usize = 40;
/// Largest acceptable weight of the first level beyond the truncation.
pub const TRUNCATION_WEIGHT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    pub mass: f64,
    pub omega0: f64,
    pub omega: f64,
    pub force: f64,
    pub gamma: f64,
    /// Number of levels kept in truncated-matrix builds.
    pub n_max: usize,
}

impl OscillatorParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(self.mass) || !ok(self.omega0) || !ok(self.omega) {
            return Err(Error::InvalidInput("mass and frequencies must be positive".into()));
        }
        if (self.omega - self.omega0).abs() <= 1e-9 * self.omega0 {
            return Err(Error::InvalidInput("drive frequency must differ from omega0".into()));
        }
        if !self.force.is_finite() || !self.gamma.is_finite() {
            return Err(Error::InvalidInput("force and coupling must be finite".into()));
        }
        Ok(())
    }

    fn detuning_factor(&self) -> f64 {
        self.mass * (self.omega * self.omega - self.omega0 * self.omega0)
    }

    /// `V_nn^(+-1) = gamma F / (2 M (w^2 - w0^2))`.
    pub fn pseudo_element(&self) -> f64 {
        self.gamma * self.force / (2.0 * self.detuning_factor())
    }

    /// `<n-1|x|n> = sqrt(n / (2 M w0))`.
    pub fn x_element(&self, n: usize) -> f64 {
        (n as f64 / (2.0 * self.mass * self.omega0)).sqrt()
    }
}

/// The periodic classical orbit `xi(t) = F cos(wt) / (M (w^2 - w0^2))`.
pub fn osc_classical_orbit(p: &OscillatorParams, t: f64) -> f64 {
    p.force * (p.omega * t).cos() / p.detuning_factor()
}

/// `eps_n = w0 (n + 1/2) + F^2 / (4 M (w^2 - w0^2))`.
pub fn osc_quasienergy(p: &OscillatorParams, n: usize) -> f64 {
    p.omega0 * (n as f64 + 0.5) + p.force * p.force / (4.0 * p.detuning_factor())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscRates {
    /// `Gamma_{n-1,n}`.
    pub down: f64,
    /// `Gamma_{n+1,n}`.
    pub up: f64,
    /// `Gamma_nn^(+1)`.
    pub pseudo_absorb: f64,
    /// `Gamma_nn^(-1)`.
    pub pseudo_emit: f64,
}

fn bose(x: f64, beta: f64) -> f64 {
    if beta.is_infinite() {
        0.0
    } else {
        1.0 / (beta * x).exp_m1()
    }
}

/// The nonzero partial rates out of level `n`.
pub fn osc_rates(p: &OscillatorParams, beta: f64, j_at_omega0: f64, j_at_omega: f64, n: usize) -> OscRates {
    let g2 = p.gamma * p.gamma;
    let genuine = PI * g2 * j_at_omega0 / (p.mass * p.omega0);
    let occ0 = bose(p.omega0, beta);
    let pseudo = PI * g2 * p.force * p.force * j_at_omega / (2.0 * p.detuning_factor().powi(2));
    let occ = bose(p.omega, beta);
    OscRates {
        down: genuine * n as f64 * (1.0 + occ0),
        up: genuine * (n + 1) as f64 * occ0,
        pseudo_absorb: pseudo * occ,
        pseudo_emit: pseudo * (1.0 + occ),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscSteady {
    /// Ratio `p_n / p_{n-1} = e^{-beta w0}`.
    pub ratio: f64,
    pub transitions: f64,
    pub pseudo: f64,
    pub total: f64,
}

impl OscSteady {
    /// `p_n = (1 - q) q^n`.
    pub fn population(&self, n: usize) -> f64 {
        (1.0 - self.ratio) * self.ratio.powi(n as i32)
    }
}

/// Boltzmann occupations and `R = w pi gamma^2 F^2 J(w) / (2 M^2 (w^2 - w0^2)^2)`.
pub fn osc_steady_and_r(p: &OscillatorParams, bath: &BathSpec) -> Result<OscSteady> {
    p.validate()?;
    let ratio = if bath.beta.is_infinite() { 0.0 } else { (-bath.beta * p.omega0).exp() };
    let r = osc_rates(p, bath.beta, 0.0, bath.density.value(p.omega), 0);
    let total = p.omega * (r.pseudo_emit - r.pseudo_absorb);
    Ok(OscSteady { ratio, transitions: 0.0, pseudo: total, total })
}

/// Whether the Boltzmann weight beyond the `n_max` kept levels is negligible.
pub fn truncation_ok(p: &OscillatorParams, beta: f64) -> bool {
    let q = if beta.is_infinite() { 0.0 } else { (-beta * p.omega0).exp() };
    (1.0 - q) * q.powi(p.n_max as i32) < TRUNCATION_WEIGHT
}

fn x_matrix(p: &OscillatorParams) -> CMatrix {
    let n = p.n_max;
    let mut x = CMatrix::zeros(n, n);
    for k in 1..n {
        let e = Complex64::new(p.x_element(k), 0.0);
        x[(k - 1, k)] = e;
        x[(k, k - 1)] = e;
    }
    x
}

/// Number-basis truncation with `H^(0) = diag(w0 (n + 1/2))`,
/// `H^(+-1) = (F/2) x` and `V = gamma x`.
pub fn build_osc_hamiltonian(p: &OscillatorParams) -> Result<(FourierHamiltonian, CouplingOperator)> {
    p.validate()?;
    if p.n_max < 10 {
        return Err(Error::InvalidInput(format!("n_max must be at least 10, got {}", p.n_max)));
    }
    let x = x_matrix(p);
    let h0 = CMatrix::from_fn(p.n_max, p.n_max, |a, b| {
        if a == b {
            Complex64::new(p.omega0 * (a as f64 + 0.5), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let drive = &x * Complex64::new(0.5 * p.force, 0.0);
    let h = FourierHamiltonian::new(p.omega, [(0, h0), (1, drive.clone()), (-1, drive)])?;
    let v = CouplingOperator::new(&x * Complex64::new(p.gamma, 0.0))?;
    Ok((h, v))
}

/// Closed-form rate table on `n_max` levels, state index `n`.
pub fn osc_rate_table(p: &OscillatorParams, bath: &BathSpec) -> Result<RateTable> {
    p.validate()?;
    let n_max = p.n_max;
    let j0 = bath.density.value(p.omega0);
    let jw = bath.density.value(p.omega);
    let v_diag = Complex64::new(p.pseudo_element(), 0.0);
    let mut channels = Vec::with_capacity(4 * n_max);
    for n in 0..n_max {
        let r = osc_rates(p, bath.beta, j0, jw, n);
        let ch = |f: usize, ell: i64, frequency: f64, element: Complex64, rate: f64| Channel {
            final_state: f,
            initial_state: n,
            ell,
            frequency,
            element,
            rate,
            flagged: false,
        };
        if n > 0 {
            let e = Complex64::new(p.gamma * p.x_element(n), 0.0);
            channels.push(ch(n - 1, 0, -p.omega0, e, r.down));
        }
        if n + 1 < n_max {
            let e = Complex64::new(p.gamma * p.x_element(n + 1), 0.0);
            channels.push(ch(n + 1, 0, p.omega0, e, r.up));
        }
        channels.push(ch(n, 1, p.omega, v_diag, r.pseudo_absorb));
        channels.push(ch(n, -1, -p.omega, v_diag, r.pseudo_emit));
    }
    RateTable::from_channels(n_max, p.omega, *bath, channels)
}
