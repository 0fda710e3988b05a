//! Two-level system in a circularly polarized field,
//! `H(t) = w0/2 sz + (muF/2)(sx cos wt + sy sin wt)`, coupled through `V = gamma sx`
//! to a bath with constant spectral density `J0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::bath::{BathSpec, SpectralDensity};
use crate::error::{Error, Result};
use crate::floquet::{FloquetFunction, FloquetSolution, FourierHamiltonian};
use crate::linalg::{CMatrix, CVector};
use crate::rates::{Channel, CouplingOperator, RateTable};

/// Index of the `-` state in analytic solutions and rate tables.
pub const MINUS: usize = 0;
/// Index of the `+` state.
pub const PLUS: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams {
    pub omega0: f64,
    pub omega: f64,
    pub mu_f: f64,
    pub gamma: f64,
    /// Constant spectral density `J0`.
    pub j0: f64,
}

impl TwoLevelParams {
    /// Parameters with `gamma` and `J0` chosen so that `Gamma0 = 1`.
    pub fn normalized(omega0: f64, omega: f64, mu_f: f64) -> Self {
        Self { omega0, omega, mu_f, gamma: 1.0, j0: 1.0 / (2.0 * PI) }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !ok(self.omega0) {
            return Err(Error::InvalidInput(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if !ok(self.omega) {
            return Err(Error::InvalidInput(format!("omega must be positive, got {}", self.omega)));
        }
        if !(self.mu_f >= 0.0 && self.mu_f.is_finite()) {
            return Err(Error::InvalidInput(format!("muF must be nonnegative, got {}", self.mu_f)));
        }
        if !(self.gamma.is_finite() && self.j0 >= 0.0 && self.j0.is_finite()) {
            return Err(Error::InvalidInput("invalid coupling strength or spectral density".into()));
        }
        Ok(())
    }

    /// Detuning `delta = w0 - w`.
    pub fn delta(&self) -> f64 {
        self.omega0 - self.omega
    }

    /// Rabi frequency `Omega = sqrt(delta^2 + muF^2)`.
    pub fn rabi(&self) -> f64 {
        self.delta().hypot(self.mu_f)
    }

    /// `Gamma0 = 2 pi gamma^2 J0`.
    pub fn gamma0(&self) -> f64 {
        2.0 * PI * self.gamma * self.gamma * self.j0
    }

    pub fn bath(&self, beta: f64) -> Result<BathSpec> {
        BathSpec::new(beta, SpectralDensity::Constant { j0: self.j0 })
    }
}

/// Closed-form Floquet data.
#[derive(Debug, Clone, PartialEq)]
pub struct TlsFloquet {
    pub delta: f64,
    pub rabi: f64,
    /// `(w + Omega) / 2`.
    pub eps_plus: f64,
    /// `(w - Omega) / 2`.
    pub eps_minus: f64,
    pub plus: FloquetFunction,
    pub minus: FloquetFunction,
    /// Representative of the `+` state that connects continuously to a bare
    /// level as `F -> 0`.
    pub bare_plus: f64,
    pub bare_minus: f64,
}

impl TlsFloquet {
    /// The two states as a solution, ordered `[-, +]`.
    pub fn solution(&self, omega: f64) -> Result<FloquetSolution> {
        FloquetSolution::from_parts(
            omega,
            vec![self.eps_minus, self.eps_plus],
            vec![self.minus.clone(), self.plus.clone()],
        )
    }
}

fn spinor(a: f64, b: f64) -> FloquetFunction {
    let c = |x: f64| Complex64::new(x, 0.0);
    FloquetFunction::new(0, vec![CVector::from_vec(vec![c(a), c(0.0)]), CVector::from_vec(vec![c(0.0), c(b)])])
}

/// Quasienergies `eps_+- = (w +- Omega)/2` and Floquet functions
/// `u_+ = (sqrt(Omega+delta), sqrt(Omega-delta) e^{iwt}) / sqrt(2 Omega)`,
/// `u_- = (-sqrt(Omega-delta), sqrt(Omega+delta) e^{iwt}) / sqrt(2 Omega)`.
pub fn tls_floquet(p: &TwoLevelParams) -> Result<TlsFloquet> {
    p.validate()?;
    let delta = p.delta();
    let rabi = p.rabi();
    let (plus, minus) = if rabi == 0.0 {
        (spinor(1.0, 0.0), spinor(0.0, 1.0))
    } else {
        let n = (2.0 * rabi).sqrt();
        let s_plus = (rabi + delta).max(0.0).sqrt() / n;
        let s_minus = (rabi - delta).max(0.0).sqrt() / n;
        (spinor(s_plus, s_minus), spinor(-s_minus, s_plus))
    };
    let eps_plus = 0.5 * (p.omega + rabi);
    let eps_minus = 0.5 * (p.omega - rabi);
    let (bare_plus, bare_minus) =
        if delta >= 0.0 { (eps_plus, eps_minus - p.omega) } else { (eps_plus - p.omega, eps_minus) };
    Ok(TlsFloquet { delta, rabi, eps_plus, eps_minus, plus, minus, bare_plus, bare_minus })
}

/// Partial rates in units of time^-1, indexed `[l = -1, l = +1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlsRates {
    pub plus_minus: [f64; 2],
    pub minus_plus: [f64; 2],
    pub plus_plus: [f64; 2],
    pub minus_minus: [f64; 2],
    /// `Omega = w`: the `(+-, -1)` and `(-+, +1)` channels sit at zero
    /// frequency; they are reported as zero and flagged in rate tables.
    pub resonant: bool,
}

impl TlsRates {
    pub fn get(&self, f: usize, i: usize, ell: i64) -> f64 {
        let idx = match ell {
            -1 => 0,
            1 => 1,
            _ => return 0.0,
        };
        match (f, i) {
            (PLUS, MINUS) => self.plus_minus[idx],
            (MINUS, PLUS) => self.minus_plus[idx],
            (PLUS, PLUS) => self.plus_plus[idx],
            (MINUS, MINUS) => self.minus_minus[idx],
            _ => 0.0,
        }
    }
}

/// Bose occupation `1/(e^{beta x} - 1)` for `x > 0`.
fn bose(x: f64, beta: f64) -> f64 {
    if beta.is_infinite() {
        0.0
    } else {
        1.0 / (beta * x).exp_m1()
    }
}

/// Closed-form partial rates with the thermal branch of the
/// `(+-, -1)` / `(-+, +1)` channels selected by the sign of `Omega - w`.
pub fn tls_rates(p: &TwoLevelParams, beta: f64) -> Result<TlsRates> {
    p.validate()?;
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    let g0 = p.gamma0();
    let (delta, rabi, w) = (p.delta(), p.rabi(), p.omega);
    let (wp, wm, wd) = if rabi == 0.0 {
        (0.25, 0.25, 0.0)
    } else {
        let r2 = 4.0 * rabi * rabi;
        ((rabi + delta).powi(2) / r2, (rabi - delta).powi(2) / r2, p.mu_f * p.mu_f / r2)
    };
    let n_sum = bose(rabi + w, beta);
    let plus_minus_up = g0 * wp * n_sum;
    let minus_plus_down = g0 * wp * (1.0 + n_sum);
    let resonant = rabi == w;
    let (plus_minus_side, minus_plus_side) = if resonant {
        (0.0, 0.0)
    } else if rabi < w {
        // Upward +- channel emits w - Omega into the bath.
        let n = bose(w - rabi, beta);
        (g0 * wm * (1.0 + n), g0 * wm * n)
    } else {
        let n = bose(rabi - w, beta);
        (g0 * wm * n, g0 * wm * (1.0 + n))
    };
    let nw = bose(w, beta);
    let diag_abs = g0 * wd * nw;
    let diag_emit = g0 * wd * (1.0 + nw);
    Ok(TlsRates {
        plus_minus: [plus_minus_side, plus_minus_up],
        minus_plus: [minus_plus_down, minus_plus_side],
        plus_plus: [diag_emit, diag_abs],
        minus_minus: [diag_emit, diag_abs],
        resonant,
    })
}

/// `2 e^{-beta y} cosh(beta x)` and `2 e^{-beta y} sinh(beta x)` for `0 <= x <= y`.
fn scaled_cosh_sinh(x: f64, y: f64, beta: f64) -> (f64, f64) {
    let a = decay(y - x, beta);
    let b = decay(x + y, beta);
    (a + b, a - b)
}

fn decay(z: f64, beta: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else if beta.is_infinite() {
        0.0
    } else {
        (-beta * z).exp()
    }
}

/// Differences of the scaled `cosh` and `sinh` between arguments `y` and
/// `x = y - d`, evaluated without cancellation for small `d`.
fn scaled_differences(d: f64, y: f64, beta: f64) -> (f64, f64) {
    if d == 0.0 {
        return (0.0, 0.0);
    }
    let lead = if beta.is_infinite() { 1.0 } else { -(-beta * d).exp_m1() };
    let tail = if beta.is_infinite() {
        0.0
    } else if beta * d > 1.0 {
        decay(2.0 * y - d, beta) - decay(2.0 * y, beta)
    } else {
        (-2.0 * beta * y).exp() * (beta * d).exp_m1()
    };
    (lead - tail, lead + tail)
}

/// Shared pieces of the population and dissipation formulas, scaled by
/// `2 e^{-beta max(Omega, w)}`: `(numerator of p_- - 1/2, Delta^2, sinh(beta w))`.
fn scaled_terms(p: &TwoLevelParams, beta: f64) -> (f64, f64, f64) {
    let (delta, rabi, w) = (p.delta(), p.rabi(), p.omega);
    let (big, small) = if rabi <= w { (w, rabi) } else { (rabi, w) };
    let (_, s_big) = scaled_cosh_sinh(big, big, beta);
    let (_, s_small) = scaled_cosh_sinh(small, big, beta);
    // |Omega - w| and Omega - delta from differences of squares.
    let gap = (((delta - w) * (delta + w) + p.mu_f * p.mu_f) / (rabi + w)).abs();
    let rabi_minus_delta = p.mu_f * p.mu_f / (rabi + delta);
    let (dc, ds) = scaled_differences(gap, big, beta);
    let den = if delta > 0.0 {
        rabi_minus_delta * rabi_minus_delta * s_big + 2.0 * rabi * delta * ds
    } else {
        (rabi * rabi + delta * delta) * s_big - 2.0 * rabi * delta * s_small
    };
    let sum_sq = rabi * rabi + delta * delta;
    let num = if rabi <= w { rabi * delta * dc } else { 0.5 * sum_sq * dc };
    let sinh_w = if rabi <= w { s_big } else { s_small };
    (num, den, sinh_w)
}

/// Steady-state population `p_-` of the `-` Floquet state.
pub fn tls_population(p: &TwoLevelParams, beta: f64) -> Result<f64> {
    p.validate()?;
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    let (num, den, _) = scaled_terms(p, beta);
    if den == 0.0 {
        if p.delta() > 0.0 {
            // Undriven with w0 = 2w: the limit muF -> 0 is the bare Boltzmann weight.
            return Ok(1.0 / (1.0 + decay(p.omega0, beta)));
        }
        // Undriven at exact resonance: degenerate levels, equal weights.
        return Ok(0.5);
    }
    Ok(0.5 + num / den)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TlsDissipation {
    pub pseudo: f64,
    pub transitions: f64,
    pub total: f64,
}

/// `R_pseudo = (w Gamma0 / 4)(muF/Omega)^2` and
/// `R_trans = (w Gamma0 / 4)(Omega^2 - delta^2)^2 sinh(beta w) / (Delta^2 Omega^2)`.
pub fn tls_dissipation(p: &TwoLevelParams, beta: f64) -> Result<TlsDissipation> {
    p.validate()?;
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
    }
    if p.mu_f == 0.0 {
        return Ok(TlsDissipation { pseudo: 0.0, transitions: 0.0, total: 0.0 });
    }
    let scale = 0.25 * p.omega * p.gamma0();
    let rabi = p.rabi();
    let ratio = p.mu_f / rabi;
    let pseudo = scale * ratio * ratio;
    let (_, den, sinh_w) = scaled_terms(p, beta);
    let transitions = scale * ratio * ratio * p.mu_f * p.mu_f * sinh_w / den;
    Ok(TlsDissipation { pseudo, transitions, total: pseudo + transitions })
}

/// Fourier components of the driven two-level Hamiltonian in the bare basis
/// `(up, down)` and the coupling `gamma sx`.
pub fn build_tls_hamiltonian(p: &TwoLevelParams) -> Result<(FourierHamiltonian, CouplingOperator)> {
    p.validate()?;
    let c = |x: f64| Complex64::new(x, 0.0);
    let h0 = CMatrix::from_row_slice(2, 2, &[c(0.5 * p.omega0), c(0.0), c(0.0), c(-0.5 * p.omega0)]);
    // (muF/4)(sx - i sy) = (muF/2)|down><up|
    let h1 = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.5 * p.mu_f), c(0.0)]);
    let hm1 = h1.adjoint();
    let h = FourierHamiltonian::new(p.omega, [(0, h0), (1, h1), (-1, hm1)])?;
    let v = CMatrix::from_row_slice(2, 2, &[c(0.0), c(p.gamma), c(p.gamma), c(0.0)]);
    Ok((h, CouplingOperator::new(v)?))
}

/// Reorders a numerically computed two-level solution into the `[-, +]`
/// convention with the closed-form representatives, by maximal overlap.
pub fn label_tls_solution(sol: &FloquetSolution, p: &TwoLevelParams) -> Result<FloquetSolution> {
    let reference = tls_floquet(p)?.solution(p.omega)?;
    sol.align_to(&reference)
}

/// Rate table in the `[-, +]` ordering built from the closed forms.
pub fn tls_rate_table(p: &TwoLevelParams, beta: f64) -> Result<RateTable> {
    let rates = tls_rates(p, beta)?;
    let fl = tls_floquet(p)?;
    let eps = [fl.eps_minus, fl.eps_plus];
    let (delta, rabi, g) = (fl.delta, fl.rabi, p.gamma);
    let el = |f: usize, i: usize, ell: i64| -> f64 {
        if rabi == 0.0 {
            return 0.0;
        }
        let r2 = 2.0 * rabi;
        match (f, i, ell) {
            (PLUS, MINUS, 1) | (MINUS, PLUS, -1) => g * (rabi + delta) / r2,
            (PLUS, MINUS, -1) | (MINUS, PLUS, 1) => -g * (rabi - delta) / r2,
            (PLUS, PLUS, _) => g * p.mu_f / r2,
            (MINUS, MINUS, _) => -g * p.mu_f / r2,
            _ => 0.0,
        }
    };
    let mut channels = Vec::with_capacity(8);
    for f in [MINUS, PLUS] {
        for i in [MINUS, PLUS] {
            for ell in [-1i64, 1] {
                let frequency = eps[f] - eps[i] + ell as f64 * p.omega;
                let flagged = rates.resonant && f != i && frequency.abs() < 1e-9 * p.omega;
                channels.push(Channel {
                    final_state: f,
                    initial_state: i,
                    ell,
                    frequency: if f == i { ell as f64 * p.omega } else { frequency },
                    element: Complex64::new(el(f, i, ell), 0.0),
                    rate: rates.get(f, i, ell),
                    flagged,
                });
            }
        }
    }
    RateTable::from_channels(2, p.omega, p.bath(beta)?, channels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::{dissipation_rate, steady_state};
    use approx::assert_relative_eq;

    const ORACLE: [((f64, f64, f64, f64), f64, f64, f64); 4] = [
        ((1.0, 1.5, 1.0, 1.0), 0.421_906_150_691_103_2, 0.135_303_888_213_521_97, 0.3),
        ((1.0, 0.5, 0.3, 2.0), 0.878_181_801_002_557_7, 0.020_621_307_336_453_726, 0.033_088_235_294_117_65),
        ((1.0, 1.5, 3.0, 10.0), 0.999_999_866_507_163_2, 6.990_643_270_362_207e-8, 0.364_864_864_864_864_86),
        ((1.0, 0.5, 2.0, 0.2), 0.607_358_599_084_134_7, 0.027_696_592_370_534_09, 0.117_647_058_823_529_41),
    ];

    #[test]
    fn closed_forms_match_high_precision_values() {
        for ((w0, w, mf, beta), pm, rt, rp) in ORACLE {
            let p = TwoLevelParams::normalized(w0, w, mf);
            assert_relative_eq!(tls_population(&p, beta).unwrap(), pm, max_relative = 1e-13);
            let d = tls_dissipation(&p, beta).unwrap();
            assert_relative_eq!(d.transitions, rt, max_relative = 1e-12);
            assert_relative_eq!(d.pseudo, rp, max_relative = 1e-13);
        }
    }

    #[test]
    fn rate_table_reproduces_population_and_dissipation() {
        for ((w0, w, mf, beta), pm, rt, rp) in ORACLE {
            let p = TwoLevelParams::normalized(w0, w, mf);
            let table = tls_rate_table(&p, beta).unwrap();
            let ss = steady_state(table.totals()).unwrap();
            assert_relative_eq!(ss.p[MINUS], pm, max_relative = 1e-12);
            let r = dissipation_rate(&table, &ss).unwrap();
            assert_relative_eq!(r.transitions, rt, max_relative = 1e-9);
            assert_relative_eq!(r.pseudo, rp, max_relative = 1e-12);
        }
    }

    #[test]
    fn three_four_five() {
        let p = TwoLevelParams::normalized(4.0, 1.0, 4.0);
        assert_eq!(p.rabi(), 5.0);
    }

    #[test]
    fn weak_drive_connects_to_bare_levels() {
        for (w0, w) in [(1.0, 0.6), (1.0, 1.7)] {
            let f = tls_floquet(&TwoLevelParams::normalized(w0, w, 1e-7)).unwrap();
            let (up, down) = if w0 > w { (f.eps_plus, f.eps_minus) } else { (f.eps_minus, f.eps_plus) };
            assert!((up - w0 / 2.0).abs() < 1e-9);
            assert!((down - (w - w0 / 2.0)).abs() < 1e-9);
            assert!(((f.bare_plus.max(f.bare_minus)) - w0 / 2.0).abs() < 1e-9);
            assert!(((f.bare_plus.min(f.bare_minus)) + w0 / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn blue_detuned_representatives_cross() {
        let gap = |mf: f64| {
            let f = tls_floquet(&TwoLevelParams::normalized(1.0, 1.5, mf)).unwrap();
            f.bare_minus - f.bare_plus
        };
        assert!(gap(0.1) > 0.0);
        assert!(gap(2.0) < 0.0);
    }

    #[test]
    fn zero_temperature_rates() {
        let p = TwoLevelParams::normalized(1.0, 1.5, 0.7);
        let (d, o) = (p.delta(), p.rabi());
        let r = tls_rates(&p, f64::INFINITY).unwrap();
        assert_eq!(r.plus_minus[1], 0.0);
        assert_relative_eq!(r.minus_plus[0], (o + d).powi(2) / (4.0 * o * o), max_relative = 1e-14);
        assert_relative_eq!(r.plus_minus[0], (o - d).powi(2) / (4.0 * o * o), max_relative = 1e-14);
        assert!(r.plus_minus[0] > 0.0);
        let pm = tls_population(&p, f64::INFINITY).unwrap();
        assert_relative_eq!(pm, 0.5 + o * d / (o * o + d * d), max_relative = 1e-14);

        let strong = TwoLevelParams::normalized(1.0, 1.5, 3.0);
        assert_eq!(tls_population(&strong, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(tls_dissipation(&strong, f64::INFINITY).unwrap().transitions, 0.0);
    }

    #[test]
    fn pseudo_rate_difference() {
        let p = TwoLevelParams::normalized(1.0, 0.8, 0.9);
        let (d, o) = (p.delta(), p.rabi());
        let r = tls_rates(&p, 1.3).unwrap();
        let expect = (o * o - d * d) / (4.0 * o * o);
        assert_relative_eq!(r.plus_plus[0] - r.plus_plus[1], expect, max_relative = 1e-12);
        assert_relative_eq!(r.minus_minus[0] - r.minus_minus[1], expect, max_relative = 1e-12);
    }

    #[test]
    fn weak_drive_at_double_resonance_tends_to_bare_boltzmann() {
        // w0 = 2w: bare levels are degenerate modulo w.
        let boltzmann = 1.0 / (1.0 + (-10f64).exp());
        for mf in [0.0, 1e-8, 1e-6] {
            let pm = tls_population(&TwoLevelParams::normalized(1.0, 0.5, mf), 10.0).unwrap();
            assert_relative_eq!(pm, boltzmann, max_relative = 1e-11);
        }
    }

    #[test]
    fn limits() {
        let beta = 1.0;
        assert_eq!(tls_dissipation(&TwoLevelParams::normalized(1.0, 1.5, 0.0), beta).unwrap().total, 0.0);
        assert_eq!(tls_population(&TwoLevelParams::normalized(1.0, 1.0, 0.4), beta).unwrap(), 0.5);
        assert_relative_eq!(
            tls_dissipation(&TwoLevelParams::normalized(1.0, 1.0, 0.4), beta).unwrap().pseudo,
            0.25,
            max_relative = 1e-15
        );
        let far = TwoLevelParams::normalized(1.0, 1.5, 1e4);
        assert!((tls_dissipation(&far, beta).unwrap().total - 0.375).abs() < 1e-6);
        assert!(tls_population(&far, beta).unwrap() > 1.0 - 1e-6);
    }

    #[test]
    fn branches_agree_at_omega_equals_rabi() {
        // Omega = w for w0 = 1, w = 1.5, muF = sqrt(2).
        let beta = 0.8;
        let at = |mf: f64| tls_population(&TwoLevelParams::normalized(1.0, 1.5, mf), beta).unwrap();
        let mf = 2f64.sqrt();
        let h = 1e-11;
        assert!((at(mf - h) - at(mf + h)).abs() < 1e-9);
        assert!((at(mf) - at(mf + h)).abs() < 1e-9);
    }

    #[test]
    fn hamiltonian_components_are_adjoint() {
        let (h, v) = build_tls_hamiltonian(&TwoLevelParams::normalized(1.0, 1.5, 0.8)).unwrap();
        let c = h.components();
        assert_eq!(c[&-1], c[&1].adjoint());
        assert_eq!(v.matrix(), &v.matrix().adjoint());
    }
}
