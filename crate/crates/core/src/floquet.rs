//! Floquet states of a finite-dimensional, time-periodic Hamiltonian.
//!
//! The one-period propagator (monodromy) is integrated with a fourth-order
//! commutator-free exponential stepper. Its eigenphases give the
//! quasienergies, and propagating its eigenvectors across the period gives
//! samples of the periodic Floquet functions, whose Fourier components are
//! then taken with an FFT on the same time grid.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{adjoint_defect, expm_hermitian, max_abs, unitarity_defect, unitary_eigen, CMatrix, CVector};

/// Upper bound accepted for `||U^† U - 1||` of any computed propagator.
pub const UNITARITY_BOUND: f64 = 1e-10;
/// Default number of time steps per period.
pub const DEFAULT_STEPS: usize = 1024;
/// Default bound on the discarded Fourier power of each Floquet function.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-12;
/// Eigenphases closer than this are reported as degenerate.
pub const DEGENERACY_PHASE_TOL: f64 = 1e-9;

const HERMITICITY_TOL: f64 = 1e-14;
/// Steps between polar re-projections of the accumulated propagator.
const REPROJECT_EVERY: usize = 256;
const MAX_HARMONIC: i64 = 1 << 30;

/// `H(t) = sum_k H^(k) exp(i k omega t)`, Hermitian for every `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierHamiltonian {
    dim: usize,
    omega: f64,
    components: BTreeMap<i64, CMatrix>,
}

impl FourierHamiltonian {
    pub fn new(omega: f64, components: impl IntoIterator<Item = (i64, CMatrix)>) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
        }
        let components: BTreeMap<i64, CMatrix> = components.into_iter().collect();
        let dim = match components.values().next() {
            Some(m) => m.nrows(),
            None => return Err(Error::InvalidInput("no Hamiltonian components".into())),
        };
        if dim < 2 {
            return Err(Error::InvalidInput(format!("dimension must be at least 2, got {dim}")));
        }
        for (k, m) in &components {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::InvalidInput(format!(
                    "component k = {k} has shape {}x{}, expected {dim}x{dim}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::InvalidInput(format!("component k = {k} is not finite")));
            }
        }
        let h = Self { dim, omega, components };
        let defect = h.hermiticity_defect();
        let scale = h.components.values().map(max_abs).fold(1.0, f64::max);
        if defect > HERMITICITY_TOL * scale {
            return Err(Error::NonHermitianInput { what: "Hamiltonian Fourier components".into(), defect });
        }
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn components(&self) -> &BTreeMap<i64, CMatrix> {
        &self.components
    }

    /// Largest harmonic index `K_H` with a stored component.
    pub fn max_harmonic(&self) -> usize {
        self.components.keys().map(|k| k.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Largest elementwise deviation of `H^(-k)` from `(H^(k))^†` over all `k`.
    pub fn hermiticity_defect(&self) -> f64 {
        let zero = CMatrix::zeros(self.dim, self.dim);
        self.components
            .iter()
            .map(|(k, m)| adjoint_defect(self.components.get(&-k).unwrap_or(&zero), m))
            .fold(0.0, f64::max)
    }

    /// Sum of the Frobenius norms of all components, a bound on `||H(t)||`.
    pub fn norm_bound(&self) -> f64 {
        self.components.values().map(|m| m.norm()).sum()
    }

    /// The Hamiltonian at time `t`, Hermitian to rounding.
    pub fn at(&self, t: f64) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for (&k, m) in &self.components {
            if k == 0 {
                h += m;
            } else {
                h += m * Complex64::from_polar(1.0, k as f64 * self.omega * t);
            }
        }
        (&h + h.adjoint()) * Complex64::new(0.5, 0.0)
    }
}

/// The one-period propagator `U(T, 0)`.
#[derive(Debug, Clone)]
pub struct MonodromyOperator {
    pub matrix: CMatrix,
    pub unitarity_defect: f64,
    /// Number of steps actually used after any automatic refinement.
    pub steps: usize,
}

fn check_steps(steps: usize) -> Result<()> {
    if steps < 64 || !steps.is_power_of_two() {
        return Err(Error::InvalidInput(format!("steps must be a power of two >= 64, got {steps}")));
    }
    Ok(())
}

// Fourth-order commutator-free exponential: two exponentials per step, each
// built from the Hamiltonian at the two Gauss-Legendre nodes.
const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3)/6
const CF_A1: f64 = 0.25 - 0.288_675_134_594_812_9; // (3 - 2 sqrt 3)/12
const CF_A2: f64 = 0.25 + 0.288_675_134_594_812_9; // (3 + 2 sqrt 3)/12

fn step_propagator(h: &FourierHamiltonian, t: f64, dt: f64) -> CMatrix {
    let h1 = h.at(t + (0.5 - GAUSS_OFFSET) * dt);
    let h2 = h.at(t + (0.5 + GAUSS_OFFSET) * dt);
    let first = expm_hermitian(&(&h1 * Complex64::from(CF_A2) + &h2 * Complex64::from(CF_A1)), dt);
    let second = expm_hermitian(&(&h1 * Complex64::from(CF_A1) + &h2 * Complex64::from(CF_A2)), dt);
    second * first
}

/// Integrates over one period; returns `U(t_j, 0)` for `j = 0..=steps`.
fn integrate_grid(h: &FourierHamiltonian, steps: usize) -> Vec<CMatrix> {
    let dt = h.period() / steps as f64;
    let mut grid = Vec::with_capacity(steps + 1);
    let mut u = CMatrix::identity(h.dim, h.dim);
    grid.push(u.clone());
    for j in 0..steps {
        u = step_propagator(h, j as f64 * dt, dt) * u;
        if (j + 1) % REPROJECT_EVERY == 0 {
            u = nearest_unitary(u);
        }
        grid.push(u.clone());
    }
    grid
}

/// One Newton-Schulz step `U (3 - U^dag U) / 2`; removes accumulated
/// round-off drift from unitarity without touching the integration error.
fn nearest_unitary(u: CMatrix) -> CMatrix {
    let n = u.nrows();
    let g = u.adjoint() * &u;
    let corr = (CMatrix::identity(n, n) * Complex64::from(3.0) - g) * Complex64::from(0.5);
    u * corr
}

/// Grid of `U(t_j, 0)`, `t_j = j T / steps`, with step doubling (up to 4x)
/// when the unitarity bound is missed. Always returns `steps + 1` entries.
fn checked_grid(h: &FourierHamiltonian, steps: usize) -> Result<(Vec<CMatrix>, f64)> {
    check_steps(steps)?;
    let mut worst = f64::NAN;
    for refine in [1usize, 2, 4] {
        let grid = integrate_grid(h, steps * refine);
        let defect = grid.iter().map(unitarity_defect).fold(0.0, f64::max);
        if defect < UNITARITY_BOUND {
            let grid = grid.into_iter().step_by(refine).collect();
            return Ok((grid, defect));
        }
        log::warn!("unitarity defect {defect:.3e} at {} steps; refining", steps * refine);
        worst = defect;
    }
    Err(Error::AccuracyFailure { defect: worst, steps: steps * 4 })
}

/// The monodromy `U(T, 0)` computed with `steps` fixed steps per period.
pub fn propagate_period(h: &FourierHamiltonian, steps: usize) -> Result<MonodromyOperator> {
    check_steps(steps)?;
    for refine in [1usize, 2, 4] {
        let n = steps * refine;
        let dt = h.period() / n as f64;
        let mut u = CMatrix::identity(h.dim, h.dim);
        for j in 0..n {
            u = step_propagator(h, j as f64 * dt, dt) * u;
            if (j + 1) % REPROJECT_EVERY == 0 {
                u = nearest_unitary(u);
            }
        }
        let defect = unitarity_defect(&u);
        if defect < UNITARITY_BOUND {
            return Ok(MonodromyOperator { matrix: u, unitarity_defect: defect, steps: n });
        }
        if refine == 4 {
            return Err(Error::AccuracyFailure { defect, steps: n });
        }
    }
    unreachable!()
}

/// Propagators `U(t_j, 0)` on the grid `t_j = j T / steps`, `j = 0..=steps`.
pub fn evolution_grid(h: &FourierHamiltonian, steps: usize) -> Result<Vec<CMatrix>> {
    checked_grid(h, steps).map(|(g, _)| g)
}

/// A periodic Floquet function stored by its Fourier components
/// `u^(k)` for `k = k_min .. k_min + len`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetFunction {
    k_min: i64,
    harmonics: Vec<CVector>,
}

impl FloquetFunction {
    pub fn new(k_min: i64, harmonics: Vec<CVector>) -> Self {
        Self { k_min, harmonics }
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.harmonics.len() as i64 - 1
    }

    pub fn harmonics(&self) -> &[CVector] {
        &self.harmonics
    }

    /// `u^(k)`, or `None` outside the stored window.
    pub fn component(&self, k: i64) -> Option<&CVector> {
        let idx = k - self.k_min;
        if idx < 0 {
            return None;
        }
        self.harmonics.get(idx as usize)
    }

    /// Iterator over `(k, u^(k))`.
    pub fn iter(&self) -> impl Iterator<Item = (i64, &CVector)> {
        let k0 = self.k_min;
        self.harmonics.iter().enumerate().map(move |(j, v)| (k0 + j as i64, v))
    }

    /// `u(t) = sum_k u^(k) exp(i k omega t)`.
    pub fn eval(&self, omega: f64, t: f64) -> CVector {
        let dim = self.harmonics.first().map_or(0, |v| v.len());
        let mut out = CVector::zeros(dim);
        for (k, v) in self.iter() {
            out += v * Complex64::from_polar(1.0, k as f64 * omega * t);
        }
        out
    }

    /// Extended-space inner product `sum_k <a^(k)|b^(k)>`, the time average
    /// of `<a(t)|b(t)>`.
    pub fn inner(&self, other: &FloquetFunction) -> Complex64 {
        self.inner_shifted(other, 0)
    }

    /// `sum_k <a^(k)|b^(k+s)>`.
    fn inner_shifted(&self, other: &FloquetFunction, s: i64) -> Complex64 {
        let lo = self.k_min.max(other.k_min - s);
        let hi = self.k_max().min(other.k_max() - s);
        let mut acc = Complex64::new(0.0, 0.0);
        for k in lo..=hi {
            acc += self.component(k).unwrap().dotc(other.component(k + s).unwrap());
        }
        acc
    }
}

/// Options for [`floquet_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Time steps per period; a power of two, at least 64.
    pub steps: usize,
    /// Initial harmonic cutoff `K`; `None` picks `max(K_H + 8, 16)`.
    pub harmonics: Option<usize>,
    pub truncation_tol: f64,
    /// Retain the sampled Floquet functions `u_n(t_j)`.
    pub keep_samples: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { steps: DEFAULT_STEPS, harmonics: None, truncation_tol: DEFAULT_TRUNCATION_TOL, keep_samples: false }
    }
}

impl SolveOptions {
    pub fn with_steps(steps: usize) -> Self {
        Self { steps, ..Self::default() }
    }
}

/// Quasienergies and Floquet functions of a periodic Hamiltonian.
#[derive(Debug, Clone)]
pub struct FloquetSolution {
    dim: usize,
    omega: f64,
    steps: usize,
    quasienergies: Vec<f64>,
    functions: Vec<FloquetFunction>,
    samples: Option<Vec<Vec<CVector>>>,
    truncation_tail: Vec<f64>,
    harmonic_cutoff: usize,
    degenerate: bool,
    unitarity_defect: f64,
}

impl FloquetSolution {
    /// Assembles a solution from known quasienergies and Floquet functions,
    /// e.g. from a closed-form model.
    pub fn from_parts(omega: f64, quasienergies: Vec<f64>, functions: Vec<FloquetFunction>) -> Result<Self> {
        if quasienergies.len() != functions.len() || functions.is_empty() {
            return Err(Error::InvalidInput("one quasienergy per Floquet function required".into()));
        }
        let dim = functions[0].harmonics.first().map_or(0, |v| v.len());
        if functions.iter().any(|f| f.harmonics.is_empty() || f.harmonics.iter().any(|v| v.len() != dim)) {
            return Err(Error::InvalidInput("inconsistent Floquet function dimensions".into()));
        }
        let harmonic_cutoff =
            functions.iter().map(|f| f.k_min.unsigned_abs().max(f.k_max().unsigned_abs()) as usize).max().unwrap_or(0);
        let n = functions.len();
        Ok(Self {
            dim,
            omega,
            steps: 0,
            quasienergies,
            functions,
            samples: None,
            truncation_tail: vec![0.0; n],
            harmonic_cutoff,
            degenerate: false,
            unitarity_defect: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn num_states(&self) -> usize {
        self.functions.len()
    }

    pub fn quasienergies(&self) -> &[f64] {
        &self.quasienergies
    }

    pub fn quasienergy(&self, n: usize) -> f64 {
        self.quasienergies[n]
    }

    pub fn functions(&self) -> &[FloquetFunction] {
        &self.functions
    }

    pub fn function(&self, n: usize) -> &FloquetFunction {
        &self.functions[n]
    }

    /// Samples `u_n(t_j)`, when requested at solve time.
    pub fn samples(&self) -> Option<&[Vec<CVector>]> {
        self.samples.as_deref()
    }

    pub fn truncation_tail(&self) -> &[f64] {
        &self.truncation_tail
    }

    /// Harmonic cutoff `K` used for the stored window `|k| <= K`.
    pub fn harmonic_cutoff(&self) -> usize {
        self.harmonic_cutoff
    }

    /// Two or more eigenphases of the monodromy coincide within
    /// [`DEGENERACY_PHASE_TOL`]; state labels are then basis dependent.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect
    }

    /// `max_{m,n} |sum_k <u_m^(k)|u_n^(k)> - delta_mn|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.num_states();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((self.functions[a].inner(&self.functions[b]) - target).norm());
            }
        }
        worst
    }

    fn check_index(&self, n: usize) -> Result<()> {
        if n >= self.num_states() {
            return Err(Error::IndexOutOfRange { index: n, dim: self.num_states() });
        }
        Ok(())
    }

    /// Re-factorizes state `n` as `u_n exp(i r omega t)` with quasienergy
    /// `eps_n + r omega`. The full Floquet state is unchanged.
    pub fn shift_representative(&self, n: usize, r: i64) -> Result<Self> {
        self.check_index(n)?;
        let f = &self.functions[n];
        let lo = f.k_min.checked_add(r);
        let hi = f.k_max().checked_add(r);
        match (lo, hi) {
            (Some(lo), Some(hi)) if lo.abs() <= MAX_HARMONIC && hi.abs() <= MAX_HARMONIC => {}
            _ => return Err(Error::ShiftOverflow { state: n, shift: r }),
        }
        let mut out = self.clone();
        out.functions[n].k_min += r;
        out.quasienergies[n] += r as f64 * self.omega;
        if let Some(samples) = out.samples.as_mut() {
            let dt = self.period() / samples[n].len() as f64;
            for (j, v) in samples[n].iter_mut().enumerate() {
                *v *= Complex64::from_polar(1.0, r as f64 * self.omega * j as f64 * dt);
            }
        }
        Ok(out)
    }

    /// The periodic part `u_n(t)`.
    pub fn floquet_function_at(&self, n: usize, t: f64) -> Result<CVector> {
        self.check_index(n)?;
        Ok(self.functions[n].eval(self.omega, t.rem_euclid(self.period())))
    }

    /// The Floquet state `u_n(t) exp(-i eps_n t)`.
    pub fn reconstruct_state(&self, n: usize, t: f64) -> Result<CVector> {
        let u = self.floquet_function_at(n, t)?;
        Ok(u * Complex64::from_polar(1.0, -self.quasienergies[n] * t))
    }

    /// Relabels and re-represents the states of `self` so that they continue
    /// those of `reference` (e.g. the previous point of a parameter sweep).
    ///
    /// States are matched by the largest extended-space overlap over all
    /// relative harmonic shifts; the best shift also fixes the representative,
    /// so quasienergies track continuously across Brillouin-zone boundaries.
    pub fn align_to(&self, reference: &FloquetSolution) -> Result<Self> {
        let n = self.num_states();
        if reference.num_states() != n || reference.dim != self.dim {
            return Err(Error::InvalidInput("reference solution has a different shape".into()));
        }
        // (overlap, reference index, own index, shift)
        let mut candidates = Vec::with_capacity(n * n);
        for (a, fa) in reference.functions.iter().enumerate() {
            for (b, fb) in self.functions.iter().enumerate() {
                let mut best = (0.0, 0i64);
                for s in (fb.k_min - fa.k_max())..=(fb.k_max() - fa.k_min) {
                    let w = fa.inner_shifted(fb, s).norm_sqr();
                    if w > best.0 {
                        best = (w, s);
                    }
                }
                candidates.push((best.0, a, b, best.1));
            }
        }
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
        let mut assigned: Vec<Option<(usize, i64)>> = vec![None; n];
        let mut used = vec![false; n];
        for (_, a, b, s) in candidates {
            if assigned[a].is_none() && !used[b] {
                assigned[a] = Some((b, s));
                used[b] = true;
            }
        }
        let mut shifted = self.clone();
        for &(b, s) in assigned.iter().flatten() {
            if s != 0 {
                shifted = shifted.shift_representative(b, -s)?;
            }
        }
        let order: Vec<usize> = assigned.iter().map(|x| x.expect("complete assignment").0).collect();
        Ok(shifted.permuted(&order))
    }

    /// New solution whose state `j` is state `order[j]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut out = self.clone();
        out.quasienergies = order.iter().map(|&j| self.quasienergies[j]).collect();
        out.functions = order.iter().map(|&j| self.functions[j].clone()).collect();
        out.truncation_tail = order.iter().map(|&j| self.truncation_tail[j]).collect();
        if let Some(s) = &self.samples {
            out.samples = Some(order.iter().map(|&j| s[j].clone()).collect());
        }
        out
    }
}

/// Quasienergy in the first Brillouin zone `[-omega/2, omega/2)` from a
/// monodromy eigenvalue, `eps = -arg(lambda) / T` with `arg in (-pi, pi]`.
fn quasienergy_from_eigenvalue(lambda: Complex64, period: f64) -> f64 {
    let mut arg = lambda.arg();
    if arg <= -PI {
        arg = PI;
    }
    -arg / period
}

/// Computes quasienergies and Floquet-function Fourier components.
pub fn floquet_solve(h: &FourierHamiltonian, opts: &SolveOptions) -> Result<FloquetSolution> {
    let steps = opts.steps;
    check_steps(steps)?;
    let k_h = h.max_harmonic();
    let k_start = opts.harmonics.unwrap_or((k_h + 8).max(16));
    if k_start < k_h {
        return Err(Error::InvalidInput(format!("harmonic cutoff {k_start} below Hamiltonian bandwidth {k_h}")));
    }
    let k_limit = steps / 4;
    if k_start > k_limit {
        return Err(Error::InvalidInput(format!("harmonic cutoff {k_start} exceeds steps/4 = {k_limit}")));
    }

    let (grid, defect) = checked_grid(h, steps)?;
    let period = h.period();
    let dim = h.dim;
    let (values, vectors) = unitary_eigen(&grid[steps]);

    let mut states: Vec<(f64, usize)> =
        values.iter().enumerate().map(|(j, &l)| (quasienergy_from_eigenvalue(l, period), j)).collect();
    states.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut degenerate = false;
    for a in 0..dim {
        for b in (a + 1)..dim {
            if (values[a] / values[b]).arg().abs() < DEGENERACY_PHASE_TOL {
                degenerate = true;
            }
        }
    }
    if degenerate {
        log::warn!("degenerate monodromy eigenphases; Floquet state labels are basis dependent");
    }

    let dt = period / steps as f64;
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(steps);
    let scale = 1.0 / steps as f64;

    let mut quasienergies = Vec::with_capacity(dim);
    let mut spectra: Vec<Vec<CVector>> = Vec::with_capacity(dim); // [state][bin] -> vector
    let mut all_samples = Vec::with_capacity(dim);
    for &(eps, j) in &states {
        let v = vectors.column(j).clone_owned();
        let samples: Vec<CVector> = (0..steps)
            .map(|s| (&grid[s] * &v) * Complex64::from_polar(1.0, eps * s as f64 * dt))
            .collect();
        let mut bins = vec![CVector::zeros(dim); steps];
        let mut buf = vec![Complex64::new(0.0, 0.0); steps];
        for a in 0..dim {
            for (s, x) in buf.iter_mut().enumerate() {
                *x = samples[s][a];
            }
            fft.process(&mut buf);
            for (m, x) in buf.iter().enumerate() {
                bins[m][a] = x * scale;
            }
        }
        quasienergies.push(eps);
        spectra.push(bins);
        if opts.keep_samples {
            all_samples.push(samples);
        }
    }

    let signed = |m: usize| -> i64 {
        if m < steps / 2 {
            m as i64
        } else {
            m as i64 - steps as i64
        }
    };
    let tails_for = |k: usize| -> Vec<f64> {
        spectra
            .iter()
            .map(|bins| {
                bins.iter()
                    .enumerate()
                    .filter(|(m, _)| signed(*m).unsigned_abs() as usize > k)
                    .map(|(_, v)| v.norm_squared())
                    .sum()
            })
            .collect()
    };

    let mut k = k_start;
    let mut tails = tails_for(k);
    while tails.iter().cloned().fold(0.0, f64::max) >= opts.truncation_tol {
        if k * 2 > k_limit {
            return Err(Error::TruncationFailure { tail: tails.iter().cloned().fold(0.0, f64::max), harmonics: k });
        }
        k *= 2;
        tails = tails_for(k);
    }

    let k_i = k as i64;
    let functions = spectra
        .iter()
        .map(|bins| {
            let harmonics = (-k_i..=k_i).map(|kk| bins[kk.rem_euclid(steps as i64) as usize].clone()).collect();
            FloquetFunction { k_min: -k_i, harmonics }
        })
        .collect();

    Ok(FloquetSolution {
        dim,
        omega: h.omega,
        steps,
        quasienergies,
        functions,
        samples: opts.keep_samples.then_some(all_samples),
        truncation_tail: tails,
        harmonic_cutoff: k,
        degenerate,
        unitarity_defect: defect,
    })
}

