//! Golden-rule rates between Floquet states.
//!
//! A transition `i -> f` is not a single line but a ladder of channels
//! labelled by the harmonic `l`, with frequency `(eps_f - eps_i) + l omega`
//! and Fourier matrix element `V_fi^(l) = sum_k <u_f^(k)|V|u_i^(k+l)>`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bath::BathSpec;
use crate::error::{Error, Result};
use crate::floquet::FloquetSolution;
use crate::linalg::{adjoint_defect, max_abs, CMatrix, CVector};

const HERMITICITY_TOL: f64 = 1e-14;
/// Channels at a divergent kernel are resolved to zero below this `|V|^2`.
pub const DEGENERATE_ELEMENT_TOL: f64 = 1e-12;
/// Partial rates below this are flushed to zero.
pub const RATE_FLUSH: f64 = 1e-300;
/// Channels with `|frequency| < ZERO_FREQ_REL * omega` are treated as resonant.
pub const ZERO_FREQ_REL: f64 = 1e-9;

/// System part `V` of the system-bath coupling `V (x) W`; any coupling
/// strength is folded into the matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOperator {
    matrix: CMatrix,
}

impl CouplingOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidInput("coupling operator must be square".into()));
        }
        let defect = adjoint_defect(&matrix, &matrix);
        if defect > HERMITICITY_TOL * max_abs(&matrix).max(1.0) {
            return Err(Error::NonHermitianInput { what: "coupling operator".into(), defect });
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Debug, Clone)]
struct ElementBlock {
    ell_min: i64,
    values: Vec<Complex64>,
}

/// Fourier matrix elements `V_fi^(l)` over each pair's convolution support.
#[derive(Debug, Clone)]
pub struct FourierElements {
    dim: usize,
    blocks: Vec<ElementBlock>,
}

impl FourierElements {
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn block(&self, f: usize, i: usize) -> &ElementBlock {
        &self.blocks[f * self.dim + i]
    }

    /// `V_fi^(l)`; zero outside the computed support.
    pub fn get(&self, f: usize, i: usize, ell: i64) -> Complex64 {
        let b = self.block(f, i);
        let idx = ell - b.ell_min;
        if idx < 0 {
            return Complex64::new(0.0, 0.0);
        }
        b.values.get(idx as usize).copied().unwrap_or_default()
    }

    /// Harmonic labels computed for the pair `(f, i)`.
    pub fn support(&self, f: usize, i: usize) -> RangeInclusive<i64> {
        let b = self.block(f, i);
        b.ell_min..=(b.ell_min + b.values.len() as i64 - 1)
    }

    pub fn iter_pair(&self, f: usize, i: usize) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let b = self.block(f, i);
        b.values.iter().enumerate().map(move |(j, &v)| (b.ell_min + j as i64, v))
    }
}

/// Computes `V_fi^(l) = sum_k <u_f^(k)|V|u_i^(k+l)>` by exact convolution of
/// the stored harmonics.
///
/// With `ell_max = None` every `l` in the convolution support of each pair is
/// kept, which makes downstream totals independent of the quasienergy
/// representatives. `Some(L)` restricts to `|l| <= L` and requires `L <= 2K`.
pub fn fourier_matrix_elements(
    sol: &FloquetSolution,
    v: &CouplingOperator,
    ell_max: Option<usize>,
) -> Result<FourierElements> {
    let dim = sol.num_states();
    if v.dim() != sol.dim() {
        return Err(Error::InvalidInput(format!(
            "coupling dimension {} does not match system dimension {}",
            v.dim(),
            sol.dim()
        )));
    }
    if let Some(l) = ell_max {
        let available = 2 * sol.harmonic_cutoff();
        if l > available {
            return Err(Error::WindowTooSmall { requested: l, available });
        }
    }
    let applied: Vec<Vec<CVector>> = sol
        .functions()
        .iter()
        .map(|f| f.harmonics().iter().map(|u| v.matrix() * u).collect())
        .collect();

    let mut blocks = Vec::with_capacity(dim * dim);
    for uf in sol.functions() {
        for (i, ui) in sol.functions().iter().enumerate() {
            let mut lo = ui.k_min() - uf.k_max();
            let mut hi = ui.k_max() - uf.k_min();
            if let Some(l) = ell_max {
                lo = lo.max(-(l as i64));
                hi = hi.min(l as i64);
            }
            let values = if lo > hi {
                Vec::new()
            } else {
                (lo..=hi)
                    .map(|ell| {
                        let k_lo = uf.k_min().max(ui.k_min() - ell);
                        let k_hi = uf.k_max().min(ui.k_max() - ell);
                        let mut acc = Complex64::new(0.0, 0.0);
                        for k in k_lo..=k_hi {
                            let vu = &applied[i][(k + ell - ui.k_min()) as usize];
                            acc += uf.component(k).unwrap().dotc(vu);
                        }
                        acc
                    })
                    .collect()
            };
            blocks.push(ElementBlock { ell_min: lo, values });
        }
    }
    Ok(FourierElements { dim, blocks })
}

/// Floquet transition frequencies `w_fi^l = (eps_f - eps_i) + l omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionFrequencies {
    quasienergies: Vec<f64>,
    omega: f64,
    ell_max: usize,
}

impl TransitionFrequencies {
    pub fn ell_max(&self) -> usize {
        self.ell_max
    }

    pub fn get(&self, f: usize, i: usize, ell: i64) -> f64 {
        if f == i {
            return ell as f64 * self.omega;
        }
        (self.quasienergies[f] - self.quasienergies[i]) + ell as f64 * self.omega
    }

    /// All `(f, i, l, w)` with `|l| <= ell_max`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, i64, f64)> + '_ {
        let n = self.quasienergies.len();
        let l = self.ell_max as i64;
        (0..n).flat_map(move |f| {
            (0..n).flat_map(move |i| (-l..=l).map(move |ell| (f, i, ell, self.get(f, i, ell))))
        })
    }
}

pub fn transition_frequencies(sol: &FloquetSolution, ell_max: usize) -> TransitionFrequencies {
    TransitionFrequencies { quasienergies: sol.quasienergies().to_vec(), omega: sol.omega(), ell_max }
}

/// One golden-rule channel `i -> f` in harmonic `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub final_state: usize,
    pub initial_state: usize,
    pub ell: i64,
    /// `w_fi^l`; the system gains `hbar * frequency` from the bath.
    pub frequency: f64,
    pub element: Complex64,
    /// Partial rate `Gamma_fi^(l) >= 0`.
    pub rate: f64,
    /// Degenerate channel (zero frequency) excluded from totals and from
    /// the dissipation rate.
    pub flagged: bool,
}

impl Channel {
    pub fn is_pseudo(&self) -> bool {
        self.final_state == self.initial_state
    }
}

/// Partial and total rates for all channels of a Floquet system.
#[derive(Debug, Clone)]
pub struct RateTable {
    dim: usize,
    omega: f64,
    bath: BathSpec,
    channels: Vec<Channel>,
    index: HashMap<(usize, usize, i64), usize>,
    totals: DMatrix<f64>,
}

impl RateTable {
    /// Builds a table from explicitly given channels (e.g. closed-form rates).
    pub fn from_channels(dim: usize, omega: f64, bath: BathSpec, channels: Vec<Channel>) -> Result<Self> {
        for c in &channels {
            if c.final_state >= dim || c.initial_state >= dim {
                return Err(Error::IndexOutOfRange { index: c.final_state.max(c.initial_state), dim });
            }
            if !(c.rate >= 0.0) || !c.rate.is_finite() {
                return Err(Error::InvalidInput(format!("invalid partial rate {} in channel {c:?}", c.rate)));
            }
        }
        let mut totals = DMatrix::zeros(dim, dim);
        for c in channels.iter().filter(|c| !c.flagged) {
            totals[(c.final_state, c.initial_state)] += c.rate;
        }
        let index = channels.iter().enumerate().map(|(j, c)| ((c.final_state, c.initial_state, c.ell), j)).collect();
        Ok(Self { dim, omega, bath, channels, index, totals })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn bath(&self) -> &BathSpec {
        &self.bath
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// `Gamma_fi = sum_l Gamma_fi^(l)` over unflagged channels.
    pub fn totals(&self) -> &DMatrix<f64> {
        &self.totals
    }

    pub fn degenerate_channels(&self) -> impl Iterator<Item = &Channel> {
        self.channels.iter().filter(|c| c.flagged)
    }

    /// `Gamma_fi^(l)`, zero when the channel is absent.
    pub fn partial(&self, f: usize, i: usize, ell: i64) -> f64 {
        self.channel(f, i, ell).map_or(0.0, |c| c.rate)
    }

    pub fn channel(&self, f: usize, i: usize, ell: i64) -> Option<&Channel> {
        self.index.get(&(f, i, ell)).map(|&j| &self.channels[j])
    }

    /// Largest off-diagonal total rate.
    pub fn max_total(&self) -> f64 {
        let mut m: f64 = 0.0;
        for f in 0..self.dim {
            for i in 0..self.dim {
                if f != i {
                    m = m.max(self.totals[(f, i)]);
                }
            }
        }
        m
    }
}

/// Golden-rule partial rates `Gamma_fi^(l) = 2 pi |V_fi^(l)|^2 N(w) J(|w|)`.
///
/// The `(n, n, 0)` channels carry no energy and do not enter the master
/// equation; they are flagged. Channels hitting a divergent kernel are
/// flagged when their element is negligible and an error otherwise.
pub fn partial_rates(
    sol: &FloquetSolution,
    v: &CouplingOperator,
    bath: &BathSpec,
    ell_max: Option<usize>,
) -> Result<RateTable> {
    let elements = fourier_matrix_elements(sol, v, ell_max)?;
    let n = sol.num_states();
    let zero_tol = ZERO_FREQ_REL * sol.omega();
    let freqs = transition_frequencies(sol, 0);
    let mut channels = Vec::new();
    for f in 0..n {
        for i in 0..n {
            for (ell, element) in elements.iter_pair(f, i) {
                let frequency = freqs.get(f, i, ell);
                let weight = element.norm_sqr();
                let mut flagged = false;
                let rate = if f == i && ell == 0 {
                    flagged = true;
                    0.0
                } else {
                    match bath.rate_kernel(frequency, zero_tol) {
                        Ok(kernel) => 2.0 * PI * weight * kernel,
                        Err(Error::ResonantDivergence { frequency }) => {
                            if weight > DEGENERATE_ELEMENT_TOL {
                                return Err(Error::ResonantDivergence { frequency });
                            }
                            log::warn!("degenerate channel ({f} <- {i}, l = {ell}) at w = {frequency:.3e} dropped");
                            flagged = true;
                            0.0
                        }
                        Err(e) => return Err(e),
                    }
                };
                let rate = if rate < RATE_FLUSH { 0.0 } else { rate };
                channels.push(Channel { final_state: f, initial_state: i, ell, frequency, element, rate, flagged });
            }
        }
    }
    RateTable::from_channels(n, sol.omega(), *bath, channels)
}

/// `Gamma_fi = sum_l Gamma_fi^(l)`.
pub fn total_rates(table: &RateTable) -> DMatrix<f64> {
    table.totals().clone()
}

/// First-order transition probability after a sudden switch-on of `V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderProbability {
    /// `|int_0^t e^{i(eps_f - eps_i) tau} <u_f(tau)|V|u_i(tau)> dtau|^2` by quadrature.
    pub quadrature: f64,
    /// Cross-term-free approximation `t^2 sum_l sinc^2(w_fi^l t/2) |V_fi^(l)|^2`.
    pub sinc_sum: f64,
}

const GL8_NODES: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
const GL8_WEIGHTS: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];

pub fn first_order_probability(
    sol: &FloquetSolution,
    v: &CouplingOperator,
    f: usize,
    i: usize,
    t: f64,
) -> Result<FirstOrderProbability> {
    let n = sol.num_states();
    for idx in [f, i] {
        if idx >= n {
            return Err(Error::IndexOutOfRange { index: idx, dim: n });
        }
    }
    if f == i {
        return Err(Error::InvalidInput("first-order probability requires f != i".into()));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidInput(format!("time must be positive, got {t}")));
    }

    let omega = sol.omega();
    let de = sol.quasienergy(f) - sol.quasienergy(i);
    let uf = sol.function(f);
    let ui = sol.function(i);
    let integrand = |tau: f64| -> Complex64 {
        let a = uf.eval(omega, tau);
        let b = v.matrix() * ui.eval(omega, tau);
        a.dotc(&b) * Complex64::from_polar(1.0, de * tau)
    };

    // Resolve the fastest oscillation with several Gauss nodes per cycle.
    let bandwidth = (uf.k_max() - ui.k_min()).abs().max((ui.k_max() - uf.k_min()).abs()) as f64 * omega + de.abs();
    let panels = ((t * bandwidth / (2.0 * PI)) * 4.0).ceil().max(16.0) as usize;
    let h = t / panels as f64;
    let mut amp = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            amp += (integrand(mid - 0.5 * h * x) + integrand(mid + 0.5 * h * x)) * (w * 0.5 * h);
        }
    }

    let elements = fourier_matrix_elements(sol, v, None)?;
    let sinc_sum = t
        * t
        * elements
            .iter_pair(f, i)
            .map(|(ell, vl)| {
                let x = (de + ell as f64 * omega) * t / 2.0;
                let sinc = if x == 0.0 { 1.0 } else { x.sin() / x };
                sinc * sinc * vl.norm_sqr()
            })
            .sum::<f64>();

    Ok(FirstOrderProbability { quadrature: amp.norm_sqr(), sinc_sum })
}
