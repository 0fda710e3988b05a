//! Pauli master equation for Floquet occupations and the steady-state
//! energy flow into the bath.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{ClosedClass, Error, Result};
use crate::rates::RateTable;

/// Edges of the rate graph below this fraction of the largest rate are ignored
/// by the connectivity analysis.
pub const EDGE_REL_TOL: f64 = 1e-14;
pub const NEGATIVE_CLIP: f64 = 1e-12;
pub const RESIDUAL_REL_TOL: f64 = 1e-10;
pub const PSEUDO_CONSISTENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub p: Vec<f64>,
    /// `max_n |dp_n/dt|` at the returned distribution.
    pub residual: f64,
    /// Whether the rate graph is strongly connected.
    pub ergodic: bool,
}

/// Generator `A` with `A_nm = Gamma_nm` (n != m) and `A_nn = -sum_m Gamma_mn`.
pub fn generator(totals: &DMatrix<f64>) -> DMatrix<f64> {
    let n = totals.nrows();
    let mut a = DMatrix::zeros(n, n);
    for m in 0..n {
        let mut out = 0.0;
        for k in 0..n {
            if k != m {
                a[(k, m)] = totals[(k, m)];
                out += totals[(k, m)];
            }
        }
        a[(m, m)] = -out;
    }
    a
}

fn max_offdiag(totals: &DMatrix<f64>) -> f64 {
    let n = totals.nrows();
    let mut m: f64 = 0.0;
    for f in 0..n {
        for i in 0..n {
            if f != i {
                m = m.max(totals[(f, i)]);
            }
        }
    }
    m
}

/// Strongly connected components of the thresholded rate graph, and which of
/// them are closed (no significant outflow).
fn communicating_classes(totals: &DMatrix<f64>) -> (Vec<Vec<usize>>, Vec<bool>) {
    let n = totals.nrows();
    let cut = EDGE_REL_TOL * max_offdiag(totals);
    // reach[(a, b)]: b reachable from a.
    let mut reach = DMatrix::from_fn(n, n, |a, b| a == b || (totals[(b, a)] > cut && totals[(b, a)] > 0.0));
    for k in 0..n {
        for a in 0..n {
            if reach[(a, k)] {
                for b in 0..n {
                    if reach[(k, b)] {
                        reach[(a, b)] = true;
                    }
                }
            }
        }
    }
    let mut seen = vec![false; n];
    let mut classes = Vec::new();
    let mut closed = Vec::new();
    for a in 0..n {
        if seen[a] {
            continue;
        }
        let class: Vec<usize> = (0..n).filter(|&b| reach[(a, b)] && reach[(b, a)]).collect();
        for &b in &class {
            seen[b] = true;
        }
        let leaks = class.iter().any(|&s| (0..n).any(|t| reach[(s, t)] && !class.contains(&t)));
        closed.push(!leaks);
        classes.push(class);
    }
    (classes, closed)
}

/// Stationary distribution by Grassmann-Taksar-Heyman state reduction.
///
/// `totals[(f, i)]` is the rate `i -> f`. The reduction is subtraction-free,
/// so every component keeps full relative accuracy, including the far tail.
/// `order` must list the states of the closed class first.
fn gth(totals: &DMatrix<f64>, order: &[usize]) -> Result<Vec<f64>> {
    let n = order.len();
    // q[(a, b)]: rate from order[a] to order[b].
    let mut q = DMatrix::from_fn(n, n, |a, b| if a == b { 0.0 } else { totals[(order[b], order[a])] });
    for k in (1..n).rev() {
        let s: f64 = (0..k).map(|j| q[(k, j)]).sum();
        if !(s > 0.0) {
            return Err(Error::SteadyStateFailure(format!("state {} has no outflow after reduction", order[k])));
        }
        for i in 0..k {
            q[(i, k)] /= s;
        }
        for i in 0..k {
            let qik = q[(i, k)];
            if qik != 0.0 {
                for j in 0..k {
                    q[(i, j)] += qik * q[(k, j)];
                }
            }
        }
    }
    let mut pi = vec![0.0; n];
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * q[(i, k)]).sum();
    }
    let total: f64 = pi.iter().sum();
    let mut p = vec![0.0; n];
    for (a, &s) in order.iter().enumerate() {
        p[s] = pi[a] / total;
    }
    Ok(p)
}

fn clip_and_normalize(p: &mut [f64]) -> Result<()> {
    for x in p.iter_mut() {
        if *x < -NEGATIVE_CLIP {
            return Err(Error::SteadyStateFailure(format!("negative occupation {x:.3e}")));
        }
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    let s: f64 = p.iter().sum();
    if !(s > 0.0) {
        return Err(Error::SteadyStateFailure("vanishing normalization".into()));
    }
    p.iter_mut().for_each(|x| *x /= s);
    Ok(())
}

fn restricted_distribution(totals: &DMatrix<f64>, states: &[usize]) -> Result<Vec<f64>> {
    if states.len() == 1 {
        return Ok(vec![1.0]);
    }
    let sub = DMatrix::from_fn(states.len(), states.len(), |a, b| totals[(states[a], states[b])]);
    let order: Vec<usize> = (0..states.len()).collect();
    gth(&sub, &order)
}

/// Stationary solution of `0 = sum_m (Gamma_nm p_m - Gamma_mn p_n)`.
///
/// A unique solution exists iff the rate graph has exactly one closed class;
/// states outside it are transient and get zero weight. Several closed
/// classes give [`Error::NonErgodic`] with the per-class distributions.
pub fn steady_state(totals: &DMatrix<f64>) -> Result<SteadyState> {
    let n = totals.nrows();
    if n == 0 || totals.ncols() != n {
        return Err(Error::InvalidInput("rate table must be square and non-empty".into()));
    }
    if totals.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(Error::InvalidInput("rates must be finite and nonnegative".into()));
    }
    let (classes, closed) = communicating_classes(totals);
    let closed_classes: Vec<&Vec<usize>> = classes.iter().zip(&closed).filter(|(_, &c)| c).map(|(s, _)| s).collect();
    if closed_classes.len() > 1 {
        let components = closed_classes
            .into_iter()
            .map(|s| Ok(ClosedClass { states: s.clone(), distribution: restricted_distribution(totals, s)? }))
            .collect::<Result<Vec<_>>>()?;
        return Err(Error::NonErgodic { components });
    }
    let ergodic = classes.len() == 1;

    let head = closed_classes[0];
    let order: Vec<usize> = head.iter().copied().chain((0..n).filter(|s| !head.contains(s))).collect();
    let mut p = gth(totals, &order)?;
    clip_and_normalize(&mut p)?;
    let a = generator(totals);
    let residual = (&a * DVector::from_column_slice(&p)).amax();
    let scale = max_offdiag(totals);
    if residual > RESIDUAL_REL_TOL * scale {
        return Err(Error::SteadyStateFailure(format!(
            "residual {residual:.3e} exceeds {:.3e}",
            RESIDUAL_REL_TOL * scale
        )));
    }
    Ok(SteadyState { p, residual, ergodic })
}

/// `max_{n,m} |Gamma_nm p_m - Gamma_mn p_n| / max Gamma` on total rates.
///
/// For two states this vanishes identically at the steady state; see
/// [`channel_balance_defect`] for the channel-resolved diagnostic.
pub fn detailed_balance_defect(totals: &DMatrix<f64>, ss: &SteadyState) -> f64 {
    let n = totals.nrows();
    let scale = max_offdiag(totals);
    if scale == 0.0 {
        return 0.0;
    }
    let mut d: f64 = 0.0;
    for a in 0..n {
        for b in (a + 1)..n {
            d = d.max((totals[(a, b)] * ss.p[b] - totals[(b, a)] * ss.p[a]).abs());
        }
    }
    d / scale
}

/// Channel-resolved balance defect over genuine transitions:
/// `max |Gamma_mn^(l) p_n - Gamma_nm^(-l) p_m| / max Gamma`, pairing each
/// channel with its time-reversed partner.
pub fn channel_balance_defect(table: &RateTable, ss: &SteadyState) -> f64 {
    let scale = table.max_total();
    if scale == 0.0 {
        return 0.0;
    }
    let mut d: f64 = 0.0;
    for c in table.channels().iter().filter(|c| !c.is_pseudo() && !c.flagged) {
        let (m, n) = (c.final_state, c.initial_state);
        let reverse = table.partial(n, m, -c.ell);
        d = d.max((c.rate * ss.p[n] - reverse * ss.p[m]).abs());
    }
    d / scale
}

/// Energy bookkeeping of one channel in the steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelFlow {
    pub final_state: usize,
    pub initial_state: usize,
    pub ell: i64,
    pub rate: f64,
    /// Energy taken from the bath per event, `w_mn^l`.
    pub energy_weight: f64,
    /// Contribution `-w_mn^l Gamma_mn^(l) p_n` to the dissipation rate.
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipationReport {
    pub total: f64,
    pub transitions: f64,
    /// Pseudo-transition part from the positive closed form.
    pub pseudo: f64,
    /// Pseudo-transition part from net diagonal rates.
    pub pseudo_net: f64,
    pub channels: Vec<ChannelFlow>,
}

/// Steady-state energy flow into the bath, `R = -sum w_mn^l Gamma_mn^(l) p_n`,
/// split into genuine and pseudo transitions.
pub fn dissipation_rate(table: &RateTable, ss: &SteadyState) -> Result<DissipationReport> {
    if ss.p.len() != table.dim() {
        return Err(Error::InvalidInput("steady state does not match rate table".into()));
    }
    let omega = table.omega();
    let density = table.bath().density;
    let mut transitions = 0.0;
    let mut pseudo_net = 0.0;
    let mut pseudo = 0.0;
    let mut gross: f64 = 0.0;
    let mut channels = Vec::with_capacity(table.channels().len());
    for c in table.channels().iter().filter(|c| !c.flagged) {
        let pn = ss.p[c.initial_state];
        let contribution = -c.frequency * c.rate * pn;
        channels.push(ChannelFlow {
            final_state: c.final_state,
            initial_state: c.initial_state,
            ell: c.ell,
            rate: c.rate,
            energy_weight: c.frequency,
            contribution,
        });
        if c.is_pseudo() {
            if c.ell == 0 {
                continue;
            }
            let l = c.ell as f64;
            pseudo_net -= omega * l * c.rate * pn;
            gross += omega * l.abs() * c.rate * pn;
            if c.ell > 0 {
                pseudo += omega * 2.0 * PI * l * c.element.norm_sqr() * density.value(l * omega) * pn;
            }
        } else {
            transitions += contribution;
        }
    }
    let scale = pseudo.abs().max(pseudo_net.abs()).max(gross);
    if (pseudo - pseudo_net).abs() > PSEUDO_CONSISTENCY_TOL * scale {
        return Err(Error::InconsistentPseudoForms { net: pseudo_net, closed: pseudo });
    }
    Ok(DissipationReport { total: transitions + pseudo, transitions, pseudo, pseudo_net, channels })
}
