//! Thermal oscillator bath: occupation weights and the golden-rule kernel
//! `N(w) J(|w|)`.

use crate::error::{Error, Result};

// Above this value of beta*|w| the Bose factor is replaced by exp(-beta*|w|).
const OVERFLOW_GUARD: f64 = 700.0;

/// Spectral density `J(w)` of the bath, evaluated at `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpectralDensity {
    Constant { j0: f64 },
    /// `J(w) = eta * w * exp(-w / cutoff)`.
    Ohmic { eta: f64, cutoff: f64 },
}

impl SpectralDensity {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SpectralDensity::Constant { j0 } if j0 >= 0.0 && j0.is_finite() => Ok(()),
            SpectralDensity::Ohmic { eta, cutoff } if eta >= 0.0 && eta.is_finite() && cutoff > 0.0 => Ok(()),
            other => Err(Error::InvalidInput(format!("invalid spectral density {other:?}"))),
        }
    }

    /// `J(|w|)`.
    pub fn value(&self, w: f64) -> f64 {
        let w = w.abs();
        match *self {
            SpectralDensity::Constant { j0 } => j0,
            SpectralDensity::Ohmic { eta, cutoff } => eta * w * (-w / cutoff).exp(),
        }
    }
}

/// Inverse temperature and spectral density of the bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathSpec {
    /// `1 / (k_B T)`; `f64::INFINITY` for a zero-temperature bath.
    pub beta: f64,
    pub density: SpectralDensity,
}

impl BathSpec {
    pub fn new(beta: f64, density: SpectralDensity) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta must be positive or infinite, got {beta}")));
        }
        density.validate()?;
        Ok(Self { beta, density })
    }

    pub fn zero_temperature(density: SpectralDensity) -> Result<Self> {
        Self::new(f64::INFINITY, density)
    }

    /// `N(w)`, see [`thermal_weight`].
    pub fn thermal_weight(&self, omega_tilde: f64) -> Result<f64> {
        thermal_weight(omega_tilde, self.beta)
    }

    /// `N(w) J(|w|)`.
    ///
    /// For `|w| < zero_tol` the kernel takes its limit at zero frequency:
    /// `eta / beta` for an Ohmic density (0 at zero temperature), and a
    /// [`Error::ResonantDivergence`] for a nonzero constant density.
    pub fn rate_kernel(&self, omega_tilde: f64, zero_tol: f64) -> Result<f64> {
        if omega_tilde.abs() < zero_tol || omega_tilde == 0.0 {
            return match self.density {
                SpectralDensity::Constant { j0 } if j0 == 0.0 => Ok(0.0),
                SpectralDensity::Constant { .. } => Err(Error::ResonantDivergence { frequency: omega_tilde }),
                SpectralDensity::Ohmic { eta, .. } => Ok(if self.beta.is_infinite() { 0.0 } else { eta / self.beta }),
            };
        }
        Ok(thermal_weight(omega_tilde, self.beta)? * self.density.value(omega_tilde))
    }
}

/// Thermal weight of a bath process exchanging frequency `omega_tilde`:
/// the mean occupation `1/(exp(beta w) - 1)` for absorption (`w > 0`) and
/// occupation plus one for emission (`w < 0`).
pub fn thermal_weight(omega_tilde: f64, beta: f64) -> Result<f64> {
    if omega_tilde == 0.0 {
        return Err(Error::ZeroFrequency);
    }
    let x = beta * omega_tilde.abs();
    let occupation = if beta.is_infinite() {
        0.0
    } else if x > OVERFLOW_GUARD {
        (-x).exp()
    } else {
        1.0 / x.exp_m1()
    };
    Ok(if omega_tilde > 0.0 { occupation } else { occupation + 1.0 })
}
