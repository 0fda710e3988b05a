#![allow(dead_code)]

use floquet_flow::*;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn random_matrix(rng: &mut StdRng, dim: usize, scale: f64) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * scale)
}

pub fn random_hermitian(rng: &mut StdRng, dim: usize, scale: f64) -> CMatrix {
    let a = random_matrix(rng, dim, scale);
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Random periodic Hamiltonian with harmonics up to 2 and a random Hermitian coupling.
pub fn random_system(seed: u64, dim: usize) -> (FourierHamiltonian, CouplingOperator) {
    let mut rng = StdRng::seed_from_u64(seed);
    let omega = rng.random_range(1.0..2.5);
    let mut h0 = random_hermitian(&mut rng, dim, 0.4);
    for j in 0..dim {
        h0[(j, j)] += Complex64::new(0.7 * j as f64, 0.0);
    }
    let h1 = random_matrix(&mut rng, dim, 0.3);
    let h2 = random_matrix(&mut rng, dim, 0.1);
    let h = FourierHamiltonian::new(omega, [(0, h0), (1, h1.clone()), (-1, h1.adjoint()), (2, h2.clone()), (-2, h2.adjoint())])
        .unwrap();
    let v = CouplingOperator::new(random_hermitian(&mut rng, dim, 0.5)).unwrap();
    (h, v)
}

pub fn constant_bath(beta: f64) -> BathSpec {
    BathSpec::new(beta, SpectralDensity::Constant { j0: 1.0 }).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}
