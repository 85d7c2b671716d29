//! Seeded random states and operators for randomized checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, CMat, C64};
use crate::tensor::{self, LocalOperator, PureState};

pub type TrialRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TrialRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    CMat::from_fn(d, d, |_, _| gaussian(rng))
}

/// Normalized state with complex-Gaussian amplitudes.
pub fn random_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> PureState {
    let total: usize = dims.iter().product();
    let amps = (0..total).map(|_| gaussian(rng)).collect();
    PureState::new(dims.to_vec(), amps)
        .and_then(|s| s.normalized())
        .expect("valid random state")
}

/// Rejection-sample a state whose single-site reductions all have full rank.
pub fn random_fully_entangled_state<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> PureState {
    loop {
        let s = random_state(dims, rng);
        if tensor::is_fully_entangled(&s, tensor::RANK_TOL).unwrap_or(false) {
            return s;
        }
    }
}

/// Haar-ish unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    random_matrix(d, rng).qr().q()
}

pub fn random_local_operator<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> LocalOperator {
    LocalOperator::new(dims.iter().map(|&d| random_matrix(d, rng)).collect())
        .expect("square random factors")
}

pub fn random_local_unitary<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> LocalOperator {
    LocalOperator::new(dims.iter().map(|&d| random_unitary(d, rng)).collect())
        .expect("square random factors")
}

/// Random `d×d` matrix of rank exactly `d − 1`: a Gaussian matrix composed
/// with the projector onto the complement of a random unit vector.
pub fn random_rank_deficient<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let u = random_unitary(d, rng);
    let v = u.column(0).into_owned();
    let proj = linalg::identity(d) - &v * v.adjoint();
    random_matrix(d, rng) * proj
}
