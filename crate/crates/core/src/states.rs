//! Named and random test states.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::qmath::{Ket1, StateVector, ONE, ZERO};

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state (normalized complex Gaussian vector).
pub fn haar_random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    loop {
        let amps = (0..1usize << n).map(|_| gaussian_c64(rng)).collect();
        if let Ok(s) = StateVector::from_unnormalized(amps) {
            return s;
        }
    }
}

/// Haar-random single-qubit ket.
pub fn haar_ket<R: Rng + ?Sized>(rng: &mut R) -> Ket1 {
    let s = haar_random(1, rng);
    [s.amplitudes()[0], s.amplitudes()[1]]
}

/// Product of independent Haar-random qubits.
pub fn random_product<R: Rng + ?Sized>(n: usize, rng: &mut R) -> StateVector {
    let kets: Vec<Ket1> = (0..n).map(|_| haar_ket(rng)).collect();
    StateVector::product(&kets).expect("unit kets")
}

/// Random state supported on `support` basis states chosen uniformly.
pub fn random_sparse<R: Rng + ?Sized>(n: usize, support: usize, rng: &mut R) -> StateVector {
    let dim = 1usize << n;
    let support = support.clamp(1, dim);
    let mut idx: Vec<usize> = (0..dim).collect();
    for i in 0..support {
        let j = rng.random_range(i..dim);
        idx.swap(i, j);
    }
    loop {
        let mut amps = vec![ZERO; dim];
        for &i in &idx[..support] {
            amps[i] = gaussian_c64(rng);
        }
        if let Ok(s) = StateVector::from_unnormalized(amps) {
            return s;
        }
    }
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz(n: usize) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::InvalidLength(1));
    }
    let mut amps = vec![ZERO; 1 << n];
    amps[0] = ONE;
    amps[(1 << n) - 1] = ONE;
    StateVector::from_unnormalized(amps)
}

/// Uniform superposition of the `n` weight-one basis states.
pub fn w_state(n: usize) -> Result<StateVector> {
    if n == 0 {
        return Err(Error::InvalidLength(1));
    }
    let mut amps = vec![ZERO; 1 << n];
    for q in 0..n {
        amps[1 << q] = ONE;
    }
    StateVector::from_unnormalized(amps)
}

/// `√f |tar⟩ + √(1-f) |⊥⟩` for a random `|⊥⟩` orthogonal to `tar`; the
/// result has fidelity exactly `f` with `tar` up to rounding.
pub fn with_fidelity<R: Rng + ?Sized>(
    tar: &StateVector,
    f: f64,
    rng: &mut R,
) -> Result<StateVector> {
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidArgument(format!(
            "fidelity {f} outside [0, 1]"
        )));
    }
    let perp = loop {
        let r = haar_random(tar.n_qubits(), rng);
        let ov: C64 = tar
            .amplitudes()
            .iter()
            .zip(r.amplitudes())
            .map(|(t, a)| t.conj() * a)
            .sum();
        let amps: Vec<C64> = r
            .amplitudes()
            .iter()
            .zip(tar.amplitudes())
            .map(|(a, t)| a - ov * t)
            .collect();
        if let Ok(p) = StateVector::from_unnormalized(amps) {
            break p;
        }
    };
    let (a, b) = (f.sqrt(), (1.0 - f).sqrt());
    StateVector::from_unnormalized(
        tar.amplitudes()
            .iter()
            .zip(perp.amplitudes())
            .map(|(t, p)| t * a + p * b)
            .collect(),
    )
}
