//! Product-projector oracle access to a target state.
//!
//! An oracle answers `⟨ψ|Π₁⊗…⊗Πₙ|ψ⟩` where every factor is either the
//! identity or a rank-one projector onto a single-qubit ket. Two backends
//! are provided: [`DenseOracle`] (exact, `O(2ⁿ)` per query) and
//! [`MpsOracle`] (`O(n·χ³)` per query). Adapters compose oracles without
//! copying the target: [`PrefixedOracle`] fixes leading factors, which is how
//! conditional branches `|tar^x⟩` are exposed, and [`CountingOracle`] keeps a
//! private query tally.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};
use crate::mps::MpsState;
use crate::qmath::{
    density_of_bloch, ket0, ket_norm_sqr, ket_plus, ket_plus_i, BlochVector, Density1Q, Ket1,
    StateVector, SubVector, DEGENERATE_MASS, VALIDATION_TOL,
};

/// One tensor factor of a product-projector query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Factor {
    Identity,
    Project(Ket1),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductQuery {
    factors: Vec<Factor>,
}

impl ProductQuery {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        for f in &factors {
            if let Factor::Project(k) = f {
                let ns = ket_norm_sqr(k);
                if !ns.is_finite() || (ns - 1.0).abs() > VALIDATION_TOL {
                    return Err(Error::InvalidQuery(format!(
                        "projector ket with squared norm {ns}"
                    )));
                }
            }
        }
        Ok(Self { factors })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            factors: vec![Factor::Identity; n],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn with(mut self, qubit: usize, factor: Factor) -> Result<Self> {
        let n = self.factors.len();
        let slot = self
            .factors
            .get_mut(qubit)
            .ok_or(Error::QubitOutOfRange { qubit, n })?;
        *slot = factor;
        Self::new(self.factors)
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.factors.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.factors.len(),
            });
        }
        Ok(())
    }
}

/// Query access to a pure target state.
pub trait TargetOracle: Sync {
    fn n_qubits(&self) -> usize;

    /// `⟨ψ|Π|ψ⟩`, clamped to `[0, 1]` after a tolerance check.
    fn query(&self, q: &ProductQuery) -> Result<f64>;

    /// Number of queries answered so far.
    fn query_count(&self) -> u64;
}

fn clamp_probability(v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(-VALIDATION_TOL..=1.0 + VALIDATION_TOL).contains(&v) {
        return Err(Error::InvalidQuery(format!(
            "expectation {v} outside [0, 1]; target not normalized?"
        )));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Exact expectation of a product projector in a dense state.
pub fn dense_query(state: &SubVector, q: &ProductQuery) -> Result<f64> {
    q.check_len(state.n_qubits())?;
    // Contract projected qubits from the back so earlier indices stay valid.
    let mut cur: Option<SubVector> = None;
    for (qubit, f) in q.factors().iter().enumerate().rev() {
        if let Factor::Project(k) = f {
            let next = cur.as_ref().unwrap_or(state).project_unchecked(qubit, k);
            cur = Some(next);
        }
    }
    clamp_probability(cur.as_ref().unwrap_or(state).norm_sqr())
}

/// Left-to-right environment contraction of `⟨ψ|Π|ψ⟩` for an MPS.
pub fn mps_query(state: &MpsState, q: &ProductQuery) -> Result<f64> {
    q.check_len(state.n_qubits())?;
    clamp_probability(state.expectation(q.factors()))
}

pub struct DenseOracle {
    state: StateVector,
    count: AtomicU64,
}

impl DenseOracle {
    pub fn new(state: StateVector) -> Self {
        Self {
            state,
            count: AtomicU64::new(0),
        }
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }
}

impl TargetOracle for DenseOracle {
    fn n_qubits(&self) -> usize {
        self.state.n_qubits()
    }

    fn query(&self, q: &ProductQuery) -> Result<f64> {
        self.count.fetch_add(1, Ordering::Relaxed);
        dense_query(&self.state, q)
    }

    fn query_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

pub struct MpsOracle {
    state: MpsState,
    count: AtomicU64,
}

impl MpsOracle {
    pub fn new(state: MpsState) -> Self {
        Self {
            state,
            count: AtomicU64::new(0),
        }
    }

    pub fn state(&self) -> &MpsState {
        &self.state
    }
}

impl TargetOracle for MpsOracle {
    fn n_qubits(&self) -> usize {
        self.state.n_qubits()
    }

    fn query(&self, q: &ProductQuery) -> Result<f64> {
        self.count.fetch_add(1, Ordering::Relaxed);
        mps_query(&self.state, q)
    }

    fn query_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

/// Oracle for the unnormalized branch `(⟨p₁|⊗…⊗⟨p_t|⊗I)|ψ⟩` on the
/// remaining `n - t` qubits.
pub struct PrefixedOracle<'a> {
    inner: &'a dyn TargetOracle,
    prefix: Vec<Factor>,
    count: AtomicU64,
}

impl<'a> PrefixedOracle<'a> {
    pub fn new(inner: &'a dyn TargetOracle, prefix: Vec<Factor>) -> Result<Self> {
        if prefix.len() > inner.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: inner.n_qubits(),
                found: prefix.len(),
            });
        }
        ProductQuery::new(prefix.clone())?;
        Ok(Self {
            inner,
            prefix,
            count: AtomicU64::new(0),
        })
    }

    /// Branch oracle after observing computational-basis outcomes `bits`.
    pub fn computational(inner: &'a dyn TargetOracle, bits: &[u8]) -> Result<Self> {
        let prefix = bits
            .iter()
            .map(|&b| Factor::Project(if b == 0 { ket0() } else { crate::qmath::ket1() }))
            .collect();
        Self::new(inner, prefix)
    }
}

impl TargetOracle for PrefixedOracle<'_> {
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits() - self.prefix.len()
    }

    fn query(&self, q: &ProductQuery) -> Result<f64> {
        q.check_len(self.n_qubits())?;
        self.count.fetch_add(1, Ordering::Relaxed);
        let mut factors = Vec::with_capacity(self.inner.n_qubits());
        factors.extend_from_slice(&self.prefix);
        factors.extend_from_slice(q.factors());
        self.inner.query(&ProductQuery { factors })
    }

    fn query_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

/// Pass-through oracle with its own query counter.
pub struct CountingOracle<'a> {
    inner: &'a dyn TargetOracle,
    count: AtomicU64,
}

impl<'a> CountingOracle<'a> {
    pub fn new(inner: &'a dyn TargetOracle) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }
}

impl TargetOracle for CountingOracle<'_> {
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    fn query(&self, q: &ProductQuery) -> Result<f64> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.query(q)
    }

    fn query_count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }
}

/// Single-qubit tomography of `qubit` from three projector queries.
///
/// `context` supplies the factors on every other qubit (its entry at `qubit`
/// is ignored). The normalizer `p = ⟨Π_context⟩` is queried unless
/// `known_mass` is given. Returns `p` and the normalized conditional state,
/// with Bloch coordinates `z = 2p₀/p − 1`, `x = 2p₊/p − 1`, `y = 2p_i/p − 1`.
pub fn reconstruct_qubit(
    oracle: &dyn TargetOracle,
    context: &[Factor],
    qubit: usize,
    known_mass: Option<f64>,
) -> Result<(f64, Density1Q)> {
    let n = oracle.n_qubits();
    if context.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: context.len(),
        });
    }
    if qubit >= n {
        return Err(Error::QubitOutOfRange { qubit, n });
    }
    let mut factors = context.to_vec();
    let mut ask = |f: Factor| -> Result<f64> {
        factors[qubit] = f;
        oracle.query(&ProductQuery::new(factors.clone())?)
    };
    let mass = match known_mass {
        Some(m) => m,
        None => ask(Factor::Identity)?,
    };
    if mass <= DEGENERATE_MASS {
        return Err(Error::DegenerateBranch { mass });
    }
    let p0 = ask(Factor::Project(ket0()))?;
    let pp = ask(Factor::Project(ket_plus()))?;
    let pi = ask(Factor::Project(ket_plus_i()))?;
    let mut r = BlochVector {
        x: 2.0 * pp / mass - 1.0,
        y: 2.0 * pi / mass - 1.0,
        z: 2.0 * p0 / mass - 1.0,
    };
    // Rounding can push a pure conditional slightly outside the ball.
    let len = r.norm();
    if len > 1.0 {
        r = r.scaled(1.0 / len);
    }
    Ok((mass, density_of_bloch(&r)))
}

/// Reconstruct qubit `t = prefix.len()` conditioned on the prefix
/// projectors, with identities on all later qubits. Issues four queries.
pub fn reconstruct_conditional_qubit(
    oracle: &dyn TargetOracle,
    prefix: &[Factor],
) -> Result<(f64, Density1Q)> {
    let n = oracle.n_qubits();
    if prefix.len() >= n {
        return Err(Error::QubitOutOfRange {
            qubit: prefix.len(),
            n,
        });
    }
    let mut context = prefix.to_vec();
    context.resize(n, Factor::Identity);
    reconstruct_qubit(oracle, &context, prefix.len(), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{ket1, reduced_density_1q, EXACT_TOL};
    use crate::rng::substream;
    use crate::states::{ghz, haar_ket, haar_random};
    use num_complex::Complex64 as C64;
    use rand::Rng;

    fn bell() -> StateVector {
        ghz(2).unwrap()
    }

    #[test]
    fn dense_examples() {
        let zero = StateVector::basis(3, 0).unwrap();
        assert_eq!(dense_query(&zero, &ProductQuery::identity(3)).unwrap(), 1.0);

        let s = StateVector::product(&[ket_plus(), ket0()]).unwrap();
        let q = ProductQuery::new(vec![Factor::Project(ket0()), Factor::Identity]).unwrap();
        assert!((dense_query(&s, &q).unwrap() - 0.5).abs() < EXACT_TOL);

        let q =
            ProductQuery::new(vec![Factor::Project(ket0()), Factor::Project(ket_plus())]).unwrap();
        assert!((dense_query(&bell(), &q).unwrap() - 0.25).abs() < EXACT_TOL);
    }

    #[test]
    fn malformed_queries_rejected() {
        assert!(ProductQuery::new(vec![Factor::Project([
            C64::new(2.0, 0.0),
            C64::new(0.0, 0.0)
        ])])
        .is_err());
        let wrong = ProductQuery::identity(3);
        assert!(matches!(
            dense_query(&bell(), &wrong),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn reconstruct_examples() {
        let o = DenseOracle::new(StateVector::product(&[ket0(), ket_plus()]).unwrap());
        let (p, rho) = reconstruct_conditional_qubit(&o, &[]).unwrap();
        assert!((p - 1.0).abs() < EXACT_TOL);
        assert!(rho.max_entry_diff(&Density1Q::pure(&ket0()).unwrap()) < 1e-12);
        assert_eq!(o.query_count(), 4);

        let o = DenseOracle::new(bell());
        let (p, rho) = reconstruct_conditional_qubit(&o, &[Factor::Project(ket0())]).unwrap();
        assert!((p - 0.5).abs() < EXACT_TOL);
        assert!(rho.max_entry_diff(&Density1Q::pure(&ket0()).unwrap()) < 1e-12);

        let o = DenseOracle::new(StateVector::basis(2, 0).unwrap());
        assert!(matches!(
            reconstruct_conditional_qubit(&o, &[Factor::Project(ket1())]),
            Err(Error::DegenerateBranch { .. })
        ));
    }

    #[test]
    fn reconstruct_matches_dense_conditioning() {
        let mut rng = substream(11, "oracle-test", 0);
        for _ in 0..100 {
            let s = haar_random(4, &mut rng);
            let t = rng.random_range(0..4);
            let prefix: Vec<Factor> = (0..t)
                .map(|_| {
                    if rng.random::<bool>() {
                        Factor::Identity
                    } else {
                        Factor::Project(haar_ket(&mut rng))
                    }
                })
                .collect();
            let o = DenseOracle::new(s.clone());
            let before = o.query_count();
            let (p, rho) = reconstruct_conditional_qubit(&o, &prefix).unwrap();
            assert_eq!(o.query_count() - before, 4);

            // Dense route: project prefix kets from the back, trace out identities.
            let mut v = s.as_sub().clone();
            let mut target = t;
            for (q, f) in prefix.iter().enumerate().rev() {
                if let Factor::Project(k) = f {
                    v = v.condition(q, k).unwrap().1;
                    target -= 1;
                }
            }
            let (mass, want) = reduced_density_1q(&v, target).unwrap();
            assert!((p - mass).abs() < 1e-9);
            assert!(rho.max_entry_diff(&want) < 1e-9);
        }
    }

    #[test]
    fn adding_projectors_never_increases() {
        let mut rng = substream(12, "oracle-test", 0);
        for _ in 0..50 {
            let s = haar_random(5, &mut rng);
            let mut q = ProductQuery::identity(5);
            let mut last = dense_query(&s, &q).unwrap();
            for qubit in 0..5 {
                q = q.with(qubit, Factor::Project(haar_ket(&mut rng))).unwrap();
                let v = dense_query(&s, &q).unwrap();
                assert!(v <= last + EXACT_TOL);
                last = v;
            }
        }
    }

    #[test]
    fn prefixed_oracle_is_branch() {
        let o = DenseOracle::new(bell());
        let b = PrefixedOracle::computational(&o, &[1]).unwrap();
        assert_eq!(b.n_qubits(), 1);
        let q = ProductQuery::new(vec![Factor::Project(ket1())]).unwrap();
        assert!((b.query(&q).unwrap() - 0.5).abs() < EXACT_TOL);
        assert_eq!(b.query_count(), 1);
        assert_eq!(o.query_count(), 1);
    }
}
