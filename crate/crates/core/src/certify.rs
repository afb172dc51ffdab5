//! The single-copy certification test and its amplified wrapper.
//!
//! One run samples `k ∈ 1..=n`, measures lab qubits `0..k-1` in the
//! computational basis (prefix `x`), measures the qubits after `k` in the
//! lazily built DT basis for the two target branches `x0` and `x1`, and
//! finally measures qubit `k` in a basis containing the reconstructed
//! target conditional `|tar'⟩`. Qubits are 0-based, so the final qubit is
//! index `k - 1`.

use rand::Rng;
use rayon::prelude::*;

use crate::dtbasis::{lazy_phase_path, DtPath, OutcomeSource};
use crate::error::{Error, Result};
use crate::oracle::{reconstruct_qubit, CountingOracle, Factor, PrefixedOracle, TargetOracle};
use crate::qmath::{
    bloch_of_density, ket0, ket1, ket_from_bloch, ket_inner, overlap, SingleQubitBasis,
    StateVector, SubVector, VALIDATION_TOL,
};
use crate::rng::substream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Accept,
    Reject,
}

/// Record of one single-copy run.
#[derive(Clone, Debug, PartialEq)]
pub struct CertifyTranscript {
    /// Sampled position, `1..=n`.
    pub k: usize,
    /// Computational-basis outcomes on the first `k - 1` qubits.
    pub prefix: Vec<u8>,
    /// DT-basis outcomes on the last `n - k` qubits.
    pub path: DtPath,
    /// Basis of the final measurement; absent when `|tar'⟩` vanished.
    pub final_basis: Option<SingleQubitBasis>,
    /// `0` selects `|tar'⟩`.
    pub final_outcome: Option<u8>,
    pub verdict: Verdict,
    /// Set when the target conditional on `(x, ℓ)` had mass ≤ `1e-12`.
    pub degenerate_target: bool,
    pub oracle_queries: u64,
    /// Index of the sampled mixture component (0 for a pure lab state).
    pub lab_component: usize,
}

fn bit_ket(b: u8) -> [num_complex::Complex64; 2] {
    if b == 0 {
        ket0()
    } else {
        ket1()
    }
}

// Samples 0 with probability p0 / (p0 + p1).
fn sample_bit<R: Rng + ?Sized>(p0: f64, p1: f64, rng: &mut R) -> u8 {
    let total = p0 + p1;
    let u: f64 = rng.random();
    u8::from(u * total >= p0)
}

/// Born-rule measurement of a lab residual whose first qubit is held back
/// for the final test; DT-basis steps measure the qubit right after it.
struct BornSampler<'r, R: Rng + ?Sized> {
    residual: SubVector,
    rng: &'r mut R,
}

impl<R: Rng + ?Sized> OutcomeSource for BornSampler<'_, R> {
    fn next_outcome(&mut self, _step: usize, basis: &SingleQubitBasis) -> Result<u8> {
        let r0 = self.residual.condition(1, basis.b())?.1;
        let r1 = self.residual.condition(1, basis.b_perp())?.1;
        let bit = sample_bit(r0.norm_sqr(), r1.norm_sqr(), self.rng);
        self.residual = if bit == 0 { r0 } else { r1 };
        Ok(bit)
    }
}

/// One run of the single-copy test on a pure lab state.
///
/// Oracle queries: at most `6(n - k) + 2` for the DT path and four for
/// `|tar'⟩`, counted in the transcript.
pub fn certify_once<R: Rng + ?Sized>(
    lab: &StateVector,
    tar: &dyn TargetOracle,
    rng: &mut R,
) -> Result<CertifyTranscript> {
    let n = tar.n_qubits();
    if lab.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: lab.n_qubits(),
        });
    }
    let tar = CountingOracle::new(tar);
    let k = rng.random_range(1..=n);

    let mut residual = lab.as_sub().clone();
    let mut prefix = Vec::with_capacity(k - 1);
    for _ in 0..k - 1 {
        let (v0, v1) = residual.split_first()?;
        let bit = sample_bit(v0.norm_sqr(), v1.norm_sqr(), rng);
        residual = if bit == 0 { v0 } else { v1 };
        prefix.push(bit);
    }

    let branch = |b: u8| {
        let mut bits = prefix.clone();
        bits.push(b);
        PrefixedOracle::computational(&tar, &bits)
    };
    let (o0, o1) = (branch(0)?, branch(1)?);
    let mut sampler = BornSampler { residual, rng };
    let path = lazy_phase_path(&o0, &o1, &mut sampler)?;
    let lab_final = sampler.residual;

    let mut context: Vec<Factor> = prefix
        .iter()
        .map(|&b| Factor::Project(bit_ket(b)))
        .collect();
    context.push(Factor::Identity);
    context.extend(path.observed_kets().into_iter().map(Factor::Project));
    let mut transcript = CertifyTranscript {
        k,
        prefix,
        path,
        final_basis: None,
        final_outcome: None,
        verdict: Verdict::Reject,
        degenerate_target: false,
        oracle_queries: 0,
        lab_component: 0,
    };
    match reconstruct_qubit(&tar, &context, k - 1, None) {
        Ok((_, rho)) => {
            let basis = basis_containing_conditional(&rho)?;
            let a0 = ket_inner(basis.b(), &lab_amps(&lab_final)).norm_sqr();
            let a1 = ket_inner(basis.b_perp(), &lab_amps(&lab_final)).norm_sqr();
            let outcome = sample_bit(a0, a1, sampler.rng);
            transcript.final_basis = Some(basis);
            transcript.final_outcome = Some(outcome);
            transcript.verdict = if outcome == 0 {
                Verdict::Accept
            } else {
                Verdict::Reject
            };
        }
        Err(Error::DegenerateBranch { .. }) => transcript.degenerate_target = true,
        Err(e) => return Err(e),
    }
    transcript.oracle_queries = tar.query_count();
    Ok(transcript)
}

fn lab_amps(v: &SubVector) -> [num_complex::Complex64; 2] {
    let a = v.amplitudes();
    [a[0], a[1]]
}

/// Basis whose first vector is the (pure) state with the Bloch direction of
/// `rho`.
pub(crate) fn basis_containing_conditional(
    rho: &crate::qmath::Density1Q,
) -> Result<SingleQubitBasis> {
    let r = bloch_of_density(rho);
    let len = r.norm();
    let dir = if len > VALIDATION_TOL {
        r.scaled(1.0 / len)
    } else {
        crate::qmath::BlochVector::raw(0.0, 0.0, 1.0)
    };
    SingleQubitBasis::containing(&ket_from_bloch(&dir))
}

/// A lab state: pure, or a finite mixture of pure states.
#[derive(Clone, Debug, PartialEq)]
pub enum LabState {
    Pure(StateVector),
    Mixture(Vec<(f64, StateVector)>),
}

impl LabState {
    /// Mixture with nonnegative weights summing to 1 within `1e-9`.
    pub fn mixture(components: Vec<(f64, StateVector)>) -> Result<Self> {
        let n = components
            .first()
            .map(|(_, s)| s.n_qubits())
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut total = 0.0;
        for (w, s) in &components {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidArgument(format!("mixture weight {w}")));
            }
            if s.n_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: s.n_qubits(),
                });
            }
            total += w;
        }
        if (total - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}"
            )));
        }
        Ok(Self::Mixture(components))
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Pure(s) => s.n_qubits(),
            Self::Mixture(c) => c[0].1.n_qubits(),
        }
    }

    /// `⟨tar|ρ|tar⟩`.
    pub fn fidelity(&self, tar: &StateVector) -> Result<f64> {
        match self {
            Self::Pure(s) => Ok(overlap(tar, s)?.norm_sqr()),
            Self::Mixture(c) => c
                .iter()
                .map(|(w, s)| Ok(w * overlap(tar, s)?.norm_sqr()))
                .sum(),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, &StateVector) {
        match self {
            Self::Pure(s) => (0, s),
            Self::Mixture(c) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, (w, s)) in c.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        return (i, s);
                    }
                }
                let last = c.len() - 1;
                (last, &c[last].1)
            }
        }
    }
}

/// Repetition parameters for the amplified test.
#[derive(Clone, Debug, PartialEq)]
pub struct WrapperConfig {
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub copies: usize,
    pub reject_threshold: f64,
    /// Constant `c` in `copies = ceil(c · (n/ε) · ln(2/δ))`.
    pub constant: f64,
}

impl WrapperConfig {
    pub const DEFAULT_CONSTANT: f64 = 48.0;

    /// Default copy count and threshold `3ε/(4n)`.
    pub fn new(n: usize, epsilon: f64, delta: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        for (name, v) in [("epsilon", epsilon), ("delta", delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} = {v} not in (0, 1)"
                )));
            }
        }
        let c = Self::DEFAULT_CONSTANT;
        let copies = (c * (n as f64 / epsilon) * (2.0 / delta).ln()).ceil() as usize;
        Ok(Self {
            n,
            epsilon,
            delta,
            copies,
            reject_threshold: 3.0 * epsilon / (4.0 * n as f64),
            constant: c,
        })
    }

    pub fn with_copies(mut self, copies: usize) -> Result<Self> {
        if copies == 0 {
            return Err(Error::InvalidArgument("copies must be positive".into()));
        }
        self.copies = copies;
        Ok(self)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self> {
        if !(threshold.is_finite() && (0.0..=1.0).contains(&threshold)) {
            return Err(Error::InvalidArgument(format!(
                "threshold {threshold} not in [0, 1]"
            )));
        }
        self.reject_threshold = threshold;
        Ok(self)
    }
}

/// Result of the amplified test.
#[derive(Clone, Debug, PartialEq)]
pub struct AmplifiedOutcome {
    pub verdict: Verdict,
    pub rejects: usize,
    pub reject_fraction: f64,
    /// Per-copy transcripts in copy order.
    pub transcripts: Vec<CertifyTranscript>,
}

/// Run `cfg.copies` independent copies and accept iff the reject fraction is
/// below `cfg.reject_threshold`.
///
/// Copy `i` draws from `substream(master_seed, "copy", i)`, so the outcome
/// does not depend on the thread count.
pub fn certify_amplified(
    lab: &LabState,
    tar: &dyn TargetOracle,
    cfg: &WrapperConfig,
    master_seed: u64,
) -> Result<AmplifiedOutcome> {
    if lab.n_qubits() != tar.n_qubits() || cfg.n != tar.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: tar.n_qubits(),
            found: if cfg.n != tar.n_qubits() {
                cfg.n
            } else {
                lab.n_qubits()
            },
        });
    }
    let transcripts = (0..cfg.copies as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(master_seed, "copy", i);
            let (component, state) = lab.sample(&mut rng);
            let mut t = certify_once(state, tar, &mut rng)?;
            t.lab_component = component;
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let rejects = transcripts
        .iter()
        .filter(|t| t.verdict == Verdict::Reject)
        .count();
    let reject_fraction = rejects as f64 / cfg.copies as f64;
    Ok(AmplifiedOutcome {
        verdict: if reject_fraction < cfg.reject_threshold {
            Verdict::Accept
        } else {
            Verdict::Reject
        },
        rejects,
        reject_fraction,
        transcripts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mps::MpsState;
    use crate::oracle::{DenseOracle, MpsOracle};
    use crate::qmath::{ket_plus, ONE, ZERO};
    use crate::states::{ghz, haar_random};

    fn run_many(
        lab: &StateVector,
        tar: &dyn TargetOracle,
        runs: u64,
        seed: u64,
    ) -> Vec<CertifyTranscript> {
        (0..runs)
            .map(|i| certify_once(lab, tar, &mut substream(seed, "certify-test", i)).unwrap())
            .collect()
    }

    #[test]
    fn identical_states_always_accept() {
        let mut rng = substream(1, "certify-test", 0);
        let s = haar_random(4, &mut rng);
        let o = DenseOracle::new(s.clone());
        for t in run_many(&s, &o, 2000, 2) {
            assert_eq!(t.verdict, Verdict::Accept);
            assert!(!t.degenerate_target);
        }
    }

    #[test]
    fn orthogonal_single_qubits_always_reject() {
        let lab = StateVector::basis(1, 1).unwrap();
        let o = DenseOracle::new(StateVector::basis(1, 0).unwrap());
        for t in run_many(&lab, &o, 500, 3) {
            assert_eq!(t.k, 1);
            assert!(t.path.is_empty());
            assert_eq!(t.verdict, Verdict::Reject);
            assert_eq!(t.oracle_queries, 4);
        }
    }

    #[test]
    fn query_budget_holds() {
        let mut rng = substream(4, "certify-test", 0);
        for n in 1..=8 {
            let tar = haar_random(n, &mut rng);
            let lab = haar_random(n, &mut rng);
            let o = DenseOracle::new(tar);
            for t in run_many(&lab, &o, 50, n as u64) {
                assert!(t.oracle_queries <= 8 * n as u64 + 2);
                assert!(t.oracle_queries <= 6 * (n - t.k) as u64 + 6);
            }
        }
    }

    #[test]
    fn transcripts_are_reproducible() {
        let mut rng = substream(5, "certify-test", 0);
        let tar = haar_random(5, &mut rng);
        let lab = haar_random(5, &mut rng);
        let o = DenseOracle::new(tar);
        assert_eq!(run_many(&lab, &o, 50, 9), run_many(&lab, &o, 50, 9));
    }

    #[test]
    fn vanishing_target_support_rejects() {
        // Lab |11⟩ lands where the target |00⟩ has no weight.
        let tar = StateVector::basis(2, 0).unwrap();
        let lab = StateVector::basis(2, 3).unwrap();
        let o = DenseOracle::new(tar);
        let runs = run_many(&lab, &o, 200, 11);
        assert!(runs.iter().all(|t| t.verdict == Verdict::Reject));
        assert!(runs.iter().any(|t| t.degenerate_target));
    }

    #[test]
    fn mps_and_dense_oracles_give_same_transcripts_up_to_rounding() {
        let tar_mps = MpsState::ghz(4).unwrap();
        let tar = ghz(4).unwrap();
        let lab = StateVector::product(&[ket_plus(); 4]).unwrap();
        let (od, om) = (DenseOracle::new(tar), MpsOracle::new(tar_mps));
        let a = run_many(&lab, &od, 100, 12);
        let b = run_many(&lab, &om, 100, 12);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.verdict, y.verdict);
            assert_eq!(x.prefix, y.prefix);
            assert_eq!(x.path.outcomes, y.path.outcomes);
        }
    }

    #[test]
    fn wrapper_config_defaults() {
        let cfg = WrapperConfig::new(6, 0.3, 0.1).unwrap();
        let expect = (48.0 * 20.0 * 20f64.ln()).ceil() as usize;
        assert_eq!(cfg.copies, expect);
        assert!((cfg.reject_threshold - 0.0375).abs() < 1e-15);
        assert!(WrapperConfig::new(6, 0.0, 0.1).is_err());
        assert!(WrapperConfig::new(6, 0.3, 1.0).is_err());
        assert!(cfg.clone().with_copies(0).is_err());
    }

    #[test]
    fn amplified_identical_accepts_and_is_order_stable() {
        let mut rng = substream(13, "certify-test", 0);
        let s = haar_random(3, &mut rng);
        let o = DenseOracle::new(s.clone());
        let cfg = WrapperConfig::new(3, 0.3, 0.1)
            .unwrap()
            .with_copies(300)
            .unwrap();
        let lab = LabState::Pure(s);
        let a = certify_amplified(&lab, &o, &cfg, 99).unwrap();
        assert_eq!(a.verdict, Verdict::Accept);
        assert_eq!(a.rejects, 0);
        let b = certify_amplified(&lab, &o, &cfg, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mixture_components_are_sampled() {
        let z = StateVector::basis(1, 0).unwrap();
        let one = StateVector::new(vec![ZERO, ONE]).unwrap();
        let lab = LabState::mixture(vec![(0.5, z.clone()), (0.5, one)]).unwrap();
        assert!((lab.fidelity(&z).unwrap() - 0.5).abs() < 1e-15);
        let o = DenseOracle::new(z);
        let cfg = WrapperConfig::new(1, 0.5, 0.5)
            .unwrap()
            .with_copies(400)
            .unwrap();
        let out = certify_amplified(&lab, &o, &cfg, 5).unwrap();
        for t in &out.transcripts {
            let expect = if t.lab_component == 0 {
                Verdict::Accept
            } else {
                Verdict::Reject
            };
            assert_eq!(t.verdict, expect);
        }
        assert!(out.rejects > 150 && out.rejects < 250);
        assert!(LabState::mixture(vec![(0.4, StateVector::basis(1, 0).unwrap())]).is_err());
    }
}
