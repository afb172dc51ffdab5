//! Exact, sampling-free analysis of the certification test.
//!
//! Everything here is computed by enumerating the test's randomness with
//! exact conditioning. Prefixes whose lab mass is at most `1e-14` are
//! pruned. A target conditional with mass at most `1e-12` has overlap 0
//! with anything.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dtbasis::{PhaseTree, DEFAULT_MAX_DEPTH};
use crate::error::{Error, Result};
use crate::qmath::{overlap, StateVector, SubVector, DEGENERATE_MASS, ONE, VALIDATION_TOL, ZERO};

/// Default cap on the qubit count for exhaustive enumeration.
pub const DEFAULT_ANALYZER_CAP: usize = 12;

/// Lab prefixes at or below this mass are never visited.
pub const PRUNE_MASS: f64 = 1e-14;

/// Probability of one `(k, x, ℓ, outcome)` branch of the test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeRow {
    pub k: usize,
    /// Prefix bits as a big-endian integer of width `k - 1`.
    pub prefix: u64,
    /// Leaf index of width `n - k`.
    pub leaf: u64,
    /// `0` accepts; `1` rejects.
    pub outcome: u8,
    /// Set when the target conditional vanished at this leaf.
    pub degenerate: bool,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactDistribution {
    pub n: usize,
    pub p_accept: f64,
    pub p_reject: f64,
    /// Part of `p_reject` coming from vanishing target conditionals.
    pub p_degenerate: f64,
    pub rows: Vec<OutcomeRow>,
}

/// Joint probabilities of one subtest, relative to the lab branch's mass.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SubtestProbabilities {
    pub p_accept: f64,
    pub p_reject: f64,
    pub p_degenerate: f64,
}

struct Prefix {
    bits: u64,
    lab: SubVector,
    tar: SubVector,
}

fn check_pair(lab: &SubVector, tar: &SubVector) -> Result<usize> {
    if lab.n_qubits() != tar.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: tar.n_qubits(),
            found: lab.n_qubits(),
        });
    }
    Ok(tar.n_qubits())
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap {
        return Err(Error::Capacity {
            what: "analyzer qubits",
            requested: n,
            limit: cap,
        });
    }
    Ok(())
}

// Prefix levels 0..=depth of lab-supported computational outcomes.
fn prefix_levels(lab: &SubVector, tar: &SubVector, depth: usize) -> Result<Vec<Vec<Prefix>>> {
    let mut levels = vec![vec![Prefix {
        bits: 0,
        lab: lab.clone(),
        tar: tar.clone(),
    }]];
    for _ in 0..depth {
        let mut next = Vec::new();
        for p in levels.last().expect("nonempty") {
            let (l0, l1) = p.lab.split_first()?;
            let (t0, t1) = p.tar.split_first()?;
            for (b, l, t) in [(0u64, l0, t0), (1, l1, t1)] {
                if l.norm_sqr() > PRUNE_MASS {
                    next.push(Prefix {
                        bits: (p.bits << 1) | b,
                        lab: l,
                        tar: t,
                    });
                }
            }
        }
        levels.push(next);
    }
    Ok(levels)
}

// |⟨t|v⟩|² / ‖t‖², or 0 for a vanishing t.
fn conditional_fidelity(t: &SubVector, v: &SubVector) -> Result<f64> {
    let mass = t.norm_sqr();
    if mass <= DEGENERATE_MASS {
        return Ok(0.0);
    }
    Ok(overlap(t, v)?.norm_sqr() / mass)
}

/// Exact subtest probabilities for lab branch `v` against target branch `u`
/// (both on `m ≥ 1` qubits, possibly subnormalized), with the DT basis on
/// the last `m - 1` qubits built from the first-qubit branches of `u`.
pub fn subtest_exact(
    v: &SubVector,
    u: &SubVector,
    max_depth: usize,
) -> Result<SubtestProbabilities> {
    let (rows, _) = subtest_rows(v, u, max_depth)?;
    let mut out = SubtestProbabilities::default();
    for (_, accept, reject, degenerate) in rows {
        out.p_accept += accept;
        out.p_reject += reject;
        if degenerate {
            out.p_degenerate += reject;
        }
    }
    Ok(out)
}

// Per leaf: (leaf, accept, reject, degenerate), plus the tree.
type LeafRow = (u64, f64, f64, bool);

fn subtest_rows(
    v: &SubVector,
    u: &SubVector,
    max_depth: usize,
) -> Result<(Vec<LeafRow>, PhaseTree)> {
    check_pair(v, u)?;
    let (u0, u1) = u.split_first()?;
    let (v0, v1) = v.split_first()?;
    let tree = PhaseTree::from_branches(&u0, &u1, max_depth)?;
    let (lu0, lu1) = (tree.leaf_amplitudes(&u0)?, tree.leaf_amplitudes(&u1)?);
    let (lv0, lv1) = (tree.leaf_amplitudes(&v0)?, tree.leaf_amplitudes(&v1)?);
    let rows = (0..tree.n_leaves())
        .map(|leaf| {
            let t = [lu0[leaf], lu1[leaf]];
            let l = [lv0[leaf], lv1[leaf]];
            let lab_mass = l[0].norm_sqr() + l[1].norm_sqr();
            let tar_mass = t[0].norm_sqr() + t[1].norm_sqr();
            if tar_mass <= DEGENERATE_MASS {
                return (leaf as u64, 0.0, lab_mass, true);
            }
            let ip = t[0].conj() * l[0] + t[1].conj() * l[1];
            let accept = ip.norm_sqr() / tar_mass;
            (leaf as u64, accept, (lab_mass - accept).max(0.0), false)
        })
        .collect();
    Ok((rows, tree))
}

/// Full outcome distribution of the single-copy test (default cap).
pub fn exact_distribution(lab: &StateVector, tar: &StateVector) -> Result<ExactDistribution> {
    exact_distribution_with_cap(lab, tar, DEFAULT_ANALYZER_CAP)
}

pub fn exact_distribution_with_cap(
    lab: &StateVector,
    tar: &StateVector,
    cap: usize,
) -> Result<ExactDistribution> {
    let n = check_pair(lab, tar)?;
    check_cap(n, cap)?;
    let levels = prefix_levels(lab, tar, n - 1)?;
    let weight = 1.0 / n as f64;
    let per_k: Vec<Vec<OutcomeRow>> = (1..=n)
        .into_par_iter()
        .map(|k| {
            let mut rows = Vec::new();
            for p in &levels[k - 1] {
                let (leaves, _) = subtest_rows(&p.lab, &p.tar, cap.max(DEFAULT_MAX_DEPTH))?;
                for (leaf, accept, reject, degenerate) in leaves {
                    for (outcome, prob) in [(0u8, accept), (1, reject)] {
                        if degenerate && outcome == 0 {
                            continue;
                        }
                        rows.push(OutcomeRow {
                            k,
                            prefix: p.bits,
                            leaf,
                            outcome,
                            degenerate,
                            prob: weight * prob,
                        });
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<OutcomeRow> = per_k.into_iter().flatten().collect();
    let mut dist = ExactDistribution {
        n,
        p_accept: 0.0,
        p_reject: 0.0,
        p_degenerate: 0.0,
        rows,
    };
    for r in &dist.rows {
        if r.outcome == 0 {
            dist.p_accept += r.prob;
        } else {
            dist.p_reject += r.prob;
            if r.degenerate {
                dist.p_degenerate += r.prob;
            }
        }
    }
    Ok(dist)
}

/// `E_b |⟨tar^b|lab^b⟩|² − |⟨tar|lab⟩|²` for normalized branches, with `b`
/// drawn from the lab branch's first qubit.
pub fn fidelity_gap(lab_branch: &SubVector, tar_branch: &SubVector) -> Result<f64> {
    let m = check_pair(lab_branch, tar_branch)?;
    if m == 0 {
        return Err(Error::QubitOutOfRange { qubit: 0, n: 0 });
    }
    let v = lab_branch.normalized()?;
    let (v0, v1) = v.split_first()?;
    let (t0, t1) = tar_branch.split_first()?;
    let after = conditional_fidelity(&t0, &v0)? + conditional_fidelity(&t1, &v1)?;
    Ok(after - conditional_fidelity(tar_branch, &v)?)
}

/// `Φ⁰ … Φⁿ`, where `Φᵏ` is the lab-weighted mean conditional fidelity over
/// `k`-bit prefixes.
pub fn phi_sequence(lab: &StateVector, tar: &StateVector) -> Result<Vec<f64>> {
    phi_sequence_with_cap(lab, tar, DEFAULT_ANALYZER_CAP)
}

pub fn phi_sequence_with_cap(lab: &StateVector, tar: &StateVector, cap: usize) -> Result<Vec<f64>> {
    let n = check_pair(lab, tar)?;
    check_cap(n, cap)?;
    prefix_levels(lab, tar, n)?
        .iter()
        .map(|level| {
            level
                .iter()
                .map(|p| conditional_fidelity(&p.tar, &p.lab))
                .sum()
        })
        .collect()
}

/// `E_{k,x}[Δ(lab^x : tar^x)]` over the test's own prefix distribution.
pub fn expected_gap(lab: &StateVector, tar: &StateVector) -> Result<f64> {
    expected_gap_with_cap(lab, tar, DEFAULT_ANALYZER_CAP)
}

pub fn expected_gap_with_cap(lab: &StateVector, tar: &StateVector, cap: usize) -> Result<f64> {
    let n = check_pair(lab, tar)?;
    check_cap(n, cap)?;
    let mut total = 0.0;
    for level in &prefix_levels(lab, tar, n - 1)? {
        for p in level {
            total += p.lab.norm_sqr() * fidelity_gap(&p.lab, &p.tar)?;
        }
    }
    Ok(total / n as f64)
}

/// Number of lab-supported prefixes (all lengths `1..=n`) on which the
/// target vanishes. When zero, `Φⁿ = 1`.
pub fn unsupported_prefixes(lab: &StateVector, tar: &StateVector) -> Result<usize> {
    let n = check_pair(lab, tar)?;
    Ok(prefix_levels(lab, tar, n)?
        .iter()
        .skip(1)
        .flatten()
        .filter(|p| p.tar.norm_sqr() <= DEGENERATE_MASS)
        .count())
}

/// The subtest written in the leaf basis of a phase tree.
///
/// `|U⟩ = |0⟩⊗u⁰ + |1⟩⊗u¹` is the target branch, `|V⟩ = |0⟩⊗v⁰ + |1⟩⊗v¹`
/// the lab branch. All vectors are stored as leaf coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct SubtestDecomposition {
    pub a0: f64,
    pub a1: f64,
    pub v0: Vec<C64>,
    pub v1: Vec<C64>,
    /// `ṽ¹ = D†v¹`.
    pub vtilde1: Vec<C64>,
    /// Diagonal of `D`: `ζ_ℓ = ⟨ℓ|U¹⟩ / ⟨ℓ|U⁰⟩`, or 1 when a branch vanishes.
    pub zetas: Vec<C64>,
    /// Normalized `U⁰`, `U¹` (zero when the branch vanishes).
    pub u0_hat: Vec<C64>,
    pub u1_hat: Vec<C64>,
}

impl SubtestDecomposition {
    /// Decompose normalized `u` and `v` on `m ≥ 1` qubits against `tree`
    /// (depth `m - 1`), which must make both target branches phase states.
    pub fn new(u: &StateVector, v: &StateVector, tree: &PhaseTree) -> Result<Self> {
        let m = check_pair(v, u)?;
        if tree.depth() + 1 != m {
            return Err(Error::DimensionMismatch {
                expected: m - 1,
                found: tree.depth(),
            });
        }
        let (u0, u1) = u.split_first()?;
        let (v0, v1) = v.split_first()?;
        let (a0, a1) = (u0.norm_sqr().sqrt(), u1.norm_sqr().sqrt());
        let unit = (tree.n_leaves() as f64).sqrt().recip();
        let hat = |b: &SubVector, a: f64| -> Result<Vec<C64>> {
            if a * a <= DEGENERATE_MASS {
                return Ok(vec![ZERO; tree.n_leaves()]);
            }
            let coords: Vec<C64> = tree.leaf_amplitudes(b)?.iter().map(|z| z / a).collect();
            if coords
                .iter()
                .any(|z| (z.norm() - unit).abs() > VALIDATION_TOL)
            {
                return Err(Error::InvalidBasis(
                    "target branch is not a phase state".into(),
                ));
            }
            Ok(coords)
        };
        let (u0_hat, u1_hat) = (hat(&u0, a0)?, hat(&u1, a1)?);
        let degenerate = a0 * a0 <= DEGENERATE_MASS || a1 * a1 <= DEGENERATE_MASS;
        let zetas: Vec<C64> = u0_hat
            .iter()
            .zip(&u1_hat)
            .map(|(z0, z1)| if degenerate { ONE } else { z1 / z0 })
            .collect();
        let v0 = tree.leaf_amplitudes(&v0)?;
        let v1 = tree.leaf_amplitudes(&v1)?;
        let vtilde1 = v1.iter().zip(&zetas).map(|(x, z)| z.conj() * x).collect();
        Ok(Self {
            a0,
            a1,
            v0,
            v1,
            vtilde1,
            zetas,
            u0_hat,
            u1_hat,
        })
    }

    /// Build the tree from `u`'s branches, then decompose.
    pub fn from_states(u: &StateVector, v: &StateVector) -> Result<(Self, PhaseTree)> {
        let (u0, u1) = u.split_first()?;
        let tree = PhaseTree::from_branches(&u0, &u1, DEFAULT_MAX_DEPTH)?;
        Ok((Self::new(u, v, &tree)?, tree))
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `(‖a⁰v⁰ + a¹ṽ¹‖², ‖a¹v⁰ − a⁰ṽ¹‖²)`.
pub fn subtest_closed_form(dec: &SubtestDecomposition) -> (f64, f64) {
    let (a0, a1) = (dec.a0, dec.a1);
    dec.v0
        .iter()
        .zip(&dec.vtilde1)
        .fold((0.0, 0.0), |(acc, rej), (x, y)| {
            (
                acc + (a0 * x + a1 * y).norm_sqr(),
                rej + (a1 * x - a0 * y).norm_sqr(),
            )
        })
}

/// `|a¹⟨U⁰|v⁰⟩ − a⁰⟨U¹|v¹⟩|²`.
pub fn gap_closed_form(dec: &SubtestDecomposition) -> f64 {
    (dec.a1 * dot(&dec.u0_hat, &dec.v0) - dec.a0 * dot(&dec.u1_hat, &dec.v1)).norm_sqr()
}
