//! Decision-tree (DT) measurement bases.
//!
//! A depth-`m` DT basis measures qubits `0..m` in order, choosing each
//! qubit's single-qubit basis from the outcomes seen so far. Outcome `0`
//! at a node means its `|b⟩` vector, outcome `1` means `|b⊥⟩`; a leaf index
//! reads the outcome sequence as a big-endian integer.
//!
//! [`PhaseTree`] materializes the whole tree making two given states phase
//! states (every leaf equally likely). [`lazy_phase_path`] evaluates only
//! the realized root-to-leaf path from oracle queries.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::oracle::{reconstruct_qubit, Factor, TargetOracle};
use crate::qmath::{
    bloch_of_density, reduced_density_1q, BlochVector, Density1Q, Ket1, SingleQubitBasis,
    StateVector, SubVector, VALIDATION_TOL,
};

/// Default cap on the depth of eagerly materialized trees.
pub const DEFAULT_MAX_DEPTH: usize = 14;

/// A basis in which both `rho0` and `rho1` give outcomes ½/½.
///
/// Let `r` be the longer of the two Bloch vectors. The axis is `r₀ × r₁`
/// unless `‖r₀ × r₁‖ ≤ 1e-9·‖r‖`; then it is the first of `x̂ × r`, `ŷ × r`
/// with norm above `1e-9`, and if both vanish the computational basis is
/// returned. In the fallback the shorter vector is within `1e-9` of the line
/// through `r`, so both outcomes stay within `1e-9` of ½. Sign and phase
/// follow [`SingleQubitBasis::from_axis`].
pub fn equiprobable_basis(rho0: &Density1Q, rho1: &Density1Q) -> SingleQubitBasis {
    let r0 = bloch_of_density(rho0);
    let r1 = bloch_of_density(rho1);
    let r = if r0.norm() >= r1.norm() { r0 } else { r1 };
    let u = r0.cross(&r1);
    let len = u.norm();
    if len > VALIDATION_TOL * r.norm() {
        return SingleQubitBasis::from_axis(&u.scaled(1.0 / len));
    }
    let candidates = [
        BlochVector::raw(1.0, 0.0, 0.0).cross(&r),
        BlochVector::raw(0.0, 1.0, 0.0).cross(&r),
    ];
    match candidates.iter().find(|c| c.norm() > VALIDATION_TOL) {
        Some(c) => SingleQubitBasis::from_axis(&c.scaled(1.0 / c.norm())),
        None => SingleQubitBasis::computational(),
    }
}

// Reduced state of the first qubit, or I/2 for a vanishing branch.
fn first_qubit_density(v: &SubVector) -> Density1Q {
    match reduced_density_1q(v, 0) {
        Ok((_, rho)) => rho,
        Err(_) => Density1Q::maximally_mixed(),
    }
}

/// A fully materialized DT basis.
///
/// Nodes are stored in heap order: the node reached by the `d`-outcome
/// prefix `w` (as an integer) lives at `2ᵈ − 1 + w`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTree {
    depth: usize,
    nodes: Vec<SingleQubitBasis>,
}

impl PhaseTree {
    /// Tree in which both states are phase states.
    pub fn build(phi0: &StateVector, phi1: &StateVector) -> Result<Self> {
        Self::from_branches(phi0, phi1, DEFAULT_MAX_DEPTH)
    }

    /// Same construction for possibly subnormalized (or vanishing)
    /// generators. A generator branch with mass at most `1e-12` is replaced by
    /// the maximally mixed state at that node.
    pub fn from_branches(g0: &SubVector, g1: &SubVector, max_depth: usize) -> Result<Self> {
        let m = g0.n_qubits();
        if g1.n_qubits() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: g1.n_qubits(),
            });
        }
        if m > max_depth {
            return Err(Error::Capacity {
                what: "tree depth",
                requested: m,
                limit: max_depth,
            });
        }
        let mut nodes = Vec::with_capacity((1usize << m) - 1);
        let mut level = vec![(g0.clone(), g1.clone())];
        for _ in 0..m {
            let bases: Vec<SingleQubitBasis> = level
                .par_iter()
                .map(|(a, b)| equiprobable_basis(&first_qubit_density(a), &first_qubit_density(b)))
                .collect();
            level = level
                .par_iter()
                .zip(&bases)
                .flat_map_iter(|((a, b), basis)| {
                    [basis.b(), basis.b_perp()]
                        .map(|k| (a.project_unchecked(0, k), b.project_unchecked(0, k)))
                })
                .collect();
            nodes.extend(bases);
        }
        Ok(Self { depth: m, nodes })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn n_leaves(&self) -> usize {
        1 << self.depth
    }

    pub fn nodes(&self) -> &[SingleQubitBasis] {
        &self.nodes
    }

    /// Basis at the node reached by outcome prefix `path`.
    pub fn node(&self, path: &[u8]) -> Option<&SingleQubitBasis> {
        if path.len() >= self.depth {
            return None;
        }
        let w = path
            .iter()
            .fold(0usize, |acc, &b| (acc << 1) | usize::from(b != 0));
        self.nodes.get((1usize << path.len()) - 1 + w)
    }

    /// The product ket of `leaf`, one single-qubit ket per level.
    pub fn leaf_kets(&self, leaf: usize) -> Vec<Ket1> {
        let mut path = Vec::with_capacity(self.depth);
        let mut kets = Vec::with_capacity(self.depth);
        for d in 0..self.depth {
            let bit = ((leaf >> (self.depth - 1 - d)) & 1) as u8;
            kets.push(*self.node(&path).expect("in range").vector(bit));
            path.push(bit);
        }
        kets
    }

    /// `⟨ℓ|v⟩` for every leaf, in leaf order.
    pub fn leaf_amplitudes(&self, v: &SubVector) -> Result<Vec<C64>> {
        if v.n_qubits() != self.depth {
            return Err(Error::DimensionMismatch {
                expected: self.depth,
                found: v.n_qubits(),
            });
        }
        let mut level = vec![v.clone()];
        for d in 0..self.depth {
            let offset = (1usize << d) - 1;
            level = level
                .par_iter()
                .enumerate()
                .flat_map_iter(|(w, a)| {
                    let basis = &self.nodes[offset + w];
                    [basis.b(), basis.b_perp()].map(|k| a.project_unchecked(0, k))
                })
                .collect();
        }
        Ok(level.into_iter().map(|s| s.amplitudes()[0]).collect())
    }

    /// Born probabilities of every leaf for `v`.
    pub fn leaf_probabilities(&self, v: &SubVector) -> Result<Vec<f64>> {
        Ok(self
            .leaf_amplitudes(v)?
            .iter()
            .map(|a| a.norm_sqr())
            .collect())
    }
}

/// Largest deviation of a leaf probability from `2⁻ᵐ` over both states.
pub fn phase_deviation(tree: &PhaseTree, phi0: &SubVector, phi1: &SubVector) -> Result<f64> {
    let uniform = 1.0 / tree.n_leaves() as f64;
    let mut worst: f64 = 0.0;
    for s in [phi0, phi1] {
        let mass = s.norm_sqr();
        for p in tree.leaf_probabilities(s)? {
            worst = worst.max((p - mass * uniform).abs());
        }
    }
    Ok(worst)
}

/// Source of measurement outcomes for a lazily evaluated path.
pub trait OutcomeSource {
    /// Outcome (0 for `|b⟩`, 1 for `|b⊥⟩`) at `step` when measuring in `basis`.
    fn next_outcome(&mut self, step: usize, basis: &SingleQubitBasis) -> Result<u8>;
}

/// Replays a fixed outcome sequence.
#[derive(Clone, Debug)]
pub struct ScriptedOutcomes {
    outcomes: Vec<u8>,
}

impl ScriptedOutcomes {
    pub fn new(outcomes: Vec<u8>) -> Self {
        Self { outcomes }
    }

    /// The outcome sequence of leaf `leaf` in a depth-`m` tree.
    pub fn leaf(leaf: usize, m: usize) -> Self {
        Self::new((0..m).map(|d| ((leaf >> (m - 1 - d)) & 1) as u8).collect())
    }
}

impl OutcomeSource for ScriptedOutcomes {
    fn next_outcome(&mut self, step: usize, _basis: &SingleQubitBasis) -> Result<u8> {
        self.outcomes
            .get(step)
            .copied()
            .ok_or_else(|| Error::InvalidArgument(format!("no scripted outcome for step {step}")))
    }
}

/// One realized root-to-leaf path.
#[derive(Clone, Debug, PartialEq)]
pub struct DtPath {
    pub outcomes: Vec<u8>,
    pub bases: Vec<SingleQubitBasis>,
}

impl DtPath {
    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn leaf_index(&self) -> u64 {
        self.outcomes
            .iter()
            .fold(0u64, |acc, &b| (acc << 1) | u64::from(b != 0))
    }

    /// The observed single-qubit kets, in measurement order.
    pub fn observed_kets(&self) -> Vec<Ket1> {
        self.bases
            .iter()
            .zip(&self.outcomes)
            .map(|(basis, &o)| *basis.vector(o))
            .collect()
    }
}

/// Walk one path of the DT basis making the two oracle states phase states,
/// computing each node's basis on demand.
///
/// Each step reconstructs the current qubit of both conditional states
/// (three queries each, plus one normalizer per oracle on the first step;
/// later normalizers follow from the previous reconstruction), so at most
/// `6m + 2` queries are issued. A state whose branch vanishes contributes
/// `I/2` from then on and is not queried again.
pub fn lazy_phase_path(
    oracle0: &dyn TargetOracle,
    oracle1: &dyn TargetOracle,
    source: &mut dyn OutcomeSource,
) -> Result<DtPath> {
    let m = oracle0.n_qubits();
    if oracle1.n_qubits() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: oracle1.n_qubits(),
        });
    }
    let oracles = [oracle0, oracle1];
    let mut mass: [Option<f64>; 2] = [None, None];
    let mut alive = [true, true];
    let mut context = vec![Factor::Identity; m];
    let mut path = DtPath {
        outcomes: Vec::with_capacity(m),
        bases: Vec::with_capacity(m),
    };
    for t in 0..m {
        let mut rhos = [Density1Q::maximally_mixed(); 2];
        for i in 0..2 {
            if !alive[i] {
                continue;
            }
            match reconstruct_qubit(oracles[i], &context, t, mass[i]) {
                Ok((p, rho)) => {
                    mass[i] = Some(p);
                    rhos[i] = rho;
                }
                Err(Error::DegenerateBranch { .. }) => alive[i] = false,
                Err(e) => return Err(e),
            }
        }
        let basis = equiprobable_basis(&rhos[0], &rhos[1]);
        let outcome = source.next_outcome(t, &basis)?;
        let chosen = *basis.vector(outcome);
        for i in 0..2 {
            if let (true, Some(p)) = (alive[i], mass[i]) {
                mass[i] = Some(p * rhos[i].prob(&chosen));
            }
        }
        context[t] = Factor::Project(chosen);
        path.outcomes.push(outcome);
        path.bases.push(basis);
    }
    Ok(path)
}
