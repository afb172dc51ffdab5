//! Open-boundary matrix product states.
//!
//! Site `i` carries a tensor `A[l, s, r]` with left bond `χᵢ`, physical index
//! `s ∈ {0, 1}` and right bond `χᵢ₊₁`, stored row-major in `(l, s, r)` order.
//! The outer bonds have dimension 1. No canonical form is assumed; only the
//! global normalization `⟨ψ|ψ⟩ = 1` is enforced.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::oracle::Factor;
use crate::qmath::{Ket1, StateVector, ONE, VALIDATION_TOL, ZERO};

/// Default maximum bond dimension accepted on construction.
pub const DEFAULT_CHI_MAX: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct MpsTensor {
    left: usize,
    right: usize,
    data: Vec<C64>,
}

impl MpsTensor {
    pub fn new(left: usize, right: usize, data: Vec<C64>) -> Result<Self> {
        if left == 0 || right == 0 || data.len() != left * 2 * right {
            return Err(Error::InvalidArgument(format!(
                "site tensor with bonds ({left}, {right}) needs {} entries, got {}",
                left * 2 * right,
                data.len()
            )));
        }
        if !data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { left, right, data })
    }

    pub fn left(&self) -> usize {
        self.left
    }

    pub fn right(&self) -> usize {
        self.right
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    fn at(&self, l: usize, s: usize, r: usize) -> C64 {
        self.data[(l * 2 + s) * self.right + r]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpsState {
    tensors: Vec<MpsTensor>,
}

impl MpsState {
    /// Validate bond chaining, bond caps and normalization (within `1e-9`).
    pub fn new(tensors: Vec<MpsTensor>, chi_max: usize) -> Result<Self> {
        let s = Self::unnormalized(tensors, chi_max)?;
        let ns = s.expectation(&vec![Factor::Identity; s.n_qubits()]);
        if (ns - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::NotNormalized(ns));
        }
        Ok(s)
    }

    /// Validate structure and rescale to unit norm.
    pub fn normalized(tensors: Vec<MpsTensor>, chi_max: usize) -> Result<Self> {
        Ok(Self::normalized_with_norm(tensors, chi_max)?.0)
    }

    /// As [`MpsState::normalized`], also returning the squared norm of the
    /// input tensors.
    pub fn normalized_with_norm(tensors: Vec<MpsTensor>, chi_max: usize) -> Result<(Self, f64)> {
        let mut s = Self::unnormalized(tensors, chi_max)?;
        let ns = s.norm_sqr();
        if !(ns > 0.0 && ns.is_finite()) {
            return Err(Error::NotNormalized(ns));
        }
        let scale = 1.0 / ns.sqrt();
        for z in &mut s.tensors[0].data {
            *z *= scale;
        }
        Ok((s, ns))
    }

    fn unnormalized(tensors: Vec<MpsTensor>, chi_max: usize) -> Result<Self> {
        if tensors.is_empty() {
            return Err(Error::InvalidLength(1));
        }
        let last = tensors.len() - 1;
        if tensors[0].left != 1 || tensors[last].right != 1 {
            return Err(Error::InvalidArgument(
                "outer bonds must have dimension 1".into(),
            ));
        }
        for (i, pair) in tensors.windows(2).enumerate() {
            if pair[0].right != pair[1].left {
                return Err(Error::InvalidArgument(format!(
                    "bond {} mismatch: {} vs {}",
                    i + 1,
                    pair[0].right,
                    pair[1].left
                )));
            }
        }
        if let Some(chi) = tensors
            .iter()
            .map(|t| t.right)
            .max()
            .filter(|&c| c > chi_max)
        {
            return Err(Error::Capacity {
                what: "bond dimension",
                requested: chi,
                limit: chi_max,
            });
        }
        Ok(Self { tensors })
    }

    pub fn n_qubits(&self) -> usize {
        self.tensors.len()
    }

    pub fn tensors(&self) -> &[MpsTensor] {
        &self.tensors
    }

    pub fn max_bond(&self) -> usize {
        self.tensors.iter().map(|t| t.right).max().unwrap_or(1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.expectation(&vec![Factor::Identity; self.n_qubits()])
    }

    /// Product state with bond dimension 1.
    pub fn product(kets: &[Ket1]) -> Result<Self> {
        let tensors = kets
            .iter()
            .map(|k| MpsTensor::new(1, 1, vec![k[0], k[1]]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tensors, 1)
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` with bond dimension 2.
    pub fn ghz(n: usize) -> Result<Self> {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        if n == 1 {
            return Self::new(vec![MpsTensor::new(1, 1, vec![h, h])?], 1);
        }
        let mut tensors = Vec::with_capacity(n);
        // A[0, s, r] = δ_sr / √2
        tensors.push(MpsTensor::new(1, 2, vec![h, ZERO, ZERO, h])?);
        for _ in 1..n - 1 {
            let mut data = vec![ZERO; 8];
            data[0] = ONE; // (0, 0, 0)
            data[7] = ONE; // (1, 1, 1)
            tensors.push(MpsTensor::new(2, 2, data)?);
        }
        // A[l, s, 0] = δ_ls
        tensors.push(MpsTensor::new(2, 1, vec![ONE, ZERO, ZERO, ONE])?);
        Self::new(tensors, 2)
    }

    /// Random complex-Gaussian tensors with bonds `min(χ, 2ⁱ, 2ⁿ⁻ⁱ)`,
    /// globally normalized.
    pub fn random<R: Rng + ?Sized>(n: usize, chi: usize, rng: &mut R) -> Result<Self> {
        if n == 0 || chi == 0 {
            return Err(Error::InvalidArgument("need n ≥ 1 and χ ≥ 1".into()));
        }
        let bond = |i: usize| -> usize {
            let cap = |k: usize| if k >= 63 { usize::MAX } else { 1usize << k };
            chi.min(cap(i)).min(cap(n - i))
        };
        let tensors = (0..n)
            .map(|i| {
                let (l, r) = (bond(i), bond(i + 1));
                let data = (0..l * 2 * r)
                    .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect();
                MpsTensor::new(l, r, data)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::normalized(tensors, chi)
    }

    /// Raw `⟨ψ|Π|ψ⟩` with left-to-right environments; `factors.len()` must
    /// equal the number of sites.
    pub(crate) fn expectation(&self, factors: &[Factor]) -> f64 {
        debug_assert_eq!(factors.len(), self.tensors.len());
        // env[l * χ + l'] pairs ket bond l with bra bond l'.
        let mut env = vec![ONE];
        let mut chi = 1;
        let mut b = Vec::new();
        for (t, f) in self.tensors.iter().zip(factors) {
            let (l_dim, r_dim) = (t.left, t.right);
            debug_assert_eq!(l_dim, chi);
            let mut next = vec![ZERO; r_dim * r_dim];
            match f {
                Factor::Project(k) => {
                    // B[l, r] = Σ_s conj(k_s) A[l, s, r]; E' = Bᵀ E conj(B).
                    b.clear();
                    b.extend((0..l_dim * r_dim).map(|idx| {
                        let (l, r) = (idx / r_dim, idx % r_dim);
                        k[0].conj() * t.at(l, 0, r) + k[1].conj() * t.at(l, 1, r)
                    }));
                    contract_env(&env, &b, &b, l_dim, r_dim, &mut next);
                }
                Factor::Identity => {
                    for s in 0..2 {
                        let slice: Vec<C64> = (0..l_dim * r_dim)
                            .map(|idx| t.at(idx / r_dim, s, idx % r_dim))
                            .collect();
                        contract_env(&env, &slice, &slice, l_dim, r_dim, &mut next);
                    }
                }
            }
            env = next;
            chi = r_dim;
        }
        env[0].re
    }

    /// Contract to a dense vector (big-endian, site 0 most significant).
    pub fn to_dense(&self, max_qubits: usize) -> Result<StateVector> {
        let n = self.n_qubits();
        if n > max_qubits {
            return Err(Error::Capacity {
                what: "dense qubit count",
                requested: n,
                limit: max_qubits,
            });
        }
        // rows: basis prefixes, cols: open right bond.
        let mut cur = vec![ONE];
        let mut cols = 1;
        for t in &self.tensors {
            let rows = cur.len() / cols;
            let mut next = vec![ZERO; rows * 2 * t.right];
            for p in 0..rows {
                for s in 0..2 {
                    for r in 0..t.right {
                        let mut acc = ZERO;
                        for l in 0..t.left {
                            acc += cur[p * cols + l] * t.at(l, s, r);
                        }
                        next[(p * 2 + s) * t.right + r] = acc;
                    }
                }
            }
            cur = next;
            cols = t.right;
        }
        StateVector::new(cur)
    }
}

// out[r, r'] += Σ_{l,l'} env[l, l'] ket[l, r] conj(bra[l', r'])
fn contract_env(
    env: &[C64],
    ket: &[C64],
    bra: &[C64],
    l_dim: usize,
    r_dim: usize,
    out: &mut [C64],
) {
    // tmp[l', r] = Σ_l env[l, l'] ket[l, r]
    let mut tmp = vec![ZERO; l_dim * r_dim];
    for l in 0..l_dim {
        for lp in 0..l_dim {
            let e = env[l * l_dim + lp];
            if e == ZERO {
                continue;
            }
            for r in 0..r_dim {
                tmp[lp * r_dim + r] += e * ket[l * r_dim + r];
            }
        }
    }
    for lp in 0..l_dim {
        for r in 0..r_dim {
            let x = tmp[lp * r_dim + r];
            if x == ZERO {
                continue;
            }
            for rp in 0..r_dim {
                out[r * r_dim + rp] += x * bra[lp * r_dim + rp].conj();
            }
        }
    }
}
