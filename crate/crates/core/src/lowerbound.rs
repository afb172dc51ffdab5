//! Hard instances for single-qubit-measurement certification.
//!
//! A code `C = (c¹ … c^N)` over `{0,1,2,3}ⁿ` picks, for each codeword, the
//! product `|ψ_{cᵗ}⟩ = |χ_{cᵗ₁}⟩⊗…⊗|χ_{cᵗₙ}⟩` of tetrahedral (SIC) states.
//! The pure state `ψ_C ∝ Σₜ |ψ_{cᵗ}⟩` and the uniform mixture `ρ_C` of the
//! same products are hard to tell apart with product measurements.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qmath::{
    bloch_of_ket, ket_from_bloch, ket_inner, BlochVector, Ket1, SingleQubitBasis, StateVector,
    SubVector, VALIDATION_TOL, ZERO,
};
use crate::rng::substream;

/// Default cap on qubits for dense vectors built here.
pub const DEFAULT_DENSE_CAP: usize = 20;
/// Default cap on qubits for the dense mixture matrix.
pub const DEFAULT_MIXTURE_CAP: usize = 12;

/// The four tetrahedral states: `χ₀ = |0⟩` and
/// `χ_b = (|0⟩ + √2 e^{2πi(b−1)/3}|1⟩)/√3`.
pub fn sic_states() -> [Ket1; 4] {
    let a = 1.0 / 3f64.sqrt();
    let b = (2.0 / 3.0f64).sqrt();
    let chi = |j: usize| {
        [
            C64::new(a, 0.0),
            C64::from_polar(b, 2.0 * PI * j as f64 / 3.0),
        ]
    };
    [[C64::new(1.0, 0.0), ZERO], chi(0), chi(1), chi(2)]
}

/// `|⟨φ|χ₀⟩⟨χ_b|φ⟩| + |⟨φ⊥|χ₀⟩⟨χ_b|φ⊥⟩|`, minimized over `b ∈ {1,2,3}`.
pub fn uncertainty_value(basis: &SingleQubitBasis) -> f64 {
    let chi = sic_states();
    (1..4)
        .map(|b| {
            [basis.b(), basis.b_perp()]
                .iter()
                .map(|phi| (ket_inner(phi, &chi[0]) * ket_inner(&chi[b], phi)).norm())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Result of the numeric search over single-qubit bases.
#[derive(Clone, Debug, PartialEq)]
pub struct UncertaintySearch {
    pub max_min_value: f64,
    /// Bloch axis of the maximizing basis.
    pub argmax: BlochVector,
    /// Number of bases evaluated, grid and refinement together.
    pub evaluated: usize,
}

/// Bound claimed for the search's maximum.
pub const UNCERTAINTY_BOUND: f64 = 0.99;

fn fibonacci_sphere(count: usize) -> Vec<BlochVector> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let t = golden * i as f64;
            BlochVector::raw(r * t.cos(), r * t.sin(), z)
        })
        .collect()
}

fn value_at(axis: &BlochVector) -> f64 {
    let u = axis.scaled(1.0 / axis.norm());
    uncertainty_value(&SingleQubitBasis::from_axis(&u))
}

/// Maximize [`uncertainty_value`] over a Fibonacci grid of `grid` axes, then
/// refine the best 32 by coordinate pattern search for `refine_iters` rounds.
///
/// Fails with [`Error::ClaimViolation`] if the maximum exceeds
/// `0.99 + 1e-6`.
pub fn verify_uncertainty_claim(grid: usize, refine_iters: usize) -> Result<UncertaintySearch> {
    if grid < 1000 {
        return Err(Error::InvalidArgument(format!(
            "grid resolution {grid} below 1000"
        )));
    }
    let points = fibonacci_sphere(grid);
    let mut scored: Vec<(f64, BlochVector)> =
        points.par_iter().map(|p| (value_at(p), *p)).collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let seeds = &scored[..scored.len().min(32)];
    let refined: Vec<(f64, BlochVector, usize)> = seeds
        .par_iter()
        .map(|&(v, p)| refine(p, v, refine_iters, (4.0 * PI / grid as f64).sqrt()))
        .collect();
    let mut best = (scored[0].0, scored[0].1);
    let mut evaluated = grid;
    for (v, p, count) in refined {
        evaluated += count;
        if v > best.0 {
            best = (v, p);
        }
    }
    let out = UncertaintySearch {
        max_min_value: best.0,
        argmax: best.1.scaled(1.0 / best.1.norm()),
        evaluated,
    };
    if out.max_min_value > UNCERTAINTY_BOUND + 1e-6 {
        return Err(Error::ClaimViolation(format!(
            "max-min value {} exceeds {UNCERTAINTY_BOUND}",
            out.max_min_value
        )));
    }
    Ok(out)
}

// Pattern search on the sphere: try ± steps along two tangent directions,
// halving the step when nothing improves.
fn refine(start: BlochVector, value: f64, iters: usize, step: f64) -> (f64, BlochVector, usize) {
    let (mut p, mut v, mut h) = (start, value, step);
    let mut count = 0;
    for _ in 0..iters {
        let helper = if p.x.abs() < 0.9 {
            BlochVector::raw(1.0, 0.0, 0.0)
        } else {
            BlochVector::raw(0.0, 1.0, 0.0)
        };
        let t1 = p.cross(&helper);
        let t1 = t1.scaled(1.0 / t1.norm());
        let t2 = p.cross(&t1);
        let mut improved = false;
        for (s, t) in [(1.0, t1), (-1.0, t1), (1.0, t2), (-1.0, t2)] {
            let q = BlochVector::raw(p.x + s * h * t.x, p.y + s * h * t.y, p.z + s * h * t.z);
            let q = q.scaled(1.0 / q.norm());
            let w = value_at(&q);
            count += 1;
            if w > v {
                (p, v, improved) = (q, w, true);
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    (v, p, count)
}

/// A code over `{0,1,2,3}ⁿ` with `N ≥ 2` codewords (or `N = 1` for the
/// trivial single-product case).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeEnsemble {
    n: usize,
    codewords: Vec<Vec<u8>>,
    seed: u64,
}

impl CodeEnsemble {
    pub fn new(n: usize, codewords: Vec<Vec<u8>>, seed: u64) -> Result<Self> {
        if n == 0 || codewords.is_empty() {
            return Err(Error::InvalidArgument("empty code".into()));
        }
        for c in &codewords {
            if c.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.len(),
                });
            }
            if c.iter().any(|&s| s > 3) {
                return Err(Error::InvalidArgument(
                    "codeword symbol outside 0..=3".into(),
                ));
            }
        }
        Ok(Self { n, codewords, seed })
    }

    /// `N` independent uniform codewords, drawn from `seed`.
    pub fn random(n: usize, big_n: usize, seed: u64) -> Result<Self> {
        let mut rng = substream(seed, "codewords", 0);
        let codewords = (0..big_n)
            .map(|_| (0..n).map(|_| rng.random_range(0..4u8)).collect())
            .collect();
        Self::new(n, codewords, seed)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codewords(&self) -> &[Vec<u8>] {
        &self.codewords
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `⟨ψ_{cˢ}|ψ_{cᵗ}⟩`, as a product of single-qubit overlaps.
    pub fn product_overlap(&self, s: usize, t: usize) -> C64 {
        let chi = sic_states();
        self.codewords[s]
            .iter()
            .zip(&self.codewords[t])
            .map(|(&a, &b)| ket_inner(&chi[a as usize], &chi[b as usize]))
            .product()
    }

    /// `‖v_C‖² = (1/N) Σ_{s,t} ⟨ψ_{cˢ}|ψ_{cᵗ}⟩`, without building `v_C`.
    pub fn norm_sqr(&self) -> f64 {
        let big_n = self.len();
        let mut total = big_n as f64;
        for s in 0..big_n {
            for t in s + 1..big_n {
                total += 2.0 * self.product_overlap(s, t).re;
            }
        }
        total / big_n as f64
    }

    /// `⟨ψ_C|ρ_C|ψ_C⟩ = (1/N) Σ_s |⟨ψ_{cˢ}|ψ_C⟩|²`, without building either.
    pub fn mixture_fidelity(&self) -> Result<f64> {
        let big_n = self.len();
        let norm = self.norm_sqr();
        if norm <= VALIDATION_TOL {
            return Err(Error::DegenerateBranch { mass: norm });
        }
        let mut total = 0.0;
        for s in 0..big_n {
            let a: C64 = (0..big_n).map(|t| self.product_overlap(s, t)).sum();
            total += a.norm_sqr() / big_n as f64;
        }
        Ok(total / (big_n as f64 * norm))
    }

    fn product_kets(&self, t: usize) -> Vec<Ket1> {
        let chi = sic_states();
        self.codewords[t].iter().map(|&a| chi[a as usize]).collect()
    }

    fn check_dense(&self, cap: usize) -> Result<()> {
        if self.n > cap {
            return Err(Error::Capacity {
                what: "dense qubits",
                requested: self.n,
                limit: cap,
            });
        }
        Ok(())
    }

    /// Dense `|ψ_{cᵗ}⟩`.
    pub fn component(&self, t: usize, cap: usize) -> Result<StateVector> {
        self.check_dense(cap)?;
        StateVector::product(&self.product_kets(t))
    }
}

/// `v_C = N^{-1/2} Σₜ |ψ_{cᵗ}⟩` (free norm) and `ψ_C = v_C/‖v_C‖`.
pub fn build_codeword_superposition(
    code: &CodeEnsemble,
    cap: usize,
) -> Result<(Vec<C64>, StateVector)> {
    code.check_dense(cap)?;
    let scale = (code.len() as f64).sqrt().recip();
    let mut v = vec![ZERO; 1 << code.n];
    for t in 0..code.len() {
        let comp = code.component(t, cap)?;
        for (acc, a) in v.iter_mut().zip(comp.amplitudes()) {
            *acc += a * scale;
        }
    }
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    if norm <= VALIDATION_TOL {
        return Err(Error::DegenerateBranch { mass: norm });
    }
    let psi = StateVector::from_unnormalized(v.clone())?;
    Ok((v, psi))
}

/// Uniform mixture of pure states, kept as its components.
#[derive(Clone, Debug, PartialEq)]
pub struct Mixture {
    components: Vec<StateVector>,
}

impl Mixture {
    pub fn new(components: Vec<StateVector>) -> Result<Self> {
        let n = components
            .first()
            .map(|c| c.n_qubits())
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        if let Some(c) = components.iter().find(|c| c.n_qubits() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: c.n_qubits(),
            });
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[StateVector] {
        &self.components
    }

    pub fn n_qubits(&self) -> usize {
        self.components[0].n_qubits()
    }

    /// `⟨ψ|ρ|ψ⟩`.
    pub fn fidelity(&self, psi: &StateVector) -> Result<f64> {
        let mut total = 0.0;
        for c in &self.components {
            total += crate::qmath::overlap(psi, c)?.norm_sqr();
        }
        Ok(total / self.components.len() as f64)
    }

    /// Dense `2ⁿ × 2ⁿ` matrix, row-major; refused above `cap` qubits.
    pub fn to_dense(&self, cap: usize) -> Result<Vec<C64>> {
        let n = self.n_qubits();
        if n > cap {
            return Err(Error::Capacity {
                what: "mixture qubits",
                requested: n,
                limit: cap,
            });
        }
        let d = 1usize << n;
        let w = 1.0 / self.components.len() as f64;
        let mut m = vec![ZERO; d * d];
        for c in &self.components {
            let a = c.amplitudes();
            for (i, ai) in a.iter().enumerate() {
                for (j, aj) in a.iter().enumerate() {
                    m[i * d + j] += ai * aj.conj() * w;
                }
            }
        }
        Ok(m)
    }
}

/// `ρ_C` as the uniform mixture of the codeword products.
pub fn build_mixture(code: &CodeEnsemble, cap: usize) -> Result<Mixture> {
    Mixture::new(
        (0..code.len())
            .map(|t| code.component(t, cap))
            .collect::<Result<_>>()?,
    )
}

/// An orthonormal basis measuring qubits outside `S` in fixed single-qubit
/// bases and the qubits in `S` in a basis chosen from those outcomes.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptiveProductBasis {
    n: usize,
    /// Sorted, distinct qubits.
    adaptive: Vec<usize>,
    /// One basis per qubit; entries for qubits in `S` are unused.
    fixed: Vec<SingleQubitBasis>,
    /// Per outcome on the non-`S` qubits (big-endian in qubit order), a
    /// `2^|S|`-dimensional orthonormal basis stored row by row.
    completions: Vec<Vec<Vec<C64>>>,
}

fn random_unit_ket<R: Rng + ?Sized>(rng: &mut R) -> Ket1 {
    crate::states::haar_ket(rng)
}

// Gram-Schmidt on a complex Gaussian matrix: a Haar-random unitary.
fn random_orthonormal<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<Vec<C64>> {
    let mut rows: Vec<Vec<C64>> = Vec::with_capacity(d);
    while rows.len() < d {
        let mut v: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        for r in &rows {
            let ip: C64 = r.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            for (x, a) in v.iter_mut().zip(r) {
                *x -= ip * a;
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-6 {
            rows.push(v.into_iter().map(|z| z / norm).collect());
        }
    }
    rows
}

impl AdaptiveProductBasis {
    /// Non-adaptive product basis.
    pub fn product(bases: Vec<SingleQubitBasis>) -> Self {
        let n = bases.len();
        Self {
            n,
            adaptive: Vec::new(),
            fixed: bases,
            completions: vec![vec![vec![C64::new(1.0, 0.0)]]; 1 << n],
        }
    }

    /// Product basis of Haar-random single-qubit bases.
    pub fn random_product<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self::product(
            (0..n)
                .map(|_| SingleQubitBasis::containing(&random_unit_ket(rng)).expect("unit ket"))
                .collect(),
        )
    }

    /// Random fixed bases off `S` and independent Haar-random completions
    /// on `S` for every outcome off `S`.
    pub fn random_adaptive<R: Rng + ?Sized>(
        n: usize,
        adaptive: &[usize],
        rng: &mut R,
    ) -> Result<Self> {
        let mut s = adaptive.to_vec();
        s.sort_unstable();
        s.dedup();
        if s.len() != adaptive.len() || s.iter().any(|&q| q >= n) {
            return Err(Error::InvalidArgument(format!(
                "bad adaptive set {adaptive:?}"
            )));
        }
        let fixed = (0..n)
            .map(|_| SingleQubitBasis::containing(&random_unit_ket(rng)).expect("unit ket"))
            .collect();
        let d = 1usize << s.len();
        let completions = (0..1usize << (n - s.len()))
            .map(|_| random_orthonormal(d, rng))
            .collect();
        Ok(Self {
            n,
            adaptive: s,
            fixed,
            completions,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn adaptive_set(&self) -> &[usize] {
        &self.adaptive
    }

    pub fn fixed_bases(&self) -> &[SingleQubitBasis] {
        &self.fixed
    }

    /// Largest deviation from orthonormality across all constituent bases.
    pub fn orthonormality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for b in &self.fixed {
            worst = worst.max(ket_inner(b.b(), b.b_perp()).norm());
        }
        for rows in &self.completions {
            for (i, a) in rows.iter().enumerate() {
                for (j, b) in rows.iter().enumerate() {
                    let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((ip - expect).norm());
                }
            }
        }
        worst
    }

    fn is_adaptive(&self, q: usize) -> bool {
        self.adaptive.binary_search(&q).is_ok()
    }

    /// Compact description for reports.
    pub fn descriptor(&self) -> String {
        let axes: Vec<String> = (0..self.n)
            .filter(|&q| !self.is_adaptive(q))
            .map(|q| {
                let a = self.fixed[q].axis();
                format!("{:.6},{:.6},{:.6}", a.x, a.y, a.z)
            })
            .collect();
        format!("S={:?};axes={}", self.adaptive, axes.join(";"))
    }

    /// `⟨φ_x|v⟩` for every outcome `x` (big-endian in qubit order).
    pub fn amplitudes(&self, v: &SubVector) -> Result<Vec<C64>> {
        if v.n_qubits() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: v.n_qubits(),
            });
        }
        let n = self.n;
        let mut a = v.amplitudes().to_vec();
        for q in (0..n).filter(|&q| !self.is_adaptive(q)) {
            let (b, bp) = (self.fixed[q].b(), self.fixed[q].b_perp());
            let stride = 1usize << (n - 1 - q);
            for base in (0..a.len()).step_by(2 * stride) {
                for i in base..base + stride {
                    let (x0, x1) = (a[i], a[i + stride]);
                    a[i] = b[0].conj() * x0 + b[1].conj() * x1;
                    a[i + stride] = bp[0].conj() * x0 + bp[1].conj() * x1;
                }
            }
        }
        if self.adaptive.is_empty() {
            return Ok(a);
        }
        let free: Vec<usize> = (0..n).filter(|&q| !self.is_adaptive(q)).collect();
        let bit = |q: usize| 1usize << (n - 1 - q);
        let d = 1usize << self.adaptive.len();
        let mut out = a.clone();
        let mut gathered = vec![ZERO; d];
        for (outer, rows) in self.completions.iter().enumerate() {
            let mut base = 0;
            for (j, &q) in free.iter().enumerate() {
                if (outer >> (free.len() - 1 - j)) & 1 == 1 {
                    base |= bit(q);
                }
            }
            let index = |inner: usize| {
                let mut idx = base;
                for (j, &q) in self.adaptive.iter().enumerate() {
                    if (inner >> (self.adaptive.len() - 1 - j)) & 1 == 1 {
                        idx |= bit(q);
                    }
                }
                idx
            };
            for (inner, g) in gathered.iter_mut().enumerate() {
                *g = a[index(inner)];
            }
            for (inner, row) in rows.iter().enumerate() {
                out[index(inner)] = row.iter().zip(&gathered).map(|(r, g)| r.conj() * g).sum();
            }
        }
        Ok(out)
    }
}

fn product_amplitudes(
    code: &CodeEnsemble,
    basis: &AdaptiveProductBasis,
    cap: usize,
) -> Result<Vec<Vec<C64>>> {
    if basis.n_qubits() != code.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: code.n_qubits(),
            found: basis.n_qubits(),
        });
    }
    (0..code.len())
        .into_par_iter()
        .map(|t| basis.amplitudes(code.component(t, cap)?.as_sub()))
        .collect()
}

/// `(1/N) Σ_x |Σ_{s≠t} ⟨φ_x|ψ_{cˢ}⟩⟨ψ_{cᵗ}|φ_x⟩|` by full enumeration.
pub fn cross_term_sum(
    code: &CodeEnsemble,
    basis: &AdaptiveProductBasis,
    cap: usize,
) -> Result<f64> {
    let amps = product_amplitudes(code, basis, cap)?;
    let dim = 1usize << code.n_qubits();
    let total: f64 = (0..dim)
        .map(|x| {
            let sum: C64 = amps.iter().map(|a| a[x]).sum();
            let diag: f64 = amps.iter().map(|a| a[x].norm_sqr()).sum();
            (sum.norm_sqr() - diag).abs()
        })
        .sum();
    Ok(total / code.len() as f64)
}

/// Upper bound on [`cross_term_sum`] from the per-qubit factorization
/// `(1/N) Σ_{s≠t} Π_{i∉S} Σ_y |⟨φⁱ_y|χ_{cˢᵢ}⟩⟨χ_{cᵗᵢ}|φⁱ_y⟩|`.
/// Needs no dense vectors.
pub fn cross_term_bound(code: &CodeEnsemble, basis: &AdaptiveProductBasis) -> Result<f64> {
    if basis.n_qubits() != code.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: code.n_qubits(),
            found: basis.n_qubits(),
        });
    }
    let chi = sic_states();
    let free: Vec<usize> = (0..code.n).filter(|&q| !basis.is_adaptive(q)).collect();
    // factor[q][a][b] = Σ_y |⟨φ^q_y|χ_a⟩| |⟨χ_b|φ^q_y⟩|
    let factor: Vec<[[f64; 4]; 4]> = free
        .iter()
        .map(|&q| {
            let fb = &basis.fixed[q];
            let mut f = [[0.0; 4]; 4];
            for (a, row) in f.iter_mut().enumerate() {
                for (b, cell) in row.iter_mut().enumerate() {
                    *cell = [fb.b(), fb.b_perp()]
                        .iter()
                        .map(|phi| ket_inner(phi, &chi[a]).norm() * ket_inner(&chi[b], phi).norm())
                        .sum();
                }
            }
            f
        })
        .collect();
    let words = code.codewords();
    let mut total = 0.0;
    for s in 0..words.len() {
        for t in 0..words.len() {
            if s != t {
                total += free
                    .iter()
                    .zip(&factor)
                    .map(|(&q, f)| f[words[s][q] as usize][words[t][q] as usize])
                    .product::<f64>();
            }
        }
    }
    Ok(total / words.len() as f64)
}

/// Outcome distributions of `ψ_C` and `ρ_C` in `basis`, and their total
/// variation distance.
#[derive(Clone, Debug, PartialEq)]
pub struct TvReport {
    pub tv: f64,
    pub p_pure: Vec<f64>,
    pub p_mixed: Vec<f64>,
}

pub fn tv_distance_in_basis(
    psi: &StateVector,
    rho: &Mixture,
    basis: &AdaptiveProductBasis,
) -> Result<TvReport> {
    let p_pure: Vec<f64> = basis
        .amplitudes(psi)?
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let per: Vec<Vec<C64>> = rho
        .components()
        .par_iter()
        .map(|c| basis.amplitudes(c))
        .collect::<Result<_>>()?;
    let w = 1.0 / per.len() as f64;
    let p_mixed: Vec<f64> = (0..p_pure.len())
        .map(|x| per.iter().map(|a| a[x].norm_sqr()).sum::<f64>() * w)
        .collect();
    let tv = 0.5
        * p_pure
            .iter()
            .zip(&p_mixed)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();
    Ok(TvReport {
        tv,
        p_pure,
        p_mixed,
    })
}

/// `|1 − ‖v_C‖²|`: the spectral-norm gap between `ψ_Cψ_C†` and `v_Cv_C†`,
/// which is the exact additive slack in `d_TV ≤ cross_term_sum + slack`.
pub fn spectral_slack(code: &CodeEnsemble) -> f64 {
    (1.0 - code.norm_sqr()).abs()
}

/// Bloch vectors of the four tetrahedral states.
pub fn sic_bloch_vectors() -> [BlochVector; 4] {
    sic_states().map(|k| bloch_of_ket(&k))
}

/// Basis whose first vector points along `axis` (normalized internally).
pub fn basis_along(axis: &BlochVector) -> SingleQubitBasis {
    let u = axis.scaled(1.0 / axis.norm());
    SingleQubitBasis::containing(&ket_from_bloch(&u)).expect("unit ket")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{ket0, ket1};
    use proptest::prelude::*;

    #[test]
    fn sic_overlaps_and_geometry() {
        let chi = sic_states();
        for a in 0..4 {
            assert!((crate::qmath::ket_norm_sqr(&chi[a]) - 1.0).abs() < 1e-12);
            for b in a + 1..4 {
                assert!((ket_inner(&chi[a], &chi[b]).norm_sqr() - 1.0 / 3.0).abs() < 1e-12);
            }
        }
        let r = sic_bloch_vectors();
        let sum = r.iter().fold([0.0; 3], |acc, v| {
            [acc[0] + v.x, acc[1] + v.y, acc[2] + v.z]
        });
        assert!(sum.iter().all(|c| c.abs() < 1e-12));
        for a in 0..4 {
            for b in a + 1..4 {
                assert!((r[a].dot(&r[b]) + 1.0 / 3.0).abs() < 1e-12);
            }
        }
        assert!((r[1].x - 2.0 * 2f64.sqrt() / 3.0).abs() < 1e-12);
        assert!((r[1].z + 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn computational_basis_value() {
        // |⟨0|χ₀⟩⟨χ_b|0⟩| = 1/√3 and the |1⟩ term vanishes.
        let v = uncertainty_value(&SingleQubitBasis::computational());
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn claim_holds_numerically() {
        let out = verify_uncertainty_claim(2000, 40).unwrap();
        assert!(out.max_min_value <= UNCERTAINTY_BOUND);
        assert!(out.max_min_value > 0.8);
        assert!(verify_uncertainty_claim(10, 1).is_err());
    }

    #[test]
    fn value_depends_only_on_axis() {
        // Swapping |φ⟩ and |φ⊥⟩ leaves the value unchanged.
        for (x, y, z) in [(0.3, -0.5, 0.81), (1.0, 0.0, 0.0), (-0.2, 0.9, 0.1)] {
            let a = BlochVector::raw(x, y, z);
            let b1 = basis_along(&a);
            let b2 = SingleQubitBasis::new(*b1.b_perp(), *b1.b()).unwrap();
            assert!((uncertainty_value(&b1) - uncertainty_value(&b2)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_codeword_is_product() {
        let code = CodeEnsemble::new(3, vec![vec![0, 2, 3]], 0).unwrap();
        assert!((code.norm_sqr() - 1.0).abs() < 1e-15);
        let (v, psi) = build_codeword_superposition(&code, DEFAULT_DENSE_CAP).unwrap();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        let rho = build_mixture(&code, DEFAULT_DENSE_CAP).unwrap();
        assert!((rho.fidelity(&psi).unwrap() - 1.0).abs() < 1e-12);
        let basis = AdaptiveProductBasis::random_product(3, &mut substream(1, "lb-test", 0));
        assert_eq!(
            cross_term_sum(&code, &basis, DEFAULT_DENSE_CAP).unwrap(),
            0.0
        );
        assert!(tv_distance_in_basis(&psi, &rho, &basis).unwrap().tv < 1e-12);
    }

    #[test]
    fn two_disjoint_codewords_norm() {
        for n in 1..=8 {
            let code = CodeEnsemble::new(n, vec![vec![0; n], vec![1; n]], 0).unwrap();
            let ov = ket_inner(&sic_states()[0], &sic_states()[1]);
            let expect = 1.0 + ov.powi(n as i32).re;
            assert!((code.norm_sqr() - expect).abs() < 1e-12);
            assert!((code.norm_sqr() - 1.0).abs() <= 3f64.powf(-(n as f64) / 2.0) + 1e-12);
            let (v, _) = build_codeword_superposition(&code, DEFAULT_DENSE_CAP).unwrap();
            let dense: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((dense - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn mixture_trace_and_fidelity() {
        let code = CodeEnsemble::random(4, 5, 7).unwrap();
        let rho = build_mixture(&code, DEFAULT_DENSE_CAP).unwrap();
        let m = rho.to_dense(DEFAULT_MIXTURE_CAP).unwrap();
        let trace: f64 = (0..16).map(|i| m[i * 16 + i].re).sum();
        assert!((trace - 1.0).abs() < 1e-9);
        let (_, psi) = build_codeword_superposition(&code, DEFAULT_DENSE_CAP).unwrap();
        let direct = rho.fidelity(&psi).unwrap();
        assert!((direct - code.mixture_fidelity().unwrap()).abs() < 1e-12);
        assert!(rho.to_dense(3).is_err());
    }

    #[test]
    fn hand_computed_cross_term() {
        // n = 1, C = (0, 1), computational basis:
        // (1/2) Σ_x 2|Re ⟨x|χ₀⟩⟨χ₁|x⟩| = |1/√3| + 0.
        let code = CodeEnsemble::new(1, vec![vec![0], vec![1]], 0).unwrap();
        let basis = AdaptiveProductBasis::product(vec![SingleQubitBasis::computational()]);
        let exact = cross_term_sum(&code, &basis, DEFAULT_DENSE_CAP).unwrap();
        assert!((exact - 1.0 / 3f64.sqrt()).abs() < 1e-12);

        // n = 2, C = (00, 12): amplitudes on |x⟩ expand by hand.
        let code = CodeEnsemble::new(2, vec![vec![0, 0], vec![1, 2]], 0).unwrap();
        let basis = AdaptiveProductBasis::product(vec![SingleQubitBasis::computational(); 2]);
        let chi = sic_states();
        let mut by_hand = 0.0;
        for x in 0..4usize {
            let e = |q: usize| {
                if (x >> (1 - q)) & 1 == 0 {
                    ket0()
                } else {
                    ket1()
                }
            };
            let a: C64 = ket_inner(&e(0), &chi[0]) * ket_inner(&e(1), &chi[0]);
            let b: C64 = ket_inner(&e(0), &chi[1]) * ket_inner(&e(1), &chi[2]);
            by_hand += 2.0 * (a * b.conj()).re.abs();
        }
        let exact = cross_term_sum(&code, &basis, DEFAULT_DENSE_CAP).unwrap();
        assert!((exact - by_hand / 2.0).abs() < 1e-12);
    }

    #[test]
    fn fast_bound_dominates_exact() {
        let mut rng = substream(3, "lb-test", 0);
        for i in 0..200u64 {
            let n = 2 + (i as usize) % 5;
            let code = CodeEnsemble::random(n, 2 + (i as usize) % 6, i).unwrap();
            let basis = if i % 4 == 3 {
                let s: Vec<usize> = if n > 2 && i % 8 == 3 {
                    vec![0, n - 1]
                } else {
                    vec![1]
                };
                AdaptiveProductBasis::random_adaptive(n, &s, &mut rng).unwrap()
            } else {
                AdaptiveProductBasis::random_product(n, &mut rng)
            };
            let exact = cross_term_sum(&code, &basis, DEFAULT_DENSE_CAP).unwrap();
            let bound = cross_term_bound(&code, &basis).unwrap();
            assert!(bound >= exact - 1e-12, "{bound} < {exact}");
        }
    }

    #[test]
    fn adaptive_amplitudes_form_a_basis() {
        let mut rng = substream(4, "lb-test", 0);
        for s in [vec![], vec![2], vec![0, 3]] {
            let basis = AdaptiveProductBasis::random_adaptive(4, &s, &mut rng).unwrap();
            assert!(basis.orthonormality_error() < 1e-9);
            let psi = crate::states::haar_random(4, &mut rng);
            let amps = basis.amplitudes(&psi).unwrap();
            let total: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(AdaptiveProductBasis::random_adaptive(3, &[1, 1], &mut rng).is_err());
    }

    #[test]
    fn adaptive_amplitudes_match_explicit_vectors() {
        // S = {1} on two qubits: φ_x = φ⁰_{x₀} ⊗ completion(x₀)_{x₁}.
        let mut rng = substream(5, "lb-test", 0);
        let basis = AdaptiveProductBasis::random_adaptive(2, &[1], &mut rng).unwrap();
        let psi = crate::states::haar_random(2, &mut rng);
        let amps = basis.amplitudes(&psi).unwrap();
        for x0 in 0..2u8 {
            let first = *basis.fixed_bases()[0].vector(x0);
            for x1 in 0..2usize {
                let row = &basis.completions[x0 as usize][x1];
                let phi = StateVector::product(&[first, [row[0], row[1]]]).unwrap();
                let expect = crate::qmath::overlap(&phi, &psi).unwrap();
                assert!((amps[(x0 as usize) * 2 + x1] - expect).norm() < 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn tv_within_cross_term_bound(seed in any::<u64>(), n in 2usize..7, big_n in 1usize..9) {
            let code = CodeEnsemble::random(n, big_n, seed).unwrap();
            let mut rng = substream(seed, "lb-prop", 0);
            let basis = AdaptiveProductBasis::random_product(n, &mut rng);
            let (_, psi) = build_codeword_superposition(&code, DEFAULT_DENSE_CAP).unwrap();
            let rho = build_mixture(&code, DEFAULT_DENSE_CAP).unwrap();
            let tv = tv_distance_in_basis(&psi, &rho, &basis).unwrap().tv;
            let cross = cross_term_sum(&code, &basis, DEFAULT_DENSE_CAP).unwrap();
            prop_assert!(tv <= 1.0 + 1e-12);
            prop_assert!(2.0 * tv <= cross + spectral_slack(&code) + 1e-12);
        }
    }
}
