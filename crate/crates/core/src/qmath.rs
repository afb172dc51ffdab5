//! Dense complex linear algebra for n-qubit pure states.
//!
//! Amplitudes are stored big-endian: qubit 0 is the most significant bit of
//! the basis index, so conditioning on a prefix of qubits selects a contiguous
//! block of the amplitude array. Qubit indices in this crate are 0-based.
//!
//! Conditioned branches are kept *subnormalized*: projecting a qubit onto a
//! single-qubit vector returns the projected amplitudes without rescaling, so
//! the branch's squared norm is the joint probability of the outcomes so far.

use std::ops::Deref;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// A single-qubit ket `(⟨0|ψ⟩, ⟨1|ψ⟩)`.
pub type Ket1 = [C64; 2];

/// Tolerance used when validating normalization, hermiticity, orthogonality.
pub const VALIDATION_TOL: f64 = 1e-9;
/// Tolerance for cross-checks that should agree to rounding error.
pub const EXACT_TOL: f64 = 1e-12;
/// Squared norm at or below which a branch is treated as identically zero.
pub const DEGENERATE_MASS: f64 = 1e-12;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

pub fn ket0() -> Ket1 {
    [ONE, ZERO]
}

pub fn ket1() -> Ket1 {
    [ZERO, ONE]
}

pub fn ket_plus() -> Ket1 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(h, 0.0), C64::new(h, 0.0)]
}

pub fn ket_minus() -> Ket1 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(h, 0.0), C64::new(-h, 0.0)]
}

/// `(|0⟩ + i|1⟩)/√2`.
pub fn ket_plus_i() -> Ket1 {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(h, 0.0), C64::new(0.0, h)]
}

pub fn ket_norm_sqr(k: &Ket1) -> f64 {
    k[0].norm_sqr() + k[1].norm_sqr()
}

/// `⟨a|b⟩` for single-qubit kets.
pub fn ket_inner(a: &Ket1, b: &Ket1) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

fn check_finite(amps: &[C64]) -> Result<()> {
    if amps.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn qubits_for_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::InvalidLength(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// An amplitude vector with squared norm at most `1 + 1e-9`.
///
/// Zero-qubit vectors (a single scalar) are allowed; they arise when every
/// qubit of a branch has been conditioned away.
#[derive(Clone, Debug, PartialEq)]
pub struct SubVector {
    n: usize,
    amps: Vec<C64>,
}

impl SubVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for_len(amps.len())?;
        check_finite(&amps)?;
        let v = Self { n, amps };
        let ns = v.norm_sqr();
        if ns > 1.0 + VALIDATION_TOL {
            return Err(Error::NotNormalized(ns));
        }
        Ok(v)
    }

    // Callers guarantee length and norm bounds.
    pub(crate) fn from_raw(n: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n);
        Self { n, amps }
    }

    pub fn zero(n: usize) -> Self {
        Self {
            n,
            amps: vec![ZERO; 1 << n],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_degenerate(&self) -> bool {
        self.norm_sqr() <= DEGENERATE_MASS
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n {
            Err(Error::QubitOutOfRange { qubit, n: self.n })
        } else {
            Ok(())
        }
    }

    /// Project `qubit` onto `outcome` and drop it.
    ///
    /// Returns the residual's squared norm (the joint probability, not
    /// divided by this vector's mass) and the unrenormalized residual on
    /// `n - 1` qubits.
    pub fn condition(&self, qubit: usize, outcome: &Ket1) -> Result<(f64, SubVector)> {
        self.check_qubit(qubit)?;
        let residual = self.project_unchecked(qubit, outcome);
        Ok((residual.norm_sqr(), residual))
    }

    pub(crate) fn project_unchecked(&self, qubit: usize, outcome: &Ket1) -> SubVector {
        let stride = 1usize << (self.n - 1 - qubit);
        let (c0, c1) = (outcome[0].conj(), outcome[1].conj());
        let half = self.amps.len() / 2;
        let mut out = Vec::with_capacity(half);
        for hi in 0..(half / stride) {
            let base = hi * 2 * stride;
            let (zero, one) = self.amps[base..base + 2 * stride].split_at(stride);
            out.extend(zero.iter().zip(one).map(|(&a, &b)| c0 * a + c1 * b));
        }
        SubVector::from_raw(self.n - 1, out)
    }

    /// Split on the first qubit: `self = |0⟩⊗u0 + |1⟩⊗u1`.
    pub fn split_first(&self) -> Result<(SubVector, SubVector)> {
        self.check_qubit(0)?;
        let half = self.amps.len() / 2;
        Ok((
            SubVector::from_raw(self.n - 1, self.amps[..half].to_vec()),
            SubVector::from_raw(self.n - 1, self.amps[half..].to_vec()),
        ))
    }

    /// Rescale to unit norm.
    pub fn normalized(&self) -> Result<StateVector> {
        let ns = self.norm_sqr();
        if ns <= DEGENERATE_MASS {
            return Err(Error::DegenerateBranch { mass: ns });
        }
        let s = 1.0 / ns.sqrt();
        Ok(StateVector(SubVector::from_raw(
            self.n,
            self.amps.iter().map(|z| z * s).collect(),
        )))
    }
}

/// A unit-norm pure state on `n ≥ 1` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(SubVector);

impl StateVector {
    pub fn new(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for_len(amps.len())?;
        if n == 0 {
            return Err(Error::InvalidLength(1));
        }
        check_finite(&amps)?;
        let v = SubVector { n, amps };
        let ns = v.norm_sqr();
        if (ns - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::NotNormalized(ns));
        }
        Ok(Self(v))
    }

    /// Rescale an arbitrary nonzero amplitude vector to a state.
    pub fn from_unnormalized(amps: Vec<C64>) -> Result<Self> {
        let n = qubits_for_len(amps.len())?;
        if n == 0 {
            return Err(Error::InvalidLength(1));
        }
        check_finite(&amps)?;
        SubVector { n, amps }.normalized()
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        if n == 0 || index >= 1 << n {
            return Err(Error::InvalidArgument(format!(
                "basis index {index} for {n} qubits"
            )));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[index] = ONE;
        Ok(Self(SubVector { n, amps }))
    }

    /// Tensor product of single-qubit kets, qubit 0 first.
    pub fn product(kets: &[Ket1]) -> Result<Self> {
        if kets.is_empty() {
            return Err(Error::InvalidLength(1));
        }
        let mut amps = vec![ONE];
        for k in kets {
            amps = amps.iter().flat_map(|&a| [a * k[0], a * k[1]]).collect();
        }
        Self::new(amps)
    }

    pub fn as_sub(&self) -> &SubVector {
        &self.0
    }

    pub fn into_sub(self) -> SubVector {
        self.0
    }
}

impl Deref for StateVector {
    type Target = SubVector;

    fn deref(&self) -> &SubVector {
        &self.0
    }
}

impl AsRef<SubVector> for StateVector {
    fn as_ref(&self) -> &SubVector {
        &self.0
    }
}

impl AsRef<SubVector> for SubVector {
    fn as_ref(&self) -> &SubVector {
        self
    }
}

/// `⟨a|b⟩`.
pub fn overlap(a: &SubVector, b: &SubVector) -> Result<C64> {
    if a.n != b.n {
        return Err(Error::DimensionMismatch {
            expected: a.n,
            found: b.n,
        });
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// A point in the closed Bloch ball.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::NonFinite);
        }
        let v = Self { x, y, z };
        if v.norm() > 1.0 + VALIDATION_TOL {
            return Err(Error::InvalidDensity(format!(
                "Bloch vector of length {} outside the unit ball",
                v.norm()
            )));
        }
        Ok(v)
    }

    pub const ORIGIN: Self = Self {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub(crate) const fn raw(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    /// Cross product with each component evaluated as a compensated
    /// difference of products, so the result stays accurate to a few ulps
    /// even when the inputs are nearly parallel.
    pub fn cross(&self, o: &Self) -> Self {
        Self {
            x: diff_of_products(self.y, o.z, self.z, o.y),
            y: diff_of_products(self.z, o.x, self.x, o.z),
            z: diff_of_products(self.x, o.y, self.y, o.x),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

// a*b - c*d (Kahan).
fn diff_of_products(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let cd = c * d;
    let err = c.mul_add(-d, cd);
    let dop = a.mul_add(b, -cd);
    dop + err
}

/// A single-qubit density matrix `[[ρ00, ρ01], [ρ10, ρ11]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Density1Q {
    m: [[C64; 2]; 2],
}

impl Density1Q {
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self> {
        if !m
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        if (m[0][1] - m[1][0].conj()).norm() > VALIDATION_TOL
            || m[0][0].im.abs() > VALIDATION_TOL
            || m[1][1].im.abs() > VALIDATION_TOL
        {
            return Err(Error::InvalidDensity("not Hermitian".into()));
        }
        let tr = m[0][0].re + m[1][1].re;
        if (tr - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let rho = Self { m };
        let min_eig = rho.eigenvalues()[0];
        if min_eig < -VALIDATION_TOL {
            return Err(Error::InvalidDensity(format!(
                "negative eigenvalue {min_eig}"
            )));
        }
        Ok(rho)
    }

    pub fn maximally_mixed() -> Self {
        density_of_bloch(&BlochVector::ORIGIN)
    }

    pub fn pure(k: &Ket1) -> Result<Self> {
        let ns = ket_norm_sqr(k);
        if (ns - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::NotNormalized(ns));
        }
        Ok(Self {
            m: [
                [k[0] * k[0].conj(), k[0] * k[1].conj()],
                [k[1] * k[0].conj(), k[1] * k[1].conj()],
            ],
        })
    }

    pub fn entries(&self) -> &[[C64; 2]; 2] {
        &self.m
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let disc = ((a - d) * (a - d) + 4.0 * self.m[0][1].norm_sqr()).sqrt();
        [(a + d - disc) / 2.0, (a + d + disc) / 2.0]
    }

    /// Born probability `⟨e|ρ|e⟩` for a unit ket.
    pub fn prob(&self, e: &Ket1) -> f64 {
        let m = &self.m;
        let v0 = m[0][0] * e[0] + m[0][1] * e[1];
        let v1 = m[1][0] * e[0] + m[1][1] * e[1];
        (e[0].conj() * v0 + e[1].conj() * v1).re
    }

    pub fn max_entry_diff(&self, other: &Self) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `ρ = (I + xX + yY + zZ)/2` read backwards.
pub fn bloch_of_density(rho: &Density1Q) -> BlochVector {
    let m = rho.entries();
    BlochVector::raw(2.0 * m[0][1].re, -2.0 * m[0][1].im, m[0][0].re - m[1][1].re)
}

pub fn density_of_bloch(v: &BlochVector) -> Density1Q {
    Density1Q {
        m: [
            [
                C64::new((1.0 + v.z) / 2.0, 0.0),
                C64::new(v.x / 2.0, -v.y / 2.0),
            ],
            [
                C64::new(v.x / 2.0, v.y / 2.0),
                C64::new((1.0 - v.z) / 2.0, 0.0),
            ],
        ],
    }
}

pub fn bloch_of_ket(k: &Ket1) -> BlochVector {
    let c = k[0].conj() * k[1];
    BlochVector::raw(2.0 * c.re, 2.0 * c.im, k[0].norm_sqr() - k[1].norm_sqr())
}

/// The pure state with Bloch vector `u` (normalized internally), with its
/// global phase fixed so the larger-magnitude amplitude is real and positive.
/// Near-ties (`|z| ≤ 1e-12`) go to the `|0⟩` amplitude, so rounding noise on
/// the equator does not flip the phase convention.
pub fn ket_from_bloch(u: &BlochVector) -> Ket1 {
    let r = u.norm();
    let (x, y, z) = (u.x / r, u.y / r, u.z / r);
    if z >= -EXACT_TOL {
        let d = (2.0 * (1.0 + z)).sqrt();
        [C64::new((1.0 + z) / d, 0.0), C64::new(x / d, y / d)]
    } else {
        let d = (2.0 * (1.0 - z)).sqrt();
        [C64::new(x / d, -y / d), C64::new((1.0 - z) / d, 0.0)]
    }
}

/// An orthonormal single-qubit basis `{|b⟩, |b⊥⟩}`; outcome `0` is `|b⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleQubitBasis {
    b: Ket1,
    b_perp: Ket1,
}

impl SingleQubitBasis {
    pub fn new(b: Ket1, b_perp: Ket1) -> Result<Self> {
        for k in [&b, &b_perp] {
            let ns = ket_norm_sqr(k);
            if !ns.is_finite() {
                return Err(Error::NonFinite);
            }
            if (ns - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::InvalidBasis(format!(
                    "vector with squared norm {ns}"
                )));
            }
        }
        let ip = ket_inner(&b, &b_perp).norm();
        if ip > VALIDATION_TOL {
            return Err(Error::InvalidBasis(format!("overlap {ip}")));
        }
        Ok(Self { b, b_perp })
    }

    pub fn computational() -> Self {
        Self {
            b: ket0(),
            b_perp: ket1(),
        }
    }

    /// Basis whose first vector has Bloch vector `±axis`, sign chosen so the
    /// first coordinate (x, y, z order) with magnitude above `1e-9` is positive.
    pub fn from_axis(axis: &BlochVector) -> Self {
        let first = [axis.x, axis.y, axis.z]
            .into_iter()
            .find(|c| c.abs() > VALIDATION_TOL)
            .unwrap_or(1.0);
        let u = if first < 0.0 {
            axis.scaled(-1.0)
        } else {
            *axis
        };
        Self {
            b: ket_from_bloch(&u),
            b_perp: ket_from_bloch(&u.scaled(-1.0)),
        }
    }

    /// Basis whose first vector is exactly `k` (no sign flip).
    pub fn containing(k: &Ket1) -> Result<Self> {
        let ns = ket_norm_sqr(k);
        if (ns - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::NotNormalized(ns));
        }
        let perp = ket_from_bloch(&bloch_of_ket(k).scaled(-1.0));
        Self::new(*k, perp)
    }

    pub fn b(&self) -> &Ket1 {
        &self.b
    }

    pub fn b_perp(&self) -> &Ket1 {
        &self.b_perp
    }

    /// Outcome `0` → `|b⟩`, anything else → `|b⊥⟩`.
    pub fn vector(&self, outcome: u8) -> &Ket1 {
        if outcome == 0 {
            &self.b
        } else {
            &self.b_perp
        }
    }

    pub fn axis(&self) -> BlochVector {
        bloch_of_ket(&self.b)
    }
}

/// Normalized reduced density matrix of `qubit`, with the mass of `state`.
pub fn reduced_density_1q(state: &SubVector, qubit: usize) -> Result<(f64, Density1Q)> {
    state.check_qubit(qubit)?;
    let stride = 1usize << (state.n - 1 - qubit);
    let amps = &state.amps;
    let (mut r00, mut r11, mut r01) = (0.0, 0.0, ZERO);
    for hi in 0..(amps.len() / (2 * stride)) {
        let base = hi * 2 * stride;
        for lo in 0..stride {
            let a = amps[base + lo];
            let b = amps[base + stride + lo];
            r00 += a.norm_sqr();
            r11 += b.norm_sqr();
            r01 += a * b.conj();
        }
    }
    let mass = r00 + r11;
    if mass <= DEGENERATE_MASS {
        return Err(Error::DegenerateBranch { mass });
    }
    let m = [
        [C64::new(r00 / mass, 0.0), r01 / mass],
        [r01.conj() / mass, C64::new(r11 / mass, 0.0)],
    ];
    Ok((mass, Density1Q { m }))
}
