//! Exact small-matrix complex linear algebra on spin space.
//!
//! [`SpinBlock`] is a 2×2 complex matrix (one species, one energy shell);
//! [`PairBlock`] is a 4×4 complex matrix on the tensor product of two spin
//! spaces. The pair basis order is fixed everywhere as
//! `|↑↑⟩, |↑↓⟩, |↓↑⟩, |↓↓⟩`, i.e. index `2 * i + k` for first-factor index
//! `i` and second-factor index `k`, with `↑ = 0`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cre, czero, Cplx, Real};

/// Hermiticity tolerance used by validating operations.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinBlock<T: Real> {
    pub e: [[Cplx<T>; 2]; 2],
}

/// 4×4 complex matrix on spin ⊗ spin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairBlock<T: Real> {
    pub e: [[Cplx<T>; 4]; 4],
}

/// Which tensor factor a partial trace removes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

impl<T: Real> Default for SpinBlock<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> SpinBlock<T> {
    pub fn zero() -> Self {
        Self { e: [[czero(); 2]; 2] }
    }

    pub fn identity() -> Self {
        Self::scalar(T::one())
    }

    /// `x · I`.
    pub fn scalar(x: T) -> Self {
        Self::diag(x, x)
    }

    /// `z · I`.
    pub fn scalar_c(z: Cplx<T>) -> Self {
        Self {
            e: [[z, czero()], [czero(), z]],
        }
    }

    pub fn diag(a: T, d: T) -> Self {
        Self {
            e: [[cre(a), czero()], [czero(), cre(d)]],
        }
    }

    pub fn new(e00: Cplx<T>, e01: Cplx<T>, e10: Cplx<T>, e11: Cplx<T>) -> Self {
        Self {
            e: [[e00, e01], [e10, e11]],
        }
    }

    /// Real-entry matrix in row-major order.
    pub fn from_real(r: [T; 4]) -> Self {
        Self::new(cre(r[0]), cre(r[1]), cre(r[2]), cre(r[3]))
    }

    /// Hermitian matrix with real diagonal `(up, down)` and upper off-diagonal `off`.
    pub fn hermitian(up: T, down: T, off: Cplx<T>) -> Self {
        Self::new(cre(up), off, off.conj(), cre(down))
    }

    pub fn pauli_x() -> Self {
        Self::from_real([T::zero(), T::one(), T::one(), T::zero()])
    }

    pub fn pauli_y() -> Self {
        let i = Complex::new(T::zero(), T::one());
        Self::new(czero(), -i, i, czero())
    }

    pub fn pauli_z() -> Self {
        Self::diag(T::one(), -T::one())
    }

    /// Matrix unit `|row⟩⟨col|`.
    pub fn unit(row: usize, col: usize) -> Self {
        let mut m = Self::zero();
        m.e[row][col] = cre(T::one());
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        self.e[i][j]
    }

    #[inline]
    pub fn adjoint(&self) -> Self {
        let e = &self.e;
        Self::new(e[0][0].conj(), e[1][0].conj(), e[0][1].conj(), e[1][1].conj())
    }

    #[inline]
    pub fn trace(&self) -> Cplx<T> {
        self.e[0][0] + self.e[1][1]
    }

    /// Real part of the trace.
    #[inline]
    pub fn tr(&self) -> T {
        self.e[0][0].re + self.e[1][1].re
    }

    pub fn det(&self) -> Cplx<T> {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    #[inline]
    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for row in out.e.iter_mut() {
            for x in row.iter_mut() {
                *x = x.scale(s);
            }
        }
        out
    }

    pub fn scale_c(&self, s: Cplx<T>) -> Self {
        let mut out = *self;
        for row in out.e.iter_mut() {
            for x in row.iter_mut() {
                *x = *x * s;
            }
        }
        out
    }

    /// `I − self`, the hole occupation W̃.
    #[inline]
    pub fn complement(&self) -> Self {
        Self::identity() - *self
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        *self * *other + *other * *self
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// `u · self · u†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        *u * *self * u.adjoint()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.e
            .iter()
            .flatten()
            .fold(T::zero(), |acc, x| acc.max(x.norm()))
    }

    /// Largest entry modulus of `self − self†`.
    pub fn hermiticity_defect(&self) -> T {
        (*self - self.adjoint()).max_abs()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// Four reals `(Re W₁₁, Re W₂₂, Re W₁₂, Im W₁₂)` describing a Hermitian block.
    pub fn to_hermitian_parts(&self) -> [T; 4] {
        [self.e[0][0].re, self.e[1][1].re, self.e[0][1].re, self.e[0][1].im]
    }

    pub fn from_hermitian_parts(p: [T; 4]) -> Self {
        Self::hermitian(p[0], p[1], Complex::new(p[2], p[3]))
    }

    /// Casts into another scalar type.
    pub fn cast<U: Real>(&self) -> SpinBlock<U> {
        let c = |z: Cplx<T>| Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()));
        SpinBlock::new(c(self.e[0][0]), c(self.e[0][1]), c(self.e[1][0]), c(self.e[1][1]))
    }
}

impl<T: Real> Add for SpinBlock<T> {
    type Output = Self;
    #[inline]
    fn add(self, r: Self) -> Self {
        let (a, b) = (&self.e, &r.e);
        Self::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl<T: Real> Sub for SpinBlock<T> {
    type Output = Self;
    #[inline]
    fn sub(self, r: Self) -> Self {
        let (a, b) = (&self.e, &r.e);
        Self::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

impl<T: Real> AddAssign for SpinBlock<T> {
    #[inline]
    fn add_assign(&mut self, r: Self) {
        *self = *self + r;
    }
}

impl<T: Real> SubAssign for SpinBlock<T> {
    #[inline]
    fn sub_assign(&mut self, r: Self) {
        *self = *self - r;
    }
}

impl<T: Real> Neg for SpinBlock<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for SpinBlock<T> {
    type Output = Self;
    #[inline]
    fn mul(self, r: Self) -> Self {
        let (a, b) = (&self.e, &r.e);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Real> Default for PairBlock<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> PairBlock<T> {
    pub fn zero() -> Self {
        Self { e: [[czero(); 4]; 4] }
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            m.e[i][i] = cre(T::one());
        }
        m
    }

    /// The swap operator `T` exchanging the two tensor factors.
    pub fn swap() -> Self {
        let mut m = Self::zero();
        for i in 0..2 {
            for k in 0..2 {
                m.e[2 * i + k][2 * k + i] = cre(T::one());
            }
        }
        m
    }

    pub fn from_real(rows: [[T; 4]; 4]) -> Self {
        let mut m = Self::zero();
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m.e[i][j] = cre(x);
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx<T> {
        self.e[i][j]
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] = self.e[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Cplx<T> {
        (0..4).fold(czero(), |acc, i| acc + self.e[i][i])
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = *self;
        for row in out.e.iter_mut() {
            for x in row.iter_mut() {
                *x = x.scale(s);
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.e
            .iter()
            .flatten()
            .fold(T::zero(), |acc, x| acc.max(x.norm()))
    }

    /// `A · self · B†`.
    pub fn sandwich(&self, a: &Self, b: &Self) -> Self {
        *a * *self * b.adjoint()
    }

    pub fn cast<U: Real>(&self) -> PairBlock<U> {
        let mut m = PairBlock::<U>::zero();
        for i in 0..4 {
            for j in 0..4 {
                let z = self.e[i][j];
                m.e[i][j] = Complex::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()));
            }
        }
        m
    }
}

impl<T: Real> Add for PairBlock<T> {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        let mut m = self;
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] = m.e[i][j] + r.e[i][j];
            }
        }
        m
    }
}

impl<T: Real> Sub for PairBlock<T> {
    type Output = Self;
    fn sub(self, r: Self) -> Self {
        let mut m = self;
        for i in 0..4 {
            for j in 0..4 {
                m.e[i][j] = m.e[i][j] - r.e[i][j];
            }
        }
        m
    }
}

impl<T: Real> Mul for PairBlock<T> {
    type Output = Self;
    fn mul(self, r: Self) -> Self {
        let mut m = Self::zero();
        for i in 0..4 {
            for k in 0..4 {
                let a = self.e[i][k];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..4 {
                    m.e[i][j] = m.e[i][j] + a * r.e[k][j];
                }
            }
        }
        m
    }
}

/// Kronecker product `a ⊗ b` in the fixed pair basis.
pub fn tensor<T: Real>(a: &SpinBlock<T>, b: &SpinBlock<T>) -> PairBlock<T> {
    let mut m = PairBlock::zero();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m.e[2 * i + k][2 * j + l] = a.e[i][j] * b.e[k][l];
                }
            }
        }
    }
    m
}

/// Traces out one tensor factor.
pub fn partial_trace<T: Real>(side: Side, m: &PairBlock<T>) -> SpinBlock<T> {
    let mut out = SpinBlock::zero();
    for r in 0..2 {
        for c in 0..2 {
            let mut acc = czero();
            for i in 0..2 {
                acc = acc
                    + match side {
                        Side::First => m.e[2 * i + r][2 * i + c],
                        Side::Second => m.e[2 * r + i][2 * c + i],
                    };
            }
            out.e[r][c] = acc;
        }
    }
    out
}

/// The 2×2 matrix `Z` with `tr[(X ⊗ y) m] = tr[X Z]` for every `X`.
#[inline]
pub fn reduce_first<T: Real>(m: &PairBlock<T>, y: &SpinBlock<T>) -> SpinBlock<T> {
    let mut z = SpinBlock::zero();
    for j in 0..2 {
        for i in 0..2 {
            let mut acc = czero();
            for k in 0..2 {
                for l in 0..2 {
                    acc = acc + y.e[k][l] * m.e[2 * j + l][2 * i + k];
                }
            }
            z.e[j][i] = acc;
        }
    }
    z
}

/// The 2×2 matrix `Z` with `tr[(y ⊗ X) m] = tr[X Z]` for every `X`.
#[inline]
pub fn reduce_second<T: Real>(m: &PairBlock<T>, y: &SpinBlock<T>) -> SpinBlock<T> {
    let mut z = SpinBlock::zero();
    for j in 0..2 {
        for i in 0..2 {
            let mut acc = czero();
            for k in 0..2 {
                for l in 0..2 {
                    acc = acc + y.e[k][l] * m.e[2 * l + j][2 * k + i];
                }
            }
            z.e[j][i] = acc;
        }
    }
    z
}

/// `(m + m†) / 2`.
pub fn hermitian_part<T: Real>(m: &SpinBlock<T>) -> SpinBlock<T> {
    (*m + m.adjoint()).scale(T::lit(0.5))
}

/// Spectral decomposition of a Hermitian 2×2 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigen<T: Real> {
    /// Eigenvalues in ascending order.
    pub values: [T; 2],
    /// Orthogonal projectors matching `values`.
    pub projectors: [SpinBlock<T>; 2],
}

impl<T: Real> Eigen<T> {
    /// Unitary whose columns are the normalized eigenvectors (ascending order).
    pub fn vectors(&self) -> SpinBlock<T> {
        let v0 = unit_column(&self.projectors[0]);
        let v1 = unit_column(&self.projectors[1]);
        SpinBlock::new(v0[0], v1[0], v0[1], v1[1])
    }

    pub fn reconstruct(&self) -> SpinBlock<T> {
        self.projectors[0].scale(self.values[0]) + self.projectors[1].scale(self.values[1])
    }

    /// `Σ f(λ) P` for a scalar function applied to the spectrum.
    pub fn map(&self, f: impl Fn(T) -> T) -> SpinBlock<T> {
        self.projectors[0].scale(f(self.values[0])) + self.projectors[1].scale(f(self.values[1]))
    }
}

/// Normalized column of largest norm of a rank-1 projector.
fn unit_column<T: Real>(p: &SpinBlock<T>) -> [Cplx<T>; 2] {
    let n0 = p.e[0][0].re;
    let n1 = p.e[1][1].re;
    let col = if n0 >= n1 { 0 } else { 1 };
    let norm = (p.e[0][col].norm_sqr() + p.e[1][col].norm_sqr()).sqrt();
    [p.e[0][col].unscale(norm), p.e[1][col].unscale(norm)]
}

/// Closed-form spectral decomposition of a Hermitian 2×2 matrix.
///
/// Degenerate spectra return the coordinate projectors.
pub fn eig_hermitian<T: Real>(m: &SpinBlock<T>) -> Result<Eigen<T>> {
    let defect = m.hermiticity_defect().as_f64();
    let scale = m.max_abs().as_f64().max(1.0);
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { defect });
    }
    Ok(eig_hermitian_unchecked(m))
}

/// [`eig_hermitian`] without the Hermiticity check; the strictly lower
/// off-diagonal entry is ignored.
pub fn eig_hermitian_unchecked<T: Real>(m: &SpinBlock<T>) -> Eigen<T> {
    let half = T::lit(0.5);
    let a = m.e[0][0].re;
    let d = m.e[1][1].re;
    let b = m.e[0][1];
    let mean = (a + d) * half;
    let diff = (a - d) * half;
    let r = diff.hypot(b.norm());
    let coord = [SpinBlock::diag(T::one(), T::zero()), SpinBlock::diag(T::zero(), T::one())];
    if b.norm_sqr() == T::zero() {
        let (values, projectors) = if a <= d {
            ([a, d], coord)
        } else {
            ([d, a], [coord[1], coord[0]])
        };
        return Eigen { values, projectors };
    }
    // The eigenvalue of smaller magnitude via det / λ keeps relative accuracy near 0.
    let det = a * d - b.norm_sqr();
    let (lo, hi) = if mean >= T::zero() {
        let hi = mean + r;
        (det / hi, hi)
    } else {
        let lo = mean - r;
        (lo, det / lo)
    };
    let herm = SpinBlock::new(cre(a), b, b.conj(), cre(d));
    // P_hi = (m − λ_lo I) / (λ_hi − λ_lo), with λ_hi − λ_lo = 2r exactly.
    let p_hi = (herm - SpinBlock::scalar(mean - r)).scale(half / r);
    let p_lo = SpinBlock::identity() - p_hi;
    Eigen {
        values: [lo, hi],
        projectors: [p_lo, p_hi],
    }
}
