//! Dense complex linear algebra.
//!
//! Matrices here are small (at most a few hundred modes) so everything is a
//! row-major `Vec<Complex64>` with naive kernels.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::ops::{Index, IndexMut, Mul};

use num_complex::Complex64;
use num_traits::Float;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Maximum entrywise deviation of `U^† U` from the identity accepted at construction.
pub const UNITARY_TOL: f64 = 1e-10;
/// Reconstruction tolerance for 2×2 eigendecompositions.
pub const RECON_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                left: rows * cols,
                right: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                left: self.cols,
                right: rhs.rows,
            });
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, r) in orow.iter_mut().zip(rrow) {
                    *o += a * r;
                }
            }
        }
        Ok(out)
    }

    /// `max |self - other|` entrywise.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                left: self.rows * self.cols,
                right: other.rows * other.cols,
            });
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `‖A^† A − I‖_max`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let mut acc = ZERO;
                for k in 0..n {
                    acc += self[(k, i)].conj() * self[(k, j)];
                }
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    /// Left-multiply by a 2×2 block acting on rows `a` and `b` (0-based).
    pub fn apply_rows(&mut self, a: usize, b: usize, g: &Gate2) {
        let cols = self.cols;
        for j in 0..cols {
            let x = self.data[a * cols + j];
            let y = self.data[b * cols + j];
            self.data[a * cols + j] = g.0[0] * x + g.0[1] * y;
            self.data[b * cols + j] = g.0[2] * x + g.0[3] * y;
        }
    }

    /// Permute columns: column `j` of the result is column `perm[j]` of `self`.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// A 2×2 unitary block stored row-major: `[g00, g01, g10, g11]`.
///
/// Placed on modes `(a, b)` with `a < b`, `g00` maps `a → a` and `g10` maps `a → b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate2(pub [Complex64; 4]);

impl Gate2 {
    pub const IDENTITY: Gate2 = Gate2([ONE, ZERO, ZERO, ONE]);
    pub const SWAP: Gate2 = Gate2([ZERO, ONE, ONE, ZERO]);

    pub fn new(g00: Complex64, g01: Complex64, g10: Complex64, g11: Complex64) -> Self {
        Self([g00, g01, g10, g11])
    }

    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(Error::Dimension(m.rows()));
        }
        Ok(Self([m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]]))
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_rows(2, 2, self.0.to_vec()).expect("2x2")
    }

    pub fn adjoint(&self) -> Self {
        let [a, b, c, d] = self.0;
        Self([a.conj(), c.conj(), b.conj(), d.conj()])
    }

    /// The same physical gate seen with its two modes exchanged.
    pub fn flipped(&self) -> Self {
        let [a, b, c, d] = self.0;
        Self([d, c, b, a])
    }

    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint() * *self;
        let d = [p.0[0] - ONE, p.0[1], p.0[2], p.0[3] - ONE];
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Gate2) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_exact_identity(&self) -> bool {
        *self == Self::IDENTITY
    }

    pub fn is_exact_swap(&self) -> bool {
        *self == Self::SWAP
    }

    pub fn eigen(&self) -> Result<Eigen2> {
        let dev = self.unitarity_deviation();
        if dev > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        Ok(eigen2_unchecked(self))
    }
}

impl Mul for Gate2 {
    type Output = Gate2;

    fn mul(self, rhs: Gate2) -> Gate2 {
        let [a, b, c, d] = self.0;
        let [e, f, g, h] = rhs.0;
        Gate2([a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h])
    }
}

/// A square matrix that passed the unitarity check at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexUnitary(CMatrix);

impl ComplexUnitary {
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let deviation = m.unitarity_deviation();
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self(m))
    }

    /// Skips the O(n³) check; callers guarantee unitarity by construction.
    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        debug_assert!(m.is_square());
        Self(m)
    }

    pub fn identity(n: usize) -> Self {
        Self(CMatrix::identity(n))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.0.max_abs_diff(&other.0)
    }
}

impl Index<(usize, usize)> for ComplexUnitary {
    type Output = Complex64;

    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.0[idx]
    }
}

impl From<Gate2> for ComplexUnitary {
    fn from(g: Gate2) -> Self {
        Self(g.to_matrix())
    }
}

/// `U = L · diag(e^{iφ₁}, e^{iφ₂}) · L^†` with φ in (−π, π].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub basis: Gate2,
    pub phases: [f64; 2],
}

impl Eigen2 {
    pub fn reconstruct(&self) -> Gate2 {
        let d = Gate2([
            Complex64::from_polar(1.0, self.phases[0]),
            ZERO,
            ZERO,
            Complex64::from_polar(1.0, self.phases[1]),
        ]);
        self.basis * d * self.basis.adjoint()
    }
}

/// Phase of `z` folded into (−π, π].
pub fn principal_arg(z: Complex64) -> f64 {
    let mut phi = z.arg();
    if phi <= -PI {
        phi += 2.0 * PI;
    }
    phi
}

fn eigen2_unchecked(u: &Gate2) -> Eigen2 {
    let [a, b, c, d] = u.0;
    let tr = a + d;
    // (a+d)² − 4(ad−bc) rewritten without the cancellation near degeneracy.
    let disc = ((a - d) * (a - d) + b * c * 4.0).sqrt();
    let lam1 = (tr + disc) * 0.5;
    let scale = (a.norm() + b.norm() + c.norm() + d.norm()).max(1.0);
    if disc.norm() <= 1e-13 * scale || (b.norm() + c.norm()) <= 1e-15 * scale {
        if (b.norm() + c.norm()) <= 1e-15 * scale {
            // Already diagonal.
            return Eigen2 {
                basis: Gate2::IDENTITY,
                phases: [principal_arg(a), principal_arg(d)],
            };
        }
        // Scalar matrix: any basis diagonalises it.
        let phi = principal_arg(lam1);
        return Eigen2 {
            basis: Gate2::IDENTITY,
            phases: [phi, phi],
        };
    }
    // Eigenvector for lam1 from whichever row of (U - lam1) is better conditioned.
    let v_from_row0 = [b, (d - a + disc) * 0.5];
    let v_from_row1 = [(a - d + disc) * 0.5, c];
    let n0 = v_from_row0[0].norm_sqr() + v_from_row0[1].norm_sqr();
    let n1 = v_from_row1[0].norm_sqr() + v_from_row1[1].norm_sqr();
    let (v, n) = if n0 >= n1 {
        (v_from_row0, n0)
    } else {
        (v_from_row1, n1)
    };
    let n = Float::sqrt(n);
    let v = [v[0] / n, v[1] / n];
    // Orthogonal complement keeps L exactly unitary.
    let w = [-v[1].conj(), v[0].conj()];
    let basis = Gate2([v[0], w[0], v[1], w[1]]);
    let rayleigh = |x: [Complex64; 2]| {
        let ux = [a * x[0] + b * x[1], c * x[0] + d * x[1]];
        x[0].conj() * ux[0] + x[1].conj() * ux[1]
    };
    Eigen2 {
        basis,
        phases: [principal_arg(rayleigh(v)), principal_arg(rayleigh(w))],
    }
}

/// Diagonalise a 2×2 unitary.
pub fn eig_unitary2(u: &ComplexUnitary) -> Result<Eigen2> {
    if u.dim() != 2 {
        return Err(Error::Dimension(u.dim()));
    }
    Gate2::from_matrix(u.matrix())?.eigen()
}

/// `A · B` with the unitarity tolerance re-checked on the product.
pub fn compose(a: &ComplexUnitary, b: &ComplexUnitary) -> Result<ComplexUnitary> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    ComplexUnitary::new(a.matrix().matmul(b.matrix())?)
}

fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Gram–Schmidt QR (two passes) returning Q with `R_jj > 0`, which is the
/// phase normalisation that makes Q Haar-distributed.
fn orthonormalize_columns(mut m: CMatrix) -> CMatrix {
    let n = m.rows();
    for j in 0..m.cols() {
        for _pass in 0..2 {
            for k in 0..j {
                let mut proj = ZERO;
                for i in 0..n {
                    proj += m[(i, k)].conj() * m[(i, j)];
                }
                for i in 0..n {
                    let qk = m[(i, k)];
                    m[(i, j)] -= proj * qk;
                }
            }
        }
        let norm = Float::sqrt((0..n).map(|i| m[(i, j)].norm_sqr()).sum::<f64>());
        for i in 0..n {
            m[(i, j)] /= norm;
        }
    }
    m
}

/// Haar-random element of U(n), n ∈ {1, 2}.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexUnitary> {
    if !(1..=2).contains(&n) {
        return Err(Error::Dimension(n));
    }
    Ok(ComplexUnitary::new_unchecked(orthonormalize_columns(
        ginibre(n, rng),
    )))
}

/// Haar-random 2×2 gate.
pub fn haar_gate<R: Rng + ?Sized>(rng: &mut R) -> Gate2 {
    let q = orthonormalize_columns(ginibre(2, rng));
    Gate2::from_matrix(&q).expect("2x2")
}

/// Haar-random element of U(n) for any n (Ginibre + QR).
pub fn haar_unitary_global<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<ComplexUnitary> {
    if n == 0 {
        return Err(Error::Dimension(n));
    }
    Ok(ComplexUnitary::new_unchecked(orthonormalize_columns(
        ginibre(n, rng),
    )))
}
