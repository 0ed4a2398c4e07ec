//! Exact rational arithmetic for the extended-precision paths.
//!
//! Every finite `f64` is a dyadic rational, so gates read from double
//! precision can be carried through circuit products, permanents and Lagrange
//! extrapolation without any rounding.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Gate2};

pub type Rat = BigRational;
pub type CRat = Complex<BigRational>;

/// The exact value of a finite double.
pub fn rat_from_f64(x: f64) -> Result<Rat> {
    if !x.is_finite() {
        return Err(Error::InvalidArgument("non-finite value has no rational form".into()));
    }
    if x == 0.0 {
        return Ok(Rat::zero());
    }
    let bits = x.to_bits();
    let negative = bits >> 63 == 1;
    let exp_bits = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if exp_bits == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp_bits - 1075)
    };
    let m = BigInt::from(mantissa);
    let mut r = if exp >= 0 {
        Rat::from_integer(m << exp as usize)
    } else {
        Rat::new(m, BigInt::one() << (-exp) as usize)
    };
    if negative {
        r = -r;
    }
    Ok(r)
}

/// Nearest-ish double; exact rationals built here stay far from the
/// overflow range.
pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn crat_from(z: Complex64) -> Result<CRat> {
    Ok(CRat::new(rat_from_f64(z.re)?, rat_from_f64(z.im)?))
}

pub fn crat_to_c64(z: &CRat) -> Complex64 {
    Complex64::new(rat_to_f64(&z.re), rat_to_f64(&z.im))
}

pub fn crat_zero() -> CRat {
    CRat::new(Rat::zero(), Rat::zero())
}

pub fn crat_one() -> CRat {
    CRat::new(Rat::one(), Rat::zero())
}

pub fn crat_real(x: Rat) -> CRat {
    CRat::new(x, Rat::zero())
}

/// `|z|²` without leaving the rationals.
pub fn norm_sqr(z: &CRat) -> Rat {
    &z.re * &z.re + &z.im * &z.im
}

/// A 2×2 block, row-major like [`Gate2`].
#[derive(Debug, Clone, PartialEq)]
pub struct RatGate(pub [CRat; 4]);

impl RatGate {
    pub fn from_gate(g: &Gate2) -> Result<Self> {
        Ok(Self([
            crat_from(g.0[0])?,
            crat_from(g.0[1])?,
            crat_from(g.0[2])?,
            crat_from(g.0[3])?,
        ]))
    }

    pub fn identity() -> Self {
        Self([crat_one(), crat_zero(), crat_zero(), crat_one()])
    }

    pub fn mul(&self, rhs: &RatGate) -> RatGate {
        let [a, b, c, d] = &self.0;
        let [e, f, g, h] = &rhs.0;
        RatGate([
            a * e + b * g,
            a * f + b * h,
            c * e + d * g,
            c * f + d * h,
        ])
    }

    pub fn det(&self) -> CRat {
        let [a, b, c, d] = &self.0;
        a * d - b * c
    }

    /// Adjugate: `adj(A) · A = det(A) · I`.
    pub fn adjugate(&self) -> RatGate {
        let [a, b, c, d] = &self.0;
        RatGate([d.clone(), -b.clone(), -c.clone(), a.clone()])
    }
}

/// Dense square matrix over the complex rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct RatMatrix {
    n: usize,
    data: Vec<CRat>,
}

impl RatMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![crat_zero(); n * n];
        for i in 0..n {
            data[i * n + i] = crat_one();
        }
        Self { n, data }
    }

    pub fn from_cmatrix(m: &CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::NotSquare {
                rows: m.rows(),
                cols: m.cols(),
            });
        }
        let data = m.as_slice().iter().map(|&z| crat_from(z)).collect::<Result<Vec<_>>>()?;
        Ok(Self { n: m.rows(), data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &CRat {
        &self.data[i * self.n + j]
    }

    /// Left-multiply by `g` acting on rows `a`, `b`.
    pub fn apply_rows(&mut self, a: usize, b: usize, g: &RatGate) {
        let n = self.n;
        for j in 0..n {
            let x = self.data[a * n + j].clone();
            let y = self.data[b * n + j].clone();
            self.data[a * n + j] = &g.0[0] * &x + &g.0[1] * &y;
            self.data[b * n + j] = &g.0[2] * &x + &g.0[3] * &y;
        }
    }

    /// Multiply every row except `a` and `b` by `z`.
    pub fn scale_rows_except(&mut self, a: usize, b: usize, z: &CRat) {
        let n = self.n;
        for i in (0..n).filter(|&i| i != a && i != b) {
            for x in &mut self.data[i * n..(i + 1) * n] {
                *x = &*x * z;
            }
        }
    }

    /// Column `j` of the result is column `cols[j]` of `self`.
    pub fn permute_columns(&self, cols: &[usize]) -> Self {
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for &c in cols {
                data.push(self.data[i * n + c].clone());
            }
        }
        Self { n, data }
    }

    pub fn to_cmatrix(&self) -> CMatrix {
        CMatrix::from_fn(self.n, self.n, |i, j| crat_to_c64(self.get(i, j)))
    }
}

/// Permanent of the rows × cols selection (with repeats allowed), by the
/// subset recursion `per(S) = Σ_{j∈S} A[|S|−1, j] · per(S∖j)`.
pub fn permanent_exact(m: &RatMatrix, rows: &[usize], cols: &[usize]) -> Result<CRat> {
    let n = rows.len();
    if n != cols.len() {
        return Err(Error::TotalMismatch {
            left: n,
            right: cols.len(),
        });
    }
    if n > 20 {
        return Err(Error::DegreeTooLarge { degree: n, limit: 20 });
    }
    let mut dp = vec![crat_zero(); 1 << n];
    dp[0] = crat_one();
    for mask in 1usize..(1 << n) {
        let row = rows[mask.count_ones() as usize - 1];
        let mut acc = crat_zero();
        let mut rest = mask;
        while rest != 0 {
            let j = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            let prev = &dp[mask & !(1 << j)];
            if !prev.is_zero() {
                acc += m.get(row, cols[j]) * prev;
            }
        }
        dp[mask] = acc;
    }
    Ok(dp.pop().expect("non-empty"))
}

fn check_nodes(nodes: &[Rat], values: usize) -> Result<()> {
    if nodes.is_empty() || nodes.len() != values {
        return Err(Error::DimensionMismatch {
            left: nodes.len(),
            right: values,
        });
    }
    for (i, a) in nodes.iter().enumerate() {
        if nodes[..i].contains(a) {
            return Err(Error::InvalidArgument("repeated interpolation node".into()));
        }
    }
    Ok(())
}

/// Exact value at `x` of the interpolant through `(nodes, values)`.
pub fn lagrange_eval_exact(nodes: &[Rat], values: &[Rat], x: &Rat) -> Result<Rat> {
    let coeffs = newton_coefficients(nodes, values)?;
    // Horner on the Newton form.
    let mut acc = Rat::zero();
    for k in (0..coeffs.len()).rev() {
        acc = acc * (x - &nodes[k]) + &coeffs[k];
    }
    Ok(acc)
}

/// Newton divided differences `f[x₀], f[x₀,x₁], …`. The k-th entry is the
/// leading coefficient of the degree-k interpolant through the first k+1 nodes.
pub fn newton_coefficients(nodes: &[Rat], values: &[Rat]) -> Result<Vec<Rat>> {
    check_nodes(nodes, values.len())?;
    let n = nodes.len();
    let mut table: Vec<Rat> = values.to_vec();
    let mut out = Vec::with_capacity(n);
    out.push(table[0].clone());
    for level in 1..n {
        for i in 0..n - level {
            table[i] = (&table[i + 1] - &table[i]) / (&nodes[i + level] - &nodes[i]);
        }
        out.push(table[0].clone());
    }
    Ok(out)
}

/// `log₂ |x|`, finite for nonzero rationals of any size.
pub fn log2_abs(x: &Rat) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let num = x.numer().abs();
    let den = x.denom().abs();
    log2_big(&num) - log2_big(&den)
}

fn log2_big(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return Float::log2(x.to_f64().unwrap_or(f64::MAX));
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift as usize;
    Float::log2(top.to_f64().unwrap_or(f64::MAX)) + shift as f64
}
