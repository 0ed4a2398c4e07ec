//! Exact output probabilities: permanents for Fock inputs, hafnians for
//! squeezed-vacuum inputs, and full enumerated distributions.
//!
//! Convention: `p_s(C) = |Per(C_{s,t})|² / (Π sᵢ! · Π tᵢ!)`. On collision-free
//! inputs the input factorial is 1.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ComplexUnitary};

/// Largest state space `full_distribution` will enumerate.
pub const MAX_DISTRIBUTION_SIZE: u128 = 100_000;
/// Largest matrix handed to Ryser's formula.
pub const MAX_PERMANENT_DIM: usize = 24;
/// Largest matrix handed to the hafnian recursion.
pub const MAX_HAFNIAN_DIM: usize = 16;
/// Symmetry tolerance for hafnian inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Photon counts per mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutcomeConfig {
    occupation: Vec<usize>,
}

impl OutcomeConfig {
    pub fn new(occupation: Vec<usize>) -> Self {
        Self { occupation }
    }

    /// `n` photons, one in each of the first `n` of `modes` modes.
    pub fn first_modes(modes: usize, n: usize) -> Result<Self> {
        if n > modes {
            return Err(Error::InvalidArgument(format!("{n} photons do not fit collision-free in {modes} modes")));
        }
        let mut occ = vec![0; modes];
        occ[..n].iter_mut().for_each(|x| *x = 1);
        Ok(Self::new(occ))
    }

    /// Collision-free outcome with one photon in each listed mode (0-based).
    pub fn from_modes(modes: usize, occupied: &[usize]) -> Result<Self> {
        let mut occ = vec![0; modes];
        for &i in occupied {
            if i >= modes {
                return Err(Error::InvalidArgument(format!("mode {i} out of range 0..{modes}")));
            }
            occ[i] += 1;
        }
        Ok(Self::new(occ))
    }

    pub fn modes(&self) -> usize {
        self.occupation.len()
    }

    pub fn occupation(&self) -> &[usize] {
        &self.occupation
    }

    pub fn total(&self) -> usize {
        self.occupation.iter().sum()
    }

    pub fn is_collision_free(&self) -> bool {
        self.occupation.iter().all(|&s| s <= 1)
    }

    /// Mode index of each photon, ascending, with repeats.
    pub fn photon_modes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.total());
        for (i, &s) in self.occupation.iter().enumerate() {
            out.extend(core::iter::repeat_n(i, s));
        }
        out
    }

    /// Π sᵢ! as a float.
    pub fn factorial_product(&self) -> f64 {
        self.occupation.iter().map(|&s| factorial(s)).product()
    }

    /// Serial concatenation `self ⧺ other`.
    pub fn concat(&self, other: &OutcomeConfig) -> Self {
        let mut occ = self.occupation.clone();
        occ.extend_from_slice(&other.occupation);
        Self::new(occ)
    }
}

impl fmt::Display for OutcomeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.occupation.iter().enumerate() {
            if i > 0 {
                f.write_str("|")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for OutcomeConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let occ: core::result::Result<Vec<usize>, _> = s.split('|').map(|x| x.trim().parse::<usize>()).collect();
        occ.map(Self::new)
            .map_err(|_| Error::InvalidArgument(format!("cannot parse outcome {s:?}")))
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Binomial coefficient as `u128`; saturates at `u128::MAX`.
pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at each step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of `N`-photon outcomes on `M` modes.
pub fn num_outcomes(modes: usize, photons: usize) -> u128 {
    if modes == 0 {
        return u128::from(photons == 0);
    }
    binomial((modes + photons - 1) as u64, photons as u64)
}

/// All outcomes with `photons` photons on `modes` modes, lexicographically
/// ascending in the occupation vector.
pub fn enumerate_outcomes(modes: usize, photons: usize) -> Vec<OutcomeConfig> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; modes];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<OutcomeConfig>) {
        let m = cur.len();
        if i + 1 == m {
            cur[i] = left;
            out.push(OutcomeConfig::new(cur.clone()));
            return;
        }
        for v in 0..=left {
            cur[i] = v;
            rec(i + 1, left - v, cur, out);
        }
    }
    if modes == 0 {
        if photons == 0 {
            out.push(OutcomeConfig::new(Vec::new()));
        }
        return out;
    }
    rec(0, photons, &mut cur, &mut out);
    out
}

fn require_square(a: &CMatrix) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    Ok(a.rows())
}

/// Ryser's formula with Gray-code subset updates, `O(n · 2^n)`.
pub fn permanent(a: &CMatrix) -> Result<Complex64> {
    let n = require_square(a)?;
    if n > MAX_PERMANENT_DIM {
        return Err(Error::DegreeTooLarge {
            degree: n,
            limit: MAX_PERMANENT_DIM,
        });
    }
    if n == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let next = k ^ (k >> 1);
        let j = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << j) != 0;
        for (i, r) in row_sums.iter_mut().enumerate() {
            if added {
                *r += a[(i, j)];
            } else {
                *r -= a[(i, j)];
            }
        }
        gray = next;
        let prod: Complex64 = row_sums.iter().product();
        if gray.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        total = -total;
    }
    Ok(total)
}

/// Direct sum over all `n!` permutations; a reference for small `n`.
pub fn permanent_naive(a: &CMatrix) -> Result<Complex64> {
    let n = require_square(a)?;
    if n > 10 {
        return Err(Error::DegreeTooLarge { degree: n, limit: 10 });
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = Complex64::new(0.0, 0.0);
    let mut term = |p: &[usize]| {
        let mut prod = Complex64::new(1.0, 0.0);
        for (i, &j) in p.iter().enumerate() {
            prod *= a[(i, j)];
        }
        total += prod;
    };
    // Heap's algorithm, iterative.
    let mut c = vec![0usize; n];
    term(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            term(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    Ok(total)
}

fn check_same_modes(s: &OutcomeConfig, t: &OutcomeConfig, m: usize) -> Result<()> {
    for x in [s, t] {
        if x.modes() != m {
            return Err(Error::ModeCountMismatch {
                expected: m,
                found: x.modes(),
            });
        }
    }
    if s.total() != t.total() {
        return Err(Error::TotalMismatch {
            left: s.total(),
            right: t.total(),
        });
    }
    Ok(())
}

/// Row `i` repeated `sᵢ` times and column `j` repeated `tⱼ` times, ascending.
pub fn submatrix_repeat(c: &CMatrix, s: &OutcomeConfig, t: &OutcomeConfig) -> Result<CMatrix> {
    let m = require_square(c)?;
    check_same_modes(s, t, m)?;
    let rows = s.photon_modes();
    let cols = t.photon_modes();
    Ok(CMatrix::from_fn(rows.len(), cols.len(), |i, j| c[(rows[i], cols[j])]))
}

/// `p_s(C)` for input `t` where `C` need not be unitary.
pub fn output_probability_matrix(c: &CMatrix, s: &OutcomeConfig, t: &OutcomeConfig) -> Result<f64> {
    let sub = submatrix_repeat(c, s, t)?;
    let per = permanent(&sub)?;
    Ok(per.norm_sqr() / (s.factorial_product() * t.factorial_product()))
}

/// `p_s(C) = |Per(C_{s,t})|² / (Π sᵢ! Π tᵢ!)`.
pub fn output_probability(c: &ComplexUnitary, s: &OutcomeConfig, t: &OutcomeConfig) -> Result<f64> {
    output_probability_matrix(c.matrix(), s, t)
}

/// Every outcome with its probability, in lexicographic order.
pub fn full_distribution(c: &ComplexUnitary, t: &OutcomeConfig) -> Result<Vec<(OutcomeConfig, f64)>> {
    let m = c.dim();
    if t.modes() != m {
        return Err(Error::ModeCountMismatch {
            expected: m,
            found: t.modes(),
        });
    }
    let size = num_outcomes(m, t.total());
    if size > MAX_DISTRIBUTION_SIZE {
        return Err(Error::StateSpaceTooLarge {
            size,
            limit: MAX_DISTRIBUTION_SIZE,
        });
    }
    enumerate_outcomes(m, t.total())
        .into_iter()
        .map(|s| {
            let p = output_probability(c, &s, t)?;
            Ok((s, p))
        })
        .collect()
}

fn check_symmetric(a: &CMatrix) -> Result<usize> {
    let n = require_square(a)?;
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            dev = dev.max((a[(i, j)] - a[(j, i)]).norm());
        }
    }
    if dev > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { deviation: dev });
    }
    if n % 2 == 1 {
        return Err(Error::OddDimension(n));
    }
    Ok(n)
}

/// Sum over perfect matchings by expansion along the first remaining index.
pub fn hafnian(a: &CMatrix) -> Result<Complex64> {
    let n = check_symmetric(a)?;
    if n > MAX_HAFNIAN_DIM {
        return Err(Error::DegreeTooLarge {
            degree: n,
            limit: MAX_HAFNIAN_DIM,
        });
    }
    fn rec(a: &CMatrix, idx: &mut Vec<usize>) -> Complex64 {
        if idx.is_empty() {
            return Complex64::new(1.0, 0.0);
        }
        let first = idx.remove(0);
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..idx.len() {
            let partner = idx.remove(k);
            total += a[(first, partner)] * rec(a, idx);
            idx.insert(k, partner);
        }
        idx.insert(0, first);
        total
    }
    let mut idx: Vec<usize> = (0..n).collect();
    Ok(rec(a, &mut idx))
}

/// `Haf(A) = (1 / (2^n n!)) Σ_{σ ∈ S_{2n}} Π_j A[σ(2j−1), σ(2j)]`; a reference for
/// dimensions up to 8.
pub fn hafnian_permutation_sum(a: &CMatrix) -> Result<Complex64> {
    let n2 = check_symmetric(a)?;
    if n2 > 8 {
        return Err(Error::DegreeTooLarge { degree: n2, limit: 8 });
    }
    let mut total = Complex64::new(0.0, 0.0);
    let mut perm: Vec<usize> = (0..n2).collect();
    let mut add = |p: &[usize]| {
        let mut prod = Complex64::new(1.0, 0.0);
        for pair in p.chunks(2) {
            prod *= a[(pair[0], pair[1])];
        }
        total += prod;
    };
    let mut c = vec![0usize; n2];
    add(&perm);
    let mut i = 0;
    while i < n2 {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            add(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    let n = n2 / 2;
    Ok(total / (Float::powi(2.0, n as i32) * factorial(n)))
}

/// Equal single-mode squeezing on every mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbsParams {
    r: f64,
    modes: usize,
}

impl GbsParams {
    pub fn new(r: f64, modes: usize) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("squeezing must be positive, got {r}")));
        }
        Ok(Self { r, modes })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    /// `M sinh² r`.
    pub fn mean_photons(&self) -> f64 {
        let s = Float::sinh(self.r);
        self.modes as f64 * s * s
    }
}

/// `(CCᵀ)_s`: rows and columns of `CCᵀ` kept where `sᵢ = 1`.
pub fn gbs_kernel(c: &CMatrix, s: &OutcomeConfig) -> Result<CMatrix> {
    let ct = c.matmul(&c.transpose())?;
    let idx = s.photon_modes();
    Ok(CMatrix::from_fn(idx.len(), idx.len(), |i, j| ct[(idx[i], idx[j])]))
}

/// `q_s(C) = tanh^N r / cosh^M r · |Haf((CCᵀ)_s)|²` for collision-free `s`.
/// Odd `N` has probability exactly zero by photon-number parity.
pub fn gbs_probability(c: &ComplexUnitary, s: &OutcomeConfig, params: &GbsParams) -> Result<f64> {
    let m = c.dim();
    if params.modes() != m {
        return Err(Error::ModeCountMismatch {
            expected: m,
            found: params.modes(),
        });
    }
    if s.modes() != m {
        return Err(Error::ModeCountMismatch {
            expected: m,
            found: s.modes(),
        });
    }
    if !s.is_collision_free() {
        return Err(Error::CollisionOutcome);
    }
    let n = s.total();
    if n % 2 == 1 {
        return Ok(0.0);
    }
    let haf = hafnian(&gbs_kernel(c.matrix(), s)?)?;
    let r = params.r();
    let pref = Float::powi(Float::tanh(r), n as i32) / Float::powi(Float::cosh(r), m as i32);
    Ok(pref * haf.norm_sqr())
}
