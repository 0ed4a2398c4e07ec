//! Sparse Fock-space states for trajectory and squeezed-state simulation.
//!
//! A basis state is packed into a `u128` with 8 bits per mode, mode 0 in the
//! lowest byte, so at most 16 modes with at most 255 photons each.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Gate2};
use crate::probability::{factorial, OutcomeConfig};

pub const MAX_FOCK_MODES: usize = 16;
const BITS: u32 = 8;
const MASK: u128 = 0xff;

pub fn pack(occ: &[usize]) -> Result<u128> {
    if occ.len() > MAX_FOCK_MODES {
        return Err(Error::StateSpaceTooLarge {
            size: occ.len() as u128,
            limit: MAX_FOCK_MODES as u128,
        });
    }
    let mut key = 0u128;
    for (i, &n) in occ.iter().enumerate() {
        if n > MASK as usize {
            return Err(Error::StateSpaceTooLarge {
                size: n as u128,
                limit: MASK,
            });
        }
        key |= (n as u128) << (BITS * i as u32);
    }
    Ok(key)
}

pub fn unpack(key: u128, modes: usize) -> Vec<usize> {
    (0..modes).map(|i| occupation(key, i)).collect()
}

#[inline]
fn occupation(key: u128, mode: usize) -> usize {
    ((key >> (BITS * mode as u32)) & MASK) as usize
}

#[inline]
fn with_occupation(key: u128, mode: usize, n: usize) -> u128 {
    let shift = BITS * mode as u32;
    (key & !(MASK << shift)) | ((n as u128) << shift)
}

/// Coefficients of `(α x + β y)^n` as `[x^n y^0, x^{n−1} y, …]` indexed by
/// the power of `x`.
fn binomial_expand(alpha: Complex64, beta: Complex64, n: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
    c[0] = Complex64::new(1.0, 0.0);
    // c[k] holds the coefficient of x^k y^{deg−k}.
    for deg in 0..n {
        for k in (0..=deg + 1).rev() {
            let from_x = if k > 0 { c[k - 1] * alpha } else { Complex64::new(0.0, 0.0) };
            let from_y = if k <= deg { c[k] * beta } else { Complex64::new(0.0, 0.0) };
            c[k] = from_x + from_y;
        }
    }
    c
}

fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if *x == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// A pure state as a sparse map from packed occupations to amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    modes: usize,
    amps: BTreeMap<u128, Complex64>,
}

impl FockState {
    pub fn basis(occ: &OutcomeConfig) -> Result<Self> {
        let mut amps = BTreeMap::new();
        amps.insert(pack(occ.occupation())?, Complex64::new(1.0, 0.0));
        Ok(Self {
            modes: occ.modes(),
            amps,
        })
    }

    pub fn from_amplitudes(modes: usize, amps: BTreeMap<u128, Complex64>) -> Result<Self> {
        if modes > MAX_FOCK_MODES {
            return Err(Error::StateSpaceTooLarge {
                size: modes as u128,
                limit: MAX_FOCK_MODES as u128,
            });
        }
        Ok(Self { modes, amps })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn amplitudes(&self) -> &BTreeMap<u128, Complex64> {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, occ: &OutcomeConfig) -> Complex64 {
        pack(occ.occupation())
            .ok()
            .and_then(|k| self.amps.get(&k).copied())
            .unwrap_or_default()
    }

    /// Apply a two-mode gate (0-based modes `a < b`) with the circuit
    /// convention `a† → g00 a† + g10 b†`, `b† → g01 a† + g11 b†`.
    pub fn apply_gate(&mut self, a: usize, b: usize, g: &Gate2) {
        let [g00, g01, g10, g11] = g.0;
        let mut out: BTreeMap<u128, Complex64> = BTreeMap::new();
        for (&key, &amp) in &self.amps {
            let na = occupation(key, a);
            let nb = occupation(key, b);
            let n = na + nb;
            // (g00 x + g10 y)^na (g01 x + g11 y)^nb, x = a†, y = b†.
            let pa = binomial_expand(g00, g10, na);
            let pb = binomial_expand(g01, g11, nb);
            let poly = poly_mul(&pa, &pb);
            let norm_in = Float::sqrt(factorial(na) * factorial(nb));
            for (k, c) in poly.iter().enumerate() {
                if *c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let norm_out = Float::sqrt(factorial(k) * factorial(n - k));
                let new_key = with_occupation(with_occupation(key, a, k), b, n - k);
                *out.entry(new_key).or_default() += amp * c * (norm_out / norm_in);
            }
        }
        self.amps = out;
    }

    /// `a_mode |ψ⟩ / ‖a_mode |ψ⟩‖`, or `None` if the mode is empty in every
    /// branch.
    pub fn annihilate(&self, mode: usize) -> Option<FockState> {
        let mut out = BTreeMap::new();
        for (&key, &amp) in &self.amps {
            let n = occupation(key, mode);
            if n > 0 {
                out.insert(with_occupation(key, mode, n - 1), amp * Float::sqrt(n as f64));
            }
        }
        let norm: f64 = out.values().map(|a: &Complex64| a.norm_sqr()).sum();
        if norm == 0.0 {
            return None;
        }
        let s = 1.0 / Float::sqrt(norm);
        out.values_mut().for_each(|a| *a *= s);
        Some(FockState {
            modes: self.modes,
            amps: out,
        })
    }

    /// Mean photon number in `mode`.
    pub fn mean_occupation(&self, mode: usize) -> f64 {
        let total = self.norm_sqr();
        self.amps
            .iter()
            .map(|(&k, a)| occupation(k, mode) as f64 * a.norm_sqr())
            .sum::<f64>()
            / total
    }

    /// Outcome probabilities in packed-key order.
    pub fn probabilities(&self) -> Vec<(OutcomeConfig, f64)> {
        self.amps
            .iter()
            .map(|(&k, a)| (OutcomeConfig::new(unpack(k, self.modes)), a.norm_sqr()))
            .collect()
    }

    /// One measurement in the Fock basis by inverse CDF over keys in
    /// ascending order, consuming a single uniform draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> OutcomeConfig {
        let total = self.norm_sqr();
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = 0u128;
        for (&k, a) in &self.amps {
            let p = a.norm_sqr();
            if p == 0.0 {
                continue;
            }
            acc += p;
            last = k;
            if u < acc {
                return OutcomeConfig::new(unpack(k, self.modes));
            }
        }
        OutcomeConfig::new(unpack(last, self.modes))
    }
}

/// Polynomials in creation operators: exponent vectors packed as keys.
pub type CreationPoly = BTreeMap<u128, Complex64>;

/// Multiply a polynomial by the linear form `Σ_j coef[j] a_j†`, dropping
/// monomials above `max_degree` total photons.
pub fn mul_linear(p: &CreationPoly, coef: &[Complex64], max_degree: usize) -> CreationPoly {
    let mut out = CreationPoly::new();
    for (&key, &c) in p {
        let deg: usize = (0..coef.len()).map(|i| occupation(key, i)).sum();
        if deg + 1 > max_degree {
            continue;
        }
        for (j, &l) in coef.iter().enumerate() {
            if l == Complex64::new(0.0, 0.0) {
                continue;
            }
            let k2 = with_occupation(key, j, occupation(key, j) + 1);
            *out.entry(k2).or_default() += c * l;
        }
    }
    out
}

pub fn poly_product(a: &CreationPoly, b: &CreationPoly, modes: usize, max_degree: usize) -> CreationPoly {
    let mut out = CreationPoly::new();
    for (&ka, &ca) in a {
        let da: usize = (0..modes).map(|i| occupation(ka, i)).sum();
        for (&kb, &cb) in b {
            let db: usize = (0..modes).map(|i| occupation(kb, i)).sum();
            if da + db > max_degree {
                continue;
            }
            // Occupations stay below 256 because max_degree does.
            *out.entry(ka + kb).or_default() += ca * cb;
        }
    }
    out
}

/// Turn a creation polynomial acting on vacuum into normalized amplitudes:
/// `Π (a_j†)^{s_j} |0⟩ = √(s!) |s⟩`.
pub fn poly_to_state(p: &CreationPoly, modes: usize) -> Result<FockState> {
    let amps = p
        .iter()
        .map(|(&k, &c)| {
            let s: f64 = unpack(k, modes).into_iter().map(factorial).product();
            (k, c * Float::sqrt(s))
        })
        .collect();
    FockState::from_amplitudes(modes, amps)
}

/// Columns of `u` as linear forms: mode `i` maps to `Σ_j U[j][i] a_j†`.
pub fn column_form(u: &CMatrix, i: usize) -> Vec<Complex64> {
    (0..u.rows()).map(|j| u[(j, i)]).collect()
}
