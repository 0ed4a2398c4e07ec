//! Gaussian Boson Sampling support: the two-mode-squeezed embedding of a
//! Fock-state circuit, the identity linking their probabilities, the
//! imprecision blowup factor and a truncated-Fock oracle.
//!
//! Layout on `M = 2M₀` modes arranged as `BB*`: layer 1 pairs `(2k, 2k+1)`
//! (0-based) and carries the balanced beamsplitter `[[1, i], [i, 1]]/√2`,
//! which turns two equal single-mode squeezed vacua into a two-mode squeezed
//! vacuum. Odd modes `2x+1` carry `C₀` (small mode `x`), even modes are the
//! herald counters and see only identities. Small layer `L` sits on big layer
//! `L + 1`; the last big layer is all identities.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

use crate::architecture::{build_kaleidoscope, circuit_unitary, log2_modes, ArchLabel, Circuit};
use crate::error::{Error, Result};
use crate::fock::{mul_linear, poly_product, poly_to_state, column_form, unpack, CreationPoly};
use crate::linalg::{ComplexUnitary, Gate2};
use crate::probability::{factorial, gbs_probability, output_probability, GbsParams, OutcomeConfig};

/// Largest mode count for the truncated-Fock oracle.
pub const MAX_FOCK_GBS_MODES: usize = 4;
/// Largest per-mode photon cutoff for the truncated-Fock oracle.
pub const MAX_FOCK_GBS_CUTOFF: usize = 6;

/// `[[1, i], [i, 1]] / √2`.
pub fn tmsv_beamsplitter() -> Gate2 {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    Gate2::new(
        Complex64::new(s, 0.0),
        Complex64::new(0.0, s),
        Complex64::new(0.0, s),
        Complex64::new(s, 0.0),
    )
}

/// Embed `C₀` (on `(BB*)` with `M₀ ≥ 2` modes) into a `2M₀`-mode `BB*`.
pub fn build_tmsv_embedding(c0: &Circuit) -> Result<Circuit> {
    let m0 = c0.modes();
    let n0 = log2_modes(m0)?;
    if c0.arch().label() != ArchLabel::Kaleidoscope(1) || c0.arch().depth() != 2 * n0 {
        return Err(Error::InvalidArgument("the embedded circuit must be laid out as BB*".into()));
    }
    let small: BTreeMap<(usize, usize, usize), Gate2> = c0
        .iter()
        .map(|(p, g)| ((p.layer, p.mode_a, p.mode_b), *g))
        .collect();
    let big = build_kaleidoscope(2 * m0, 1)?;
    let last = big.depth();
    let gates = big
        .placements()
        .map(|p| {
            if p.layer == 1 {
                return Ok(tmsv_beamsplitter());
            }
            // Even 1-based modes are the odd 0-based circuit modes.
            if p.layer == last || p.mode_a % 2 == 1 || p.mode_b % 2 == 1 {
                return Ok(Gate2::IDENTITY);
            }
            small
                .get(&(p.layer - 1, p.mode_a / 2, p.mode_b / 2))
                .copied()
                .ok_or_else(|| Error::InvalidArgument("embedded circuit does not match the BB* layout".into()))
        })
        .collect::<Result<Vec<_>>>()?;
    Circuit::new(big, gates)
}

/// Counter modes (even, 0-based) carry `t₀`; circuit modes (odd) carry `s₀`.
pub fn lift_outcome(s0: &OutcomeConfig, t0: &OutcomeConfig) -> Result<OutcomeConfig> {
    if s0.modes() != t0.modes() {
        return Err(Error::ModeCountMismatch {
            expected: s0.modes(),
            found: t0.modes(),
        });
    }
    let occ = t0
        .occupation()
        .iter()
        .zip(s0.occupation())
        .flat_map(|(&t, &s)| [t, s])
        .collect();
    Ok(OutcomeConfig::new(occ))
}

/// `tanh^{2N₀} r / cosh^{2M₀} r`.
pub fn reduction_prefactor(m0: usize, n0: usize, r: f64) -> f64 {
    Float::powi(Float::tanh(r), 2 * n0 as i32) / Float::powi(Float::cosh(r), 2 * m0 as i32)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbsReductionReport {
    /// `q_s(C)` from the hafnian formula on the embedding.
    pub lhs: f64,
    /// `tanh^{2N₀}r / cosh^{2M₀}r · p_{s₀}(C₀)` from the permanent formula.
    pub rhs: f64,
    pub abs_diff: f64,
    pub p0: f64,
    pub prefactor: f64,
    /// The lifted outcome on `2M₀` modes.
    pub outcome: OutcomeConfig,
}

/// Both sides of the embedding identity for a collision-free `s₀` with the
/// input photons of `C₀` in its first `N₀` modes.
pub fn verify_gbs_reduction(c0: &Circuit, s0: &OutcomeConfig, r: f64) -> Result<GbsReductionReport> {
    if !s0.is_collision_free() {
        return Err(Error::CollisionOutcome);
    }
    let m0 = c0.modes();
    let n0 = s0.total();
    let t0 = OutcomeConfig::first_modes(m0, n0)?;
    let big = build_tmsv_embedding(c0)?;
    let outcome = lift_outcome(s0, &t0)?;
    let lhs = gbs_probability(&circuit_unitary(&big), &outcome, &GbsParams::new(r, 2 * m0)?)?;
    let p0 = output_probability(&circuit_unitary(c0), s0, &t0)?;
    let prefactor = reduction_prefactor(m0, n0, r);
    let rhs = prefactor * p0;
    Ok(GbsReductionReport {
        lhs,
        rhs,
        abs_diff: Float::abs(lhs - rhs),
        p0,
        prefactor,
        outcome,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupFactor {
    /// `cosh^{2M₀} r / tanh^{2N₀} r`.
    pub value: f64,
    pub log2: f64,
    /// `((M+N)/M)^{M₀+N₀} (M/N)^{N₀}` with `M = 2M₀`, `N = 2N₀`, present
    /// only when `N = M sinh² r`.
    pub closed_form: Option<f64>,
}

impl BlowupFactor {
    /// True when the closed form was applicable.
    pub fn consistent(&self) -> bool {
        self.closed_form.is_some()
    }
}

/// Relative tolerance for `N = M sinh² r` and the cross-check of the two forms.
pub const BLOWUP_REL_TOL: f64 = 1e-10;

pub fn blowup_factor(m0: usize, n0: usize, r: f64) -> Result<BlowupFactor> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("squeezing must be positive, got {r}")));
    }
    let log2 = 2.0 * m0 as f64 * Float::log2(Float::cosh(r)) - 2.0 * n0 as f64 * Float::log2(Float::tanh(r));
    let value = Float::exp2(log2);
    let (m, n) = ((2 * m0) as f64, (2 * n0) as f64);
    let sh = Float::sinh(r);
    let closed_form = if n0 > 0 && Float::abs(n - m * sh * sh) <= BLOWUP_REL_TOL * n {
        let c = Float::powi((m + n) / m, (m0 + n0) as i32) * Float::powi(m / n, n0 as i32);
        if Float::abs(c - value) > BLOWUP_REL_TOL * value {
            return Err(Error::InvalidArgument(alloc::format!(
                "closed forms disagree: {value} vs {c}"
            )));
        }
        Some(c)
    } else {
        None
    };
    Ok(BlowupFactor { value, log2, closed_form })
}

/// The squeezing at which `N₀/M₀ = sinh² r`.
pub fn matched_squeezing(m0: usize, n0: usize) -> f64 {
    Float::asinh(Float::sqrt(n0 as f64 / m0 as f64))
}

/// Output probabilities of `C` fed with equal single-mode squeezed vacua,
/// exact on every sector with at most `cutoff` photons in total.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedGbs {
    pub probabilities: BTreeMap<OutcomeConfig, f64>,
    pub cutoff: usize,
    /// Probability that the input carries more than `cutoff` photons in
    /// total; exactly the weight missing from `probabilities`.
    pub truncation_error: f64,
}

impl TruncatedGbs {
    pub fn probability(&self, s: &OutcomeConfig) -> f64 {
        self.probabilities.get(s).copied().unwrap_or(0.0)
    }
}

/// `c_k = (−tanh r)^k √((2k)!) / (2^k k! √cosh r)`, the amplitude of `|2k⟩`.
pub fn smsv_coefficient(r: f64, k: usize) -> f64 {
    Float::powi(-Float::tanh(r), k as i32) * Float::sqrt(factorial(2 * k))
        / (Float::powi(2.0, k as i32) * factorial(k) * Float::sqrt(Float::cosh(r)))
}

pub fn truncated_fock_gbs(c: &ComplexUnitary, r: f64, cutoff: usize) -> Result<TruncatedGbs> {
    let m = c.dim();
    if m > MAX_FOCK_GBS_MODES || cutoff > MAX_FOCK_GBS_CUTOFF {
        return Err(Error::StateSpaceTooLarge {
            size: (m.max(cutoff)) as u128,
            limit: MAX_FOCK_GBS_MODES.min(MAX_FOCK_GBS_CUTOFF) as u128,
        });
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidArgument(alloc::format!("squeezing must be non-negative, got {r}")));
    }
    let kmax = cutoff / 2;
    let mut total = CreationPoly::new();
    total.insert(0, Complex64::new(1.0, 0.0));
    for i in 0..m {
        let form = column_form(c.matrix(), i);
        // Σ_k c_k/√((2k)!) (a_i†)^{2k} with a_i† replaced by its image.
        let mut factor = CreationPoly::new();
        let mut power = CreationPoly::new();
        power.insert(0, Complex64::new(1.0, 0.0));
        for k in 0..=kmax {
            if k > 0 {
                power = mul_linear(&mul_linear(&power, &form, cutoff), &form, cutoff);
            }
            let w = smsv_coefficient(r, k) / Float::sqrt(factorial(2 * k));
            for (&key, &v) in &power {
                *factor.entry(key).or_default() += v * w;
            }
        }
        total = poly_product(&total, &factor, m, cutoff);
    }
    let state = poly_to_state(&total, m)?;
    let probabilities = state
        .amplitudes()
        .iter()
        .map(|(&k, a)| (OutcomeConfig::new(unpack(k, m)), a.norm_sqr()))
        .collect();
    // Total input photon number distribution, by convolving the modes.
    let mut totals = alloc::vec![0.0; cutoff + 1];
    totals[0] = 1.0;
    for _ in 0..m {
        let mut next = alloc::vec![0.0; cutoff + 1];
        for (n, &w) in totals.iter().enumerate() {
            for k in (0..=kmax).take_while(|k| n + 2 * k <= cutoff) {
                next[n + 2 * k] += w * Float::powi(smsv_coefficient(r, k), 2);
            }
        }
        totals = next;
    }
    Ok(TruncatedGbs {
        probabilities,
        cutoff,
        truncation_error: 1.0 - totals.iter().sum::<f64>(),
    })
}

/// [`truncated_fock_gbs`] that fails when the truncation error exceeds `tol`.
pub fn truncated_fock_gbs_within(c: &ComplexUnitary, r: f64, cutoff: usize, tol: f64) -> Result<TruncatedGbs> {
    let out = truncated_fock_gbs(c, r, cutoff)?;
    if out.truncation_error > tol {
        return Err(Error::InvalidArgument(alloc::format!(
            "truncation error {:e} exceeds the budget {tol:e}",
            out.truncation_error
        )));
    }
    Ok(out)
}
