//! The Cayley path `H(θ)` from a gate `H` (θ = 0) to the identity (θ = 1), the
//! denominator polynomial `Q(θ)`, perturbed circuit families, and the
//! worst-to-average interpolation pipeline.
//!
//! `H(θ) = ((2−θ)H + θI)(θH + (2−θ)I)^{−1}`. On an eigenvalue `λ = e^{iφ}` this
//! is the Möbius map `λ ↦ ((2−θ)λ + θ)/(θλ + 2 − θ)`, whose denominator is
//! `2 q_φ(θ)` with `q_φ(θ) = 1 + iθ e^{iφ/2} sin(φ/2) = (1 − θ/2) + (θ/2) e^{iφ}`.
//! Hence `|q_φ(θ)|² = 1 − θ(2−θ) sin²(φ/2)` lies in `[(1−θ)², 1]`.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Float, One, Zero};
use rand::Rng;

use crate::architecture::{build_kaleidoscope, circuit_unitary, log2_modes, ArchLabel, Circuit};
use crate::error::{Error, Result};
use crate::exact::{self, crat_real, norm_sqr, Rat, RatGate, RatMatrix};
use crate::interp;
use crate::linalg::{haar_gate, ComplexUnitary, Eigen2, Gate2};
use crate::probability::{output_probability, output_probability_matrix, OutcomeConfig};
use crate::routing::{route_permutation, Permutation};
use crate::sampling::sample_collision_free_outcome;

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(alloc::format!("θ = {theta} outside [0, 1]")));
    }
    Ok(())
}

/// The Möbius image of the eigenvalue `e^{iφ}`, written as `w̄/w` with
/// `w = cos(φ/2) − i(1−θ) sin(φ/2)` so that it has unit modulus exactly.
pub fn mobius_phase(phi: f64, theta: f64) -> Result<Complex64> {
    let half = phi / 2.0;
    let w = Complex64::new(Float::cos(half), -(1.0 - theta) * Float::sin(half));
    if (theta == 1.0 && Float::abs(phi) == core::f64::consts::PI) || w.norm() == 0.0 {
        return Err(Error::InvalidArgument(
            "eigenphase exactly π at θ = 1: the Cayley path is undefined there".into(),
        ));
    }
    Ok(w.conj() / w)
}

/// Eigenform `L diag(μ_j(θ)) L†`.
pub fn cayley_from_eigen(e: &Eigen2, theta: f64) -> Result<Gate2> {
    check_theta(theta)?;
    let mu0 = mobius_phase(e.phases[0], theta)?;
    let mu1 = mobius_phase(e.phases[1], theta)?;
    let zero = Complex64::new(0.0, 0.0);
    Ok(e.basis * Gate2::new(mu0, zero, zero, mu1) * e.basis.adjoint())
}

/// `H(θ)` by the eigenform, which stays well conditioned near eigenphase π.
pub fn cayley_transform(h: &Gate2, theta: f64) -> Result<Gate2> {
    cayley_from_eigen(&h.eigen()?, theta)
}

/// Matrix-level entry point for a 2×2 unitary.
pub fn cayley_transform_unitary(h: &ComplexUnitary, theta: f64) -> Result<ComplexUnitary> {
    if h.dim() != 2 {
        return Err(Error::Dimension(h.dim()));
    }
    let g = Gate2::from_matrix(h.matrix())?;
    Ok(ComplexUnitary::from(cayley_transform(&g, theta)?))
}

/// `((2−θ)H + θI)(θH + (2−θ)I)^{−1}` evaluated literally.
pub fn cayley_direct(h: &Gate2, theta: f64) -> Result<Gate2> {
    check_theta(theta)?;
    let [a, b, c, d] = h.0;
    let num = Gate2::new(a * (2.0 - theta) + theta, b * (2.0 - theta), c * (2.0 - theta), d * (2.0 - theta) + theta);
    let [p, q, r, s] = [a * theta + (2.0 - theta), b * theta, c * theta, d * theta + (2.0 - theta)];
    let det = p * s - q * r;
    if det.norm() < 1e-300 {
        return Err(Error::InvalidArgument("singular resolvent in the direct Cayley form".into()));
    }
    let inv = Gate2::new(s / det, -q / det, -r / det, p / det);
    Ok(num * inv)
}

/// `q(θ) = Π_j (1 + iθ e^{iφ_j/2} sin(φ_j/2))`.
pub fn q_factor(e: &Eigen2, theta: f64) -> Complex64 {
    e.phases
        .iter()
        .map(|&phi| {
            let half = phi / 2.0;
            Complex64::new(0.0, theta) * Complex64::from_polar(1.0, half) * Float::sin(half) + 1.0
        })
        .product()
}

/// `|q_φ(θ)|²` for a single phase in closed form.
pub fn q_phase_abs_sqr(phi: f64, theta: f64) -> f64 {
    let s = Float::sin(phi / 2.0);
    1.0 - theta * (2.0 - theta) * s * s
}

/// A sampled gate `H`, its eigendecomposition, and the gate `G` it perturbs.
#[derive(Debug, Clone, PartialEq)]
pub struct CayleyGate {
    base: Gate2,
    eigen: Eigen2,
    target: Gate2,
}

impl CayleyGate {
    pub fn new(base: Gate2, target: Gate2) -> Result<Self> {
        Ok(Self {
            base,
            eigen: base.eigen()?,
            target,
        })
    }

    pub fn base(&self) -> &Gate2 {
        &self.base
    }

    pub fn eigen(&self) -> &Eigen2 {
        &self.eigen
    }

    pub fn target(&self) -> &Gate2 {
        &self.target
    }

    /// `H(θ) G`.
    pub fn at(&self, theta: f64) -> Result<Gate2> {
        Ok(cayley_from_eigen(&self.eigen, theta)? * self.target)
    }

    pub fn q(&self, theta: f64) -> Complex64 {
        q_factor(&self.eigen, theta)
    }
}

/// Replace every gate `G_i` of `worst` by `H_i(θ) G_i`.
pub fn perturb_circuit(worst: &Circuit, haar: &[Gate2], theta: f64) -> Result<Circuit> {
    let eig = eigens(worst, haar)?;
    perturb_with_eigen(worst, &eig, theta)
}

fn eigens(worst: &Circuit, haar: &[Gate2]) -> Result<Vec<Eigen2>> {
    if haar.len() != worst.gates().len() {
        return Err(Error::GateCountMismatch {
            expected: worst.gates().len(),
            found: haar.len(),
        });
    }
    haar.iter().map(Gate2::eigen).collect()
}

fn perturb_with_eigen(worst: &Circuit, eig: &[Eigen2], theta: f64) -> Result<Circuit> {
    let gates = worst
        .gates()
        .iter()
        .zip(eig)
        .map(|(g, e)| Ok(cayley_from_eigen(e, theta)? * *g))
        .collect::<Result<Vec<_>>>()?;
    Ok(worst.with_gates(gates))
}

/// `Q(θ) = [Π_i |q_i(θ)|²]^N`.
pub fn big_q(haar: &[Gate2], theta: f64, photons: usize) -> Result<f64> {
    check_theta(theta)?;
    let eig = haar.iter().map(Gate2::eigen).collect::<Result<Vec<_>>>()?;
    Ok(big_q_from_eigen(&eig, theta, photons))
}

pub fn big_q_from_eigen(eig: &[Eigen2], theta: f64, photons: usize) -> f64 {
    let per_layer: f64 = eig.iter().map(|e| q_factor(e, theta).norm_sqr()).product();
    Float::powi(per_layer, photons as i32)
}

/// `(1 + θ²)^{2mN}`.
pub fn q_upper_bound(theta: f64, gates: usize, photons: usize) -> f64 {
    Float::powf(1.0 + theta * theta, (2 * gates * photons) as f64)
}

/// `(1 − θ)^{4mN}`, the sharp lower bound from `|q_φ|² ≥ (1−θ)²`.
pub fn q_lower_bound(theta: f64, gates: usize, photons: usize) -> f64 {
    Float::powf(1.0 - theta, (4 * gates * photons) as f64)
}

/// `cos²((π−ζ)/2)^{2mN}`: the floor of `Q(1)` when every eigenphase lies in
/// `[−π+ζ, π−ζ]`.
pub fn q1_lower_bound(zeta: f64, gates: usize, photons: usize) -> Result<f64> {
    if !(zeta > 0.0 && zeta <= core::f64::consts::PI) {
        return Err(Error::InvalidArgument(alloc::format!("ζ = {zeta} outside (0, π]")));
    }
    let c = Float::cos((core::f64::consts::PI - zeta) / 2.0);
    Ok(Float::powf(c * c, (2 * gates * photons) as f64))
}

/// Haar gate conditioned on both eigenphases lying in `[−π+ζ, π−ζ]`.
pub fn sample_truncated_gate<R: Rng + ?Sized>(zeta: f64, rng: &mut R) -> Result<Gate2> {
    if !(zeta > 0.0 && zeta < core::f64::consts::PI) {
        return Err(Error::InvalidArgument(alloc::format!("ζ = {zeta} outside (0, π)")));
    }
    let limit = core::f64::consts::PI - zeta;
    loop {
        let g = haar_gate(rng);
        let e = g.eigen()?;
        if e.phases.iter().all(|p| p.abs() <= limit) {
            return Ok(g);
        }
    }
}

/// `c_Q = Π_k p_k^{Γ_k}` with its base-2 logarithm, which survives when the
/// value itself underflows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PostselectionConstant {
    pub value: f64,
    pub log2: f64,
}

/// `factors` holds `(Γ_k, p_k)` pairs.
pub fn postselection_constant(factors: &[(u64, f64)]) -> Result<PostselectionConstant> {
    let mut log2 = 0.0;
    for &(count, p) in factors {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(alloc::format!("success probability {p} outside (0, 1]")));
        }
        log2 += count as f64 * Float::log2(p);
    }
    Ok(PostselectionConstant {
        value: Float::exp2(log2),
        log2,
    })
}

/// Per-channel loss rates: two channels per gate, in circuit order, one for
/// each mode the gate touches (lower mode first).
#[derive(Debug, Clone, PartialEq)]
pub struct LossModel {
    rates: Vec<f64>,
}

impl LossModel {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidArgument(alloc::format!("loss rate {bad} outside [0, 1]")));
        }
        Ok(Self { rates })
    }

    pub fn uniform(channels: usize, rho: f64) -> Result<Self> {
        Self::new(vec![rho; channels])
    }

    /// Uniform rate on every channel of `c`.
    pub fn for_circuit(c: &Circuit, rho: f64) -> Result<Self> {
        Self::uniform(2 * c.gates().len(), rho)
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn channels(&self) -> usize {
        self.rates.len()
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().cloned().fold(0.0, f64::max)
    }

    /// `Π (1 − ρ_i)`.
    pub fn no_loss_probability(&self) -> f64 {
        self.rates.iter().map(|r| 1.0 - r).product()
    }
}

/// The function family `θ ↦ p_s(V(θ) P₁; t)` with `V(θ)` the perturbed
/// version of `worst` under the sampled gates `haar`.
#[derive(Debug, Clone)]
pub struct PerturbedFamily {
    worst: Circuit,
    haar: Vec<Gate2>,
    eigen: Vec<Eigen2>,
    p1: Permutation,
    s: OutcomeConfig,
    t: OutcomeConfig,
}

impl PerturbedFamily {
    pub fn new(worst: Circuit, haar: Vec<Gate2>, p1: Permutation, s: OutcomeConfig, t: OutcomeConfig) -> Result<Self> {
        let eigen = eigens(&worst, &haar)?;
        let m = worst.modes();
        for len in [p1.len(), s.modes(), t.modes()] {
            if len != m {
                return Err(Error::ModeCountMismatch {
                    expected: m,
                    found: len,
                });
            }
        }
        if s.total() != t.total() {
            return Err(Error::TotalMismatch {
                left: s.total(),
                right: t.total(),
            });
        }
        Ok(Self {
            worst,
            haar,
            eigen,
            p1,
            s,
            t,
        })
    }

    pub fn worst(&self) -> &Circuit {
        &self.worst
    }

    pub fn haar(&self) -> &[Gate2] {
        &self.haar
    }

    pub fn p1(&self) -> &Permutation {
        &self.p1
    }

    pub fn outcome(&self) -> &OutcomeConfig {
        &self.s
    }

    pub fn input(&self) -> &OutcomeConfig {
        &self.t
    }

    pub fn gates(&self) -> usize {
        self.haar.len()
    }

    pub fn photons(&self) -> usize {
        self.t.total()
    }

    /// `4 m N`.
    pub fn degree(&self) -> usize {
        4 * self.gates() * self.photons()
    }

    pub fn circuit_at(&self, theta: f64) -> Result<Circuit> {
        perturb_with_eigen(&self.worst, &self.eigen, theta)
    }

    /// `p_s(V(θ) P₁; t)`.
    pub fn probability(&self, theta: f64) -> Result<f64> {
        let v = circuit_unitary(&self.circuit_at(theta)?);
        let vp = v.matrix().select_columns(self.p1.image());
        output_probability_matrix(&vp, &self.s, &self.t)
    }

    pub fn big_q(&self, theta: f64) -> f64 {
        big_q_from_eigen(&self.eigen, theta, self.photons())
    }

    /// `F(θ) = p · Q`, a polynomial of degree at most `4mN`.
    pub fn f(&self, theta: f64) -> Result<f64> {
        Ok(self.probability(theta)? * self.big_q(theta))
    }

    pub fn exact(&self) -> Result<ExactFamily> {
        ExactFamily::new(self)
    }
}

/// The same family over exact rationals. With `D_i(θ) = det(θH_i + (2−θ)I)`,
/// `H_i(θ) = A_i(θ)/D_i(θ)` where `A_i = ((2−θ)H_i + θI) adj(θH_i + (2−θ)I)`,
/// Embedding each factor as `A_i G_i` on its two modes and `D_i` on the others
/// gives a product equal to `Π D_i · V(θ)`, so
/// `F = p · Π|D_i/4|^{2N} = |Per(Π Â_i)_{s,t}|² / (16^{mN} s! t!)` is a
/// polynomial in θ for any rational gate entries.
#[derive(Debug, Clone)]
pub struct ExactFamily {
    placements: Vec<(usize, usize)>,
    worst: Vec<RatGate>,
    haar: Vec<RatGate>,
    modes: usize,
    photons: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    norm: Rat,
}

impl ExactFamily {
    fn new(f: &PerturbedFamily) -> Result<Self> {
        let placements = f
            .worst
            .arch()
            .placements()
            .map(|p| (p.mode_a - 1, p.mode_b - 1))
            .collect();
        let worst = f.worst.gates().iter().map(RatGate::from_gate).collect::<Result<Vec<_>>>()?;
        let haar = f.haar.iter().map(RatGate::from_gate).collect::<Result<Vec<_>>>()?;
        let img = f.p1.image();
        let cols = f.t.photon_modes().into_iter().map(|i| img[i]).collect();
        let fact = |o: &OutcomeConfig| -> BigInt {
            o.occupation()
                .iter()
                .map(|&k| (1..=k as u64).map(BigInt::from).product::<BigInt>())
                .product()
        };
        let m = f.gates();
        let n = f.photons();
        let scale = (BigInt::one() << (4 * m * n)) * fact(&f.s) * fact(&f.t);
        Ok(Self {
            placements,
            worst,
            haar,
            modes: f.worst.modes(),
            photons: n,
            rows: f.s.photon_modes(),
            cols,
            norm: Rat::from_integer(scale),
        })
    }

    fn shifted(h: &RatGate, theta: &Rat) -> (RatGate, RatGate) {
        let two_minus = Rat::from_integer(BigInt::from(2)) - theta;
        let a = crat_real(two_minus.clone());
        let b = crat_real(theta.clone());
        let [h0, h1, h2, h3] = &h.0;
        // (2−θ)H + θI and θH + (2−θ)I.
        let num = RatGate([h0 * &a + &b, h1 * &a, h2 * &a, h3 * &a + &b]);
        let den = RatGate([h0 * &b + &a, h1 * &b, h2 * &b, h3 * &b + &a]);
        (num, den)
    }

    /// Exact `F(θ)`.
    pub fn f(&self, theta: &Rat) -> Result<Rat> {
        let mut u = RatMatrix::identity(self.modes);
        for ((&(a, b), g), h) in self.placements.iter().zip(&self.worst).zip(&self.haar) {
            let (num, den) = Self::shifted(h, theta);
            let d = den.det();
            let gate = num.mul(&den.adjugate()).mul(g);
            // D_i H_i(θ) G_i on the gate's modes and D_i on every other mode,
            // so the running product is exactly Π D_i times the circuit.
            u.scale_rows_except(a, b, &d);
            u.apply_rows(a, b, &gate);
        }
        let per = exact::permanent_exact(&u, &self.rows, &self.cols)?;
        Ok(norm_sqr(&per) / &self.norm)
    }

    /// Exact `Q(θ) = Π |D_i(θ)/4|^{2N}`.
    pub fn big_q(&self, theta: &Rat) -> Rat {
        let sixteen = Rat::from_integer(BigInt::from(16));
        let mut acc = Rat::one();
        for h in &self.haar {
            let (_, den) = Self::shifted(h, theta);
            acc *= norm_sqr(&den.det()) / &sixteen;
        }
        num_traits::pow(acc, self.photons)
    }

    /// Exact `p_s(V(θ)P₁; t) = F / Q`.
    pub fn probability(&self, theta: &Rat) -> Result<Rat> {
        let q = self.big_q(theta);
        if q.is_zero() {
            return Err(Error::InvalidArgument("Q vanishes at this θ".into()));
        }
        Ok(self.f(theta)? / q)
    }
}

/// Working precision of the extrapolation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    Double,
    Extended,
    /// Double when the conditioning allows it, otherwise extended.
    Auto,
}

impl core::str::FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "double" => Ok(Self::Double),
            "extended" => Ok(Self::Extended),
            "auto" => Ok(Self::Auto),
            other => Err(Error::InvalidArgument(alloc::format!("unknown precision {other:?}"))),
        }
    }
}

impl core::fmt::Display for Precision {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Self::Double => "double",
            Self::Extended => "extended",
            Self::Auto => "auto",
        })
    }
}

/// Significand bits of an `f64`.
pub const DOUBLE_BITS: u32 = 53;
/// Bits of accuracy the double path must keep after amplification.
pub const GUARD_BITS: u32 = 20;

/// Everything sampled for one run of the reduction pipeline.
#[derive(Debug, Clone)]
pub struct ReductionPlan {
    pub c0: Circuit,
    pub s0: OutcomeConfig,
    pub t: OutcomeConfig,
    pub p0: Permutation,
    pub p1: Permutation,
    pub family: PerturbedFamily,
    pub delta: f64,
}

impl ReductionPlan {
    /// Equally spaced nodes `θ_i = iΔ/d`, `i = 0..=d`.
    pub fn nodes(&self) -> Vec<f64> {
        interp::equispaced_nodes(0.0, self.delta, self.family.degree() + 1)
    }
}

/// Sample `C₀` on `(BB*)^{q₀}` and a uniform collision-free `s₀`, then plan.
pub fn plan_reduction<R: Rng + ?Sized>(
    modes: usize,
    photons: usize,
    q0: usize,
    delta: Option<f64>,
    rng: &mut R,
) -> Result<ReductionPlan> {
    let c0 = Circuit::random(build_kaleidoscope(modes, q0)?, rng);
    let s0 = sample_collision_free_outcome(modes, photons, rng)?;
    plan_reduction_for(c0, s0, delta, rng)
}

/// Plan for a given worst-case circuit on `(BB*)^{q₀}` and target outcome.
/// Photons enter in the first `N` modes.
pub fn plan_reduction_for<R: Rng + ?Sized>(
    c0: Circuit,
    s0: OutcomeConfig,
    delta: Option<f64>,
    rng: &mut R,
) -> Result<ReductionPlan> {
    let m = c0.modes();
    let log_m = log2_modes(m)?;
    if !c0.arch().depth().is_multiple_of(2 * log_m) {
        return Err(Error::InvalidArgument("worst-case circuit must live on (BB*)^q".into()));
    }
    let q0 = c0.arch().depth() / (2 * log_m);
    if s0.modes() != m {
        return Err(Error::ModeCountMismatch {
            expected: m,
            found: s0.modes(),
        });
    }
    let t = OutcomeConfig::first_modes(m, s0.total())?;
    let p0 = Permutation::random(m, rng);
    let p1 = Permutation::random(m, rng);
    let s = p0.apply_to_outcome(&s0)?;
    // Cp = P₀ C₀ P₁⁻¹, with P₁⁻¹ acting first.
    let cp = route_permutation(&p1.inverse())?
        .then(&c0, ArchLabel::Kaleidoscope(q0 + 1))?
        .then(&route_permutation(&p0)?, ArchLabel::Kaleidoscope(q0 + 2))?;
    let haar: Vec<Gate2> = (0..cp.gates().len()).map(|_| haar_gate(rng)).collect();
    let gates = haar.len();
    let delta = delta.unwrap_or(1.0 / (10.0 * gates as f64));
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(alloc::format!("Δ = {delta} outside (0, 1]")));
    }
    let family = PerturbedFamily::new(cp, haar, p1.clone(), s, t.clone())?;
    Ok(ReductionPlan {
        c0,
        s0,
        t,
        p0,
        p1,
        family,
        delta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    /// `F(1)/Q(1)` from the extrapolated polynomial.
    pub extrapolated: f64,
    /// `p_{s₀}(C₀)` computed directly.
    pub direct: f64,
    pub abs_error: f64,
    /// Lebesgue factor `Σ|ℓ_i(1)|` of the nodes.
    pub amplification: f64,
    pub amplification_log2: f64,
    /// `(1/Δ)^d`.
    pub nominal_amplification: f64,
    pub degree: usize,
    pub gates: usize,
    pub delta: f64,
    pub q_at_one: f64,
    pub precision: Precision,
}

fn log2_lebesgue(nodes: &[f64], x: f64) -> f64 {
    // Σ_i Π_{j≠i} |x − x_j| / |x_i − x_j| in log space.
    let logs: Vec<f64> = (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| Float::log2(Float::abs(x - xj)) - Float::log2(Float::abs(nodes[i] - xj)))
                .sum()
        })
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + Float::log2(logs.iter().map(|l| Float::exp2(l - max)).sum::<f64>())
}

/// Extrapolate `F` from `[0, Δ]` to θ = 1 and divide by `Q(1)`.
pub fn run_reduction(plan: &ReductionPlan, precision: Precision) -> Result<ReductionReport> {
    let fam = &plan.family;
    let d = fam.degree();
    let nodes = plan.nodes();
    let amp_log2 = log2_lebesgue(&nodes, 1.0);
    let direct = output_probability(&circuit_unitary(&plan.c0), &plan.s0, &plan.t)?;
    let q1 = fam.big_q(1.0);
    // Dividing by Q(1) amplifies by a further 1/Q(1).
    let lost_bits = amp_log2 + Float::max(-Float::log2(q1), 0.0);
    let required = Float::ceil(lost_bits) as i64 + GUARD_BITS as i64;
    let double_ok = required <= DOUBLE_BITS as i64;
    let used = match precision {
        Precision::Auto if double_ok => Precision::Double,
        Precision::Auto => Precision::Extended,
        p => p,
    };
    let extrapolated = match used {
        Precision::Double => {
            if !double_ok {
                return Err(Error::ConditioningOverflow {
                    amplification_bits: lost_bits,
                    required_bits: required.max(0) as u32,
                    available_bits: DOUBLE_BITS,
                });
            }
            let ys = nodes.iter().map(|&th| fam.f(th)).collect::<Result<Vec<_>>>()?;
            interp::lagrange_eval(&nodes, &ys, 1.0)? / q1
        }
        _ => {
            let ex = fam.exact()?;
            let delta = exact::rat_from_f64(plan.delta)?;
            let dd = Rat::from_integer(BigInt::from(d.max(1)));
            let xs: Vec<Rat> = (0..=d)
                .map(|i| &delta * Rat::from_integer(BigInt::from(i)) / &dd)
                .collect();
            let ys = xs.iter().map(|x| ex.f(x)).collect::<Result<Vec<_>>>()?;
            let one = Rat::one();
            let f1 = exact::lagrange_eval_exact(&xs, &ys, &one)?;
            exact::rat_to_f64(&(f1 / ex.big_q(&one)))
        }
    };
    Ok(ReductionReport {
        extrapolated,
        direct,
        abs_error: Float::abs(extrapolated - direct),
        amplification: Float::exp2(amp_log2),
        amplification_log2: amp_log2,
        nominal_amplification: Float::powf(1.0 / plan.delta, d as f64),
        degree: d,
        gates: fam.gates(),
        delta: plan.delta,
        q_at_one: q1,
        precision: used,
    })
}

/// Plan and run in one call.
pub fn reduction_demo<R: Rng + ?Sized>(
    modes: usize,
    photons: usize,
    q0: usize,
    delta: Option<f64>,
    precision: Precision,
    rng: &mut R,
) -> Result<ReductionReport> {
    let plan = plan_reduction(modes, photons, q0, delta, rng)?;
    run_reduction(&plan, precision)
}

/// Largest degree the floating-point degree check accepts.
pub const MAX_DOUBLE_DEGREE: usize = 80;

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeCheckReport {
    pub degree: usize,
    pub gates: usize,
    pub photons: usize,
    /// Max held-out error of the degree-d fit, relative to `max|F|`.
    pub residual: f64,
    /// The same for a degree-(d−1) fit.
    pub residual_lower: f64,
    pub max_abs: f64,
    pub held_out: usize,
}

/// Random instance for the degree check: `C_worst` and `H_i` local Haar on
/// `(BB*)^q`, uniform `P₁` and collision-free `s`, photons in the first modes.
pub fn degree_check_family<R: Rng + ?Sized>(modes: usize, photons: usize, q: usize, rng: &mut R) -> Result<PerturbedFamily> {
    let worst = Circuit::random(build_kaleidoscope(modes, q)?, rng);
    let haar: Vec<Gate2> = (0..worst.gates().len()).map(|_| haar_gate(rng)).collect();
    let p1 = Permutation::random(modes, rng);
    let s = sample_collision_free_outcome(modes, photons, rng)?;
    let t = OutcomeConfig::first_modes(modes, photons)?;
    PerturbedFamily::new(worst, haar, p1, s, t)
}

fn fit_residual(fam: &PerturbedFamily, degree: usize, held: &[(f64, f64)]) -> Result<f64> {
    let nodes = interp::chebyshev_nodes(0.0, 1.0, degree + 1);
    let ys = nodes.iter().map(|&x| fam.f(x)).collect::<Result<Vec<_>>>()?;
    let w = interp::barycentric_weights(&nodes)?;
    let mut worst = 0.0f64;
    for &(x, y) in held {
        let fit = interp::barycentric_eval(&nodes, &w, &ys, x)?;
        worst = worst.max(Float::abs(fit - y));
    }
    Ok(worst)
}

/// Fit `F(θ) = p·Q` on Chebyshev nodes of `[0, 1]` with degree `d = 4mN` and
/// with degree `d − 1`, scoring both on `2d` held-out points.
pub fn rational_degree_check(fam: &PerturbedFamily) -> Result<DegreeCheckReport> {
    let d = fam.degree();
    if d > MAX_DOUBLE_DEGREE {
        return Err(Error::DegreeTooLarge {
            degree: d,
            limit: MAX_DOUBLE_DEGREE,
        });
    }
    if d == 0 {
        return Err(Error::InvalidArgument("degree check needs photons and gates".into()));
    }
    let held: Vec<(f64, f64)> = (0..2 * d)
        .map(|k| {
            let x = (k as f64 + 0.5) / (2 * d) as f64;
            fam.f(x).map(|y| (x, y))
        })
        .collect::<Result<_>>()?;
    let max_abs = held.iter().map(|&(_, y)| Float::abs(y)).fold(0.0, f64::max);
    let scale = if max_abs > 0.0 { max_abs } else { 1.0 };
    Ok(DegreeCheckReport {
        degree: d,
        gates: fam.gates(),
        photons: fam.photons(),
        residual: fit_residual(fam, d, &held)? / scale,
        residual_lower: fit_residual(fam, d - 1, &held)? / scale,
        max_abs,
        held_out: held.len(),
    })
}

/// Exact statement of the degree: over `d + 2` rational nodes the divided
/// difference of order `d + 1` vanishes and the one of order `d` does not.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDegreeCertificate {
    pub degree: usize,
    pub excess_vanishes: bool,
    pub leading_nonzero: bool,
    /// `log₂ |leading coefficient|`.
    pub leading_log2: f64,
}

pub fn exact_degree_certificate(fam: &PerturbedFamily) -> Result<ExactDegreeCertificate> {
    let d = fam.degree();
    let ex = fam.exact()?;
    let den = Rat::from_integer(BigInt::from(d + 1));
    let xs: Vec<Rat> = (0..=d + 1).map(|k| Rat::from_integer(BigInt::from(k)) / &den).collect();
    let ys = xs.iter().map(|x| ex.f(x)).collect::<Result<Vec<_>>>()?;
    let c = exact::newton_coefficients(&xs, &ys)?;
    Ok(ExactDegreeCertificate {
        degree: d,
        excess_vanishes: c[d + 1].is_zero(),
        leading_nonzero: !c[d].is_zero(),
        leading_log2: exact::log2_abs(&c[d]),
    })
}
