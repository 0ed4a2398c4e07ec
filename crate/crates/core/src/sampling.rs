//! Exact Boson Sampling, the random circuit ensembles, the collision-ratio
//! experiment, birthday-paradox checks and the balls-into-bins model.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use num_complex::Complex64;
use num_traits::Float;
use rand::seq::index;
use rand::Rng;

use crate::architecture::{build_kaleidoscope, circuit_unitary, ArchLabel, Architecture, Circuit};
use crate::error::{Error, Result};
use crate::linalg::{haar_unitary_global, CMatrix, ComplexUnitary};
use crate::probability::{full_distribution, OutcomeConfig};
use crate::rng::RngHandle;
use crate::routing::{route_permutation, Permutation};

/// Largest photon number accepted by [`boson_sample`].
pub const MAX_SAMPLE_PHOTONS: usize = 16;
/// Largest mode count accepted by [`boson_sample`].
pub const MAX_SAMPLE_MODES: usize = 512;

/// The three random circuit ensembles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EnsembleKind {
    /// Independent Haar `U(2)` on every placement of `(BB*)^q`.
    Local,
    /// A global `M×M` Haar unitary.
    Haar,
    /// `Local` right-multiplied by a uniform routed permutation.
    LocalPerm,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 3] = [Self::Local, Self::Haar, Self::LocalPerm];

    pub fn id(&self) -> &'static str {
        match self {
            Self::Local => "local",
            Self::Haar => "haar",
            Self::LocalPerm => "localperm",
        }
    }

    /// Small integer mixed into per-task seeds.
    pub fn index(&self) -> u64 {
        match self {
            Self::Local => 0,
            Self::Haar => 1,
            Self::LocalPerm => 2,
        }
    }

    /// Whether the depth parameter `q` matters.
    pub fn uses_depth(&self) -> bool {
        !matches!(self, Self::Haar)
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for EnsembleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::InvalidArgument(alloc::format!("unknown ensemble {s:?}")))
    }
}

/// An ensemble with its sizes.
#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleSpec {
    LocalRandom(Architecture),
    LocalRandomTimesPermutation(Architecture),
    GlobalHaar(usize),
}

impl EnsembleSpec {
    /// `(BB*)^q` on `modes` modes for the local ensembles; `q` is ignored for Haar.
    pub fn new(kind: EnsembleKind, modes: usize, q: usize) -> Result<Self> {
        Ok(match kind {
            EnsembleKind::Local => Self::LocalRandom(build_kaleidoscope(modes, q)?),
            EnsembleKind::LocalPerm => Self::LocalRandomTimesPermutation(build_kaleidoscope(modes, q)?),
            EnsembleKind::Haar => {
                if modes == 0 {
                    return Err(Error::Dimension(0));
                }
                Self::GlobalHaar(modes)
            }
        })
    }

    pub fn kind(&self) -> EnsembleKind {
        match self {
            Self::LocalRandom(_) => EnsembleKind::Local,
            Self::LocalRandomTimesPermutation(_) => EnsembleKind::LocalPerm,
            Self::GlobalHaar(_) => EnsembleKind::Haar,
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            Self::LocalRandom(a) | Self::LocalRandomTimesPermutation(a) => a.modes(),
            Self::GlobalHaar(m) => *m,
        }
    }
}

/// A draw from an ensemble.
#[derive(Debug, Clone)]
pub enum SampledCircuit {
    Local(Circuit),
    /// The local factor, the uniform permutation `P`, and the composed circuit
    /// `C · P` with the routed `P` acting first.
    LocalPerm {
        local: Circuit,
        permutation: Permutation,
        composed: Circuit,
    },
    Haar(ComplexUnitary),
}

impl SampledCircuit {
    pub fn unitary(&self) -> ComplexUnitary {
        match self {
            Self::Local(c) => circuit_unitary(c),
            Self::LocalPerm { composed, .. } => circuit_unitary(composed),
            Self::Haar(u) => u.clone(),
        }
    }
}

pub fn sample_circuit<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Result<SampledCircuit> {
    Ok(match spec {
        EnsembleSpec::LocalRandom(a) => SampledCircuit::Local(Circuit::random(a.clone(), rng)),
        EnsembleSpec::LocalRandomTimesPermutation(a) => {
            let local = Circuit::random(a.clone(), rng);
            let permutation = Permutation::random(a.modes(), rng);
            let label = match a.label() {
                ArchLabel::Kaleidoscope(q) => ArchLabel::Kaleidoscope(q + 1),
                other => other,
            };
            let composed = route_permutation(&permutation)?.then(&local, label)?;
            SampledCircuit::LocalPerm {
                local,
                permutation,
                composed,
            }
        }
        EnsembleSpec::GlobalHaar(m) => SampledCircuit::Haar(haar_unitary_global(*m, rng)?),
    })
}

/// Uniform collision-free outcome: a uniform `N`-subset of the modes.
pub fn sample_collision_free_outcome<R: Rng + ?Sized>(modes: usize, photons: usize, rng: &mut R) -> Result<OutcomeConfig> {
    if photons > modes {
        return Err(Error::InvalidArgument(alloc::format!(
            "{photons} photons do not fit collision-free in {modes} modes"
        )));
    }
    let picked = index::sample(rng, modes, photons).into_vec();
    OutcomeConfig::from_modes(modes, &picked)
}

/// Permanents of every `(k−1)×(k−1)` minor of the `(k−1)×k` matrix `a`
/// obtained by deleting one column, in a single Gray-code pass over column
/// subsets (Ryser's formula shared across the deletions).
fn column_deleted_permanents(a: &[Vec<Complex64>], k: usize) -> Vec<Complex64> {
    let rows = a.len();
    debug_assert_eq!(rows + 1, k);
    if rows == 0 {
        return vec![Complex64::new(1.0, 0.0)];
    }
    let mut minors = vec![Complex64::new(0.0, 0.0); k];
    let mut sums = vec![Complex64::new(0.0, 0.0); rows];
    let mut subset: u32 = 0;
    // Subset S contributes (−1)^{|S|} Π_r Σ_{c∈S} a[r][c] to every minor whose
    // deleted column lies outside S. The empty set contributes zero when
    // rows > 0.
    for g in 1u32..(1u32 << k) {
        let bit = g.trailing_zeros() as usize;
        subset ^= 1 << bit;
        let adding = subset & (1 << bit) != 0;
        for (s, row) in sums.iter_mut().zip(a) {
            if adding {
                *s += row[bit];
            } else {
                *s -= row[bit];
            }
        }
        let size = subset.count_ones() as usize;
        if size > rows {
            continue;
        }
        let prod: Complex64 = sums.iter().product();
        let term = if size.is_multiple_of(2) { prod } else { -prod };
        for (j, m) in minors.iter_mut().enumerate() {
            if subset & (1 << j) == 0 {
                *m += term;
            }
        }
    }
    let sign = if rows.is_multiple_of(2) { 1.0 } else { -1.0 };
    minors.iter().map(|m| m * sign).collect()
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding left a sliver: the last positive weight takes it.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// One exact sample of the output pattern of `c` fed with the collision-free
/// input `t`, by the Clifford–Clifford chain rule: photons are revealed one
/// at a time after a uniform shuffle of the input columns.
pub fn boson_sample<R: Rng + ?Sized>(c: &ComplexUnitary, t: &OutcomeConfig, rng: &mut R) -> Result<OutcomeConfig> {
    let m = c.dim();
    if t.modes() != m {
        return Err(Error::ModeCountMismatch {
            expected: m,
            found: t.modes(),
        });
    }
    if !t.is_collision_free() {
        return Err(Error::CollisionOutcome);
    }
    let n = t.total();
    if n > MAX_SAMPLE_PHOTONS {
        return Err(Error::DegreeTooLarge {
            degree: n,
            limit: MAX_SAMPLE_PHOTONS,
        });
    }
    if m > MAX_SAMPLE_MODES {
        return Err(Error::Dimension(m));
    }
    let mut cols = t.photon_modes();
    for i in (1..cols.len()).rev() {
        let j = rng.random_range(0..=i);
        cols.swap(i, j);
    }
    let a = c.matrix();
    let mut picked: Vec<usize> = Vec::with_capacity(n);
    let mut weights = vec![0.0; m];
    for k in 1..=n {
        let sub: Vec<Vec<Complex64>> = picked
            .iter()
            .map(|&r| cols[..k].iter().map(|&col| a[(r, col)]).collect())
            .collect();
        let minors = column_deleted_permanents(&sub, k);
        for (i, w) in weights.iter_mut().enumerate() {
            let amp: Complex64 = cols[..k].iter().zip(&minors).map(|(&col, mi)| a[(i, col)] * mi).sum();
            *w = amp.norm_sqr();
        }
        picked.push(sample_index(&weights, rng));
    }
    OutcomeConfig::from_modes(m, &picked)
}

/// Oracle sampler: enumerate the distribution and invert its CDF.
pub fn brute_force_sample<R: Rng + ?Sized>(c: &ComplexUnitary, t: &OutcomeConfig, rng: &mut R) -> Result<OutcomeConfig> {
    let dist = full_distribution(c, t)?;
    let weights: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
    Ok(dist[sample_index(&weights, rng)].0.clone())
}

/// Settings of the collision-ratio experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub modes: usize,
    pub photons: Vec<usize>,
    pub reps: Vec<usize>,
    pub circuits: usize,
    pub samples: usize,
    pub ensembles: Vec<EnsembleKind>,
    pub seed: u64,
}

impl ExperimentConfig {
    /// The scaled-down replica: `M = 64`, `N ∈ {4,6,8}`, `q ∈ {1,2,3}`,
    /// 100 circuits × 200 samples.
    pub fn desk(seed: u64) -> Self {
        Self {
            modes: 64,
            photons: vec![4, 6, 8],
            reps: vec![1, 2, 3],
            circuits: 100,
            samples: 200,
            ensembles: vec![EnsembleKind::Local, EnsembleKind::Haar],
            seed,
        }
    }

    /// The full-size configuration: `M = 256`, `N ∈ {4,8,12,16}`, 500 × 500.
    pub fn full_scale(seed: u64) -> Self {
        Self {
            modes: 256,
            photons: vec![4, 8, 12, 16],
            reps: vec![1, 2, 3],
            circuits: 500,
            samples: 500,
            ensembles: vec![EnsembleKind::Local, EnsembleKind::Haar],
            seed,
        }
    }

    /// One task per (ensemble, N, q, circuit); the Haar ensemble runs once
    /// per N with `q = 0`. Sorted by (ensemble, N, q, circuit).
    pub fn tasks(&self) -> Vec<ExperimentTask> {
        let mut out = Vec::new();
        for &ensemble in &self.ensembles {
            for &photons in &self.photons {
                let reps: Vec<usize> = if ensemble.uses_depth() { self.reps.clone() } else { vec![0] };
                for q in reps {
                    for circuit in 0..self.circuits {
                        out.push(ExperimentTask {
                            ensemble,
                            modes: self.modes,
                            photons,
                            q,
                            circuit,
                            samples: self.samples,
                            seed: task_seed(self.seed, ensemble, photons, q, circuit),
                        });
                    }
                }
            }
        }
        out.sort_by_key(|t| (t.ensemble, t.photons, t.q, t.circuit));
        out
    }
}

/// `seed ⊕ (ensemble ≪ 48 | N ≪ 32 | q ≪ 24 | circuit)`.
pub fn task_seed(seed: u64, ensemble: EnsembleKind, photons: usize, q: usize, circuit: usize) -> u64 {
    seed ^ ((ensemble.index() << 48) | ((photons as u64) << 32) | ((q as u64) << 24) | circuit as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentTask {
    pub ensemble: EnsembleKind,
    pub modes: usize,
    pub photons: usize,
    pub q: usize,
    pub circuit: usize,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub ensemble: EnsembleKind,
    pub modes: usize,
    pub photons: usize,
    pub q: usize,
    pub circuit: usize,
    pub seed: u64,
    pub cf_count: usize,
    pub samples: usize,
    pub ratio: f64,
    /// Filled in by timed runners; zero otherwise.
    pub wall_time_s: f64,
}

impl ExperimentTask {
    /// Draw one circuit and `samples` outcomes with photons in the first `N`
    /// modes, counting the collision-free ones.
    pub fn run(&self) -> Result<ExperimentRecord> {
        let mut rng = RngHandle::new(self.seed);
        let spec = EnsembleSpec::new(self.ensemble, self.modes, self.q.max(1))?;
        let u = sample_circuit(&spec, &mut rng)?.unitary();
        let t = OutcomeConfig::first_modes(self.modes, self.photons)?;
        let mut cf_count = 0;
        for _ in 0..self.samples {
            if boson_sample(&u, &t, &mut rng)?.is_collision_free() {
                cf_count += 1;
            }
        }
        Ok(ExperimentRecord {
            ensemble: self.ensemble,
            modes: self.modes,
            photons: self.photons,
            q: self.q,
            circuit: self.circuit,
            seed: self.seed,
            cf_count,
            samples: self.samples,
            ratio: if self.samples == 0 { 1.0 } else { cf_count as f64 / self.samples as f64 },
            wall_time_s: 0.0,
        })
    }
}

/// Sequential run of every task.
pub fn collision_ratio_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    config.tasks().iter().map(ExperimentTask::run).collect()
}

/// Per-(ensemble, N, q) aggregate over circuits.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSummary {
    pub ensemble: EnsembleKind,
    pub modes: usize,
    pub photons: usize,
    pub q: usize,
    pub circuits: usize,
    pub mean: f64,
    /// Sample standard deviation across circuits.
    pub std_dev: f64,
    /// `std_dev / √circuits`.
    pub std_err: f64,
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, Float::sqrt(var))
}

pub fn summarize(records: &[ExperimentRecord]) -> Vec<RatioSummary> {
    let mut keys: Vec<(EnsembleKind, usize, usize, usize)> =
        records.iter().map(|r| (r.ensemble, r.modes, r.photons, r.q)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(ensemble, modes, photons, q)| {
            let ratios: Vec<f64> = records
                .iter()
                .filter(|r| r.ensemble == ensemble && r.modes == modes && r.photons == photons && r.q == q)
                .map(|r| r.ratio)
                .collect();
            let (mean, std_dev) = mean_std(&ratios);
            RatioSummary {
                ensemble,
                modes,
                photons,
                q,
                circuits: ratios.len(),
                mean,
                std_dev,
                std_err: std_dev / Float::sqrt(ratios.len() as f64),
            }
        })
        .collect()
}

/// Local-versus-Haar comparison at one `(q, N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioComparison {
    pub photons: usize,
    pub q: usize,
    pub local_mean: f64,
    pub haar_mean: f64,
    pub difference: f64,
    /// `√(se_local² + se_haar²)`.
    pub combined_std_err: f64,
    /// `|difference| < 3 · combined_std_err`.
    pub consistent: bool,
}

pub fn compare_local_to_haar(summaries: &[RatioSummary]) -> Vec<RatioComparison> {
    summaries
        .iter()
        .filter(|s| s.ensemble == EnsembleKind::Local)
        .filter_map(|l| {
            let h = summaries
                .iter()
                .find(|h| h.ensemble == EnsembleKind::Haar && h.photons == l.photons && h.modes == l.modes)?;
            let se = Float::sqrt(l.std_err * l.std_err + h.std_err * h.std_err);
            let difference = l.mean - h.mean;
            Some(RatioComparison {
                photons: l.photons,
                q: l.q,
                local_mean: l.mean,
                haar_mean: h.mean,
                difference,
                combined_std_err: se,
                consistent: Float::abs(difference) < 3.0 * se || difference == 0.0,
            })
        })
        .collect()
}

/// Monte Carlo estimate of the collision probability over `H_A · P`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirthdayReport {
    pub modes: usize,
    pub photons: usize,
    pub empirical: f64,
    /// Standard error across circuits.
    pub sigma: f64,
    /// `2N²/M`.
    pub bound: f64,
    pub within_bound: bool,
}

pub fn birthday_bound(modes: usize, photons: usize) -> f64 {
    2.0 * (photons * photons) as f64 / modes as f64
}

/// `circuits` draws from `H_A · P` with `A = (BB*)^q`, `samples` outcomes each.
pub fn birthday_bound_check<R: Rng + ?Sized>(
    modes: usize,
    photons: usize,
    q: usize,
    circuits: usize,
    samples: usize,
    rng: &mut R,
) -> Result<BirthdayReport> {
    if modes < 2 * photons * photons {
        return Err(Error::Hypothesis(alloc::format!(
            "M = {modes} is below 2N² = {}",
            2 * photons * photons
        )));
    }
    if circuits == 0 || samples == 0 {
        return Err(Error::InvalidArgument("need at least one circuit and one sample".into()));
    }
    let spec = EnsembleSpec::new(EnsembleKind::LocalPerm, modes, q)?;
    let t = OutcomeConfig::first_modes(modes, photons)?;
    let mut rates = Vec::with_capacity(circuits);
    for _ in 0..circuits {
        let u = sample_circuit(&spec, rng)?.unitary();
        let mut hits = 0usize;
        for _ in 0..samples {
            if !boson_sample(&u, &t, rng)?.is_collision_free() {
                hits += 1;
            }
        }
        rates.push(hits as f64 / samples as f64);
    }
    let (empirical, sd) = mean_std(&rates);
    let sigma = sd / Float::sqrt(circuits as f64);
    let bound = birthday_bound(modes, photons);
    Ok(BirthdayReport {
        modes,
        photons,
        empirical,
        sigma,
        bound,
        within_bound: empirical <= bound + 3.0 * sigma,
    })
}

/// `1 − binom(M,N)/binom(M+N−1,N) < N²/M`, decided in exact integers via
/// `binom(M,N)/binom(M+N−1,N) = Π_{k<N} (M−k)/(M+k)`.
pub fn collision_fraction_below_bound(modes: usize, photons: usize) -> bool {
    let (m, n) = (modes as u128, photons as u128);
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for k in 0..n {
        num *= m.saturating_sub(k);
        den *= m + k;
    }
    // M·(den − num) < N²·den
    m * (den - num) < n * n * den
}

/// Every `(M, N)` with `N ≤ max_photons`, `2N² ≤ M ≤ max_modes` that violates
/// the combinatorial bound, plus the number of pairs checked.
pub fn combinatorial_check(max_photons: usize, max_modes: usize) -> (usize, Vec<(usize, usize)>) {
    let mut checked = 0;
    let mut failures = Vec::new();
    for n in 1..=max_photons {
        for m in (2 * n * n).max(1)..=max_modes {
            checked += 1;
            if !collision_fraction_below_bound(m, n) {
                failures.push((m, n));
            }
        }
    }
    (checked, failures)
}

/// Balls-into-bins singleton statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct BallsBinsReport {
    pub modes: usize,
    pub balls: usize,
    pub trials: usize,
    pub mean: f64,
    /// Standard error of the mean.
    pub sigma: f64,
    /// `N e^{−N/M}`.
    pub poisson_mean: f64,
    /// `N (1 − 1/M)^{N−1}`.
    pub exact_mean: f64,
    /// Threshold `c` for the tail estimate.
    pub threshold: f64,
    /// Empirical `Pr[Z ≤ c]`.
    pub tail: f64,
    /// `exp(−½(1 − c/E)² E)` with `E = N e^{−N/M}`; 1 when `c ≥ E`.
    pub chernoff: f64,
    /// `|mean − poisson_mean| ≤ 3σ + N/M`.
    pub within_tolerance: bool,
}

/// Lower-tail Chernoff bound for a sum with mean `e` at threshold `c`.
pub fn chernoff_lower_tail(e: f64, c: f64) -> f64 {
    if c >= e {
        return 1.0;
    }
    let delta = 1.0 - c / e;
    Float::exp(-0.5 * delta * delta * e)
}

/// Throw `N` balls into `M` bins `trials` times and count bins with exactly one ball.
pub fn balls_bins_singletons<R: Rng + ?Sized>(
    modes: usize,
    balls: usize,
    trials: usize,
    threshold: f64,
    rng: &mut R,
) -> Result<BallsBinsReport> {
    if trials < 1000 {
        return Err(Error::InvalidArgument(alloc::format!("{trials} trials; at least 1000 required")));
    }
    if modes == 0 {
        return Err(Error::Dimension(0));
    }
    let mut counts = vec![0u32; modes];
    let mut singles = Vec::with_capacity(trials);
    for _ in 0..trials {
        counts.iter_mut().for_each(|c| *c = 0);
        for _ in 0..balls {
            counts[rng.random_range(0..modes)] += 1;
        }
        singles.push(counts.iter().filter(|&&c| c == 1).count() as f64);
    }
    let (mean, sd) = mean_std(&singles);
    let sigma = sd / Float::sqrt(trials as f64);
    let n = balls as f64;
    let m = modes as f64;
    let poisson_mean = n * Float::exp(-n / m);
    let exact_mean = n * Float::powf(1.0 - 1.0 / m, n - 1.0);
    let tail = singles.iter().filter(|&&z| z <= threshold).count() as f64 / trials as f64;
    Ok(BallsBinsReport {
        modes,
        balls,
        trials,
        mean,
        sigma,
        poisson_mean,
        exact_mean,
        threshold,
        tail,
        chernoff: chernoff_lower_tail(poisson_mean, threshold),
        within_tolerance: Float::abs(mean - poisson_mean) <= 3.0 * sigma + n / m,
    })
}

/// Parse a comma-separated ensemble list.
pub fn parse_ensembles(s: &str) -> Result<Vec<EnsembleKind>> {
    s.split(',').map(|x| x.trim().parse()).collect()
}

/// Comma-joined ensemble ids.
pub fn ensembles_to_string(kinds: &[EnsembleKind]) -> String {
    let ids: Vec<&str> = kinds.iter().map(EnsembleKind::id).collect();
    ids.join(",")
}

/// Dense copy of `c` used by tests and callers that want a plain matrix.
pub fn unitary_matrix(c: &SampledCircuit) -> CMatrix {
    c.unitary().into_matrix()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probability::{enumerate_outcomes, permanent};
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::BTreeMap;

    fn chi_square_p(counts: &[f64], probs: &[f64]) -> f64 {
        let n: f64 = counts.iter().sum();
        // Merge cells with expected count below 5 into one bin.
        let mut obs = Vec::new();
        let mut exp = Vec::new();
        let (mut ro, mut re) = (0.0, 0.0);
        for (&c, &p) in counts.iter().zip(probs) {
            if p * n >= 5.0 {
                obs.push(c);
                exp.push(p * n);
            } else {
                ro += c;
                re += p * n;
            }
        }
        if re > 0.0 {
            obs.push(ro);
            exp.push(re);
        }
        let chi: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e) * (o - e) / e).sum();
        let dof = (obs.len() - 1) as f64;
        1.0 - ChiSquared::new(dof).unwrap().cdf(chi)
    }

    #[test]
    fn ensemble_shapes() {
        let mut rng = RngHandle::new(60);
        let c = sample_circuit(&EnsembleSpec::new(EnsembleKind::Local, 4, 1).unwrap(), &mut rng).unwrap();
        match &c {
            SampledCircuit::Local(c) => assert_eq!(c.gates().len(), 8),
            _ => panic!(),
        }
        assert!(c.unitary().matrix().unitarity_deviation() < 1e-10);
        let h = sample_circuit(&EnsembleSpec::new(EnsembleKind::Haar, 4, 0).unwrap(), &mut rng).unwrap();
        assert!(h.unitary().matrix().unitarity_deviation() < 1e-10);
    }

    #[test]
    fn local_perm_composes_in_order() {
        let mut rng = RngHandle::new(61);
        let spec = EnsembleSpec::new(EnsembleKind::LocalPerm, 8, 1).unwrap();
        let SampledCircuit::LocalPerm { local, permutation, composed } = sample_circuit(&spec, &mut rng).unwrap() else {
            panic!()
        };
        let want = circuit_unitary(&local).matrix().matmul(permutation.matrix().matrix()).unwrap();
        assert!(circuit_unitary(&composed).matrix().max_abs_diff(&want).unwrap() < 1e-12);
    }

    #[test]
    fn local_perm_factor_is_uniform() {
        let mut rng = RngHandle::new(62);
        let spec = EnsembleSpec::new(EnsembleKind::LocalPerm, 4, 1).unwrap();
        let mut counts: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            if let SampledCircuit::LocalPerm { permutation, .. } = sample_circuit(&spec, &mut rng).unwrap() {
                *counts.entry(permutation.image().to_vec()).or_default() += 1.0;
            }
        }
        assert_eq!(counts.len(), 24);
        let c: Vec<f64> = counts.values().cloned().collect();
        assert!(chi_square_p(&c, &[1.0 / 24.0; 24]) > 0.01);
    }

    #[test]
    fn collision_free_outcomes_are_uniform() {
        let mut rng = RngHandle::new(63);
        assert_eq!(sample_collision_free_outcome(3, 3, &mut rng).unwrap().occupation(), [1, 1, 1]);
        assert!(sample_collision_free_outcome(2, 3, &mut rng).is_err());
        let mut counts: BTreeMap<OutcomeConfig, f64> = BTreeMap::new();
        let n = 100_000.0;
        for _ in 0..n as usize {
            let s = sample_collision_free_outcome(4, 2, &mut rng).unwrap();
            assert!(s.is_collision_free() && s.total() == 2);
            *counts.entry(s).or_default() += 1.0;
        }
        assert_eq!(counts.len(), 6);
        let sigma = (n * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for c in counts.values() {
            assert!((c - n / 6.0).abs() < 5.0 * sigma);
        }
    }

    #[test]
    fn deleted_column_permanents() {
        let mut rng = RngHandle::new(64);
        for k in 1..=6 {
            let a: Vec<Vec<Complex64>> = (0..k - 1)
                .map(|_| (0..k).map(|_| Complex64::new(rng.random(), rng.random::<f64>() - 0.5)).collect())
                .collect();
            let minors = column_deleted_permanents(&a, k);
            for j in 0..k {
                let sub = CMatrix::from_fn(k - 1, k - 1, |r, c| a[r][if c < j { c } else { c + 1 }]);
                let want = if k == 1 { Complex64::new(1.0, 0.0) } else { permanent(&sub).unwrap() };
                assert!((minors[j] - want).norm() < 1e-12, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn deterministic_cases() {
        let mut rng = RngHandle::new(65);
        let t = OutcomeConfig::new(vec![1, 1, 0, 0]);
        let id = ComplexUnitary::identity(4);
        for _ in 0..20 {
            assert_eq!(boson_sample(&id, &t, &mut rng).unwrap(), t);
        }
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let want = p.apply_to_outcome(&t).unwrap();
        for _ in 0..20 {
            assert_eq!(boson_sample(&p.matrix(), &t, &mut rng).unwrap(), want);
        }
        assert!(boson_sample(&id, &OutcomeConfig::new(vec![2, 0, 0, 0]), &mut rng).is_err());
    }

    fn sampler_matches(modes: usize, photons: usize, seed: u64, brute: bool) -> f64 {
        let mut rng = RngHandle::new(seed);
        let u = haar_unitary_global(modes, &mut rng).unwrap();
        let t = OutcomeConfig::first_modes(modes, photons).unwrap();
        let dist = full_distribution(&u, &t).unwrap();
        let pos: BTreeMap<OutcomeConfig, usize> = dist.iter().enumerate().map(|(i, (s, _))| (s.clone(), i)).collect();
        let mut counts = vec![0.0; dist.len()];
        for _ in 0..20_000 {
            let s = if brute {
                brute_force_sample(&u, &t, &mut rng).unwrap()
            } else {
                boson_sample(&u, &t, &mut rng).unwrap()
            };
            counts[pos[&s]] += 1.0;
        }
        let probs: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
        chi_square_p(&counts, &probs)
    }

    #[test]
    fn sampler_exactness_small() {
        assert!(sampler_matches(4, 2, 66, false) > 0.01);
        assert!(sampler_matches(5, 2, 67, false) > 0.01);
        assert!(sampler_matches(4, 3, 68, false) > 0.01);
        assert!(sampler_matches(4, 2, 69, true) > 0.01);
        assert_eq!(enumerate_outcomes(4, 2).len(), 10);
    }

    #[test]
    fn single_photon_never_collides() {
        let cfg = ExperimentConfig {
            modes: 8,
            photons: vec![1],
            reps: vec![1, 2],
            circuits: 3,
            samples: 20,
            ensembles: EnsembleKind::ALL.to_vec(),
            seed: 9,
        };
        let recs = collision_ratio_experiment(&cfg).unwrap();
        assert_eq!(recs.len(), 3 * (2 + 1 + 2));
        assert!(recs.iter().all(|r| r.ratio == 1.0 && r.cf_count == r.samples));
        assert_eq!(recs, collision_ratio_experiment(&cfg).unwrap());
    }

    #[test]
    fn summaries_and_comparison() {
        let rec = |ensemble, q, ratio| ExperimentRecord {
            ensemble,
            modes: 8,
            photons: 2,
            q,
            circuit: 0,
            seed: 0,
            cf_count: 0,
            samples: 10,
            ratio,
            wall_time_s: 0.0,
        };
        let recs = vec![
            rec(EnsembleKind::Local, 1, 0.8),
            rec(EnsembleKind::Local, 1, 0.6),
            rec(EnsembleKind::Haar, 0, 0.7),
            rec(EnsembleKind::Haar, 0, 0.7),
        ];
        let s = summarize(&recs);
        assert_eq!(s.len(), 2);
        assert!((s[0].mean - 0.7).abs() < 1e-15);
        assert!((s[0].std_dev - 0.02f64.sqrt()).abs() < 1e-15);
        let c = compare_local_to_haar(&s);
        assert_eq!(c.len(), 1);
        assert!(c[0].consistent);
    }

    #[test]
    fn birthday_examples() {
        assert_eq!(birthday_bound(32, 3), 0.5625);
        assert_eq!(birthday_bound(128, 2), 0.0625);
        let mut rng = RngHandle::new(70);
        assert!(matches!(birthday_bound_check(16, 3, 1, 2, 2, &mut rng), Err(Error::Hypothesis(_))));
        let r = birthday_bound_check(32, 3, 1, 20, 50, &mut rng).unwrap();
        assert!(r.within_bound);
    }

    #[test]
    fn combinatorial_bound_against_float() {
        let (checked, failures) = combinatorial_check(8, 256);
        assert!(checked > 0 && failures.is_empty());
        for (m, n) in [(8usize, 2usize), (50, 5), (256, 8)] {
            let ratio: f64 = (0..n).map(|k| (m - k) as f64 / (m + k) as f64).product();
            assert_eq!(1.0 - ratio < (n * n) as f64 / m as f64, collision_fraction_below_bound(m, n));
        }
    }

    #[test]
    fn balls_bins() {
        let mut rng = RngHandle::new(71);
        let r = balls_bins_singletons(256, 16, 10_000, 4.0, &mut rng).unwrap();
        assert!((r.poisson_mean - 15.03).abs() < 0.01);
        assert!(r.within_tolerance);
        let one = balls_bins_singletons(10, 1, 1000, 0.0, &mut rng).unwrap();
        assert_eq!(one.mean, 1.0);
        let r = balls_bins_singletons(32, 16, 10_000, 4.0, &mut rng).unwrap();
        assert!(r.tail <= r.chernoff);
        assert!(balls_bins_singletons(4, 2, 10, 0.0, &mut rng).is_err());
    }

    #[test]
    fn ensemble_parsing() {
        let k = parse_ensembles("local,haar,localperm").unwrap();
        assert_eq!(k, EnsembleKind::ALL);
        assert_eq!(ensembles_to_string(&k), "local,haar,localperm");
        assert!(parse_ensembles("global").is_err());
    }
}
