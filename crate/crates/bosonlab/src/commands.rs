//! Subcommand implementations. Each returns a [`Report`]: a pass flag, a
//! human summary and a machine-readable artifact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use bosonlab_core::architecture::{build_kaleidoscope, circuit_unitary};
use bosonlab_core::cayley::{
    degree_check_family, exact_degree_certificate, rational_degree_check, reduction_demo, LossModel, Precision,
    ReductionReport,
};
use bosonlab_core::gbs::{blowup_factor, build_tmsv_embedding, truncated_fock_gbs, verify_gbs_reduction};
use bosonlab_core::noise::{lossy_outcome_probability, lossy_sample, no_loss_probability};
use bosonlab_core::probability::{full_distribution, OutcomeConfig};
use bosonlab_core::rng::derive_seed;
use bosonlab_core::routing::route_permutation;
use bosonlab_core::sampling::{
    balls_bins_singletons, birthday_bound_check, combinatorial_check, compare_local_to_haar, parse_ensembles,
    sample_collision_free_outcome, summarize, ExperimentConfig, ExperimentRecord,
};
use bosonlab_core::{Circuit, Permutation, RngHandle};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{
    BallsBins, BirthdayBound, CollisionRatio, Command, DegreeCheck, Format, GbsCheck, LossCheck, ReductionDemo,
    RoutePermutation, RunConfig,
};
use crate::io;
use crate::stats::{binomial_z, chi_square};

/// Outcome of one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub passed: bool,
    pub summary: String,
    pub artifact: String,
}

/// Run every task of the collision-ratio experiment on the current rayon
/// pool. Records come back sorted by (ensemble, N, q, circuit).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ExperimentRecord>> {
    let tasks = config.tasks();
    let mut records = tasks
        .par_iter()
        .map(|t| {
            let start = Instant::now();
            let mut r = t.run()?;
            r.wall_time_s = start.elapsed().as_secs_f64();
            Ok(r)
        })
        .collect::<Result<Vec<_>, bosonlab_core::Error>>()?;
    records.sort_by_key(|r| (r.ensemble, r.photons, r.q, r.circuit));
    Ok(records)
}

pub fn experiment_config(p: &CollisionRatio, seed: u64) -> Result<ExperimentConfig> {
    let ensembles = parse_ensembles(&p.ensembles)?;
    Ok(ExperimentConfig {
        modes: p.modes,
        photons: p.photons.clone(),
        reps: p.reps.clone(),
        circuits: p.circuits,
        samples: p.samples,
        ensembles,
        seed,
    })
}

fn collision_ratio(p: &CollisionRatio, seed: u64, format: Format) -> Result<Report> {
    let cfg = experiment_config(p, seed)?;
    let records = run_experiment(&cfg)?;
    let summaries = summarize(&records);
    let comparisons = compare_local_to_haar(&summaries);
    let mut summary = String::new();
    writeln!(summary, "collision-free ratio, M = {}", cfg.modes)?;
    for s in &summaries {
        writeln!(
            summary,
            "  {:<9} N={:<3} q={}  mean {:.4}  sd {:.4}  se {:.4}",
            s.ensemble.id(),
            s.photons,
            s.q,
            s.mean,
            s.std_dev,
            s.std_err
        )?;
    }
    for c in &comparisons {
        writeln!(
            summary,
            "  local(q={}) − haar at N={}: {:+.4} (3·se = {:.4}) {}",
            c.q,
            c.photons,
            c.difference,
            3.0 * c.combined_std_err,
            if c.consistent { "consistent" } else { "INCONSISTENT" }
        )?;
    }
    let artifact = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            io::write_experiment_csv(&mut buf, &records)?;
            String::from_utf8(buf)?
        }
        Format::Json => serde_json::to_string_pretty(&json!({
            "records": records.iter().map(|r| json!({
                "ensemble": r.ensemble.id(), "M": r.modes, "N": r.photons, "q": r.q,
                "circuit": r.circuit, "seed": r.seed, "cf_count": r.cf_count,
                "samples": r.samples, "ratio": r.ratio,
            })).collect::<Vec<_>>(),
            "summaries": summaries.iter().map(|s| json!({
                "ensemble": s.ensemble.id(), "M": s.modes, "N": s.photons, "q": s.q,
                "circuits": s.circuits, "mean": s.mean, "std_dev": s.std_dev, "std_err": s.std_err,
            })).collect::<Vec<_>>(),
        }))?,
    };
    Ok(Report {
        passed: comparisons.iter().all(|c| c.consistent),
        summary,
        artifact,
    })
}

fn birthday(p: &BirthdayBound, seed: u64) -> Result<Report> {
    let mut rng = RngHandle::new(seed);
    let r = birthday_bound_check(p.modes, p.photons, p.q, p.circuits, p.samples, &mut rng)?;
    let (checked, failures) = combinatorial_check(p.max_photons, p.max_modes);
    let summary = format!(
        "collision probability over H_A·P at M={}, N={}: {:.5} ± {:.5} (bound 2N²/M = {:.5}) {}\n\
         combinatorial bound: {} (M, N) pairs checked, {} violations\n",
        r.modes,
        r.photons,
        r.empirical,
        r.sigma,
        r.bound,
        if r.within_bound { "ok" } else { "EXCEEDED" },
        checked,
        failures.len()
    );
    let artifact = serde_json::to_string_pretty(&json!({
        "M": r.modes, "N": r.photons, "empirical": r.empirical, "sigma": r.sigma,
        "bound": r.bound, "within_bound": r.within_bound,
        "combinatorial_checked": checked, "combinatorial_failures": failures,
    }))?;
    Ok(Report {
        passed: r.within_bound && failures.is_empty(),
        summary,
        artifact,
    })
}

fn balls_bins(p: &BallsBins, seed: u64) -> Result<Report> {
    let r = balls_bins_singletons(p.modes, p.balls, p.trials, p.threshold, &mut RngHandle::new(seed))?;
    let summary = format!(
        "singletons at M={}, N={} over {} trials: mean {:.4} ± {:.4}; Poissonized {:.4}; exact {:.4}\n\
         Pr[Z ≤ {}] = {:.5} vs Chernoff {:.5}\n",
        r.modes, r.balls, r.trials, r.mean, r.sigma, r.poisson_mean, r.exact_mean, r.threshold, r.tail, r.chernoff
    );
    let artifact = serde_json::to_string_pretty(&json!({
        "M": r.modes, "N": r.balls, "trials": r.trials, "mean": r.mean, "sigma": r.sigma,
        "poisson_mean": r.poisson_mean, "exact_mean": r.exact_mean, "threshold": r.threshold,
        "tail": r.tail, "chernoff": r.chernoff, "within_tolerance": r.within_tolerance,
    }))?;
    Ok(Report {
        passed: r.within_tolerance && r.tail <= r.chernoff,
        summary,
        artifact,
    })
}

pub fn parse_permutation(text: &str) -> Result<Permutation> {
    let images = text
        .split(',')
        .map(|x| x.trim().parse::<usize>().with_context(|| format!("bad permutation entry {x:?}")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Permutation::from_one_based(&images)?)
}

fn route(p: &RoutePermutation, seed: u64) -> Result<Report> {
    let perm = if p.perm.trim().is_empty() {
        Permutation::random(p.modes, &mut RngHandle::new(seed))
    } else {
        parse_permutation(&p.perm)?
    };
    let c = route_permutation(&perm)?;
    let residual = circuit_unitary(&c).max_abs_diff(&perm.matrix())?;
    // One flag per gate in placement order: true where the gate swaps.
    let mut settings = vec![Vec::new(); c.arch().depth()];
    for (p, g) in c.iter() {
        settings[p.layer - 1].push(g.is_exact_swap());
    }
    let mut summary = format!("routing {:?} through {} switch gates\n", perm.to_one_based(), c.gates().len());
    for (i, layer) in settings.iter().enumerate() {
        let row: String = layer.iter().map(|&x| if x { 'X' } else { '=' }).collect();
        writeln!(summary, "  layer {:>2}: {row}", i + 1)?;
    }
    writeln!(summary, "  residual ‖U(C) − P‖_max = {residual:e}")?;
    let artifact = serde_json::to_string_pretty(&json!({
        "permutation": perm.to_one_based(),
        "switch_settings": settings,
        "residual": residual,
        "circuit": serde_json::from_str::<Value>(&io::circuit_to_json(&c)?)?,
    }))?;
    Ok(Report {
        passed: residual <= 1e-10,
        summary,
        artifact,
    })
}

fn reduction_json(r: &ReductionReport, seed: u64) -> Value {
    json!({
        "extrapolated": r.extrapolated,
        "direct": r.direct,
        "abs_error": r.abs_error,
        "amplification": r.amplification,
        "amplification_log2": r.amplification_log2,
        "nominal_amplification": r.nominal_amplification,
        "degree": r.degree,
        "gates": r.gates,
        "delta": r.delta,
        "q_at_one": r.q_at_one,
        "precision": r.precision.to_string(),
        "seed": seed,
    })
}

/// Seed of run `i` of a multi-run command.
pub fn run_seed(seed: u64, i: usize) -> u64 {
    derive_seed(seed, i as u64)
}

fn reduction(p: &ReductionDemo, seed: u64) -> Result<Report> {
    let precision: Precision = p.precision.parse()?;
    if p.runs == 0 {
        bail!("runs must be at least 1");
    }
    let reports = (0..p.runs)
        .into_par_iter()
        .map(|i| {
            let s = run_seed(seed, i);
            reduction_demo(p.modes, p.photons, p.q0, Some(p.delta), precision, &mut RngHandle::new(s)).map(|r| (s, r))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let worst = reports.iter().map(|(_, r)| r.abs_error).fold(0.0, f64::max);
    let mut summary = String::new();
    for (s, r) in &reports {
        writeln!(
            summary,
            "seed {s}: extrapolated {:.12} direct {:.12} |error| {:.3e} (degree {}, Lebesgue 2^{:.1}, {} path)",
            r.extrapolated, r.direct, r.abs_error, r.degree, r.amplification_log2, r.precision
        )?;
    }
    let artifact = if reports.len() == 1 {
        reduction_json(&reports[0].1, reports[0].0)
    } else {
        json!({
            "runs": reports.iter().map(|(s, r)| reduction_json(r, *s)).collect::<Vec<_>>(),
            "max_abs_error": worst,
        })
    };
    Ok(Report {
        passed: worst < p.tolerance,
        summary,
        artifact: serde_json::to_string_pretty(&artifact)?,
    })
}

fn degree(p: &DegreeCheck, seed: u64) -> Result<Report> {
    let fam = degree_check_family(p.modes, p.photons, p.q, &mut RngHandle::new(seed))?;
    let r = rational_degree_check(&fam)?;
    let cert = if p.exact { Some(exact_degree_certificate(&fam)?) } else { None };
    let mut summary = format!(
        "p·Q at (M,N,q) = ({}, {}, {}): d = 4mN = {}\n  degree-d fit residual {:.3e}, degree-(d−1) residual {:.3e} (relative to max|F| = {:.3e})\n",
        p.modes, p.photons, p.q, r.degree, r.residual, r.residual_lower, r.max_abs
    );
    if let Some(c) = &cert {
        writeln!(
            summary,
            "  exact divided differences: order d+1 {}, order d {} (log2 |leading| = {:.1})",
            if c.excess_vanishes { "vanishes" } else { "NONZERO" },
            if c.leading_nonzero { "nonzero" } else { "VANISHES" },
            c.leading_log2
        )?;
    }
    let passed = r.residual <= p.tolerance && cert.as_ref().is_none_or(|c| c.excess_vanishes && c.leading_nonzero);
    let artifact = serde_json::to_string_pretty(&json!({
        "degree": r.degree, "gates": r.gates, "photons": r.photons,
        "residual": r.residual, "residual_lower": r.residual_lower, "max_abs": r.max_abs,
        "held_out": r.held_out,
        "exact_excess_vanishes": cert.as_ref().map(|c| c.excess_vanishes),
        "exact_leading_nonzero": cert.as_ref().map(|c| c.leading_nonzero),
        "exact_leading_log2": cert.as_ref().map(|c| c.leading_log2),
    }))?;
    Ok(Report { passed, summary, artifact })
}

/// Aggregated lossy trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTally {
    pub trajectories: u64,
    pub no_loss: u64,
    /// Outcomes of no-loss trajectories.
    pub conditional: BTreeMap<OutcomeConfig, u64>,
}

/// Number of independent RNG streams the trajectories are split into; fixed
/// so results do not depend on the thread count.
pub const LOSS_CHUNKS: usize = 64;

pub fn run_loss_trajectories(c: &Circuit, t: &OutcomeConfig, loss: &LossModel, samples: usize, seed: u64) -> Result<LossTally> {
    let parts = (0..LOSS_CHUNKS)
        .into_par_iter()
        .map(|i| {
            let n = samples / LOSS_CHUNKS + usize::from(i < samples % LOSS_CHUNKS);
            let mut rng = RngHandle::new(derive_seed(seed, 1 + i as u64));
            let mut tally = LossTally {
                trajectories: n as u64,
                no_loss: 0,
                conditional: BTreeMap::new(),
            };
            for _ in 0..n {
                let s = lossy_sample(c, t, loss, &mut rng)?;
                if s.no_loss {
                    tally.no_loss += 1;
                    *tally.conditional.entry(s.outcome).or_default() += 1;
                }
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>, bosonlab_core::Error>>()?;
    let mut total = LossTally {
        trajectories: 0,
        no_loss: 0,
        conditional: BTreeMap::new(),
    };
    for p in parts {
        total.trajectories += p.trajectories;
        total.no_loss += p.no_loss;
        for (k, v) in p.conditional {
            *total.conditional.entry(k).or_default() += v;
        }
    }
    Ok(total)
}

/// Results of the loss check.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCheckResult {
    pub chi_square_p: f64,
    pub flag_rate: f64,
    pub no_loss_probability: f64,
    pub flag_z: f64,
    /// Largest |z| of the per-outcome joint frequencies against `p_s · Π(1−ρ)`.
    pub max_joint_z: f64,
}

pub fn loss_check(p: &LossCheck, seed: u64) -> Result<LossCheckResult> {
    let c = Circuit::random(build_kaleidoscope(p.modes, p.q)?, &mut RngHandle::new(seed));
    let t = OutcomeConfig::first_modes(p.modes, p.photons)?;
    let loss = LossModel::for_circuit(&c, p.rho)?;
    let tally = run_loss_trajectories(&c, &t, &loss, p.samples, seed)?;
    let dist = full_distribution(&circuit_unitary(&c), &t)?;
    let counts: Vec<f64> = dist
        .iter()
        .map(|(s, _)| tally.conditional.get(s).copied().unwrap_or(0) as f64)
        .collect();
    let probs: Vec<f64> = dist.iter().map(|(_, q)| *q).collect();
    let chi = chi_square(&counts, &probs);
    let pnl = no_loss_probability(&loss);
    let mut max_joint_z = 0.0f64;
    for (s, _) in &dist {
        let want = lossy_outcome_probability(&c, s, &t, &loss)?;
        let hits = tally.conditional.get(s).copied().unwrap_or(0);
        if want > 0.0 && want < 1.0 {
            max_joint_z = max_joint_z.max(binomial_z(hits, tally.trajectories, want).abs());
        }
    }
    Ok(LossCheckResult {
        chi_square_p: chi.p_value,
        flag_rate: tally.no_loss as f64 / tally.trajectories as f64,
        no_loss_probability: pnl,
        flag_z: binomial_z(tally.no_loss, tally.trajectories, pnl),
        max_joint_z,
    })
}

fn loss(p: &LossCheck, seed: u64) -> Result<Report> {
    let r = loss_check(p, seed)?;
    let summary = format!(
        "conditional-on-no-loss vs ideal: chi-square p = {:.4}\n\
         no-loss flag rate {:.5} vs Π(1−ρ) = {:.5} (z = {:+.2})\n\
         largest |z| of joint (outcome, no loss) frequencies: {:.2}\n",
        r.chi_square_p, r.flag_rate, r.no_loss_probability, r.flag_z, r.max_joint_z
    );
    let artifact = serde_json::to_string_pretty(&json!({
        "chi_square_p": r.chi_square_p, "flag_rate": r.flag_rate,
        "no_loss_probability": r.no_loss_probability, "flag_z": r.flag_z, "max_joint_z": r.max_joint_z,
    }))?;
    Ok(Report {
        passed: r.chi_square_p > 0.01 && r.flag_z.abs() <= 3.0,
        summary,
        artifact,
    })
}

/// Per-run GBS comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GbsRun {
    pub seed: u64,
    pub hafnian: f64,
    pub permanent_side: f64,
    pub abs_diff: f64,
    /// Truncated-Fock value of the same outcome when the embedding is small enough.
    pub fock: Option<f64>,
}

pub fn gbs_runs(p: &GbsCheck, seed: u64) -> Result<Vec<GbsRun>> {
    (0..p.runs)
        .into_par_iter()
        .map(|i| {
            let s = run_seed(seed, i);
            let mut rng = RngHandle::new(s);
            let c0 = Circuit::random(build_kaleidoscope(p.m0, 1)?, &mut rng);
            let s0 = sample_collision_free_outcome(p.m0, p.n0, &mut rng)?;
            let rep = verify_gbs_reduction(&c0, &s0, p.r)?;
            let fock = if 2 * p.m0 <= bosonlab_core::gbs::MAX_FOCK_GBS_MODES {
                let big = circuit_unitary(&build_tmsv_embedding(&c0)?);
                Some(truncated_fock_gbs(&big, p.r, p.cutoff)?.probability(&rep.outcome))
            } else {
                None
            };
            Ok(GbsRun {
                seed: s,
                hafnian: rep.lhs,
                permanent_side: rep.rhs,
                abs_diff: rep.abs_diff,
                fock,
            })
        })
        .collect()
}

fn gbs(p: &GbsCheck, seed: u64) -> Result<Report> {
    let runs = gbs_runs(p, seed)?;
    let blow = blowup_factor(p.m0, p.n0, p.r)?;
    let worst = runs.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let worst_fock = runs
        .iter()
        .filter_map(|r| r.fock.map(|f| (f - r.hafnian).abs()))
        .fold(0.0, f64::max);
    let mut summary = String::new();
    for r in &runs {
        writeln!(
            summary,
            "seed {}: hafnian {:.12e} permanent side {:.12e} fock {} |diff| {:.2e}",
            r.seed,
            r.hafnian,
            r.permanent_side,
            r.fock.map_or("n/a".to_string(), |f| format!("{f:.12e}")),
            r.abs_diff
        )?;
    }
    writeln!(
        summary,
        "blowup factor cosh^{{2M0}} r / tanh^{{2N0}} r = {:.6} (log2 {:.3})",
        blow.value, blow.log2
    )?;
    let artifact = serde_json::to_string_pretty(&json!({
        "runs": runs.iter().map(|r| json!({
            "seed": r.seed, "hafnian": r.hafnian, "permanent_side": r.permanent_side,
            "abs_diff": r.abs_diff, "fock": r.fock,
        })).collect::<Vec<_>>(),
        "max_abs_diff": worst,
        "max_fock_diff": worst_fock,
        "blowup": blow.value,
        "blowup_log2": blow.log2,
        "blowup_closed_form": blow.closed_form,
    }))?;
    Ok(Report {
        passed: worst <= 1e-8 && worst_fock <= 1e-6,
        summary,
        artifact,
    })
}

/// Execute a resolved configuration on the current rayon pool.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    let format = cfg.format();
    if format == Format::Csv && !matches!(cfg.command, Command::CollisionRatio(_)) {
        bail!("{} only writes JSON", cfg.command.name());
    }
    match &cfg.command {
        Command::CollisionRatio(p) => collision_ratio(p, cfg.seed, format),
        Command::BirthdayBound(p) => birthday(p, cfg.seed),
        Command::BallsBins(p) => balls_bins(p, cfg.seed),
        Command::RoutePermutation(p) => route(p, cfg.seed),
        Command::ReductionDemo(p) => reduction(p, cfg.seed),
        Command::DegreeCheck(p) => degree(p, cfg.seed),
        Command::LossCheck(p) => loss(p, cfg.seed),
        Command::GbsCheck(p) => gbs(p, cfg.seed),
    }
}
