//! Acceptance suite: every headline criterion at its stated tolerance and
//! runtime budget. Prints one PASS/FAIL line per criterion. Criteria listed
//! in `KNOWN_FAILURES` are mathematically unattainable as stated; they are
//! still evaluated and the suite asserts that they keep failing.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use bosonlab::commands::{gbs_runs, loss_check, run_experiment, run_seed};
use bosonlab::config::{GbsCheck, LossCheck};
use bosonlab::stats::chi_square;
use bosonlab_core::architecture::{build_butterfly, build_kaleidoscope, circuit_unitary};
use bosonlab_core::cayley::{
    big_q, cayley_direct, cayley_transform, degree_check_family, exact_degree_certificate, q_upper_bound,
    rational_degree_check, reduction_demo, Precision,
};
use bosonlab_core::linalg::{haar_gate, haar_unitary_global, CMatrix};
use bosonlab_core::probability::{
    full_distribution, hafnian, hafnian_permutation_sum, output_probability, permanent, permanent_naive,
};
use bosonlab_core::routing::{embed_grid, route_permutation, verify_embedding, GridSpec};
use bosonlab_core::sampling::{
    balls_bins_singletons, birthday_bound_check, boson_sample, combinatorial_check, compare_local_to_haar,
    summarize, ExperimentConfig,
};
use bosonlab_core::{Complex64, ComplexUnitary, Gate2, OutcomeConfig, Permutation, RngHandle};
use rand::Rng;
use rayon::prelude::*;

const SEED: u64 = 20_240_601;

/// Criteria expected to fail at the suite seed, with the reason.
const KNOWN_FAILURES: &[(&str, &str)] = &[
    (
        "sampler-exactness",
        "20 independent tests at p > 0.01 raise a false alarm 18% of the time; the suite seed hits one",
    ),
    (
        "desk-replica",
        "a single BB* round bunches more than Haar; the q = 1 gap exceeds 3 standard errors",
    ),
    ("cayley-suite", "|q(θ)| ≤ 1 on every eigenphase, so Q(θ) ≤ 1 and the lower bound 1 ≤ Q fails"),
];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn random_matrix(n: usize, rng: &mut RngHandle) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn architecture_counts() -> Outcome {
    let mut bad = Vec::new();
    for k in 1..=8usize {
        let m = 1usize << k;
        let b = build_butterfly(m).unwrap();
        if b.depth() != k || b.gate_count() != m / 2 * k {
            bad.push(format!("B at M={m}"));
        }
        for q in 1..=4 {
            if build_kaleidoscope(m, q).unwrap().gate_count() != q * m * k {
                bad.push(format!("(BB*)^{q} at M={m}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("M = 2..256, q = 1..4; mismatches: {bad:?}"))
}

/// All permutations of `0..n` in lexicographic order.
fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| cur[j] > cur[i - 1]).unwrap();
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

fn routing() -> Outcome {
    let perms = all_permutations(8);
    let failures = perms
        .par_iter()
        .filter(|image| {
            let p = Permutation::new(image.to_vec()).unwrap();
            let c = route_permutation(&p).unwrap();
            let exact = circuit_unitary(&c).max_abs_diff(&p.matrix()).unwrap() == 0.0;
            let switches = c.gates().iter().all(|g| g.is_exact_identity() || g.is_exact_swap());
            !(exact && switches && c.gates().len() == 8 * 3)
        })
        .count();
    outcome(
        perms.len() == 40_320 && failures == 0,
        format!("{} permutations at M=8, {failures} not reproduced exactly with 24 switch gates", perms.len()),
    )
}

fn grid_embedding() -> Outcome {
    let cases: [(usize, Vec<usize>); 3] = [(8, vec![3]), (16, vec![2, 2]), (16, vec![2, 1, 1])];
    let mut worst = 0.0f64;
    for (idx, (m, exps)) in cases.iter().enumerate() {
        assert_eq!(1usize << exps.iter().sum::<usize>(), *m);
        let mut rng = RngHandle::new(run_seed(SEED, idx));
        for _ in 0..100 {
            let spec = GridSpec::random(exps.clone(), &mut rng).unwrap();
            let emb = embed_grid(&spec).unwrap();
            worst = worst.max(verify_embedding(&spec.unitary(), &emb.permutation, &emb.circuit).unwrap());
        }
    }
    outcome(worst <= 1e-10, format!("max residual {worst:.2e} over 300 instances"))
}

fn probability_engine() -> Outcome {
    let mut rng = RngHandle::new(SEED);
    let mut per = 0.0f64;
    for i in 0..1000 {
        let a = random_matrix(1 + i % 8, &mut rng);
        let scale = permanent_naive(&a).unwrap().norm().max(1.0);
        per = per.max((permanent(&a).unwrap() - permanent_naive(&a).unwrap()).norm() / scale);
    }
    let mut haf = 0.0f64;
    for i in 0..200 {
        let n = 2 * (1 + i % 4);
        let b = random_matrix(n, &mut rng);
        let a = CMatrix::from_fn(n, n, |r, c| b.row(r)[c] + b.row(c)[r]);
        haf = haf.max((hafnian(&a).unwrap() - hafnian_permutation_sum(&a).unwrap()).norm());
    }
    let mut mass = 0.0f64;
    for i in 0..100 {
        let m = 2 + i % 5;
        let n = 1 + i % m.min(3);
        let u = haar_unitary_global(m, &mut rng).unwrap();
        let t = OutcomeConfig::first_modes(m, n).unwrap();
        let total: f64 = full_distribution(&u, &t).unwrap().iter().map(|(_, p)| p).sum();
        mass = mass.max((total - 1.0).abs());
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bs = ComplexUnitary::from(Gate2::new(h.into(), h.into(), h.into(), (-h).into()));
    let one_one = OutcomeConfig::new(vec![1, 1]);
    let hom = output_probability(&bs, &one_one, &one_one).unwrap();
    outcome(
        per <= 1e-10 && haf <= 1e-10 && mass <= 1e-8 && hom <= 1e-14,
        format!("Ryser {per:.1e}, hafnian {haf:.1e}, |Σp−1| {mass:.1e}, HOM {hom:.1e}"),
    )
}

/// Chi-square p-value of `samples` draws from one Haar circuit.
fn sampler_p_value(m: usize, n: usize, k: usize, samples: usize) -> f64 {
    let mut rng = RngHandle::new(run_seed(SEED ^ (m as u64) << 40, k));
    let u = haar_unitary_global(m, &mut rng).unwrap();
    let t = OutcomeConfig::first_modes(m, n).unwrap();
    let dist = full_distribution(&u, &t).unwrap();
    let index: HashMap<&OutcomeConfig, usize> = dist.iter().enumerate().map(|(i, (s, _))| (s, i)).collect();
    let mut counts = vec![0.0; dist.len()];
    for _ in 0..samples {
        let s = boson_sample(&u, &t, &mut rng).unwrap();
        counts[index[&s]] += 1.0;
    }
    let probs: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
    chi_square(&counts, &probs).p_value
}

/// Kolmogorov-Smirnov distance of `ps` from Uniform(0, 1).
fn ks_uniform(mut ps: Vec<f64>) -> f64 {
    ps.sort_by(f64::total_cmp);
    let n = ps.len() as f64;
    ps.iter()
        .enumerate()
        .map(|(i, &p)| ((i + 1) as f64 / n - p).max(p - i as f64 / n))
        .fold(0.0, f64::max)
}

fn sampler_exactness() -> Outcome {
    let cases = [(5usize, 2usize), (6, 3)];
    let tasks = |count: usize| -> Vec<(usize, usize, usize)> {
        cases.iter().flat_map(|&(m, n)| (0..count).map(move |k| (m, n, k))).collect()
    };
    let results: Vec<((usize, usize, usize), f64)> = tasks(10)
        .into_par_iter()
        .map(|(m, n, k)| ((m, n, k), sampler_p_value(m, n, k, 20_000)))
        .collect();
    let min = results.iter().map(|r| r.1).fold(1.0, f64::min);
    let low: Vec<_> = results.iter().filter(|r| r.1 <= 0.01).map(|r| r.0).collect();
    // Exact samplers give uniform p-values; a biased one piles them up near zero.
    let spread: Vec<f64> = tasks(200)
        .into_par_iter()
        .map(|(m, n, k)| sampler_p_value(m, n, k, 20_000))
        .collect();
    let count = spread.len();
    let ks = ks_uniform(spread);
    outcome(
        low.is_empty(),
        format!(
            "20 circuits × 2·10⁴ samples, min p = {min:.3}, p ≤ 0.01 at {low:?}; \
             KS distance of {count} p-values from uniform {ks:.3} (5% critical {:.3})",
            1.36 / (count as f64).sqrt()
        ),
    )
}

fn desk_replica() -> Outcome {
    let records = run_experiment(&ExperimentConfig::desk(SEED)).unwrap();
    let cmp = compare_local_to_haar(&summarize(&records));
    let worst = cmp
        .iter()
        .map(|c| c.difference.abs() / (3.0 * c.combined_std_err))
        .fold(0.0, f64::max);
    outcome(
        cmp.len() == 9 && cmp.iter().all(|c| c.consistent),
        format!("{} (q, N) cells, largest |Δ| / 3se = {worst:.2}", cmp.len()),
    )
}

fn birthday() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, (m, n)) in [(32usize, 3usize), (128, 4)].into_iter().enumerate() {
        let r = birthday_bound_check(m, n, 1, 100, 200, &mut RngHandle::new(run_seed(SEED, i))).unwrap();
        ok &= r.empirical <= r.bound + 3.0 * r.sigma;
        parts.push(format!("({m},{n}): {:.4} vs {:.4}", r.empirical, r.bound));
    }
    let (checked, failures) = combinatorial_check(8, 256);
    ok &= failures.is_empty();
    outcome(ok, format!("{}; combinatorial {checked} pairs, {} violations", parts.join(", "), failures.len()))
}

fn cayley_suite() -> Outcome {
    let mut rng = RngHandle::new(SEED);
    let (mut endpoints, mut forms, mut unitarity) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let h = haar_gate(&mut rng);
        let theta: f64 = rng.random();
        endpoints = endpoints
            .max(cayley_transform(&h, 0.0).unwrap().max_abs_diff(&h))
            .max(cayley_transform(&h, 1.0).unwrap().max_abs_diff(&Gate2::IDENTITY));
        let g = cayley_transform(&h, theta).unwrap();
        forms = forms.max(g.max_abs_diff(&cayley_direct(&h, theta).unwrap()));
        unitarity = unitarity.max(g.unitarity_deviation());
    }
    let structural = endpoints <= 1e-10 && forms <= 1e-10 && unitarity <= 1e-10;

    let (mut lower_violations, mut upper_violations, mut min_q) = (0usize, 0usize, f64::INFINITY);
    let draws = 10_000;
    for i in 0..draws {
        let gates = 1 + i % 12;
        let photons = 1 + i % 3;
        let haar: Vec<Gate2> = (0..gates).map(|_| haar_gate(&mut rng)).collect();
        let theta: f64 = rng.random();
        let q = big_q(&haar, theta, photons).unwrap();
        min_q = min_q.min(q);
        lower_violations += usize::from(q < 1.0);
        upper_violations += usize::from(q > q_upper_bound(theta, gates, photons));
    }
    outcome(
        structural && lower_violations == 0 && upper_violations == 0,
        format!(
            "endpoints {endpoints:.1e}, forms {forms:.1e}, unitarity {unitarity:.1e}; \
             Q < 1 in {lower_violations}/{draws} draws (min {min_q:.3e}), Q above (1+θ²)^{{2mN}} in {upper_violations}"
        ),
    )
}

fn degree_check() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, (m, n, q)) in [(2usize, 1usize, 1usize), (4, 2, 1)].into_iter().enumerate() {
        let fam = degree_check_family(m, n, q, &mut RngHandle::new(run_seed(SEED, i))).unwrap();
        let fit = rational_degree_check(&fam).unwrap();
        let cert = exact_degree_certificate(&fam).unwrap();
        ok &= fit.residual <= 1e-8 && cert.excess_vanishes && cert.leading_nonzero;
        parts.push(format!(
            "({m},{n},{q}) d={}: fit {:.1e}, d−1 fit {:.1e}, exact order-d coefficient 2^{:.1}",
            fit.degree, fit.residual, fit.residual_lower, cert.leading_log2
        ));
    }
    outcome(ok, parts.join("; "))
}

fn reduction() -> Outcome {
    let errors: Vec<f64> = (0..20)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngHandle::new(run_seed(SEED, i));
            reduction_demo(2, 1, 1, Some(0.05), Precision::Auto, &mut rng).unwrap().abs_error
        })
        .collect();
    let worst = errors.iter().copied().fold(0.0, f64::max);
    outcome(worst < 1e-6, format!("20 runs at Δ = 0.05, max |error| {worst:.2e}"))
}

fn loss() -> Outcome {
    let r = loss_check(&LossCheck::default(), SEED).unwrap();
    outcome(
        r.chi_square_p > 0.01 && r.flag_z.abs() <= 3.0,
        format!(
            "chi-square p {:.3}, flag rate {:.5} vs {:.5} (z {:+.2})",
            r.chi_square_p, r.flag_rate, r.no_loss_probability, r.flag_z
        ),
    )
}

fn gbs_identity() -> Outcome {
    let runs = gbs_runs(&GbsCheck::default(), SEED).unwrap();
    let identity = runs.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let fock = runs
        .iter()
        .map(|r| r.fock.map_or(f64::INFINITY, |f| (f - r.hafnian).abs()))
        .fold(0.0, f64::max);
    outcome(
        runs.len() == 20 && identity <= 1e-8 && fock <= 1e-6,
        format!("20 seeds, identity |diff| {identity:.1e}, truncated Fock |diff| {fock:.1e}"),
    )
}

fn balls_bins() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (i, (m, n)) in [(256usize, 16usize), (32, 16)].into_iter().enumerate() {
        let r = balls_bins_singletons(m, n, 10_000, 4.0, &mut RngHandle::new(run_seed(SEED, i))).unwrap();
        ok &= r.within_tolerance;
        parts.push(format!("({m},{n}): {:.3} ± {:.3} vs N·e^(−N/M) {:.3}", r.mean, r.sigma, r.poisson_mean));
    }
    outcome(ok, parts.join(", "))
}

type Check = fn() -> Outcome;

fn main() {
    let criteria: [(&str, Check, Duration); 13] = [
        ("architecture-counts", architecture_counts, Duration::from_secs(1)),
        ("routing", routing, Duration::from_secs(30)),
        ("grid-embedding", grid_embedding, Duration::from_secs(60)),
        ("probability-engine", probability_engine, Duration::from_secs(120)),
        ("sampler-exactness", sampler_exactness, Duration::from_secs(600)),
        ("desk-replica", desk_replica, Duration::from_secs(1800)),
        ("birthday-bound", birthday, Duration::from_secs(300)),
        ("cayley-suite", cayley_suite, Duration::from_secs(30)),
        ("degree-check", degree_check, Duration::from_secs(120)),
        ("reduction-demo", reduction, Duration::from_secs(60)),
        ("loss", loss, Duration::from_secs(300)),
        ("gbs-identity", gbs_identity, Duration::from_secs(120)),
        ("balls-bins", balls_bins, Duration::from_secs(60)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = Vec::new();
    for (name, check, budget) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let elapsed = start.elapsed();
        let passed = o.passed && elapsed <= budget;
        let known = KNOWN_FAILURES.iter().find(|(n, _)| *n == name).map(|(_, why)| *why);
        let status = match (passed, known.is_some()) {
            (true, false) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
            (true, true) => "PASS (expected failure)",
        };
        println!(
            "[{status}] {name} ({:.2}s, budget {}s): {}",
            elapsed.as_secs_f64(),
            budget.as_secs(),
            o.detail
        );
        if let Some(why) = known {
            println!("    known failure: {why}");
        }
        if passed == known.is_some() {
            unexpected.push(name);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("acceptance: unexpected outcome for {unexpected:?}");
        std::process::exit(1);
    }
}
