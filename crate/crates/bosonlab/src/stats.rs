//! Goodness-of-fit helpers for the Monte Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Cells with expected count below this are pooled into one.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson goodness of fit of `counts` against `probs`. Cells whose expected
/// count falls below [`MIN_EXPECTED`] are merged into a single pooled cell
/// (dropped if the pool itself stays below the threshold and is empty of
/// expectation). Probabilities are renormalized over the listed cells.
pub fn chi_square(counts: &[f64], probs: &[f64]) -> ChiSquare {
    assert_eq!(counts.len(), probs.len(), "counts and probabilities must align");
    let n: f64 = counts.iter().sum();
    let mass: f64 = probs.iter().sum();
    let mut obs = Vec::new();
    let mut exp = Vec::new();
    let (mut pool_o, mut pool_e) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p / mass * n;
        if e >= MIN_EXPECTED {
            obs.push(c);
            exp.push(e);
        } else {
            pool_o += c;
            pool_e += e;
        }
    }
    if pool_e > 0.0 {
        if pool_e >= MIN_EXPECTED || exp.is_empty() {
            obs.push(pool_o);
            exp.push(pool_e);
        } else if let (Some(o), Some(e)) = (obs.last_mut(), exp.last_mut()) {
            *o += pool_o;
            *e += pool_e;
        }
    }
    let statistic: f64 = obs.iter().zip(&exp).map(|(o, e)| (o - e) * (o - e) / e).sum();
    let dof = obs.len().saturating_sub(1);
    let p_value = if dof == 0 {
        1.0
    } else {
        1.0 - ChiSquared::new(dof as f64).expect("positive dof").cdf(statistic)
    };
    ChiSquare { statistic, dof, p_value }
}

/// `(k/n − p) / √(p(1−p)/n)`.
pub fn binomial_z(successes: u64, trials: u64, p: f64) -> f64 {
    let n = trials as f64;
    let sigma = (p * (1.0 - p) / n).sqrt();
    if sigma == 0.0 {
        return if successes as f64 == p * n { 0.0 } else { f64::INFINITY };
    }
    (successes as f64 / n - p) / sigma
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_has_p_one() {
        let r = chi_square(&[25.0, 25.0, 50.0], &[0.25, 0.25, 0.5]);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 2);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn known_statistic() {
        // (60−50)²/50 + (40−50)²/50 = 4 on one degree of freedom.
        let r = chi_square(&[60.0, 40.0], &[0.5, 0.5]);
        assert!((r.statistic - 4.0).abs() < 1e-12);
        assert!((r.p_value - 0.045_500_263_896_358_4).abs() < 1e-9);
    }

    #[test]
    fn small_cells_are_pooled() {
        let r = chi_square(&[50.0, 48.0, 1.0, 1.0], &[0.5, 0.48, 0.01, 0.01]);
        assert_eq!(r.dof, 1);
    }

    #[test]
    fn z_scores() {
        assert_eq!(binomial_z(50, 100, 0.5), 0.0);
        assert!((binomial_z(60, 100, 0.5) - 2.0).abs() < 1e-12);
    }
}
