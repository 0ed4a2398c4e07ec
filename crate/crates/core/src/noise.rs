//! Stochastic photon loss by pure-state trajectories, and post-selection on
//! the "no loss event" flag.
//!
//! Each gate is followed by one loss channel per participating mode, lower
//! mode first. A channel with rate `ρ` keeps the state with probability
//! `1 − ρ`; otherwise it applies the normalized annihilation operator on its
//! mode (or nothing if that mode is empty in every branch).

use rand::Rng;

use crate::architecture::{circuit_unitary, Circuit};
use crate::cayley::LossModel;
use crate::error::{Error, Result};
use crate::fock::{FockState, MAX_FOCK_MODES};
use crate::probability::{output_probability, OutcomeConfig};

/// Largest photon number accepted by the trajectory simulators.
pub const MAX_TRAJECTORY_PHOTONS: usize = 10;

/// `Π (1 − ρ_i)`.
pub fn no_loss_probability(loss: &LossModel) -> f64 {
    loss.no_loss_probability()
}

/// One trajectory's measurement record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LossySample {
    pub outcome: OutcomeConfig,
    /// Number of loss events that removed a photon.
    pub lost_photons: usize,
    /// True iff every channel drew the identity branch.
    pub no_loss: bool,
}

fn check_sizes(c: &Circuit, t: &OutcomeConfig) -> Result<()> {
    if t.modes() != c.modes() {
        return Err(Error::ModeCountMismatch {
            expected: c.modes(),
            found: t.modes(),
        });
    }
    if c.modes() > MAX_FOCK_MODES || t.total() > MAX_TRAJECTORY_PHOTONS {
        return Err(Error::StateSpaceTooLarge {
            size: c.modes().max(t.total()) as u128,
            limit: MAX_FOCK_MODES.min(MAX_TRAJECTORY_PHOTONS) as u128,
        });
    }
    Ok(())
}

/// Ideal sampler by evolving the Fock state through the gates and measuring
/// once. Uses exactly one uniform draw, matching [`lossy_sample`] at zero loss.
pub fn ideal_trajectory_sample<R: Rng + ?Sized>(c: &Circuit, t: &OutcomeConfig, rng: &mut R) -> Result<OutcomeConfig> {
    check_sizes(c, t)?;
    let mut state = FockState::basis(t)?;
    for (p, g) in c.iter() {
        state.apply_gate(p.mode_a - 1, p.mode_b - 1, g);
    }
    Ok(state.sample(rng))
}

/// One lossy trajectory. Channels with `ρ = 0` consume no randomness.
pub fn lossy_sample<R: Rng + ?Sized>(c: &Circuit, t: &OutcomeConfig, loss: &LossModel, rng: &mut R) -> Result<LossySample> {
    check_sizes(c, t)?;
    if loss.channels() != 2 * c.gates().len() {
        return Err(Error::GateCountMismatch {
            expected: 2 * c.gates().len(),
            found: loss.channels(),
        });
    }
    let mut state = FockState::basis(t)?;
    let mut lost_photons = 0;
    let mut no_loss = true;
    let rates = loss.rates();
    for (i, (p, g)) in c.iter().enumerate() {
        let (a, b) = (p.mode_a - 1, p.mode_b - 1);
        state.apply_gate(a, b, g);
        for (k, mode) in [a, b].into_iter().enumerate() {
            let rho = rates[2 * i + k];
            if rho == 0.0 || rng.random::<f64>() >= rho {
                continue;
            }
            no_loss = false;
            if let Some(next) = state.annihilate(mode) {
                state = next;
                lost_photons += 1;
            }
        }
    }
    Ok(LossySample {
        outcome: state.sample(rng),
        lost_photons,
        no_loss,
    })
}

/// `p_s(C, N) = p_s(C) · Π(1 − ρ_i)` for an outcome keeping every photon:
/// under loss without gain, only the all-identity branch reaches the full
/// photon sector.
pub fn lossy_outcome_probability(c: &Circuit, s: &OutcomeConfig, t: &OutcomeConfig, loss: &LossModel) -> Result<f64> {
    if s.total() != t.total() {
        return Err(Error::TotalMismatch {
            left: s.total(),
            right: t.total(),
        });
    }
    let p = output_probability(&circuit_unitary(c), s, t)?;
    Ok(p * loss.no_loss_probability())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::architecture::build_kaleidoscope;
    use crate::probability::full_distribution;
    use crate::rng::RngHandle;
    use alloc::vec;
    use alloc::vec::Vec;
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    use std::collections::BTreeMap;

    fn circuit(seed: u64) -> Circuit {
        Circuit::random(build_kaleidoscope(4, 1).unwrap(), &mut RngHandle::new(seed))
    }

    fn chi_p(counts: &BTreeMap<OutcomeConfig, f64>, dist: &[(OutcomeConfig, f64)]) -> f64 {
        let n: f64 = counts.values().sum();
        let mut chi = 0.0;
        let mut cells = 0;
        for (s, p) in dist {
            let e = p * n;
            if e < 5.0 {
                continue;
            }
            let o = counts.get(s).copied().unwrap_or(0.0);
            chi += (o - e) * (o - e) / e;
            cells += 1;
        }
        1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(chi)
    }

    #[test]
    fn no_loss_examples() {
        assert_eq!(no_loss_probability(&LossModel::uniform(8, 0.0).unwrap()), 1.0);
        assert!((no_loss_probability(&LossModel::uniform(8, 0.1).unwrap()) - 0.430_467_21).abs() < 1e-8);
        assert_eq!(no_loss_probability(&LossModel::new(vec![0.3, 1.0]).unwrap()), 0.0);
    }

    #[test]
    fn zero_loss_matches_ideal_trajectories() {
        let c = circuit(80);
        let t = OutcomeConfig::first_modes(4, 2).unwrap();
        let loss = LossModel::for_circuit(&c, 0.0).unwrap();
        let mut a = RngHandle::new(5);
        let mut b = RngHandle::new(5);
        for _ in 0..500 {
            let l = lossy_sample(&c, &t, &loss, &mut a).unwrap();
            assert!(l.no_loss && l.lost_photons == 0);
            assert_eq!(l.outcome, ideal_trajectory_sample(&c, &t, &mut b).unwrap());
        }
    }

    #[test]
    fn ideal_trajectories_follow_permanents() {
        let c = circuit(81);
        let t = OutcomeConfig::first_modes(4, 2).unwrap();
        let dist = full_distribution(&circuit_unitary(&c), &t).unwrap();
        let mut rng = RngHandle::new(6);
        let mut counts = BTreeMap::new();
        for _ in 0..20_000 {
            *counts.entry(ideal_trajectory_sample(&c, &t, &mut rng).unwrap()).or_insert(0.0) += 1.0;
        }
        assert!(chi_p(&counts, &dist) > 0.01);
    }

    #[test]
    fn photon_number_never_grows() {
        let c = circuit(82);
        let t = OutcomeConfig::first_modes(4, 3).unwrap();
        let loss = LossModel::for_circuit(&c, 0.3).unwrap();
        let mut rng = RngHandle::new(7);
        for _ in 0..2000 {
            let l = lossy_sample(&c, &t, &loss, &mut rng).unwrap();
            assert_eq!(l.outcome.total() + l.lost_photons, 3);
            if l.no_loss {
                assert_eq!(l.lost_photons, 0);
            }
        }
    }

    #[test]
    fn post_selection_identity() {
        let mut rng = RngHandle::new(8);
        let t = OutcomeConfig::first_modes(4, 2).unwrap();
        for seed in 0..10u64 {
            let c = circuit(100 + seed);
            let rates: Vec<f64> = (0..16).map(|_| 0.3 * rng.random::<f64>()).collect();
            let loss = LossModel::new(rates).unwrap();
            let s = OutcomeConfig::new(vec![0, 1, 1, 0]);
            let want = lossy_outcome_probability(&c, &s, &t, &loss).unwrap();
            let n = 20_000.0;
            let hits = (0..n as usize)
                .filter(|_| {
                    let l = lossy_sample(&c, &t, &loss, &mut rng).unwrap();
                    l.no_loss && l.outcome == s
                })
                .count() as f64;
            let sigma = (want * (1.0 - want) / n).sqrt();
            assert!((hits / n - want).abs() <= 3.0 * sigma + 1.0 / n, "seed {seed}");
        }
    }

    #[test]
    fn lossy_probability_algebra() {
        let c = circuit(83);
        let t = OutcomeConfig::first_modes(4, 2).unwrap();
        let s = OutcomeConfig::new(vec![1, 0, 0, 1]);
        let p = output_probability(&circuit_unitary(&c), &s, &t).unwrap();
        let zero = LossModel::for_circuit(&c, 0.0).unwrap();
        assert_eq!(lossy_outcome_probability(&c, &s, &t, &zero).unwrap(), p);
        let l = LossModel::for_circuit(&c, 0.2).unwrap();
        let ratio = lossy_outcome_probability(&c, &s, &t, &l).unwrap() / p;
        assert!((ratio - 0.8f64.powi(16)).abs() < 1e-12);
        assert!(lossy_outcome_probability(&c, &OutcomeConfig::new(vec![1, 0, 0, 0]), &t, &l).is_err());
    }
}
