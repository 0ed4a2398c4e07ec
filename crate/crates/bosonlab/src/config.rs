//! Run configuration: one typed parameter block per subcommand, shared by
//! the command line and JSON config files. Flags override file values.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::io::{IoError, IoResult};

/// Defines a parameter struct (with defaults and serde support) and a
/// matching clap argument struct whose fields are all optional.
macro_rules! params {
    (
        $(#[$doc:meta])*
        $name:ident / $args:ident {
            $( $(#[$fdoc:meta])* $field:ident : $ty:ty = $default:expr $(; [$($arg:tt)*])? ),* $(,)?
        }
    ) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
        #[serde(default, deny_unknown_fields)]
        pub struct $name {
            $( $(#[$fdoc])* pub $field: $ty, )*
        }

        impl Default for $name {
            fn default() -> Self {
                Self { $( $field: $default, )* }
            }
        }

        $(#[$doc])*
        #[derive(Debug, Clone, Default, clap::Args)]
        pub struct $args {
            $( $(#[$fdoc])* #[arg(long $(, $($arg)*)?)] pub $field: Option<$ty>, )*
        }

        impl $args {
            /// Fill every flag that was not given from `base`.
            pub fn merge(self, base: $name) -> $name {
                $name { $( $field: self.$field.unwrap_or(base.$field), )* }
            }
        }
    };
}

params! {
    /// Collision-free ratio of local, Haar and permuted-local circuits.
    CollisionRatio / CollisionRatioArgs {
        modes: usize = 64,
        /// Photon numbers, comma separated.
        photons: Vec<usize> = vec![4, 6, 8]; [value_delimiter = ','],
        /// Repetitions q of BB*, comma separated.
        reps: Vec<usize> = vec![1, 2, 3]; [value_delimiter = ','],
        circuits: usize = 100,
        samples: usize = 200,
        /// Comma-separated subset of local, haar, localperm.
        ensembles: String = "local,haar".into(),
        /// Start from M = 256, N ∈ {4, 8, 12, 16}, 500 circuits × 500 samples;
        /// other flags still override.
        full_scale: bool = false; [num_args = 0..=1, default_missing_value = "true"],
    }
}

params! {
    /// Collision probability over locally random circuits with a permutation layer.
    BirthdayBound / BirthdayBoundArgs {
        modes: usize = 32,
        photons: usize = 3,
        q: usize = 1,
        circuits: usize = 100,
        samples: usize = 200,
        /// Largest N of the exhaustive combinatorial check.
        max_photons: usize = 8,
        /// Largest M of the exhaustive combinatorial check.
        max_modes: usize = 256,
    }
}

params! {
    /// Singleton counts of balls thrown into bins.
    BallsBins / BallsBinsArgs {
        modes: usize = 256,
        balls: usize = 16,
        trials: usize = 10_000,
        /// Threshold c of the lower-tail estimate Pr[Z ≤ c].
        threshold: f64 = 4.0,
    }
}

params! {
    /// Route a permutation through BB* with switch gates.
    RoutePermutation / RoutePermutationArgs {
        /// 1-based images, comma separated; empty draws a random permutation.
        perm: String = String::new(),
        /// Mode count for a random permutation.
        modes: usize = 8,
    }
}

params! {
    /// Extrapolate a worst-case probability from perturbed circuits.
    ReductionDemo / ReductionDemoArgs {
        modes: usize = 2,
        photons: usize = 1,
        q0: usize = 1,
        delta: f64 = 0.05,
        /// double, extended or auto.
        precision: String = "auto".into(),
        runs: usize = 1,
        tolerance: f64 = 1e-6,
    }
}

params! {
    /// Fit p·Q with polynomials of degree 4mN and 4mN − 1.
    DegreeCheck / DegreeCheckArgs {
        modes: usize = 2,
        photons: usize = 1,
        q: usize = 1,
        /// Relative residual accepted for the degree-4mN fit.
        tolerance: f64 = 1e-8,
        /// Also certify the degree with exact rational arithmetic.
        exact: bool = true; [num_args = 0..=1, default_missing_value = "true"],
    }
}

params! {
    /// Post-selection on "no loss event" under stochastic photon loss.
    LossCheck / LossCheckArgs {
        modes: usize = 4,
        photons: usize = 2,
        q: usize = 1,
        rho: f64 = 0.15,
        samples: usize = 200_000,
    }
}

params! {
    /// The squeezed-state embedding identity and its oracles.
    GbsCheck / GbsCheckArgs {
        m0: usize = 2,
        n0: usize = 1,
        r: f64 = 0.5,
        runs: usize = 20,
        cutoff: usize = 6,
    }
}

impl CollisionRatio {
    /// The full-size configuration.
    pub fn full_scale() -> Self {
        Self {
            modes: 256,
            photons: vec![4, 8, 12, 16],
            circuits: 500,
            samples: 500,
            full_scale: true,
            ..Self::default()
        }
    }
}

/// One subcommand with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CollisionRatio(CollisionRatio),
    BirthdayBound(BirthdayBound),
    BallsBins(BallsBins),
    RoutePermutation(RoutePermutation),
    ReductionDemo(ReductionDemo),
    DegreeCheck(DegreeCheck),
    LossCheck(LossCheck),
    GbsCheck(GbsCheck),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::CollisionRatio(_) => "collision-ratio",
            Self::BirthdayBound(_) => "birthday-bound",
            Self::BallsBins(_) => "balls-bins",
            Self::RoutePermutation(_) => "route-permutation",
            Self::ReductionDemo(_) => "reduction-demo",
            Self::DegreeCheck(_) => "degree-check",
            Self::LossCheck(_) => "loss-check",
            Self::GbsCheck(_) => "gbs-check",
        }
    }

    /// Artifact format used when none is requested.
    pub fn default_format(&self) -> Format {
        match self {
            Self::CollisionRatio(_) => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: 0,
            out: None,
            format: None,
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_else(|| self.command.default_format())
    }

    pub fn to_json(&self) -> IoResult<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> IoResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> IoResult<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(IoError::Io)?)
    }
}
