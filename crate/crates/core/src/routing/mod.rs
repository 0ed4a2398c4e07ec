//! Permutation routing into `BB*` and grid-circuit embeddings into `B`.

mod benes;
mod grid;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::architecture::{circuit_unitary, Circuit};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, ComplexUnitary};
use crate::probability::OutcomeConfig;

pub use benes::{route_permutation, sample_permutation_circuit, switch_settings};
pub use grid::{embed_grid, embed_grid_1d, GridEdge, GridEmbedding, GridSpec};

/// A bijection on modes. `image[i]` is the destination of mode `i` (0-based);
/// the matrix has `P[image[i]][i] = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    image: Vec<usize>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &d in &image {
            if d >= n {
                return Err(Error::InvalidPermutation(format!("destination {d} out of range 0..{n}")));
            }
            if seen[d] {
                return Err(Error::InvalidPermutation(format!("destination {d} repeated")));
            }
            seen[d] = true;
        }
        Ok(Self { image })
    }

    /// Build from 1-based destinations, as written on the command line.
    pub fn from_one_based(image: &[usize]) -> Result<Self> {
        let zero: Option<Vec<usize>> = image.iter().map(|&d| d.checked_sub(1)).collect();
        match zero {
            Some(z) => Self::new(z),
            None => Err(Error::InvalidPermutation(format!("mode indices are 1-based: {image:?}"))),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            image: (0..n).collect(),
        }
    }

    /// Uniform over all n! permutations (Fisher–Yates).
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut image: Vec<usize> = (0..n).collect();
        image.shuffle(rng);
        Self { image }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.image.iter().map(|d| d + 1).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (i, &d) in self.image.iter().enumerate() {
            inv[d] = i;
        }
        Self { image: inv }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn after(&self, other: &Permutation) -> Self {
        Self {
            image: other.image.iter().map(|&i| self.image[i]).collect(),
        }
    }

    pub fn matrix(&self) -> ComplexUnitary {
        let n = self.len();
        let mut m = CMatrix::zeros(n, n);
        for (i, &d) in self.image.iter().enumerate() {
            m[(d, i)] = Complex64::new(1.0, 0.0);
        }
        ComplexUnitary::new_unchecked(m)
    }

    /// Occupation moved along the permutation: `out[image[i]] = s[i]`.
    pub fn apply_to_outcome(&self, s: &OutcomeConfig) -> Result<OutcomeConfig> {
        if s.modes() != self.len() {
            return Err(Error::ModeCountMismatch {
                expected: self.len(),
                found: s.modes(),
            });
        }
        let mut out = vec![0; self.len()];
        for (i, &d) in self.image.iter().enumerate() {
            out[d] = s.occupation()[i];
        }
        Ok(OutcomeConfig::new(out))
    }
}

/// `‖target − P · U(C′) · Pᵀ‖_max`.
pub fn verify_embedding(target: &ComplexUnitary, p: &Permutation, c_prime: &Circuit) -> Result<f64> {
    let m = target.dim();
    if p.len() != m || c_prime.modes() != m {
        return Err(Error::DimensionMismatch {
            left: m,
            right: if p.len() != m { p.len() } else { c_prime.modes() },
        });
    }
    let u = circuit_unitary(c_prime);
    let img = p.image();
    let mut worst = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let d = (target[(img[i], img[j])] - u[(i, j)]).norm();
            worst = worst.max(d);
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngHandle;

    #[test]
    fn permutation_validation() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
        let p = Permutation::from_one_based(&[3, 1, 2]).unwrap();
        assert_eq!(p.image(), &[2, 0, 1]);
        assert_eq!(p.to_one_based(), vec![3, 1, 2]);
    }

    #[test]
    fn inverse_and_composition() {
        let mut rng = RngHandle::new(3);
        let p = Permutation::random(9, &mut rng);
        assert_eq!(p.after(&p.inverse()), Permutation::identity(9));
        let q = Permutation::random(9, &mut rng);
        let pq = p.matrix().matrix().matmul(q.matrix().matrix()).unwrap();
        assert_eq!(&pq, p.after(&q).matrix().matrix());
    }

    #[test]
    fn outcome_moves_with_matrix() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let s = OutcomeConfig::new(vec![1, 0, 2]);
        assert_eq!(p.apply_to_outcome(&s).unwrap().occupation(), &[0, 2, 1]);
    }
}
