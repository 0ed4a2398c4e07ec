//! Butterfly, inverse butterfly and Kaleidoscope gate layouts.
//!
//! Mode indices are 1-based throughout this module. Layer `L` of the butterfly
//! on `M = 2^D` modes couples `2^L (j-1) + k` with `2^L (j-1) + k + 2^{L-1}`
//! for `j = 1..2^{D-L}` and `k = 1..2^{L-1}`.
//!
//! Application order: layer 1 acts first on the input state, so the circuit
//! matrix is the product of layer blocks with layer 1 as the rightmost factor.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{haar_gate, CMatrix, ComplexUnitary, Gate2, UNITARY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GatePlacement {
    /// 1-based layer index within the architecture.
    pub layer: usize,
    pub mode_a: usize,
    pub mode_b: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArchLabel {
    Butterfly,
    InverseButterfly,
    /// `(B B*)^q`; `q = 1` is the plain `BB*` layout.
    Kaleidoscope(usize),
}

impl fmt::Display for ArchLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArchLabel::Butterfly => f.write_str("B"),
            ArchLabel::InverseButterfly => f.write_str("B*"),
            ArchLabel::Kaleidoscope(1) => f.write_str("BBstar"),
            ArchLabel::Kaleidoscope(q) => write!(f, "Kaleidoscope({q})"),
        }
    }
}

impl core::str::FromStr for ArchLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "B" => Ok(ArchLabel::Butterfly),
            "B*" => Ok(ArchLabel::InverseButterfly),
            "BBstar" => Ok(ArchLabel::Kaleidoscope(1)),
            _ => s
                .strip_prefix("Kaleidoscope(")
                .and_then(|r| r.strip_suffix(')'))
                .and_then(|q| q.parse::<usize>().ok())
                .filter(|&q| q >= 1)
                .map(ArchLabel::Kaleidoscope)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown architecture label {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    modes: usize,
    label: ArchLabel,
    layers: Vec<Vec<GatePlacement>>,
}

pub fn log2_modes(modes: usize) -> Result<usize> {
    if modes < 2 || !modes.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(modes));
    }
    Ok(modes.trailing_zeros() as usize)
}

/// Mode pairs of butterfly layer `level` (1-based), before layer renumbering.
fn butterfly_level(modes: usize, level: usize) -> Vec<(usize, usize)> {
    let depth = modes.trailing_zeros() as usize;
    let half = 1usize << (level - 1);
    let block = 1usize << level;
    let mut pairs = Vec::with_capacity(modes / 2);
    for j in 1..=(1usize << (depth - level)) {
        for k in 1..=half {
            let a = block * (j - 1) + k;
            pairs.push((a, a + half));
        }
    }
    pairs
}

impl Architecture {
    fn from_levels(modes: usize, label: ArchLabel, levels: impl IntoIterator<Item = usize>) -> Self {
        let layers = levels
            .into_iter()
            .enumerate()
            .map(|(i, level)| {
                butterfly_level(modes, level)
                    .into_iter()
                    .map(|(a, b)| GatePlacement {
                        layer: i + 1,
                        mode_a: a,
                        mode_b: b,
                    })
                    .collect()
            })
            .collect();
        Self {
            modes,
            label,
            layers,
        }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn label(&self) -> ArchLabel {
        self.label
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<GatePlacement>] {
        &self.layers
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Placements in application order.
    pub fn placements(&self) -> impl Iterator<Item = &GatePlacement> + '_ {
        self.layers.iter().flatten()
    }

    /// Append the layers of `other`, renumbering them.
    pub fn concat(&self, other: &Architecture, label: ArchLabel) -> Result<Architecture> {
        if self.modes != other.modes {
            return Err(Error::DimensionMismatch {
                left: self.modes,
                right: other.modes,
            });
        }
        let offset = self.depth();
        let mut layers = self.layers.clone();
        layers.extend(other.layers.iter().map(|layer| {
            layer
                .iter()
                .map(|p| GatePlacement {
                    layer: p.layer + offset,
                    ..*p
                })
                .collect()
        }));
        Ok(Architecture {
            modes: self.modes,
            label,
            layers,
        })
    }

    /// True when no mode appears twice within a layer.
    pub fn layers_are_disjoint(&self) -> bool {
        self.layers.iter().all(|layer| {
            let mut seen = alloc::vec![false; self.modes + 1];
            layer.iter().all(|p| {
                let fresh = !seen[p.mode_a] && !seen[p.mode_b];
                seen[p.mode_a] = true;
                seen[p.mode_b] = true;
                fresh && p.mode_a < p.mode_b && p.mode_b <= self.modes
            })
        })
    }
}

pub fn build_butterfly(modes: usize) -> Result<Architecture> {
    let depth = log2_modes(modes)?;
    Ok(Architecture::from_levels(modes, ArchLabel::Butterfly, 1..=depth))
}

pub fn build_inverse_butterfly(modes: usize) -> Result<Architecture> {
    let depth = log2_modes(modes)?;
    Ok(Architecture::from_levels(
        modes,
        ArchLabel::InverseButterfly,
        (1..=depth).rev(),
    ))
}

/// `(B B*)^q`: q copies of the butterfly followed by its inverse.
pub fn build_kaleidoscope(modes: usize, q: usize) -> Result<Architecture> {
    let depth = log2_modes(modes)?;
    if q == 0 {
        return Err(Error::InvalidArgument(String::from("q must be at least 1")));
    }
    let levels = (0..q).flat_map(move |_| (1..=depth).chain((1..=depth).rev()));
    Ok(Architecture::from_levels(
        modes,
        ArchLabel::Kaleidoscope(q),
        levels,
    ))
}

/// An architecture with one concrete 2×2 unitary per placement.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    arch: Architecture,
    gates: Vec<Gate2>,
}

impl Circuit {
    pub fn new(arch: Architecture, gates: Vec<Gate2>) -> Result<Self> {
        if gates.len() != arch.gate_count() {
            return Err(Error::GateCountMismatch {
                expected: arch.gate_count(),
                found: gates.len(),
            });
        }
        for g in &gates {
            let deviation = g.unitarity_deviation();
            if deviation > UNITARY_TOL {
                return Err(Error::NotUnitary { deviation });
            }
        }
        Ok(Self { arch, gates })
    }

    pub fn identity(arch: Architecture) -> Self {
        let gates = alloc::vec![Gate2::IDENTITY; arch.gate_count()];
        Self { arch, gates }
    }

    /// Every placement filled with an independent Haar U(2) gate.
    pub fn random<R: Rng + ?Sized>(arch: Architecture, rng: &mut R) -> Self {
        let gates = (0..arch.gate_count()).map(|_| haar_gate(rng)).collect();
        Self { arch, gates }
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn gates(&self) -> &[Gate2] {
        &self.gates
    }

    pub fn modes(&self) -> usize {
        self.arch.modes
    }

    /// `(placement, gate)` pairs in application order.
    pub fn iter(&self) -> impl Iterator<Item = (&GatePlacement, &Gate2)> + '_ {
        self.arch.placements().zip(&self.gates)
    }

    /// Serial composition: `self` first, then `next`.
    pub fn then(&self, next: &Circuit, label: ArchLabel) -> Result<Circuit> {
        let arch = self.arch.concat(&next.arch, label)?;
        let mut gates = self.gates.clone();
        gates.extend_from_slice(&next.gates);
        Ok(Circuit { arch, gates })
    }

    pub(crate) fn with_gates(&self, gates: Vec<Gate2>) -> Circuit {
        debug_assert_eq!(gates.len(), self.gates.len());
        Circuit {
            arch: self.arch.clone(),
            gates,
        }
    }
}

/// The M×M matrix of a circuit: layer blocks multiplied with layer 1 rightmost.
pub fn circuit_unitary(c: &Circuit) -> ComplexUnitary {
    let mut u = CMatrix::identity(c.modes());
    for (p, g) in c.iter() {
        u.apply_rows(p.mode_a - 1, p.mode_b - 1, g);
    }
    ComplexUnitary::new_unchecked(u)
}

#[cfg(test)]
mod tests {
    use std::string::ToString;
    use super::*;
    use crate::rng::RngHandle;
    use num_complex::Complex64;
    use std::collections::BTreeSet;
    use std::vec;

    #[test]
    fn butterfly_counts() {
        for n in 1..=8 {
            let m = 1usize << n;
            let b = build_butterfly(m).unwrap();
            assert_eq!(b.depth(), n);
            assert_eq!(b.gate_count(), m / 2 * n);
            assert!(b.layers_are_disjoint());
            for q in 1..=3 {
                let k = build_kaleidoscope(m, q).unwrap();
                assert_eq!(k.depth(), 2 * q * n);
                assert_eq!(k.gate_count(), q * m * n);
                assert!(k.layers_are_disjoint());
            }
        }
    }

    #[test]
    fn butterfly_m16_matches_figure() {
        let b = build_butterfly(16).unwrap();
        assert_eq!(b.depth(), 4);
        assert_eq!(b.gate_count(), 32);
    }

    #[test]
    fn butterfly_m2() {
        let b = build_butterfly(2).unwrap();
        let p: Vec<_> = b.placements().map(|p| (p.mode_a, p.mode_b)).collect();
        assert_eq!(p, vec![(1, 2)]);
    }

    #[test]
    fn butterfly_m8_layer2_block1() {
        let b = build_butterfly(8).unwrap();
        let first_block: BTreeSet<_> = b.layers()[1]
            .iter()
            .filter(|p| p.mode_b <= 4)
            .map(|p| (p.mode_a, p.mode_b))
            .collect();
        assert_eq!(first_block, BTreeSet::from([(1, 3), (2, 4)]));
    }

    #[test]
    fn inverse_butterfly_reverses() {
        let b = build_butterfly(16).unwrap();
        let bs = build_inverse_butterfly(16).unwrap();
        assert_eq!(bs.depth(), b.depth());
        let strip = |l: &[GatePlacement]| -> Vec<_> { l.iter().map(|p| (p.mode_a, p.mode_b)).collect() };
        assert_eq!(strip(&bs.layers()[0]), strip(&b.layers()[3]));

        let bs4 = build_inverse_butterfly(4).unwrap();
        assert_eq!(strip(&bs4.layers()[0]), vec![(1, 3), (2, 4)]);
        assert_eq!(strip(&bs4.layers()[1]), vec![(1, 2), (3, 4)]);
    }

    #[test]
    fn kaleidoscope_counts_and_concat() {
        let k = build_kaleidoscope(16, 2).unwrap();
        assert_eq!(k.depth(), 16);
        assert_eq!(k.gate_count(), 128);
        assert_eq!(build_kaleidoscope(4, 3).unwrap().gate_count(), 24);

        let b = build_butterfly(8).unwrap();
        let bs = build_inverse_butterfly(8).unwrap();
        let joined = b.concat(&bs, ArchLabel::Kaleidoscope(1)).unwrap();
        assert_eq!(joined, build_kaleidoscope(8, 1).unwrap());
    }

    #[test]
    fn rejects_bad_modes() {
        assert_eq!(build_butterfly(6), Err(Error::NotPowerOfTwo(6)));
        assert_eq!(build_butterfly(1), Err(Error::NotPowerOfTwo(1)));
        assert!(build_kaleidoscope(8, 0).is_err());
    }

    #[test]
    fn label_roundtrip() {
        for l in [
            ArchLabel::Butterfly,
            ArchLabel::InverseButterfly,
            ArchLabel::Kaleidoscope(1),
            ArchLabel::Kaleidoscope(3),
        ] {
            assert_eq!(l.to_string().parse::<ArchLabel>().unwrap(), l);
        }
    }

    #[test]
    fn identity_gates_give_identity() {
        let c = Circuit::identity(build_kaleidoscope(8, 2).unwrap());
        let u = circuit_unitary(&c);
        assert_eq!(u.matrix(), &CMatrix::identity(8));
    }

    #[test]
    fn single_gate_m2() {
        let mut rng = RngHandle::new(4);
        let c = Circuit::random(build_butterfly(2).unwrap(), &mut rng);
        let u = circuit_unitary(&c);
        assert!(u.matrix().max_abs_diff(&c.gates()[0].to_matrix()).unwrap() < 1e-15);
    }

    /// Oracle: embed every gate as a dense M×M block and multiply naively.
    fn naive_unitary(c: &Circuit) -> CMatrix {
        let m = c.modes();
        let mut u = CMatrix::identity(m);
        for (p, g) in c.iter() {
            let mut block = CMatrix::identity(m);
            let (a, b) = (p.mode_a - 1, p.mode_b - 1);
            block[(a, a)] = g.0[0];
            block[(a, b)] = g.0[1];
            block[(b, a)] = g.0[2];
            block[(b, b)] = g.0[3];
            let mut next = CMatrix::zeros(m, m);
            for i in 0..m {
                for j in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..m {
                        acc += block[(i, k)] * u[(k, j)];
                    }
                    next[(i, j)] = acc;
                }
            }
            u = next;
        }
        u
    }

    #[test]
    fn circuit_unitary_matches_naive_blocks() {
        let mut rng = RngHandle::new(17);
        let c = Circuit::random(build_kaleidoscope(4, 1).unwrap(), &mut rng);
        let u = circuit_unitary(&c);
        assert!(u.matrix().max_abs_diff(&naive_unitary(&c)).unwrap() <= 1e-12);
    }

    #[test]
    fn large_random_circuit_stays_unitary() {
        let mut rng = RngHandle::new(18);
        // 3 * 32 * 5 = 480 gates
        let c = Circuit::random(build_kaleidoscope(32, 3).unwrap(), &mut rng);
        assert!(circuit_unitary(&c).matrix().unitarity_deviation() < 1e-9);
        let c = Circuit::random(build_kaleidoscope(64, 2).unwrap(), &mut rng);
        assert_eq!(c.gates().len(), 768);
        assert!(circuit_unitary(&c).matrix().unitarity_deviation() < 1e-9);
    }

    #[test]
    fn circuit_rejects_wrong_gate_count() {
        let arch = build_butterfly(4).unwrap();
        assert!(matches!(
            Circuit::new(arch, vec![Gate2::IDENTITY]),
            Err(Error::GateCountMismatch { expected: 4, found: 1 })
        ));
    }
}
