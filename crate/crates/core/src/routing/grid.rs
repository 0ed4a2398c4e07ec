//! Embedding single-parallel grid circuits into the butterfly `B`.
//!
//! A grid of side lengths `2^{n_1} × … × 2^{n_d}` holds `M = 2^{Σ n_i}` modes,
//! with linear index `Σ c_i · 2^{n_1 + … + n_{i-1}}` (dimension 1 varies
//! fastest). Each dimension carries one gate on every nearest-neighbour edge.
//! Within a dimension the edges are applied in rounds: round `r` holds the
//! edges whose lower coordinate `c` (1-based) has exactly `r` trailing zero
//! bits. Dimensions are applied in ascending order.
//!
//! The embedding relabels grid positions by a product of block reversals so
//! that the edges of round `r` of dimension `i` land on butterfly layer
//! `n_1 + … + n_{i-1} + r + 1`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::Permutation;
use crate::architecture::{build_butterfly, Circuit};
use crate::error::{Error, Result};
use crate::linalg::{haar_gate, CMatrix, ComplexUnitary, Gate2};

/// A nearest-neighbour edge: `dim` (0-based) and the 0-based linear index of
/// its lower endpoint. The upper endpoint is `lower + stride(dim)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GridEdge {
    pub dim: usize,
    pub lower: usize,
}

/// Grid shape plus one gate per edge. Gates are stored by edge in the order
/// of [`GridSpec::edges`]: dimension first, then lower linear index.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    exponents: Vec<usize>,
    gates: Vec<Gate2>,
}

impl GridSpec {
    pub fn new(exponents: Vec<usize>, gates: Vec<Gate2>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one dimension".into()));
        }
        if exponents.contains(&0) {
            return Err(Error::InvalidArgument("every grid side must be at least 2".into()));
        }
        let total: usize = exponents.iter().sum();
        if total >= usize::BITS as usize - 1 {
            return Err(Error::InvalidArgument("grid too large".into()));
        }
        let expected = edge_list(&exponents).len();
        if gates.len() != expected {
            return Err(Error::GateCountMismatch {
                expected,
                found: gates.len(),
            });
        }
        Ok(Self { exponents, gates })
    }

    /// Side lengths given directly; each must be a power of two ≥ 2.
    pub fn from_sizes(sizes: &[usize], gates: Vec<Gate2>) -> Result<Self> {
        let mut exps = Vec::with_capacity(sizes.len());
        for &s in sizes {
            if s < 2 || !s.is_power_of_two() {
                return Err(Error::NotPowerOfTwo(s));
            }
            exps.push(s.trailing_zeros() as usize);
        }
        Self::new(exps, gates)
    }

    pub fn identity(exponents: Vec<usize>) -> Result<Self> {
        let n = edge_list(&exponents).len();
        Self::new(exponents, vec![Gate2::IDENTITY; n])
    }

    /// Independent Haar gates on every edge.
    pub fn random<R: Rng + ?Sized>(exponents: Vec<usize>, rng: &mut R) -> Result<Self> {
        let n = edge_list(&exponents).len();
        let gates = (0..n).map(|_| haar_gate(rng)).collect();
        Self::new(exponents, gates)
    }

    pub fn exponents(&self) -> &[usize] {
        &self.exponents
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.exponents.iter().map(|&n| 1usize << n).collect()
    }

    pub fn dims(&self) -> usize {
        self.exponents.len()
    }

    pub fn modes(&self) -> usize {
        1usize << self.exponents.iter().sum::<usize>()
    }

    pub fn stride(&self, dim: usize) -> usize {
        1usize << self.exponents[..dim].iter().sum::<usize>()
    }

    pub fn gates(&self) -> &[Gate2] {
        &self.gates
    }

    /// All edges in storage order.
    pub fn edges(&self) -> Vec<GridEdge> {
        edge_list(&self.exponents)
    }

    pub fn gate(&self, edge: GridEdge) -> Option<Gate2> {
        self.edges().iter().position(|e| *e == edge).map(|i| self.gates[i])
    }

    /// Edge indices (into [`GridSpec::edges`]) in application order.
    pub fn application_order(&self) -> Vec<usize> {
        let edges = self.edges();
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&i| {
            let e = edges[i];
            let c = self.coordinate(e.lower, e.dim) + 1;
            (e.dim, c.trailing_zeros(), e.lower)
        });
        order
    }

    fn coordinate(&self, index: usize, dim: usize) -> usize {
        (index / self.stride(dim)) % (1usize << self.exponents[dim])
    }

    /// The grid circuit's M×M matrix.
    pub fn unitary(&self) -> ComplexUnitary {
        let edges = self.edges();
        let mut u = CMatrix::identity(self.modes());
        for i in self.application_order() {
            let e = edges[i];
            u.apply_rows(e.lower, e.lower + self.stride(e.dim), &self.gates[i]);
        }
        ComplexUnitary::new_unchecked(u)
    }
}

fn edge_list(exponents: &[usize]) -> Vec<GridEdge> {
    let total: usize = exponents.iter().sum();
    let m = 1usize << total;
    let mut out = Vec::new();
    let mut stride = 1usize;
    for (dim, &n) in exponents.iter().enumerate() {
        let side = 1usize << n;
        for lower in 0..m {
            if (lower / stride) % side != side - 1 {
                out.push(GridEdge { dim, lower });
            }
        }
        stride <<= n;
    }
    out
}

/// Output of an embedding: `image[b]` of `permutation` is the grid position
/// of butterfly mode `b`, and `grid = P · U(circuit) · Pᵀ`.
#[derive(Debug, Clone)]
pub struct GridEmbedding {
    pub permutation: Permutation,
    pub circuit: Circuit,
}

/// Block-reversal relabelling: `arr[pos]` is the butterfly mode placed at grid
/// position `pos` (both 0-based). Later reversals act on the result of
/// earlier ones.
fn reversal_arrangement(exponents: &[usize]) -> Vec<usize> {
    let n: usize = exponents.iter().sum();
    let m = 1usize << n;
    let mut arr: Vec<usize> = (0..m).collect();
    let mut offset = 0usize;
    for &ni in exponents {
        let st = 1usize << offset;
        for layer in offset + 2..=offset + ni {
            let block = 1usize << layer;
            let half = block >> 1;
            for j in 0..(m >> layer) {
                let base = block * j;
                let prev = arr.clone();
                for k in 1..=(1usize << (layer - 1 - offset)) {
                    for l in 0..st {
                        let src = base + half + (k - 1) * st + l;
                        let dst = base + block - k * st + l;
                        arr[dst] = prev[src];
                        arr[src] = prev[dst];
                    }
                }
            }
        }
        offset += ni;
    }
    arr
}

/// Embed a grid circuit into `B` on the same number of modes.
pub fn embed_grid(spec: &GridSpec) -> Result<GridEmbedding> {
    let m = spec.modes();
    let arr = reversal_arrangement(spec.exponents());
    let mut image = vec![0usize; m];
    for (pos, &b) in arr.iter().enumerate() {
        image[b] = pos;
    }
    let permutation = Permutation::new(image)?;

    // Butterfly layer → (dimension, stride).
    let mut layer_dim = Vec::new();
    for (dim, &ni) in spec.exponents().iter().enumerate() {
        layer_dim.extend(core::iter::repeat_n(dim, ni));
    }
    let edges = spec.edges();
    let arch = build_butterfly(m)?;
    let img = permutation.image();
    let gates = arch
        .placements()
        .map(|pl| {
            let dim = layer_dim[pl.layer - 1];
            let st = spec.stride(dim);
            let pa = img[pl.mode_a - 1];
            let pb = img[pl.mode_b - 1];
            let (lo, hi, reversed) = if pa < pb { (pa, pb, false) } else { (pb, pa, true) };
            if hi - lo != st || spec.coordinate(lo, dim) + 1 != spec.coordinate(hi, dim) {
                return Gate2::IDENTITY;
            }
            let edge = GridEdge { dim, lower: lo };
            let idx = edges.binary_search(&edge).expect("grid edge is listed");
            let g = spec.gates()[idx];
            if reversed {
                g.flipped()
            } else {
                g
            }
        })
        .collect();
    let circuit = Circuit::new(arch, gates)?;
    Ok(GridEmbedding { permutation, circuit })
}

/// One-dimensional chain: `chain[s]` acts on modes `s` and `s+1` (0-based).
pub fn embed_grid_1d(chain: &[Gate2]) -> Result<GridEmbedding> {
    let m = chain.len() + 1;
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(m));
    }
    let spec = GridSpec::new(vec![m.trailing_zeros() as usize], chain.to_vec())?;
    embed_grid(&spec)
}
