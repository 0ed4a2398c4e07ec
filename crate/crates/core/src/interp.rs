//! Polynomial interpolation on real nodes: Lagrange extrapolation from
//! equally spaced nodes and barycentric evaluation on Chebyshev nodes.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_traits::Float;

use crate::error::{Error, Result};

/// `count` equally spaced nodes from `a` to `b` inclusive.
pub fn equispaced_nodes(a: f64, b: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => alloc::vec![a],
        _ => (0..count)
            .map(|i| a + (b - a) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Chebyshev points of the first kind mapped to `[a, b]`, ascending.
pub fn chebyshev_nodes(a: f64, b: f64, count: usize) -> Vec<f64> {
    let n = count as f64;
    (0..count)
        .rev()
        .map(|k| {
            let x = Float::cos((2.0 * k as f64 + 1.0) * PI / (2.0 * n));
            0.5 * (a + b) + 0.5 * (b - a) * x
        })
        .collect()
}

fn check_nodes(nodes: &[f64], values: usize) -> Result<()> {
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("no interpolation nodes".into()));
    }
    if nodes.len() != values {
        return Err(Error::DimensionMismatch {
            left: nodes.len(),
            right: values,
        });
    }
    for (i, a) in nodes.iter().enumerate() {
        for b in &nodes[..i] {
            if a == b {
                return Err(Error::InvalidArgument("repeated interpolation node".into()));
            }
        }
    }
    Ok(())
}

/// Cardinal values `ℓ_i(x)` of the Lagrange basis.
pub fn lagrange_basis(nodes: &[f64], x: f64) -> Result<Vec<f64>> {
    check_nodes(nodes, nodes.len())?;
    Ok((0..nodes.len())
        .map(|i| {
            let mut l = 1.0;
            for (j, &xj) in nodes.iter().enumerate() {
                if j != i {
                    l *= (x - xj) / (nodes[i] - xj);
                }
            }
            l
        })
        .collect())
}

/// Value at `x` of the interpolating polynomial through `(nodes, values)`.
pub fn lagrange_eval(nodes: &[f64], values: &[f64], x: f64) -> Result<f64> {
    check_nodes(nodes, values.len())?;
    let basis = lagrange_basis(nodes, x)?;
    Ok(basis.iter().zip(values).map(|(l, y)| l * y).sum())
}

/// Lebesgue function `Σ |ℓ_i(x)|`: the worst-case growth of value errors
/// when evaluating the interpolant at `x`.
pub fn lebesgue_factor(nodes: &[f64], x: f64) -> Result<f64> {
    Ok(lagrange_basis(nodes, x)?.iter().map(|l| l.abs()).sum())
}

/// Barycentric weights `1 / Π_{j≠i} (x_i − x_j)`, rescaled so the largest has
/// magnitude one (the formula is invariant under a common scale).
pub fn barycentric_weights(nodes: &[f64]) -> Result<Vec<f64>> {
    check_nodes(nodes, nodes.len())?;
    // Accumulate log-magnitudes and signs to stay clear of overflow.
    let mut logs = Vec::with_capacity(nodes.len());
    let mut signs = Vec::with_capacity(nodes.len());
    for (i, &xi) in nodes.iter().enumerate() {
        let mut log = 0.0;
        let mut sign = 1.0;
        for (j, &xj) in nodes.iter().enumerate() {
            if j != i {
                let d = xi - xj;
                log -= Float::ln(Float::abs(d));
                if d < 0.0 {
                    sign = -sign;
                }
            }
        }
        logs.push(log);
        signs.push(sign);
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(logs
        .iter()
        .zip(&signs)
        .map(|(l, s)| s * Float::exp(l - max))
        .collect())
}

/// Second barycentric formula.
pub fn barycentric_eval(nodes: &[f64], weights: &[f64], values: &[f64], x: f64) -> Result<f64> {
    check_nodes(nodes, values.len())?;
    if weights.len() != nodes.len() {
        return Err(Error::DimensionMismatch {
            left: nodes.len(),
            right: weights.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for ((&xi, &w), &y) in nodes.iter().zip(weights).zip(values) {
        let d = x - xi;
        if d == 0.0 {
            return Ok(y);
        }
        num += w / d * y;
        den += w / d;
    }
    Ok(num / den)
}
