//! Looping algorithm for `BB*` viewed as a Beneš network.
//!
//! In `BB*` the outermost layers (1 and 2n) pair adjacent modes, and the
//! inner `2n - 2` layers act separately on even and odd modes with the same
//! `BB*` structure over the remaining index bits. Routing therefore recurses
//! on the lowest mode bit.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::Permutation;
use crate::architecture::{build_kaleidoscope, log2_modes, Circuit};
use crate::error::Result;
use crate::linalg::Gate2;

/// Per-layer switch states: `settings[layer][lower_mode]` (both 0-based) is
/// true when the gate whose lower mode is `lower_mode` swaps.
pub fn switch_settings(p: &Permutation) -> Result<Vec<Vec<bool>>> {
    let m = p.len();
    let depth = log2_modes(m)?;
    let mut settings = vec![vec![false; m]; 2 * depth];
    let modes: Vec<usize> = (0..m).collect();
    route_rec(&modes, p.image(), 0, 2 * depth, &mut settings);
    Ok(settings)
}

fn route_rec(modes: &[usize], perm: &[usize], level: usize, layers: usize, settings: &mut [Vec<bool>]) {
    let m = modes.len();
    let first = level;
    let last = layers - 1 - level;
    if m == 2 {
        settings[first][modes[0]] = perm[0] == 1;
        settings[last][modes[0]] = false;
        return;
    }

    let mut inv = vec![0usize; m];
    for (i, &o) in perm.iter().enumerate() {
        inv[o] = i;
    }

    // side[i]: 0 routes input i through the even-position subnetwork.
    let mut side: Vec<Option<u8>> = vec![None; m];
    for start in 0..m {
        if side[start].is_some() {
            continue;
        }
        let mut x = start;
        loop {
            side[x] = Some(0);
            // x's output partner must arrive through the other subnetwork.
            let partner_in = inv[perm[x] ^ 1];
            if side[partner_in].is_some() {
                break;
            }
            side[partner_in] = Some(1);
            x = partner_in ^ 1;
            if side[x].is_some() {
                break;
            }
        }
    }

    let half = m / 2;
    let mut upper = vec![0usize; half];
    let mut lower = vec![0usize; half];
    for k in 0..half {
        let a = 2 * k;
        let swap_in = side[a] == Some(1);
        settings[first][modes[a]] = swap_in;
        let (to_upper, to_lower) = if swap_in { (a + 1, a) } else { (a, a + 1) };
        upper[k] = perm[to_upper] >> 1;
        lower[k] = perm[to_lower] >> 1;
        // Output switch k: output 2k is fed by the upper subnetwork unless swapped.
        settings[last][modes[a]] = side[inv[a]] == Some(1);
    }

    let upper_modes: Vec<usize> = modes.iter().step_by(2).copied().collect();
    let lower_modes: Vec<usize> = modes.iter().skip(1).step_by(2).copied().collect();
    route_rec(&upper_modes, &upper, level + 1, layers, settings);
    route_rec(&lower_modes, &lower, level + 1, layers, settings);
}

/// Route `p` into `BB*` using only exact swap and identity gates.
pub fn route_permutation(p: &Permutation) -> Result<Circuit> {
    let settings = switch_settings(p)?;
    let arch = build_kaleidoscope(p.len(), 1)?;
    let gates = arch
        .placements()
        .map(|pl| {
            if settings[pl.layer - 1][pl.mode_a - 1] {
                Gate2::SWAP
            } else {
                Gate2::IDENTITY
            }
        })
        .collect();
    Circuit::new(arch, gates)
}

/// Uniform permutation and its routed circuit.
pub fn sample_permutation_circuit<R: Rng + ?Sized>(modes: usize, rng: &mut R) -> Result<(Permutation, Circuit)> {
    log2_modes(modes)?;
    let p = Permutation::random(modes, rng);
    let c = route_permutation(&p)?;
    Ok((p, c))
}
