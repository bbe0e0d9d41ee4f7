//! Robust (strong) typicality with a multiplicative tolerance.

use crate::error::{Error, Result};
use crate::prob::JointDist;

/// Tests whether the tuple of sequences is jointly delta-typical for the
/// reference distribution: every cell's empirical frequency must be within
/// `delta * p(cell)` of `p(cell)`, and cells outside the support must never
/// occur.
pub fn typical(sequences: &[&[u8]], reference: &JointDist, delta: f64) -> Result<bool> {
    if sequences.len() != reference.num_vars() {
        return Err(Error::ShapeMismatch {
            expected: reference.num_vars(),
            got: sequences.len(),
        });
    }
    let n = sequences.first().map(|s| s.len()).unwrap_or(0);
    if sequences.iter().any(|s| s.len() != n) {
        return Err(Error::LengthMismatch);
    }
    if n == 0 {
        return Err(Error::LengthMismatch);
    }
    let dims = reference.dims();
    let mut counts = vec![0u32; reference.probs().len()];
    for i in 0..n {
        let mut flat = 0usize;
        for (seq, &d) in sequences.iter().zip(&dims) {
            flat = flat * d + seq[i] as usize;
        }
        // Reject immediately on a zero-probability cell.
        if reference.probs()[flat] == 0.0 {
            return Ok(false);
        }
        counts[flat] += 1;
    }
    let n = n as f64;
    for (&count, &p) in counts.iter().zip(reference.probs()) {
        if (count as f64 / n - p).abs() > delta * p {
            return Ok(false);
        }
    }
    Ok(true)
}
