//! Shannon information measures on [`JointDist`] values plus the binary
//! helpers the closed-form examples use. Everything is in bits (log base 2).

use crate::error::{Error, Result};
use crate::prob::JointDist;

/// Information quantity in bits.
pub type Bits = f64;

/// Negative results larger than this are treated as logic errors instead of
/// float noise.
const NEG_NOISE_TOL: f64 = 1e-10;

fn plain_entropy(dist: &JointDist) -> f64 {
    dist.probs()
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * p.log2())
        .sum()
}

fn clamp_nonneg(what: &'static str, value: f64) -> Result<Bits> {
    if value < -NEG_NOISE_TOL {
        return Err(Error::Internal(format!("{what} = {value} is negative")));
    }
    Ok(value.max(0.0))
}

/// Conditional entropy H(target | given) with the 0·log 0 = 0 convention.
/// Overlapping variable sets are allowed; H(X|X) is 0.
pub fn entropy(joint: &JointDist, target: &[&str], given: &[&str]) -> Result<Bits> {
    let mut union: Vec<&str> = given.to_vec();
    for role in target {
        if !union.contains(role) {
            union.push(role);
        }
    }
    let h_union = plain_entropy(&joint.marginalize(&union)?);
    let h_given = if given.is_empty() {
        0.0
    } else {
        plain_entropy(&joint.marginalize(given)?)
    };
    clamp_nonneg("conditional entropy", h_union - h_given)
}

fn union<'a>(lists: &[&[&'a str]]) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for list in lists {
        for role in *list {
            if !out.contains(role) {
                out.push(role);
            }
        }
    }
    out
}

/// Conditional mutual information I(A; B | given), evaluated as
/// H(A,C) + H(B,C) − H(C) − H(A,B,C).
pub fn mutual_information(
    joint: &JointDist,
    a: &[&str],
    b: &[&str],
    given: &[&str],
) -> Result<Bits> {
    let ac = union(&[a, given]);
    let bc = union(&[b, given]);
    let abc = union(&[a, b, given]);
    let h_ac = plain_entropy(&joint.marginalize(&ac)?);
    let h_bc = plain_entropy(&joint.marginalize(&bc)?);
    let h_c = if given.is_empty() {
        0.0
    } else {
        plain_entropy(&joint.marginalize(given)?)
    };
    let h_abc = plain_entropy(&joint.marginalize(&abc)?);
    clamp_nonneg("mutual information", h_ac + h_bc - h_c - h_abc)
}

/// Binary entropy H_b(p) in bits, with H_b(0) = H_b(1) = 0.
pub fn binary_entropy(p: f64) -> Result<Bits> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange {
            what: "binary entropy argument",
            value: p,
        });
    }
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    Ok(term(p) + term(1.0 - p))
}

/// Binary convolution p*q = p(1−q) + (1−p)q.
pub fn binary_convolve(p: f64, q: f64) -> Result<f64> {
    for &(what, v) in &[("binary convolution p", p), ("binary convolution q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::OutOfRange { what, value: v });
        }
    }
    Ok(p * (1.0 - q) + (1.0 - p) * q)
}
