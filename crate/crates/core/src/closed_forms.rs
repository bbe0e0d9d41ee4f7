//! Closed-form expressions for the binary examples: the two-state Z-channel,
//! the binary fading channel with and without successive refinement, and the
//! causal-helper binary channel, together with the explicit constructions
//! used to cross-validate them against the generic evaluators.

use crate::error::{Error, Result};
use crate::info::{binary_convolve, binary_entropy, Bits};
use crate::prob::{make_joint, Alphabet, CondDist, FactoredModel, JointDist, Variant};
use serde::Serialize;

fn hb(p: f64) -> Result<Bits> {
    binary_entropy(p)
}

fn check_prob(what: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::OutOfRange { what, value: v });
    }
    Ok(())
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// `(1-a) * H_b(min(d/(1-a), 1/2))`, extended by its limits at a = 1 (zero)
/// and continuous elsewhere.
fn scaled_tail_entropy(alpha: f64, d: f64) -> Result<f64> {
    let w = 1.0 - alpha;
    if w <= 0.0 {
        return Ok(0.0);
    }
    Ok(w * hb((d / w).min(0.5))?)
}

/// Parameters of the two-state Z-channel example with a coarse description
/// V11 = S xor N1 xor N2 and refinement V12 = X xor S xor N1.
#[derive(Debug, Clone, Copy)]
pub struct ZChannelParams {
    /// Bernoulli parameter of N1 (the target distortion).
    pub d: f64,
    /// Bernoulli parameter of N2 (the refinement knob).
    pub dp: f64,
    /// P(X = 1 | V11 = 0).
    pub alpha: f64,
    /// P(X = 1 | V11 = 1).
    pub beta: f64,
}

impl ZChannelParams {
    pub fn new(d: f64, dp: f64) -> Self {
        Self {
            d,
            dp,
            alpha: 0.4,
            beta: 0.6,
        }
    }

    fn validate(&self) -> Result<()> {
        check_prob("z-channel d", self.d)?;
        check_prob("z-channel dp", self.dp)?;
        check_prob("z-channel alpha", self.alpha)?;
        check_prob("z-channel beta", self.beta)
    }
}

/// The five displayed quantities of the Z-channel example, in bits.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZChannelMetrics {
    pub r: Bits,
    pub i_v11_s: Bits,
    pub i_v12_s_given: Bits,
    pub h_y_xv11: Bits,
    pub h_y_xv11v12: Bits,
}

/// Evaluates the Z-channel example formulas at the given parameters.
pub fn z_channel_metrics(p: &ZChannelParams) -> Result<ZChannelMetrics> {
    p.validate()?;
    let (d, dp, a, b) = (p.d, p.dp, p.alpha, p.beta);
    let dd = binary_convolve(d, dp)?;
    let r = (1.0 - dd) / 2.0 * (hb(1.0 - a / 2.0)? + hb((1.0 - b) / 2.0)?)
        + dd / 2.0 * (hb(1.0 - b / 2.0)? + hb((1.0 - a) / 2.0)?)
        - ((1.0 - dd) * a + dd * b) / 2.0
        - (dd * (1.0 - a) + (1.0 - dd) * (1.0 - b)) / 2.0;
    let i_v11_s = 1.0 - hb(dd)?;
    let i_v12_s_given = hb(dd)? - hb(d)?;
    let h_y_xv11 =
        0.5 * (1.0 - a + b) * hb(dd / 2.0)? + 0.5 * (1.0 - b + a) * hb((1.0 + dd) / 2.0)?;
    let h_y_xv11v12 = 0.5 * (1.0 - a + b + 2.0 * a * dp - 2.0 * b * dp) * hb(d / 2.0)?
        + 0.5 * (1.0 + a - b - 2.0 * a * dp + 2.0 * b * dp) * hb((1.0 + d) / 2.0)?;
    Ok(ZChannelMetrics {
        r,
        i_v11_s,
        i_v12_s_given,
        h_y_xv11,
        h_y_xv11v12,
    })
}

/// State-conditional Z-channel: under S = 0 the input 1 is erased to 0 with
/// probability 1/2, under S = 1 the input 0 is lifted to 1 with probability
/// 1/2.
pub fn z_channel_transition(y: usize, x: usize, s: usize) -> f64 {
    let p1 = match (x, s) {
        (0, 0) => 0.0,
        (1, 0) => 0.5,
        (0, 1) => 0.5,
        (1, 1) => 1.0,
        _ => unreachable!(),
    };
    if y == 1 {
        p1
    } else {
        1.0 - p1
    }
}

/// Explicit joint over (S, V11, V12, X, Y) for the Z-channel construction,
/// built by direct enumeration over (S, N1, N2) and the channel.
pub fn z_channel_joint(p: &ZChannelParams) -> Result<JointDist> {
    p.validate()?;
    let bern = |bit: usize, q: f64| if bit == 1 { q } else { 1.0 - q };
    let mut probs = vec![0.0f64; 32];
    for s in 0..2usize {
        for n1 in 0..2usize {
            for n2 in 0..2usize {
                let v11 = s ^ n1 ^ n2;
                let p_hidden = 0.5 * bern(n1, p.d) * bern(n2, p.dp);
                for x in 0..2usize {
                    let px = bern(x, if v11 == 0 { p.alpha } else { p.beta });
                    let v12 = x ^ s ^ n1;
                    for y in 0..2usize {
                        let idx = (((s * 2 + v11) * 2 + v12) * 2 + x) * 2 + y;
                        probs[idx] += p_hidden * px * z_channel_transition(y, x, s);
                    }
                }
            }
        }
    }
    make_joint(
        ["S", "V11", "V12", "X", "Y"]
            .iter()
            .map(|r| (r.to_string(), Alphabet::binary(*r)))
            .collect(),
        probs,
    )
}

/// Successive-refinement bound for the binary fading channel:
/// R ≤ (1/2)H_b(alpha*q) − (1/2)H_b(q) and
/// Rf1 ≥ [1 + alpha·H_b(q) − alpha·H_b(d1*q) − H_b(d2)]^+.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FadingSrBound {
    pub r_max: Bits,
    pub rf1_min: Bits,
}

pub fn binary_fading_sr_bound(q: f64, d1: f64, d2: f64, alpha: f64) -> Result<FadingSrBound> {
    check_prob("fading q", q)?;
    check_prob("fading d1", d1)?;
    check_prob("fading d2", d2)?;
    check_prob("fading alpha", alpha)?;
    let r_max = 0.5 * hb(binary_convolve(alpha, q)?)? - 0.5 * hb(q)?;
    let rf1_min = pos(1.0 + alpha * hb(q)? - alpha * hb(binary_convolve(d1, q)?)? - hb(d2)?);
    Ok(FadingSrBound { r_max, rf1_min })
}

/// Which piece of the fading-channel region a given (q, D, alpha) lands in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FadingRegionTag {
    /// D ≤ q: the helper is always needed and the bound is tight.
    Capacity,
    /// f(alpha) > 0 at D > q.
    R1,
    /// Feedback alone meets the budget; no helper rate required.
    R2,
    /// f(alpha) ≤ 0 but feedback alone misses the budget.
    R3,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FadingRegionPoint {
    pub r_max: Bits,
    pub rf1_min: Bits,
    pub tag: FadingRegionTag,
}

/// f(alpha) = 1 − alpha + alpha·H_b(q) − H_b(d).
pub fn fading_f(q: f64, d: f64, alpha: f64) -> Result<f64> {
    Ok(1.0 - alpha + alpha * hb(q)? - hb(d)?)
}

/// Region selector for the binary fading channel without refinement.
pub fn binary_fading_capacity_region(q: f64, d: f64, alpha: f64) -> Result<FadingRegionPoint> {
    check_prob("fading q", q)?;
    check_prob("fading d", d)?;
    check_prob("fading alpha", alpha)?;
    let r_max = 0.5 * hb(binary_convolve(alpha, q)?)? - 0.5 * hb(q)?;
    let f = fading_f(q, d, alpha)?;
    let (tag, rf1_min) = if d <= q {
        (FadingRegionTag::Capacity, pos(f))
    } else if f > 0.0 {
        (FadingRegionTag::R1, f)
    } else if (1.0 - alpha) / 2.0 + alpha * q <= d {
        (FadingRegionTag::R2, 0.0)
    } else {
        let inner = (d - alpha * q) / (1.0 - alpha);
        (FadingRegionTag::R3, (1.0 - alpha) * (1.0 - hb(inner)?))
    };
    Ok(FadingRegionPoint { r_max, rf1_min, tag })
}

/// The four constraints of the causal-helper binary channel Y = X·S.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CausalBinaryPoint {
    pub r_max: Bits,
    pub rf1_min: Bits,
    pub rf2_min: Bits,
    pub rf_sum_min: Bits,
}

pub fn causal_binary_point(
    alpha: f64,
    delta1: f64,
    delta2: f64,
    d: f64,
) -> Result<CausalBinaryPoint> {
    check_prob("causal alpha", alpha)?;
    if !(0.0..=0.5).contains(&delta1) {
        return Err(Error::OutOfRange {
            what: "causal delta1",
            value: delta1,
        });
    }
    if !(0.0..=0.5).contains(&delta2) {
        return Err(Error::OutOfRange {
            what: "causal delta2",
            value: delta2,
        });
    }
    if d < 0.0 {
        return Err(Error::OutOfRange {
            what: "causal d",
            value: d,
        });
    }
    let tail = scaled_tail_entropy(alpha, d)?;
    Ok(CausalBinaryPoint {
        r_max: 0.5 * hb(alpha)?,
        rf1_min: pos((1.0 - alpha) * hb(delta1)? - tail),
        rf2_min: alpha * hb(delta2)?,
        rf_sum_min: 1.0 - tail,
    })
}

/// Numbers behind the nonconvexity argument for the causal binary example.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NonconvexityWitness {
    pub alpha_hat: f64,
    pub h_alpha_hat: Bits,
    pub rf1_at_alpha_hat: Bits,
    /// Rf1 evaluated at the hundredth-grid bracket around the alpha solving
    /// H_b(alpha) = H_b(alpha_hat)/2.
    pub rf1_interval: (Bits, Bits),
}

pub fn nonconvexity_witness(d: f64, delta1: f64) -> Result<NonconvexityWitness> {
    if !(0.0 < d && d < delta1 && delta1 <= 0.5) {
        return Err(Error::OutOfRange {
            what: "nonconvexity witness (d, delta1)",
            value: d,
        });
    }
    let alpha_hat = 1.0 - hb(d)? / hb(delta1)?;
    let h_alpha_hat = hb(alpha_hat)?;
    let rf1 = |alpha: f64| -> Result<f64> { Ok(hb(d)? - scaled_tail_entropy(alpha, d)?) };
    let rf1_at_alpha_hat = rf1(alpha_hat)?;

    // Solve H_b(alpha_star) = H_b(alpha_hat)/2 on (0, 1/2] by bisection.
    let target = h_alpha_hat / 2.0;
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hb(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha_star = 0.5 * (lo + hi);
    let bracket_lo = (alpha_star * 100.0).floor() / 100.0;
    let bracket_hi = (alpha_star * 100.0).ceil() / 100.0;
    Ok(NonconvexityWitness {
        alpha_hat,
        h_alpha_hat,
        rf1_at_alpha_hat,
        rf1_interval: (rf1(bracket_lo)?, rf1(bracket_hi)?),
    })
}

/// Binary fading channel Y = (X·S) xor N as a conditional factor.
pub fn binary_fading_channel(q: f64) -> CondDist {
    CondDist::from_fn(&["Y"], &["X", "S"], &[2], &[2, 2], move |t, g| {
        let clean = g[0] & g[1];
        if t[0] == clean {
            1.0 - q
        } else {
            q
        }
    })
}

/// Perfect-feedback model for the binary fading channel: V11 and V12 are
/// independent noisy copies of S (noise rates `n11`, `n12`) and the input is
/// Bernoulli(alpha) regardless of V11.
pub fn binary_fading_pf_model(q: f64, alpha: f64, n11: f64, n12: f64) -> FactoredModel {
    let bern = |bit: usize, p: f64| if bit == 1 { p } else { 1.0 - p };
    let alphabets = ["S", "V11", "V12", "X", "Y"]
        .iter()
        .map(|r| Alphabet::binary(*r))
        .collect();
    let factors = vec![
        CondDist::new(&["S"], &[], vec![vec![0.5, 0.5]]),
        CondDist::from_fn(&["V11", "V12"], &["S"], &[2, 2], &[2], move |t, g| {
            bern(t[0] ^ g[0], n11) * bern(t[1] ^ g[0], n12)
        }),
        CondDist::from_fn(&["X"], &["V11"], &[2], &[2], move |t, _| bern(t[0], alpha)),
        binary_fading_channel(q),
    ];
    FactoredModel::new(Variant::PerfectFeedbackInner, alphabets, factors)
}

/// Causal-variant model realizing the causal binary corner points: under
/// X = 0, V = S xor Bernoulli(d/(1-alpha)) and T is a noisy copy of V
/// chosen so that the end-to-end flip rate from S to T is delta1; under
/// X = 1, V = S xor Bernoulli(delta2) and T is constant.
pub fn causal_corner_model(
    alpha: f64,
    delta1: f64,
    delta2: f64,
    d: f64,
) -> Result<FactoredModel> {
    check_prob("causal alpha", alpha)?;
    if alpha >= 1.0 {
        return Err(Error::OutOfRange {
            what: "causal alpha (needs alpha < 1 for the corner construction)",
            value: alpha,
        });
    }
    let p0 = d / (1.0 - alpha);
    if p0 >= 0.5 {
        return Err(Error::OutOfRange {
            what: "causal d/(1-alpha)",
            value: p0,
        });
    }
    if delta1 < p0 || delta1 > 0.5 {
        return Err(Error::OutOfRange {
            what: "causal delta1 (needs d/(1-alpha) <= delta1 <= 1/2)",
            value: delta1,
        });
    }
    let beta = (delta1 - p0) / (1.0 - 2.0 * p0);
    let bern = |bit: usize, p: f64| if bit == 1 { p } else { 1.0 - p };
    let alphabets = ["S", "X", "Y", "V", "T"]
        .iter()
        .map(|r| Alphabet::binary(*r))
        .collect();
    let factors = vec![
        CondDist::new(&["S"], &[], vec![vec![0.5, 0.5]]),
        CondDist::new(&["X"], &[], vec![vec![1.0 - alpha, alpha]]),
        CondDist::from_fn(&["V", "T"], &["S", "X"], &[2, 2], &[2, 2], move |t, g| {
            let (v, tt) = (t[0], t[1]);
            let (s, x) = (g[0], g[1]);
            if x == 0 {
                bern(v ^ s, p0) * bern(tt ^ v, beta)
            } else {
                bern(v ^ s, delta2) * if tt == 0 { 1.0 } else { 0.0 }
            }
        }),
        CondDist::from_fn(&["Y"], &["X", "S"], &[2], &[2, 2], |t, g| {
            if t[0] == (g[0] & g[1]) {
                1.0
            } else {
                0.0
            }
        }),
    ];
    Ok(FactoredModel::new(Variant::Causal, alphabets, factors))
}
