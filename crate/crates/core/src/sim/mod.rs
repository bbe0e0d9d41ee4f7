//! Monte Carlo simulation of the block random-coding scheme at small
//! blocklength: typicality encoding at the state helper, covering at the
//! sender, binning everywhere, joint-typicality decoding, and elementwise
//! state estimation.

mod typicality;

pub use typicality::typical;

use crate::error::{Error, Result};
use crate::info::mutual_information as mi;
use crate::prob::{CondDist, FactoredModel, JointDist, Variant};
use crate::region::{optimal_estimator, DistortionSpec, EstimatorTable};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Hard ceiling on blocklength.
pub const MAX_BLOCKLENGTH: usize = 400;
/// Hard ceiling on Monte Carlo trials.
pub const MAX_TRIALS: usize = 10_000;
/// Ceiling on total stored codeword symbols across all codebooks.
pub const MEMORY_GUARD_SYMBOLS: u128 = 100_000_000;

const TRIAL_STREAM_BASE: u64 = 1 << 40;

#[derive(Debug, Clone)]
pub struct SimConfig {
    /// General-inner model with a singleton time-sharing alphabet.
    pub model: FactoredModel,
    pub distortion: DistortionSpec,
    pub n: usize,
    /// Rate slack applied to every codebook-size exponent.
    pub epsilon: f64,
    /// Typicality tolerance.
    pub delta: f64,
    pub trials: usize,
    pub seed: u64,
    /// Replaces the message rate (bits/symbol) used to size the message
    /// bins; used for above-capacity experiments.
    pub message_rate_override: Option<f64>,
}

impl SimConfig {
    fn validate(&self) -> Result<()> {
        if self.model.variant != Variant::GeneralInner {
            return Err(Error::FactorSignatureMismatch {
                variant: self.model.variant.name().into(),
                detail: "the simulator runs general-inner models".into(),
            });
        }
        if self.model.size("Q")? != 1 {
            return Err(Error::InvalidConfig(
                "the simulator requires a singleton time-sharing alphabet".into(),
            ));
        }
        if self.n == 0 || self.n > MAX_BLOCKLENGTH {
            return Err(Error::InvalidConfig(format!(
                "blocklength {} outside 1..={MAX_BLOCKLENGTH}",
                self.n
            )));
        }
        if self.trials == 0 || self.trials > MAX_TRIALS {
            return Err(Error::InvalidConfig(format!(
                "trials {} outside 1..={MAX_TRIALS}",
                self.trials
            )));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::OutOfRange {
                what: "epsilon",
                value: self.epsilon,
            });
        }
        if self.delta <= 0.0 {
            return Err(Error::OutOfRange {
                what: "delta",
                value: self.delta,
            });
        }
        Ok(())
    }
}

/// The information quantities that size the codebooks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateTargets {
    pub i_s_v11: f64,
    pub i_v12_s_given_v11: f64,
    pub i_u_y: f64,
    pub i_u_v11: f64,
    pub i_v2_z: f64,
    /// FME floor for the binned part of the state description.
    pub rf12_min: f64,
    /// FME floor for the feedback description.
    pub rf2_min: f64,
}

impl RateTargets {
    pub fn from_model(model: &FactoredModel) -> Result<Self> {
        let joint = model.compose()?;
        Ok(Self {
            i_s_v11: mi(&joint, &["S"], &["V11"], &[])?,
            i_v12_s_given_v11: mi(&joint, &["V12"], &["S"], &["V11"])?,
            i_u_y: mi(&joint, &["U"], &["Y"], &[])?,
            i_u_v11: mi(&joint, &["U"], &["V11"], &[])?,
            i_v2_z: mi(&joint, &["V2"], &["Z"], &[])?,
            rf12_min: mi(&joint, &["V12"], &["S", "Z"], &["U", "V11", "V2"])?,
            rf2_min: mi(&joint, &["V2"], &["S", "Z"], &["U", "V11", "V12"])?,
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CodebookSizes {
    /// State-description codewords (sent losslessly).
    pub n11: usize,
    /// Refinement codewords per state codeword.
    pub n12_codewords: usize,
    pub n12_bins: u64,
    /// Message codewords in total.
    pub m_codewords: usize,
    /// Message bins (= messages).
    pub m_bins: u64,
    /// Feedback codewords.
    pub n2_codewords: usize,
    pub n2_bins: u64,
}

fn ceil_pow2(n: usize, rate: f64) -> u64 {
    let raw = (n as f64 * rate).exp2();
    if raw >= u64::MAX as f64 {
        u64::MAX
    } else {
        raw.ceil().max(1.0) as u64
    }
}

/// Random codebooks for one configuration. The per-state refinement banks
/// are regenerated on demand from the seed, so only four banks are stored.
#[derive(Debug)]
pub struct Codebooks {
    pub sizes: CodebookSizes,
    pub targets: RateTargets,
    pub v11: Vec<Vec<u8>>,
    pub u: Vec<Vec<u8>>,
    pub v2: Vec<Vec<u8>>,
    n: usize,
    seed: u64,
    p_v12_given_v11: Vec<Vec<f64>>,
}

fn sample(probs: &[f64], rng: &mut ChaCha8Rng) -> u8 {
    let mut r: f64 = rng.random();
    for (i, &p) in probs.iter().enumerate() {
        r -= p;
        if r < 0.0 {
            return i as u8;
        }
    }
    (probs.len() - 1) as u8
}

fn draw_bank(count: usize, n: usize, probs: &[f64], rng: &mut ChaCha8Rng) -> Vec<Vec<u8>> {
    (0..count)
        .map(|_| (0..n).map(|_| sample(probs, rng)).collect())
        .collect()
}

/// Draws every codebook from the model's marginals. Sizes follow the
/// covering/binning exponents with slack epsilon; the message codebook uses
/// I(U;Y) − epsilon so that unique decoding stays below capacity.
pub fn build_codebooks(config: &SimConfig) -> Result<Codebooks> {
    config.validate()?;
    let joint = config.model.compose()?;
    let targets = RateTargets::from_model(&config.model)?;
    let (n, eps) = (config.n, config.epsilon);

    let message_rate = targets.i_u_y - targets.i_u_v11 - eps;
    if targets.i_u_y - eps <= 0.0 {
        return Err(Error::RateNonpositive {
            detail: format!(
                "I(U;Y) = {:.6} does not exceed epsilon = {eps}",
                targets.i_u_y
            ),
        });
    }
    if config.message_rate_override.is_none() && message_rate <= 0.0 {
        return Err(Error::RateNonpositive {
            detail: format!("message rate I(U;Y) - I(U;V11) - epsilon = {message_rate:.6}"),
        });
    }

    let sizes = CodebookSizes {
        n11: ceil_pow2(n, targets.i_s_v11 + eps) as usize,
        n12_codewords: ceil_pow2(n, targets.i_v12_s_given_v11 + eps) as usize,
        n12_bins: ceil_pow2(n, targets.rf12_min + eps),
        m_codewords: ceil_pow2(n, targets.i_u_y - eps) as usize,
        m_bins: match config.message_rate_override {
            Some(rate) => ceil_pow2(n, rate),
            None => ceil_pow2(n, message_rate),
        },
        n2_codewords: ceil_pow2(n, targets.i_v2_z + eps) as usize,
        n2_bins: ceil_pow2(n, targets.rf2_min + eps),
    };

    let stored = (sizes.n11 as u128
        + sizes.n12_codewords as u128
        + sizes.m_codewords as u128
        + sizes.n2_codewords as u128)
        * n as u128;
    if stored > MEMORY_GUARD_SYMBOLS {
        return Err(Error::MemoryGuard {
            symbols: stored,
            limit: MEMORY_GUARD_SYMBOLS,
        });
    }

    let p_v11 = joint.marginalize(&["V11"])?.probs().to_vec();
    let p_u = joint.marginalize(&["U"])?.probs().to_vec();
    let p_v2 = joint.marginalize(&["V2"])?.probs().to_vec();
    let p_v11_v12 = joint.marginalize(&["V11", "V12"])?;
    let v12_size = config.model.size("V12")?;
    let p_v12_given_v11: Vec<Vec<f64>> = (0..config.model.size("V11")?)
        .map(|v11| {
            let mut row: Vec<f64> = (0..v12_size)
                .map(|v12| p_v11_v12.prob_at(&[v11, v12]))
                .collect();
            let sum: f64 = row.iter().sum();
            if sum > 0.0 {
                row.iter_mut().for_each(|p| *p /= sum);
            } else {
                row.iter_mut().for_each(|p| *p = 1.0 / v12_size as f64);
            }
            row
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0);
    let v11 = draw_bank(sizes.n11, n, &p_v11, &mut rng);
    rng.set_stream(1);
    let u = draw_bank(sizes.m_codewords, n, &p_u, &mut rng);
    rng.set_stream(2);
    let v2 = draw_bank(sizes.n2_codewords, n, &p_v2, &mut rng);

    Ok(Codebooks {
        sizes,
        targets,
        v11,
        u,
        v2,
        n,
        seed: config.seed,
        p_v12_given_v11,
    })
}

impl Codebooks {
    /// Refinement codebook conditioned on state codeword `n11`, regenerated
    /// deterministically from the seed.
    pub fn v12_bank(&self, n11: usize) -> Vec<Vec<u8>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(3 + n11 as u64);
        let v11 = &self.v11[n11];
        (0..self.sizes.n12_codewords)
            .map(|_| {
                (0..self.n)
                    .map(|i| sample(&self.p_v12_given_v11[v11[i] as usize], &mut rng))
                    .collect()
            })
            .collect()
    }
}

/// Why a unique-decoding step failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DecodeFailure {
    NoCandidate,
    MultipleCandidates,
}

/// Per-stage error flags of one block.
#[derive(Debug, Clone, Default, Serialize)]
pub struct StageFlags {
    pub state_encode_v11: bool,
    pub state_encode_v12: bool,
    pub sender_encode: bool,
    pub feedback_encode: bool,
    pub sender_decode: Option<DecodeFailure>,
    pub receiver_decode: Option<DecodeFailure>,
}

impl StageFlags {
    pub fn clean(&self) -> bool {
        !self.state_encode_v11
            && !self.state_encode_v12
            && !self.sender_encode
            && !self.feedback_encode
            && self.sender_decode.is_none()
            && self.receiver_decode.is_none()
    }
}

/// Record of one simulated block.
#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    pub message: u64,
    pub state: Vec<u8>,
    /// Index of the selected state codeword (sent losslessly).
    pub m_f11: usize,
    /// Bin index of the selected refinement codeword.
    pub m_f12: u64,
    /// Bin index of the selected feedback codeword.
    pub m_f2: u64,
    pub decoded_message: u64,
    pub decoded_v12: usize,
    pub decoded_v2: usize,
    pub flags: StageFlags,
    pub estimated: Vec<u8>,
    pub distortion: f64,
}

/// Precomputed marginals and the estimator shared by all trials.
pub struct SimContext {
    pub codebooks: Codebooks,
    config: SimConfig,
    p_s: Vec<f64>,
    ref_s_v11: JointDist,
    ref_s_v11_v12: JointDist,
    ref_v11_u: JointDist,
    ref_z_v2: JointDist,
    ref_v11_v12_u_v2: JointDist,
    ref_u_y: JointDist,
    x_factor: CondDist,
    yz_factor: CondDist,
    z_size: usize,
    v11_size: usize,
    estimator: EstimatorTable,
}

impl SimContext {
    pub fn new(config: SimConfig) -> Result<Self> {
        let codebooks = build_codebooks(&config)?;
        let joint = config.model.compose()?;
        let (estimator, _) =
            optimal_estimator(&joint, &["Q", "U", "X", "V12", "V2"], &config.distortion)?;
        Ok(Self {
            codebooks,
            p_s: joint.marginalize(&["S"])?.probs().to_vec(),
            ref_s_v11: joint.marginalize(&["S", "V11"])?,
            ref_s_v11_v12: joint.marginalize(&["S", "V11", "V12"])?,
            ref_v11_u: joint.marginalize(&["V11", "U"])?,
            ref_z_v2: joint.marginalize(&["Z", "V2"])?,
            ref_v11_v12_u_v2: joint.marginalize(&["V11", "V12", "U", "V2"])?,
            ref_u_y: joint.marginalize(&["U", "Y"])?,
            x_factor: config.model.factor(&["X"])?.clone(),
            yz_factor: config.model.factor(&["Y", "Z"])?.clone(),
            z_size: config.model.size("Z")?,
            v11_size: config.model.size("V11")?,
            estimator,
            config,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }
}

/// Runs one block: state draw, helper encodings, channel, decodings, and
/// elementwise estimation. Failures never abort the block; they are
/// recorded as flags and defaults are used downstream.
pub fn run_block(ctx: &SimContext, message: u64, trial: u64) -> Transcript {
    let n = ctx.config.n;
    let delta = ctx.config.delta;
    let sizes = ctx.codebooks.sizes;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
    rng.set_stream(TRIAL_STREAM_BASE + trial);
    let mut flags = StageFlags::default();

    // State sequence.
    let state: Vec<u8> = (0..n).map(|_| sample(&ctx.p_s, &mut rng)).collect();

    // State helper: covering search for the coarse description.
    let mut m_f11 = None;
    for (j, cand) in ctx.codebooks.v11.iter().enumerate() {
        if typical(&[&state, cand], &ctx.ref_s_v11, delta).unwrap_or(false) {
            m_f11 = Some(j);
            break;
        }
    }
    let m_f11 = m_f11.unwrap_or_else(|| {
        flags.state_encode_v11 = true;
        0
    });
    let v11_seq = &ctx.codebooks.v11[m_f11];

    // State helper: refinement codeword within the selected bank.
    let bank = ctx.codebooks.v12_bank(m_f11);
    let mut chosen12 = None;
    for (j, cand) in bank.iter().enumerate() {
        if typical(&[&state, v11_seq, cand], &ctx.ref_s_v11_v12, delta).unwrap_or(false) {
            chosen12 = Some(j);
            break;
        }
    }
    let chosen12 = chosen12.unwrap_or_else(|| {
        flags.state_encode_v12 = true;
        0
    });
    let m_f12 = chosen12 as u64 % sizes.n12_bins;

    // Sender: covering search inside the message bin
    // {j : j mod m_bins == message}. An over-rate message may index an
    // empty bin; that is a flagged encoding failure.
    let mut u_index = None;
    let mut j = message;
    while (j as usize) < sizes.m_codewords {
        let cand = &ctx.codebooks.u[j as usize];
        if typical(&[v11_seq, cand], &ctx.ref_v11_u, delta).unwrap_or(false) {
            u_index = Some(j as usize);
            break;
        }
        j += sizes.m_bins;
    }
    let u_index = u_index.unwrap_or_else(|| {
        flags.sender_encode = true;
        if message < sizes.m_codewords as u64 {
            message as usize
        } else {
            0
        }
    });
    let u_seq = &ctx.codebooks.u[u_index];

    // Channel input and the channel itself.
    let mut x_seq = vec![0u8; n];
    let mut y_seq = vec![0u8; n];
    let mut z_seq = vec![0u8; n];
    for i in 0..n {
        // P(X|U,V11,Q) row for (u_i, v11_i, q=0).
        let x_row =
            &ctx.x_factor.table[u_seq[i] as usize * ctx.v11_size + v11_seq[i] as usize];
        x_seq[i] = sample(x_row, &mut rng);
        let yz_row =
            &ctx.yz_factor.table[x_seq[i] as usize * ctx.p_s.len() + state[i] as usize];
        let yz = sample(yz_row, &mut rng) as usize;
        y_seq[i] = (yz / ctx.z_size) as u8;
        z_seq[i] = (yz % ctx.z_size) as u8;
    }

    // Feedback helper.
    let mut chosen2 = None;
    for (j, cand) in ctx.codebooks.v2.iter().enumerate() {
        if typical(&[&z_seq, cand], &ctx.ref_z_v2, delta).unwrap_or(false) {
            chosen2 = Some(j);
            break;
        }
    }
    let chosen2 = chosen2.unwrap_or_else(|| {
        flags.feedback_encode = true;
        0
    });
    let m_f2 = chosen2 as u64 % sizes.n2_bins;

    // Sender decoding: unique jointly typical pair inside the two bins.
    let mut pair: Option<(usize, usize)> = None;
    let mut pair_count = 0usize;
    let mut j = m_f12;
    while (j as usize) < sizes.n12_codewords {
        let v12_cand = &bank[j as usize];
        let mut k = m_f2;
        while (k as usize) < sizes.n2_codewords {
            let v2_cand = &ctx.codebooks.v2[k as usize];
            if typical(
                &[v11_seq, v12_cand, u_seq, v2_cand],
                &ctx.ref_v11_v12_u_v2,
                delta,
            )
            .unwrap_or(false)
            {
                pair_count += 1;
                if pair.is_none() {
                    pair = Some((j as usize, k as usize));
                }
            }
            k += sizes.n2_bins;
        }
        j += sizes.n12_bins;
    }
    if pair_count == 0 {
        flags.sender_decode = Some(DecodeFailure::NoCandidate);
    } else if pair_count > 1 {
        flags.sender_decode = Some(DecodeFailure::MultipleCandidates);
    }
    // Default to the first codeword of each bin on failure.
    let (decoded_v12, decoded_v2) = pair.unwrap_or((m_f12 as usize, m_f2 as usize));

    // Receiver decoding: typical message codewords, resolved at bin level.
    let mut decoded_message = None;
    let mut ambiguous = false;
    let mut any = false;
    for (j, cand) in ctx.codebooks.u.iter().enumerate() {
        if typical(&[cand, &y_seq], &ctx.ref_u_y, delta).unwrap_or(false) {
            any = true;
            let bin = j as u64 % sizes.m_bins;
            match decoded_message {
                None => decoded_message = Some(bin),
                Some(prev) if prev != bin => {
                    ambiguous = true;
                    break;
                }
                _ => {}
            }
        }
    }
    if !any {
        flags.receiver_decode = Some(DecodeFailure::NoCandidate);
    } else if ambiguous {
        flags.receiver_decode = Some(DecodeFailure::MultipleCandidates);
    }
    let decoded_message = decoded_message.unwrap_or(0);

    // Elementwise estimation from the decoded descriptions.
    let v12_seq = &bank[decoded_v12];
    let v2_seq = &ctx.codebooks.v2[decoded_v2];
    let d = &ctx.config.distortion;
    let mut estimated = vec![0u8; n];
    let mut dist_sum = 0.0f64;
    for i in 0..n {
        let ctx_cell = [
            0usize,
            u_seq[i] as usize,
            x_seq[i] as usize,
            v12_seq[i] as usize,
            v2_seq[i] as usize,
        ];
        let shat = ctx.estimator.lookup(&ctx_cell);
        estimated[i] = shat as u8;
        dist_sum += d.matrix[state[i] as usize][shat];
    }

    Transcript {
        message,
        state,
        m_f11,
        m_f12,
        m_f2,
        decoded_message,
        decoded_v12,
        decoded_v2,
        flags,
        estimated,
        distortion: dist_sum / n as f64,
    }
}

/// Wilson 95% score interval for a binomial proportion.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Fractions of trials on which each stage flagged a failure.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StageRates {
    pub state_encode_v11: f64,
    pub state_encode_v12: f64,
    pub sender_encode: f64,
    pub feedback_encode: f64,
    pub sender_decode: f64,
    pub receiver_decode: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Performance {
    pub trials: usize,
    pub error_prob: f64,
    pub error_interval: (f64, f64),
    pub avg_distortion: f64,
    /// Mean ± 1.96 standard errors of the per-block distortion.
    pub distortion_interval: (f64, f64),
    pub stage_rates: StageRates,
    pub sizes: CodebookSizes,
    pub targets: RateTargets,
}

/// The message transmitted on a given trial, drawn from the trial's own
/// stream so every transcript is reproducible from (seed, trial).
pub fn trial_message(seed: u64, m_bins: u64, trial: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x006d_6573_7361_6765);
    rng.set_stream(TRIAL_STREAM_BASE + trial);
    rng.random_range(0..m_bins)
}

/// Aggregates `run_block` over the configured number of trials with
/// per-trial derived seeds. Deterministic for a fixed config.
pub fn estimate_performance(config: &SimConfig) -> Result<Performance> {
    let trials = config.trials;
    let ctx = SimContext::new(config.clone())?;
    let sizes = ctx.codebooks.sizes;
    let mut errors = 0usize;
    let mut dist = Vec::with_capacity(trials);
    let mut stages = StageRates::default();
    for t in 0..trials {
        let message = trial_message(config.seed, sizes.m_bins, t as u64);
        let tr = run_block(&ctx, message, t as u64);
        if tr.decoded_message != tr.message {
            errors += 1;
        }
        dist.push(tr.distortion);
        stages.state_encode_v11 += tr.flags.state_encode_v11 as u8 as f64;
        stages.state_encode_v12 += tr.flags.state_encode_v12 as u8 as f64;
        stages.sender_encode += tr.flags.sender_encode as u8 as f64;
        stages.feedback_encode += tr.flags.feedback_encode as u8 as f64;
        stages.sender_decode += tr.flags.sender_decode.is_some() as u8 as f64;
        stages.receiver_decode += tr.flags.receiver_decode.is_some() as u8 as f64;
    }
    let tn = trials as f64;
    stages.state_encode_v11 /= tn;
    stages.state_encode_v12 /= tn;
    stages.sender_encode /= tn;
    stages.feedback_encode /= tn;
    stages.sender_decode /= tn;
    stages.receiver_decode /= tn;

    let avg: f64 = dist.iter().sum::<f64>() / tn;
    let var: f64 = dist.iter().map(|d| (d - avg).powi(2)).sum::<f64>() / tn.max(1.0);
    let half = 1.959_963_984_540_054 * (var / tn).sqrt();
    Ok(Performance {
        trials,
        error_prob: errors as f64 / tn,
        error_interval: wilson_interval(errors, trials),
        avg_distortion: avg,
        distortion_interval: (avg - half, avg + half),
        stage_rates: stages,
        sizes,
        targets: ctx.codebooks.targets,
    })
}
