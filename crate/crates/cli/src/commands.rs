//! Implementations of the five subcommands.

use crate::io::{
    fmt12, load_distortion, load_model, to_json_stable, ManifestBuilder, ModelFile,
};
use anyhow::{anyhow, bail, Context, Result};
use isac_regions::closed_forms::{
    binary_fading_capacity_region, causal_binary_point, z_channel_metrics, ZChannelParams,
};
use isac_regions::prob::{make_joint, Alphabet, JointDist, Variant};
use isac_regions::region::{eval_region, extract_common_part};
use isac_regions::search::{brute_force_oracle, optimize, SearchConfig, SearchSpec};
use isac_regions::sim::{estimate_performance, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::PathBuf;

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct RegionArgs {
    /// Factored-model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Distortion JSON file; overrides the model's embedded block.
    #[arg(long)]
    pub distortion: Option<PathBuf>,
    /// Expected variant; mismatches are rejected.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long, default_value = "region.json")]
    pub out: PathBuf,
    /// Lift the auxiliary-alphabet cardinality bounds.
    #[arg(long)]
    pub allow_oversized: bool,
}

pub fn cmd_region(args: &RegionArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("region", args, None)?;
    let ModelFile {
        mut model,
        distortion,
    } = load_model(&args.model)?;
    if let Some(expected) = &args.variant {
        let expected: Variant = expected
            .parse()
            .map_err(|e: isac_regions::Error| anyhow!(e))?;
        if expected != model.variant {
            bail!(isac_regions::Error::FactorSignatureMismatch {
                variant: model.variant.name().into(),
                detail: format!("expected variant {}", expected.name()),
            });
        }
    }
    if args.allow_oversized {
        model.cardinality_override = true;
    }
    let d = match &args.distortion {
        Some(path) => load_distortion(path)?,
        None => distortion.ok_or_else(|| {
            anyhow!("no distortion block in the model file and no --distortion given")
        })?,
    };
    let point = eval_region(&model, &d)?;
    manifest.write_output(&args.out, &to_json_stable(&point)?)?;
    manifest.finish()
}

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct SweepArgs {
    /// One of: z-channel, binary-fading, causal-binary.
    #[arg(long)]
    pub example: String,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
    /// Grid start for the swept parameter.
    #[arg(long, default_value_t = 0.0)]
    pub start: f64,
    /// Grid end (inclusive).
    #[arg(long, default_value_t = 0.5)]
    pub end: f64,
    #[arg(long, default_value_t = 0.005)]
    pub step: f64,
    /// Distortion level (z-channel: noise rate of the first stage).
    #[arg(long, default_value_t = 0.1)]
    pub d: f64,
    /// Fading-channel noise rate.
    #[arg(long, default_value_t = 0.3)]
    pub q: f64,
    /// Causal-helper parameters.
    #[arg(long, default_value_t = 0.4)]
    pub delta1: f64,
    #[arg(long, default_value_t = 0.2)]
    pub delta2: f64,
}

fn grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if step <= 0.0 || end < start {
        bail!("empty sweep range: start {start}, end {end}, step {step}");
    }
    let mut out = Vec::new();
    let mut i = 0usize;
    loop {
        let v = start + i as f64 * step;
        if v > end + 1e-12 {
            break;
        }
        out.push(v.min(end));
        i += 1;
    }
    if out.is_empty() {
        bail!("empty sweep range");
    }
    Ok(out)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("sweep", args, None)?;
    let points = grid(args.start, args.end, args.step)?;
    let mut csv = String::new();
    match args.example.as_str() {
        "z-channel" => {
            csv.push_str("Dp,R,I_V11_S,I_V12_S_given\n");
            for &dp in &points {
                let m = z_channel_metrics(&ZChannelParams::new(args.d, dp))?;
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt12(dp),
                    fmt12(m.r),
                    fmt12(m.i_v11_s),
                    fmt12(m.i_v12_s_given)
                ));
            }
        }
        "binary-fading" => {
            csv.push_str("alpha,R,Rf1,region_tag\n");
            for &alpha in &points {
                let p = binary_fading_capacity_region(args.q, args.d, alpha)?;
                csv.push_str(&format!(
                    "{},{},{},{:?}\n",
                    fmt12(alpha),
                    fmt12(p.r_max),
                    fmt12(p.rf1_min),
                    p.tag
                ));
            }
        }
        "causal-binary" => {
            csv.push_str("alpha,R,Rf1,Rf2,RfSum\n");
            for &alpha in &points {
                let p = causal_binary_point(alpha, args.delta1, args.delta2, args.d)?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt12(alpha),
                    fmt12(p.r_max),
                    fmt12(p.rf1_min),
                    fmt12(p.rf2_min),
                    fmt12(p.rf_sum_min)
                ));
            }
        }
        other => bail!("unknown example `{other}`"),
    }
    manifest.write_output(&args.out, &csv)?;
    manifest.finish()
}

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct SearchArgs {
    /// Search-spec JSON file.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also run the exhaustive grid oracle at this step and report both.
    #[arg(long)]
    pub oracle_step: Option<f64>,
    #[arg(long, default_value = "search.json")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 32)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Worker threads for the restarts (ISAC_REGION_THREADS overrides).
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

pub fn cmd_search(args: &SearchArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("search", args, Some(args.seed))?;
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let spec: SearchSpec =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.spec.display()))?;
    let config = SearchConfig {
        restarts: args.restarts,
        max_iter: args.max_iter,
        tol: args.tol,
        threads: crate::io::resolve_threads(args.threads),
    };
    let result = optimize(&spec, args.seed, &config)?;
    let oracle = match args.oracle_step {
        Some(step) => Some(brute_force_oracle(&spec, step)?),
        None => None,
    };
    let payload = json!({
        "best": result.best,
        "best_model": result.best_model,
        "best_objective": result.best_objective,
        "restarts": result.restarts,
        "iterations": result.iterations,
        "history": result.history,
        "trace": result.trace,
        "oracle": oracle.map(|o| json!({
            "best": o.best,
            "best_objective": o.best_objective,
            "evaluations": o.iterations,
        })),
    });
    manifest.write_output(&args.out, &to_json_stable(&payload)?)?;
    manifest.finish()
}

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct SimulateArgs {
    /// Factored-model JSON file with an embedded distortion block.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// Message rate override in bits per symbol.
    #[arg(long)]
    pub message_rate: Option<f64>,
    #[arg(long, default_value = "simulate.json")]
    pub out: PathBuf,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("simulate", args, Some(args.seed))?;
    let ModelFile { model, distortion } = load_model(&args.model)?;
    let distortion =
        distortion.ok_or_else(|| anyhow!("simulation needs a distortion block in the model"))?;
    let config = SimConfig {
        model,
        distortion,
        n: args.n,
        epsilon: args.epsilon,
        delta: args.delta,
        trials: args.trials,
        seed: args.seed,
        message_rate_override: args.message_rate,
    };
    let perf = estimate_performance(&config)?;
    manifest.write_output(&args.out, &to_json_stable(&perf)?)?;
    manifest.finish()
}

#[derive(Debug, Clone, Serialize, clap::Args)]
pub struct CommonPartArgs {
    /// Channel JSON file: either a joint state-output table or a channel
    /// with input and state distributions.
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value = "common-part.json")]
    pub out: PathBuf,
}

#[derive(Debug, Deserialize)]
struct CommonPartInput {
    /// Joint P(S,Y): rows are states.
    #[serde(default)]
    p_sy: Option<Vec<Vec<f64>>>,
    /// Channel form: P(S), P(X), and P(Y|X,S) indexed [x][s][y].
    #[serde(default)]
    channel: Option<ChannelInput>,
}

#[derive(Debug, Deserialize)]
struct ChannelInput {
    p_s: Vec<f64>,
    p_x: Vec<f64>,
    p_y_given_xs: Vec<Vec<Vec<f64>>>,
}

fn joint_from_input(input: &CommonPartInput) -> Result<JointDist> {
    let table: Vec<Vec<f64>> = if let Some(p_sy) = &input.p_sy {
        p_sy.clone()
    } else if let Some(ch) = &input.channel {
        let s_n = ch.p_s.len();
        let y_n = ch
            .p_y_given_xs
            .first()
            .and_then(|x| x.first())
            .map(Vec::len)
            .ok_or_else(|| anyhow!("empty channel table"))?;
        let mut out = vec![vec![0.0f64; y_n]; s_n];
        for (x, px) in ch.p_x.iter().enumerate() {
            for (s, ps) in ch.p_s.iter().enumerate() {
                let row = ch
                    .p_y_given_xs
                    .get(x)
                    .and_then(|t| t.get(s))
                    .ok_or_else(|| anyhow!("channel table shape mismatch"))?;
                for (y, py) in row.iter().enumerate() {
                    out[s][y] += px * ps * py;
                }
            }
        }
        out
    } else {
        bail!("expected either `p_sy` or `channel`");
    };
    let s_n = table.len();
    let y_n = table.first().map(Vec::len).unwrap_or(0);
    let mut probs = Vec::with_capacity(s_n * y_n);
    for row in &table {
        if row.len() != y_n {
            bail!("ragged state-output table");
        }
        probs.extend_from_slice(row);
    }
    Ok(make_joint(
        vec![
            ("S".to_string(), Alphabet::indexed("S", s_n)),
            ("Y".to_string(), Alphabet::indexed("Y", y_n)),
        ],
        probs,
    )?)
}

pub fn cmd_common_part(args: &CommonPartArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("common-part", args, None)?;
    let text = std::fs::read_to_string(&args.channel)
        .with_context(|| format!("reading {}", args.channel.display()))?;
    let input: CommonPartInput = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.channel.display()))?;
    let joint = joint_from_input(&input)?;
    let part = extract_common_part(&joint)?;
    let payload = json!({
        "components": part.k.size(),
        "k_symbols": part.k.symbols,
        "c1": part.c1,
        "c2": part.c2,
        "decomposable": part.k.size() >= 2,
    });
    manifest.write_output(&args.out, &to_json_stable(&payload)?)?;
    manifest.finish()
}

