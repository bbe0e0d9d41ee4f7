//! Boundary search over free conditional factors: multi-restart
//! derivative-free descent in simplex-projected coordinates, an exhaustive
//! grid oracle for validation, and convex-hull post-processing that
//! realizes time sharing across evaluated points.

mod hull;
mod nelder_mead;

pub use hull::{convex_hull_points, hull_contains};
pub use nelder_mead::project_simplex;

use crate::error::{Error, Result};
use crate::prob::FactoredModel;
use crate::region::{eval_region, DistortionSpec, RegionPoint};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Penalty per unit of distortion-budget or rate-cap excess, in bits.
const PENALTY_WEIGHT: f64 = 1e3;
/// Feasibility slack on re-checked budgets.
pub const BUDGET_SLACK: f64 = 1e-9;
/// Evaluation ceiling for the exhaustive grid oracle.
const GRID_LIMIT: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    MaximizeR,
    MinimizeRf1,
    MinimizeRfSum,
    ParetoTrace,
}

/// What to optimize: a template model whose listed factors are free, the
/// distortion budget(s), the objective, and optional helper-rate caps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchSpec {
    pub template: FactoredModel,
    /// Target lists of the free factors, e.g. `["V11,V12"]`.
    pub free: Vec<String>,
    pub distortion: DistortionSpec,
    pub objective: Objective,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf1_cap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf2_cap: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub threads: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iter: 2000,
            tol: 1e-9,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub params: Vec<f64>,
    pub point: RegionPoint,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub best: RegionPoint,
    pub best_model: FactoredModel,
    pub best_objective: f64,
    pub trace: Vec<TraceEntry>,
    pub restarts: usize,
    pub iterations: usize,
    /// Best objective value found by each restart, in restart order.
    pub history: Vec<f64>,
}

/// Positions and row lengths of the free factors inside the parameter
/// vector.
struct Layout {
    factor_indices: Vec<usize>,
    row_lens: Vec<Vec<usize>>,
    dim: usize,
}

impl Layout {
    fn resolve(spec: &SearchSpec) -> Result<Self> {
        let mut factor_indices = Vec::new();
        let mut row_lens = Vec::new();
        let mut dim = 0usize;
        for key in &spec.free {
            let targets: Vec<&str> = key.split(',').map(str::trim).collect();
            let idx = spec
                .template
                .factors
                .iter()
                .position(|f| f.targets.iter().map(String::as_str).eq(targets.iter().copied()))
                .ok_or_else(|| Error::FactorSignatureMismatch {
                    variant: spec.template.variant.name().into(),
                    detail: format!("free factor `{key}` not found"),
                })?;
            let lens: Vec<usize> = spec.template.factors[idx]
                .table
                .iter()
                .map(Vec::len)
                .collect();
            dim += lens.iter().sum::<usize>();
            factor_indices.push(idx);
            row_lens.push(lens);
        }
        Ok(Self {
            factor_indices,
            row_lens,
            dim,
        })
    }

    /// Writes `params` into a copy of the template, projecting each row onto
    /// its simplex.
    fn apply(&self, spec: &SearchSpec, params: &[f64]) -> FactoredModel {
        let mut model = spec.template.clone();
        let mut off = 0usize;
        for (k, &fi) in self.factor_indices.iter().enumerate() {
            for (row_idx, &len) in self.row_lens[k].iter().enumerate() {
                let mut row = params[off..off + len].to_vec();
                project_simplex(&mut row);
                model.factors[fi].table[row_idx] = row;
                off += len;
            }
        }
        model
    }

    /// Flattens the free rows of a model into a parameter vector.
    fn extract(&self, model: &FactoredModel) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.dim);
        for (k, &fi) in self.factor_indices.iter().enumerate() {
            for row_idx in 0..self.row_lens[k].len() {
                params.extend_from_slice(&model.factors[fi].table[row_idx]);
            }
        }
        params
    }

    /// Dirichlet(1) rows drawn from `rng`, as one flat vector.
    fn random_params(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut params = Vec::with_capacity(self.dim);
        for lens in &self.row_lens {
            for &len in lens {
                let mut row: Vec<f64> = (0..len).map(|_| -(rng.random::<f64>()).ln()).collect();
                let sum: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= sum);
                params.extend_from_slice(&row);
            }
        }
        params
    }
}

fn base_objective(objective: Objective, point: &RegionPoint) -> f64 {
    match objective {
        Objective::MaximizeR | Objective::ParetoTrace => -point.r_max,
        Objective::MinimizeRf1 => point.rf1_min,
        Objective::MinimizeRfSum => point.rf_sum_min,
    }
}

fn penalties(spec: &SearchSpec, point: &RegionPoint) -> f64 {
    let mut pen = PENALTY_WEIGHT * (point.achieved_d - spec.distortion.budget).max(0.0);
    if let (Some(b1), Some(d1)) = (spec.distortion.budget1, point.achieved_d1) {
        pen += PENALTY_WEIGHT * (d1 - b1).max(0.0);
    }
    if let Some(cap) = spec.rf1_cap {
        pen += PENALTY_WEIGHT * (point.rf1_min - cap).max(0.0);
    }
    if let Some(cap) = spec.rf2_cap {
        if let Some(rf2) = point.rf2_min {
            pen += PENALTY_WEIGHT * (rf2 - cap).max(0.0);
        }
    }
    pen
}

fn feasible(spec: &SearchSpec, point: &RegionPoint) -> bool {
    let mut ok = point.achieved_d <= spec.distortion.budget + BUDGET_SLACK;
    if let (Some(b1), Some(d1)) = (spec.distortion.budget1, point.achieved_d1) {
        ok &= d1 <= b1 + BUDGET_SLACK;
    }
    if let Some(cap) = spec.rf1_cap {
        ok &= point.rf1_min <= cap + BUDGET_SLACK;
    }
    if let Some(cap) = spec.rf2_cap {
        ok &= point.rf2_min.unwrap_or(0.0) <= cap + BUDGET_SLACK;
    }
    ok
}

struct RestartOutcome {
    params: Vec<f64>,
    point: RegionPoint,
    objective: f64,
    iterations: usize,
}

/// One restart of projected Nelder-Mead descent. Restart 0 starts from the
/// template tables; later restarts start from seeded Dirichlet draws.
fn run_restart(
    spec: &SearchSpec,
    layout: &Layout,
    score: &(dyn Fn(&RegionPoint) -> f64 + Sync),
    seed: u64,
    restart: usize,
    config: &SearchConfig,
) -> Result<RestartOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64 + 1);
    let x0 = if restart == 0 {
        layout.extract(&spec.template)
    } else {
        layout.random_params(&mut rng)
    };

    let mut f = |params: &[f64]| -> f64 {
        let model = layout.apply(spec, params);
        match eval_region(&model, &spec.distortion) {
            Ok(point) => score(&point) + penalties(spec, &point),
            Err(_) => f64::INFINITY,
        }
    };
    let mut init = vec![x0.clone()];
    for i in 0..layout.dim {
        let mut v = x0.clone();
        v[i] += 0.25;
        init.push(v);
    }
    let res = nelder_mead::minimize(&mut f, init, config.max_iter, config.tol);

    let model = layout.apply(spec, &res.best);
    let point = eval_region(&model, &spec.distortion)?;
    Ok(RestartOutcome {
        params: layout.extract(&model),
        point,
        objective: res.best_value,
        iterations: res.iterations,
    })
}

/// Restart loop for one scalar objective, merged deterministically: the
/// best objective wins and ties resolve to the lowest restart index.
fn optimize_scalar(
    spec: &SearchSpec,
    layout: &Layout,
    score: &(dyn Fn(&RegionPoint) -> f64 + Sync),
    seed: u64,
    config: &SearchConfig,
) -> Result<SearchResult> {
    let restarts = config.restarts.max(1);
    let threads = config.threads.max(1).min(restarts);
    let mut outcomes: Vec<Option<Result<RestartOutcome>>> = Vec::new();
    outcomes.resize_with(restarts, || None);

    if threads <= 1 {
        for (r, slot) in outcomes.iter_mut().enumerate() {
            *slot = Some(run_restart(spec, layout, score, seed, r, config));
        }
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots = std::sync::Mutex::new(&mut outcomes);
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let r = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if r >= restarts {
                        break;
                    }
                    let outcome = run_restart(spec, layout, score, seed, r, config);
                    slots.lock().unwrap()[r] = Some(outcome);
                });
            }
        });
    }

    let mut trace = Vec::with_capacity(restarts);
    let mut history = Vec::with_capacity(restarts);
    let mut iterations = 0usize;
    let mut best: Option<RestartOutcome> = None;
    for outcome in outcomes {
        let outcome = outcome.expect("restart not executed")?;
        history.push(outcome.objective);
        iterations += outcome.iterations;
        trace.push(TraceEntry {
            params: outcome.params.clone(),
            point: outcome.point.clone(),
            objective: outcome.objective,
        });
        let better = best
            .as_ref()
            .map(|b| outcome.objective < b.objective)
            .unwrap_or(true);
        if better {
            best = Some(outcome);
        }
    }
    let best = best.expect("at least one restart");
    if !feasible(spec, &best.point) {
        return Err(Error::InfeasibleBudget);
    }
    let best_model = layout.apply(spec, &best.params);
    Ok(SearchResult {
        best: best.point,
        best_model,
        best_objective: best.objective,
        trace,
        restarts,
        iterations,
        history,
    })
}

/// Multi-restart search for the spec's objective. Deterministic for a given
/// (spec, seed, config). For `ParetoTrace` a fixed ladder of scalarization
/// weights between R and the helper sum rate is searched and the hull of
/// the per-weight winners is returned in `trace`.
pub fn optimize(spec: &SearchSpec, seed: u64, config: &SearchConfig) -> Result<SearchResult> {
    let layout = Layout::resolve(spec)?;
    // Surface template problems (signature, shapes, cardinality) up front.
    eval_region(&spec.template, &spec.distortion)?;

    if spec.objective != Objective::ParetoTrace {
        let objective = spec.objective;
        let score = move |point: &RegionPoint| base_objective(objective, point);
        return optimize_scalar(spec, &layout, &score, seed, config);
    }

    const WEIGHTS: usize = 9;
    let mut history = Vec::new();
    let mut iterations = 0usize;
    let mut winners: Vec<TraceEntry> = Vec::new();
    let mut first: Option<SearchResult> = None;
    for w in 0..WEIGHTS {
        let t = w as f64 / (WEIGHTS - 1) as f64;
        let score = move |point: &RegionPoint| -> f64 {
            -(1.0 - t) * point.r_max + t * point.rf_sum_min
        };
        let result = optimize_scalar(spec, &layout, &score, seed.wrapping_add(w as u64), config)?;
        iterations += result.iterations;
        history.push(result.best_objective);
        winners.push(TraceEntry {
            params: result
                .trace
                .iter()
                .min_by(|a, b| a.objective.partial_cmp(&b.objective).unwrap())
                .map(|e| e.params.clone())
                .unwrap_or_default(),
            point: result.best.clone(),
            objective: result.best_objective,
        });
        if w == 0 {
            first = Some(result);
        }
    }
    let first = first.expect("weight ladder is nonempty");
    let hull = convex_hull_points(&winners.iter().map(|t| t.point.clone()).collect::<Vec<_>>());
    // One trace entry per hull point: the first winner realizing it.
    let trace: Vec<TraceEntry> = hull
        .iter()
        .filter_map(|p| winners.iter().find(|t| t.point == *p).cloned())
        .collect();
    Ok(SearchResult {
        best: first.best,
        best_model: first.best_model,
        best_objective: first.best_objective,
        trace,
        restarts: config.restarts,
        iterations,
        history,
    })
}

/// All simplex grid points with coordinates that are multiples of
/// `1/denominator`.
fn simplex_grid(len: usize, denominator: usize) -> Vec<Vec<f64>> {
    fn rec(remaining: usize, slots: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            current.push(remaining);
            out.push(current.clone());
            current.pop();
            return;
        }
        for take in 0..=remaining {
            current.push(take);
            rec(remaining - take, slots - 1, current, out);
            current.pop();
        }
    }
    let mut raw = Vec::new();
    rec(denominator, len, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|counts| {
            counts
                .into_iter()
                .map(|c| c as f64 / denominator as f64)
                .collect()
        })
        .collect()
}

fn count_compositions(denominator: usize, len: usize) -> u128 {
    // C(denominator + len - 1, len - 1)
    let mut out: u128 = 1;
    for i in 0..(len - 1) {
        out = out * (denominator as u128 + i as u128 + 1) / (i as u128 + 1);
    }
    out
}

/// Exhaustive evaluation over simplex grids with spacing `grid_step` for
/// every free-factor row. Returns the best feasible grid point under the
/// spec's objective, in deterministic enumeration order.
pub fn brute_force_oracle(spec: &SearchSpec, grid_step: f64) -> Result<SearchResult> {
    if !(grid_step > 0.0 && grid_step <= 1.0) {
        return Err(Error::OutOfRange {
            what: "grid step",
            value: grid_step,
        });
    }
    let layout = Layout::resolve(spec)?;
    eval_region(&spec.template, &spec.distortion)?;
    let denominator = (1.0 / grid_step).round().max(1.0) as usize;

    let mut row_shapes: Vec<usize> = Vec::new();
    for lens in &layout.row_lens {
        row_shapes.extend(lens.iter().copied());
    }
    let mut total: u128 = 1;
    for &len in &row_shapes {
        total = total.saturating_mul(count_compositions(denominator, len));
        if total > GRID_LIMIT {
            return Err(Error::GridTooLarge {
                points: total,
                limit: GRID_LIMIT,
            });
        }
    }

    let grids: Vec<Vec<Vec<f64>>> = row_shapes
        .iter()
        .map(|&len| simplex_grid(len, denominator))
        .collect();
    let objective = if spec.objective == Objective::ParetoTrace {
        Objective::MaximizeR
    } else {
        spec.objective
    };

    let mut odometer = vec![0usize; grids.len()];
    let mut best: Option<(Vec<f64>, RegionPoint, f64)> = None;
    let mut evaluated = 0usize;
    let mut done = false;
    while !done {
        let mut params = Vec::with_capacity(layout.dim);
        for (g, &pos) in grids.iter().zip(&odometer) {
            params.extend_from_slice(&g[pos]);
        }
        let model = layout.apply(spec, &params);
        let point = eval_region(&model, &spec.distortion)?;
        evaluated += 1;
        if feasible(spec, &point) {
            let value = base_objective(objective, &point);
            let better = best.as_ref().map(|(_, _, b)| value < *b).unwrap_or(true);
            if better {
                best = Some((params, point, value));
            }
        }
        // Advance the odometer, last row fastest.
        done = true;
        for i in (0..grids.len()).rev() {
            odometer[i] += 1;
            if odometer[i] < grids[i].len() {
                done = false;
                break;
            }
            odometer[i] = 0;
        }
    }
    let (params, point, value) = best.ok_or(Error::InfeasibleBudget)?;
    let best_model = layout.apply(spec, &params);
    Ok(SearchResult {
        best: point.clone(),
        best_model,
        best_objective: value,
        trace: vec![TraceEntry {
            params,
            point,
            objective: value,
        }],
        restarts: 0,
        iterations: evaluated,
        history: vec![value],
    })
}
