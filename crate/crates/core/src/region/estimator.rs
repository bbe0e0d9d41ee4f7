//! Optimal deterministic state estimators for a given observation context.

use crate::error::{Error, Result};
use crate::prob::JointDist;
use serde::{Deserialize, Serialize};

/// Distortion matrix over (state, reconstruction) pairs plus the budget(s)
/// a search or simulation has to meet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistortionSpec {
    /// d(s, s_hat), |S| rows by |S_hat| columns, nonnegative.
    pub matrix: Vec<Vec<f64>>,
    pub budget: f64,
    /// First-stage budget for successive refinement; must exceed `budget`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget1: Option<f64>,
}

impl DistortionSpec {
    /// Hamming distortion on an n-symbol state alphabet.
    pub fn hamming(n: usize, budget: f64) -> Self {
        let matrix = (0..n)
            .map(|s| (0..n).map(|r| if s == r { 0.0 } else { 1.0 }).collect())
            .collect();
        Self {
            matrix,
            budget,
            budget1: None,
        }
    }

    pub fn with_budget1(mut self, budget1: f64) -> Self {
        self.budget1 = Some(budget1);
        self
    }

    pub fn reconstruction_size(&self) -> usize {
        self.matrix.first().map(Vec::len).unwrap_or(0)
    }

    pub fn validate(&self, state_size: usize) -> Result<()> {
        if self.matrix.len() != state_size {
            return Err(Error::ShapeMismatch {
                expected: state_size,
                got: self.matrix.len(),
            });
        }
        let cols = self.reconstruction_size();
        if cols == 0 {
            return Err(Error::InvalidConfig("empty distortion matrix".into()));
        }
        for row in &self.matrix {
            if row.len() != cols {
                return Err(Error::ShapeMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            if let Some(&value) = row.iter().find(|&&v| v < 0.0) {
                return Err(Error::OutOfRange {
                    what: "distortion entry",
                    value,
                });
            }
        }
        if self.budget < 0.0 {
            return Err(Error::OutOfRange {
                what: "distortion budget",
                value: self.budget,
            });
        }
        Ok(())
    }
}

/// Deterministic map from a context assignment to a reconstruction symbol.
#[derive(Debug, Clone, Serialize)]
pub struct EstimatorTable {
    pub context: Vec<String>,
    context_dims: Vec<usize>,
    /// Flat context index (row-major over `context`) to reconstruction index.
    pub map: Vec<usize>,
}

impl EstimatorTable {
    pub fn lookup(&self, assignment: &[usize]) -> usize {
        let mut flat = 0usize;
        for (a, d) in assignment.iter().zip(&self.context_dims) {
            flat = flat * d + a;
        }
        self.map[flat]
    }
}

/// Computes the estimator minimizing expected distortion for each context
/// cell (ties broken toward the lowest reconstruction index) and the
/// distortion it achieves.
pub fn optimal_estimator(
    joint: &JointDist,
    context: &[&str],
    d: &DistortionSpec,
) -> Result<(EstimatorTable, f64)> {
    let state_size = joint.alphabet("S")?.size();
    d.validate(state_size)?;
    let recon = d.reconstruction_size();

    let mut keep: Vec<&str> = vec!["S"];
    keep.extend_from_slice(context);
    let marg = joint.marginalize(&keep)?;
    // Variable order in `marg` follows the original joint; find positions.
    let s_pos = marg.var_index("S")?;
    let ctx_pos: Vec<usize> = context
        .iter()
        .map(|r| marg.var_index(r))
        .collect::<Result<_>>()?;
    let dims = marg.dims();
    let strides = marg.strides();
    let context_dims: Vec<usize> = context
        .iter()
        .map(|r| joint.alphabet(r).map(|a| a.size()))
        .collect::<Result<_>>()?;

    let cells: usize = context_dims.iter().product::<usize>().max(1);
    // weights[cell][s] = P(s, context cell)
    let mut weights = vec![vec![0.0f64; state_size]; cells];
    for (flat, &p) in marg.probs().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let s = (flat / strides[s_pos]) % dims[s_pos];
        let mut cell = 0usize;
        for (k, &vp) in ctx_pos.iter().enumerate() {
            cell = cell * context_dims[k] + (flat / strides[vp]) % dims[vp];
        }
        weights[cell][s] += p;
    }

    let mut map = vec![0usize; cells];
    let mut achieved = 0.0f64;
    for (cell, w) in weights.iter().enumerate() {
        let mut best = 0usize;
        let mut best_val = f64::INFINITY;
        for r in 0..recon {
            let val: f64 = (0..state_size).map(|s| w[s] * d.matrix[s][r]).sum();
            if val < best_val {
                best_val = val;
                best = r;
            }
        }
        map[cell] = best;
        achieved += best_val;
    }

    Ok((
        EstimatorTable {
            context: context.iter().map(|s| s.to_string()).collect(),
            context_dims,
            map,
        },
        achieved,
    ))
}
