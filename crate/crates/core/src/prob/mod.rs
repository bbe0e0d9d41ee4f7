//! Finite-alphabet joint distributions and the operations the region
//! evaluators are built on: marginalization, conditioning, factored-model
//! composition, and conditional-independence verification.

mod factored;

pub use factored::{compose_factored, CondDist, FactoredModel, FactorSig, Variant};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Normalization slack tolerated on user-provided tensors before rejection.
pub const INPUT_NORMALIZATION_TOL: f64 = 1e-9;
/// Normalization slack every stored distribution satisfies after exact renormalization.
pub const INTERNAL_NORMALIZATION_TOL: f64 = 1e-12;

/// A named finite alphabet with ordered, unique symbol labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alphabet {
    pub name: String,
    pub symbols: Vec<String>,
}

impl Alphabet {
    pub fn new(name: impl Into<String>, symbols: Vec<String>) -> Result<Self> {
        let name = name.into();
        if symbols.is_empty() {
            return Err(Error::InvalidConfig(format!("alphabet `{name}` is empty")));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidConfig(format!(
                    "alphabet `{name}` repeats symbol `{s}`"
                )));
            }
        }
        Ok(Self { name, symbols })
    }

    /// Alphabet `0..size` with decimal labels.
    pub fn indexed(name: impl Into<String>, size: usize) -> Self {
        Self {
            name: name.into(),
            symbols: (0..size).map(|i| i.to_string()).collect(),
        }
    }

    pub fn binary(name: impl Into<String>) -> Self {
        Self::indexed(name, 2)
    }

    pub fn size(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol_index(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }
}

/// Dense joint distribution over an ordered list of named variables.
///
/// Probabilities are stored row-major in the declared variable order (the
/// last variable varies fastest). Entries are nonnegative and sum to one
/// within [`INTERNAL_NORMALIZATION_TOL`].
#[derive(Debug, Clone, PartialEq)]
pub struct JointDist {
    vars: Vec<(String, Alphabet)>,
    probs: Vec<f64>,
}

impl JointDist {
    /// Builds a joint distribution, rejecting negative entries, shape
    /// mismatches, and tensors off normalization by more than
    /// [`INPUT_NORMALIZATION_TOL`]. Accepted tensors are renormalized
    /// exactly so downstream sums can rely on Σp = 1.
    pub fn new(vars: Vec<(String, Alphabet)>, probs: Vec<f64>) -> Result<Self> {
        let expected: usize = vars.iter().map(|(_, a)| a.size()).product();
        if probs.len() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                got: probs.len(),
            });
        }
        for (i, n) in vars.iter().enumerate() {
            if vars[..i].iter().any(|m| m.0 == n.0) {
                return Err(Error::InvalidConfig(format!(
                    "variable `{}` declared twice",
                    n.0
                )));
            }
        }
        if let Some((index, &value)) = probs.iter().enumerate().find(|(_, &p)| p < 0.0) {
            return Err(Error::NegativeProbability { index, value });
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > INPUT_NORMALIZATION_TOL {
            return Err(Error::NotNormalized { sum });
        }
        let probs = probs.into_iter().map(|p| p / sum).collect();
        Ok(Self { vars, probs })
    }

    pub fn variables(&self) -> &[(String, Alphabet)] {
        &self.vars
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.vars.iter().map(|(_, a)| a.size()).collect()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn var_index(&self, role: &str) -> Result<usize> {
        self.vars
            .iter()
            .position(|(r, _)| r == role)
            .ok_or_else(|| Error::UnknownVariable(role.to_string()))
    }

    pub fn alphabet(&self, role: &str) -> Result<&Alphabet> {
        Ok(&self.vars[self.var_index(role)?].1)
    }

    /// Strides of the row-major layout, one per variable.
    pub fn strides(&self) -> Vec<usize> {
        let dims = self.dims();
        let mut strides = vec![1usize; dims.len()];
        for i in (0..dims.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        strides
    }

    /// Probability of a full assignment given as one index per variable.
    pub fn prob_at(&self, assignment: &[usize]) -> f64 {
        let strides = self.strides();
        let flat: usize = assignment
            .iter()
            .zip(&strides)
            .map(|(&a, &s)| a * s)
            .sum();
        self.probs[flat]
    }

    /// Sums out every variable not named in `keep`. The kept variables stay
    /// in their original relative order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<JointDist> {
        for role in keep {
            self.var_index(role)?;
        }
        let kept_idx: Vec<usize> = (0..self.vars.len())
            .filter(|&i| keep.contains(&self.vars[i].0.as_str()))
            .collect();
        let dims = self.dims();
        let strides = self.strides();

        let kept_dims: Vec<usize> = kept_idx.iter().map(|&i| dims[i]).collect();
        let out_len: usize = kept_dims.iter().product();
        let mut out = vec![0.0f64; out_len];

        let mut kept_strides = vec![1usize; kept_idx.len()];
        for i in (0..kept_idx.len().saturating_sub(1)).rev() {
            kept_strides[i] = kept_strides[i + 1] * kept_dims[i + 1];
        }

        for (flat, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let mut target = 0usize;
            for (k, &vi) in kept_idx.iter().enumerate() {
                let digit = (flat / strides[vi]) % dims[vi];
                target += digit * kept_strides[k];
            }
            out[target] += p;
        }

        let vars = kept_idx.iter().map(|&i| self.vars[i].clone()).collect();
        Ok(JointDist { vars, probs: out })
    }

    /// Conditions on `assignments` (variable role, symbol label), dropping the
    /// fixed variables and renormalizing the remaining slice.
    pub fn condition(&self, assignments: &[(&str, &str)]) -> Result<JointDist> {
        let mut fixed: Vec<(usize, usize)> = Vec::with_capacity(assignments.len());
        for (role, symbol) in assignments {
            let vi = self.var_index(role)?;
            let si = self.vars[vi].1.symbol_index(symbol).ok_or_else(|| {
                Error::UnknownSymbol {
                    variable: role.to_string(),
                    symbol: symbol.to_string(),
                }
            })?;
            fixed.push((vi, si));
        }
        self.condition_indices(&fixed)
    }

    /// Index-based variant of [`JointDist::condition`].
    pub fn condition_indices(&self, fixed: &[(usize, usize)]) -> Result<JointDist> {
        let dims = self.dims();
        let strides = self.strides();
        let keep_idx: Vec<usize> = (0..self.vars.len())
            .filter(|i| !fixed.iter().any(|(vi, _)| vi == i))
            .collect();
        let kept_dims: Vec<usize> = keep_idx.iter().map(|&i| dims[i]).collect();
        let mut kept_strides = vec![1usize; keep_idx.len()];
        for i in (0..keep_idx.len().saturating_sub(1)).rev() {
            kept_strides[i] = kept_strides[i + 1] * kept_dims[i + 1];
        }
        let mut out = vec![0.0f64; kept_dims.iter().product::<usize>().max(1)];
        let mut total = 0.0f64;
        'cells: for (flat, &p) in self.probs.iter().enumerate() {
            for &(vi, si) in fixed {
                if (flat / strides[vi]) % dims[vi] != si {
                    continue 'cells;
                }
            }
            let mut target = 0usize;
            for (k, &vi) in keep_idx.iter().enumerate() {
                target += ((flat / strides[vi]) % dims[vi]) * kept_strides[k];
            }
            out[target] += p;
            total += p;
        }
        if total <= 0.0 {
            return Err(Error::ZeroProbabilityEvent);
        }
        for p in &mut out {
            *p /= total;
        }
        let vars = keep_idx.iter().map(|&i| self.vars[i].clone()).collect();
        Ok(JointDist { vars, probs: out })
    }

    /// Iterates `(flat, assignment, p)` over cells with `p > 0`.
    pub fn support(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let dims = self.dims();
        let strides = self.strides();
        self.probs.iter().enumerate().filter_map(move |(flat, &p)| {
            if p > 0.0 {
                let idx = dims
                    .iter()
                    .zip(&strides)
                    .map(|(&d, &s)| (flat / s) % d)
                    .collect();
                Some((idx, p))
            } else {
                None
            }
        })
    }
}

/// Builds a joint distribution from an ordered variable list and a dense
/// row-major tensor.
pub fn make_joint(vars: Vec<(String, Alphabet)>, tensor: Vec<f64>) -> Result<JointDist> {
    JointDist::new(vars, tensor)
}

/// A conditional-independence statement `A ⊥ B | C`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarkovConstraint {
    pub a: Vec<String>,
    pub b: Vec<String>,
    pub given: Vec<String>,
}

impl MarkovConstraint {
    pub fn new(a: &[&str], b: &[&str], given: &[&str]) -> Self {
        Self {
            a: a.iter().map(|s| s.to_string()).collect(),
            b: b.iter().map(|s| s.to_string()).collect(),
            given: given.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let mut seen: Vec<&str> = Vec::new();
        for role in self.a.iter().chain(&self.b).chain(&self.given) {
            if seen.contains(&role.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "Markov constraint repeats variable `{role}`"
                )));
            }
            seen.push(role);
        }
        Ok(())
    }
}

/// Checks `A ⊥ B | C` on `joint`: true iff
/// max over cells of |P(a,b|c) − P(a|c)P(b|c)| ≤ `tol` for every `c` with
/// positive probability.
pub fn verify_markov(joint: &JointDist, c: &MarkovConstraint, tol: f64) -> Result<bool> {
    c.validate()?;
    let a_refs: Vec<&str> = c.a.iter().map(String::as_str).collect();
    let b_refs: Vec<&str> = c.b.iter().map(String::as_str).collect();
    let g_refs: Vec<&str> = c.given.iter().map(String::as_str).collect();
    let all: Vec<&str> = a_refs
        .iter()
        .chain(&b_refs)
        .chain(&g_refs)
        .copied()
        .collect();
    let abc = joint.marginalize(&all)?;

    let g_cells = if g_refs.is_empty() {
        vec![Vec::new()]
    } else {
        assignments(&abc, &g_refs)?
    };
    let mut worst = 0.0f64;
    for g_cell in g_cells {
        let fixed: Vec<(usize, usize)> = g_refs
            .iter()
            .zip(&g_cell)
            .map(|(r, &s)| (abc.var_index(r).unwrap(), s))
            .collect();
        let sliced = match abc.condition_indices(&fixed) {
            Ok(d) => d,
            Err(Error::ZeroProbabilityEvent) => continue,
            Err(e) => return Err(e),
        };
        let pa = sliced.marginalize(&a_refs)?;
        let pb = sliced.marginalize(&b_refs)?;
        let ab_refs: Vec<&str> = a_refs.iter().chain(&b_refs).copied().collect();
        let pab = sliced.marginalize(&ab_refs)?;

        // pa/pb keep the same relative variable order as pab, so the a- and
        // b-digits of a pab cell index the marginals directly.
        let a_pos: Vec<usize> = (0..pab.num_vars())
            .filter(|&i| c.a.contains(&pab.variables()[i].0))
            .collect();
        let b_pos: Vec<usize> = (0..pab.num_vars())
            .filter(|&i| c.b.contains(&pab.variables()[i].0))
            .collect();
        let dims = pab.dims();
        let strides = pab.strides();
        let pa_strides = pa.strides();
        let pb_strides = pb.strides();
        for (flat, &p) in pab.probs.iter().enumerate() {
            let ia: usize = a_pos
                .iter()
                .enumerate()
                .map(|(k, &vi)| ((flat / strides[vi]) % dims[vi]) * pa_strides[k])
                .sum();
            let ib: usize = b_pos
                .iter()
                .enumerate()
                .map(|(k, &vi)| ((flat / strides[vi]) % dims[vi]) * pb_strides[k])
                .sum();
            let diff = (p - pa.probs[ia] * pb.probs[ib]).abs();
            worst = worst.max(diff);
        }
    }
    Ok(worst <= tol)
}

/// Enumerates every assignment (one symbol index per listed variable).
pub fn assignments(joint: &JointDist, roles: &[&str]) -> Result<Vec<Vec<usize>>> {
    let sizes: Vec<usize> = roles
        .iter()
        .map(|r| joint.alphabet(r).map(Alphabet::size))
        .collect::<Result<_>>()?;
    Ok(enumerate_assignments(&sizes))
}

/// Row-major enumeration of a mixed-radix space.
pub fn enumerate_assignments(sizes: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = sizes.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut flat in 0..total {
        let mut cell = vec![0usize; sizes.len()];
        for i in (0..sizes.len()).rev() {
            cell[i] = flat % sizes[i];
            flat /= sizes[i];
        }
        out.push(cell);
    }
    out
}
