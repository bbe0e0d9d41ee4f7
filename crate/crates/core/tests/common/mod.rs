//! Shared test support: seeded random models per variant and a fully
//! independent nested-loop oracle that recomputes every region constraint
//! from first principles (its own joint construction, its own grouping-based
//! information measures, its own estimator argmin).

#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use isac_regions::prob::{Alphabet, CondDist, FactoredModel, Variant};
use isac_regions::region::DistortionSpec;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub fn dirichlet_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| {
            let mut row: Vec<f64> = (0..cols).map(|_| -(rng.random::<f64>()).ln()).collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= sum);
            row
        })
        .collect()
}

/// Alphabet size of each role in the random test models: binary everywhere,
/// except the decomposable inner variants where Y carries two two-symbol
/// blocks pinned to the state.
pub fn role_size(variant: Variant, role: &str) -> usize {
    match (variant, role) {
        (Variant::DecomposableIn1 | Variant::DecomposableIn2, "Y") => 4,
        _ => 2,
    }
}

/// Seeded random model of the given variant with full-support factors.
pub fn random_model(variant: Variant, seed: u64) -> FactoredModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabets: Vec<Alphabet> = variant
        .variables()
        .iter()
        .map(|r| Alphabet::indexed(*r, role_size(variant, r)))
        .collect();
    let size = |role: &str| role_size(variant, role);
    let factors = variant
        .signature()
        .iter()
        .map(|sig| {
            let rows: usize = sig.givens.iter().map(|r| size(r)).product();
            let cols: usize = sig.targets.iter().map(|r| size(r)).product();
            if variant.uses_common_component()
                && sig.targets.len() == 1
                && sig.targets[0] == "Y"
            {
                // Block-structured channel: the output block equals the
                // state, the symbol within the block is random in (x, s).
                let mut table = vec![vec![0.0; cols]; rows];
                for x in 0..2usize {
                    for s in 0..2usize {
                        let p: f64 = 0.1 + 0.8 * rng.random::<f64>();
                        table[x * 2 + s][s * 2] = 1.0 - p;
                        table[x * 2 + s][s * 2 + 1] = p;
                    }
                }
                CondDist::new(sig.targets, sig.givens, table)
            } else {
                CondDist::new(sig.targets, sig.givens, dirichlet_rows(&mut rng, rows, cols))
            }
        })
        .collect();
    FactoredModel::new(variant, alphabets, factors)
}

/// Hamming distortion matched to the model's state alphabet.
pub fn hamming_for(model: &FactoredModel) -> DistortionSpec {
    let s = model.size("S").unwrap();
    let mut d = DistortionSpec::hamming(s, 1.0);
    if model.variant == Variant::SuccessiveRefinement {
        d = d.with_budget1(1.0);
    }
    d
}

/// Reference model for the coding-scheme experiments: uniform binary
/// helpers that carry no rate, the message codeword driving the input
/// directly, and a skewed state-dependent channel whose impossible cell
/// (X = 1 never yields Y = 0) gives the decoder its discrimination power.
pub fn trend_model() -> FactoredModel {
    let alphabets = Variant::GeneralInner
        .variables()
        .iter()
        .map(|r| {
            if *r == "Q" {
                Alphabet::indexed("Q", 1)
            } else {
                Alphabet::binary(*r)
            }
        })
        .collect();
    let factors = vec![
        CondDist::new(&["S"], &[], vec![vec![0.5, 0.5]]),
        CondDist::new(&["Q"], &[], vec![vec![1.0]]),
        CondDist::new(&["V11", "V12"], &["S", "Q"], vec![vec![0.25; 4]; 2]),
        CondDist::new(&["U"], &["V11", "Q"], vec![vec![0.5, 0.5]; 2]),
        CondDist::from_fn(&["X"], &["U", "V11", "Q"], &[2], &[2, 2, 1], |t, g| {
            if t[0] == g[0] {
                1.0
            } else {
                0.0
            }
        }),
        CondDist::from_fn(&["Y", "Z"], &["X", "S"], &[2, 2], &[2, 2], |t, g| {
            // X = 1 forces Y = 1; X = 0 yields Y = 0 with a small
            // state-dependent probability. Z copies Y.
            let p1 = if g[0] == 1 {
                1.0
            } else if g[1] == 0 {
                0.9
            } else {
                0.86
            };
            let py = if t[0] == 1 { p1 } else { 1.0 - p1 };
            if t[1] == t[0] {
                py
            } else {
                0.0
            }
        }),
        CondDist::new(&["V2"], &["Z", "Q"], vec![vec![0.5, 0.5]; 2]),
    ];
    FactoredModel::new(Variant::GeneralInner, alphabets, factors)
}

/// Region constraint values recomputed by the oracle.
#[derive(Debug, Clone, Copy)]
pub struct OraclePoint {
    pub r_max: f64,
    pub rf1_min: f64,
    pub rf2_min: Option<f64>,
    pub rf_sum_min: f64,
    pub achieved_d: f64,
    pub achieved_d1: Option<f64>,
}

/// Dense joint over the variant's canonical variable list, built with
/// explicit nested loops over factor tables (no library composition).
pub struct OracleJoint {
    pub roles: Vec<String>,
    pub dims: Vec<usize>,
    pub p: Vec<f64>,
}

impl OracleJoint {
    fn idx_of(&self, role: &str) -> usize {
        self.roles.iter().position(|r| r == role).unwrap()
    }

    fn indices(&self, roles: &[&str]) -> Vec<usize> {
        roles.iter().map(|r| self.idx_of(r)).collect()
    }

    fn cells(&self) -> Vec<Vec<usize>> {
        let total: usize = self.dims.iter().product();
        (0..total)
            .map(|mut flat| {
                let mut cell = vec![0usize; self.dims.len()];
                for i in (0..self.dims.len()).rev() {
                    cell[i] = flat % self.dims[i];
                    flat /= self.dims[i];
                }
                cell
            })
            .collect()
    }

    fn group(&self, vars: &[usize]) -> BTreeMap<Vec<usize>, f64> {
        let mut out = BTreeMap::new();
        for (cell, &p) in self.cells().iter().zip(&self.p) {
            if p > 0.0 {
                let key: Vec<usize> = vars.iter().map(|&v| cell[v]).collect();
                *out.entry(key).or_insert(0.0) += p;
            }
        }
        out
    }

    /// I(A;B|C) = sum p(abc) log2( p(abc) p(c) / (p(ac) p(bc)) ).
    pub fn mi(&self, a: &[&str], b: &[&str], c: &[&str]) -> f64 {
        let (ai, bi, ci) = (self.indices(a), self.indices(b), self.indices(c));
        let mut abc_vars = ai.clone();
        abc_vars.extend(&bi);
        abc_vars.extend(&ci);
        let mut ac_vars = ai.clone();
        ac_vars.extend(&ci);
        let mut bc_vars = bi.clone();
        bc_vars.extend(&ci);

        let p_abc = self.group(&abc_vars);
        let p_ac = self.group(&ac_vars);
        let p_bc = self.group(&bc_vars);
        let p_c = self.group(&ci);

        let mut total = 0.0;
        for (key, &pabc) in &p_abc {
            let na = ai.len();
            let nb = bi.len();
            let key_ac: Vec<usize> = key[..na]
                .iter()
                .chain(&key[na + nb..])
                .copied()
                .collect();
            let key_bc: Vec<usize> = key[na..].to_vec();
            let key_c: Vec<usize> = key[na + nb..].to_vec();
            let pac = p_ac[&key_ac];
            let pbc = p_bc[&key_bc];
            let pc = if ci.is_empty() { 1.0 } else { p_c[&key_c] };
            total += pabc * (pabc * pc / (pac * pbc)).log2();
        }
        total.max(0.0)
    }

    /// H(T|G) = -sum p(tg) log2( p(tg)/p(g) ).
    pub fn cond_entropy(&self, t: &[&str], g: &[&str]) -> f64 {
        let (ti, gi) = (self.indices(t), self.indices(g));
        let mut tg_vars = ti.clone();
        tg_vars.extend(&gi);
        let p_tg = self.group(&tg_vars);
        let p_g = self.group(&gi);
        let mut total = 0.0;
        for (key, &ptg) in &p_tg {
            let key_g: Vec<usize> = key[ti.len()..].to_vec();
            let pg = if gi.is_empty() { 1.0 } else { p_g[&key_g] };
            total -= ptg * (ptg / pg).log2();
        }
        total.max(0.0)
    }

    /// Expected distortion of the per-context argmin estimator.
    pub fn estimator_distortion(&self, context: &[&str], d: &DistortionSpec) -> f64 {
        let s_idx = self.idx_of("S");
        let ctx = self.indices(context);
        let mut by_context: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        let s_size = self.dims[s_idx];
        for (cell, &p) in self.cells().iter().zip(&self.p) {
            if p > 0.0 {
                let key: Vec<usize> = ctx.iter().map(|&v| cell[v]).collect();
                by_context.entry(key).or_insert_with(|| vec![0.0; s_size])[cell[s_idx]] += p;
            }
        }
        let recon = d.matrix[0].len();
        let mut total = 0.0;
        for weights in by_context.values() {
            let mut best = f64::INFINITY;
            for r in 0..recon {
                let val: f64 = (0..s_size).map(|s| weights[s] * d.matrix[s][r]).sum();
                if val < best {
                    best = val;
                }
            }
            total += best;
        }
        total
    }
}

fn factor_value(f: &CondDist, sizes: &dyn Fn(&str) -> usize, t: &[usize], g: &[usize]) -> f64 {
    let mut row = 0usize;
    for (v, role) in g.iter().zip(&f.givens) {
        row = row * sizes(role) + v;
    }
    let mut col = 0usize;
    for (v, role) in t.iter().zip(&f.targets) {
        col = col * sizes(role) + v;
    }
    f.table[row][col]
}

/// Composes the model with explicit loops, including the deterministic
/// common component for the decomposable inner variants (derived by a
/// hand-rolled component search over the state-output support).
pub fn oracle_compose(model: &FactoredModel) -> OracleJoint {
    let roles: Vec<String> = model
        .variant
        .variables()
        .iter()
        .map(|r| r.to_string())
        .collect();
    let sizes = |role: &str| -> usize { model.alphabet(role).unwrap().size() };
    let dims: Vec<usize> = roles.iter().map(|r| sizes(r)).collect();

    // Common component map for the inner decomposable variants.
    let k_of_s: Option<Vec<usize>> = if model.variant.uses_common_component() {
        Some(oracle_common_part(model))
    } else {
        None
    };

    let total: usize = dims.iter().product();
    let mut p = vec![0.0f64; total];
    for flat in 0..total {
        let mut cell = vec![0usize; dims.len()];
        let mut rem = flat;
        for i in (0..dims.len()).rev() {
            cell[i] = rem % dims[i];
            rem /= dims[i];
        }
        let value_of = |role: &str| cell[roles.iter().position(|r| r == role).unwrap()];
        if let Some(map) = &k_of_s {
            if value_of("K") != map[value_of("S")] {
                continue;
            }
        }
        let mut prob = 1.0;
        for factor in &model.factors {
            let t: Vec<usize> = factor.targets.iter().map(|r| value_of(r)).collect();
            let g: Vec<usize> = factor.givens.iter().map(|r| value_of(r)).collect();
            prob *= factor_value(factor, &sizes, &t, &g);
        }
        p[flat] = prob;
    }
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    OracleJoint { roles, dims, p }
}

/// Hand-rolled component labelling of the state-output support: repeatedly
/// sweeps the support until labels stabilize.
pub fn oracle_common_part(model: &FactoredModel) -> Vec<usize> {
    let sizes = |role: &str| -> usize { model.alphabet(role).unwrap().size() };
    let (s_n, v11_n, x_n, y_n) = (sizes("S"), sizes("V11"), sizes("X"), sizes("Y"));
    let p_s = model.factor(&["S"]).unwrap();
    let p_v11 = model.factor(&["V11"]).unwrap();
    let p_x = model.factor(&["X"]).unwrap();
    let p_y = model.factor(&["Y"]).unwrap();
    let mut p_sy = vec![vec![0.0f64; y_n]; s_n];
    for s in 0..s_n {
        for v11 in 0..v11_n {
            for x in 0..x_n {
                for y in 0..y_n {
                    p_sy[s][y] += factor_value(p_s, &sizes, &[s], &[])
                        * factor_value(p_v11, &sizes, &[v11], &[s])
                        * factor_value(p_x, &sizes, &[x], &[v11])
                        * factor_value(p_y, &sizes, &[y], &[x, s]);
                }
            }
        }
    }
    // Label propagation: start each state in its own class, merge through
    // shared outputs until a fixpoint.
    let mut label: Vec<usize> = (0..s_n).collect();
    loop {
        let mut changed = false;
        for y in 0..y_n {
            let touching: Vec<usize> = (0..s_n).filter(|&s| p_sy[s][y] > 1e-12).collect();
            if let Some(&min) = touching.iter().map(|&s| &label[s]).min() {
                for &s in &touching {
                    if label[s] != min {
                        label[s] = min;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    // Renumber labels by first appearance among positive-probability states.
    let mut seen: Vec<usize> = Vec::new();
    let mut out = vec![0usize; s_n];
    for s in 0..s_n {
        let l = label[s];
        let k = match seen.iter().position(|&x| x == l) {
            Some(k) => k,
            None => {
                seen.push(l);
                seen.len() - 1
            }
        };
        out[s] = k;
    }
    out
}

/// Recomputes every constraint of the model's variant from the oracle joint.
pub fn oracle_point(model: &FactoredModel, d: &DistortionSpec) -> OraclePoint {
    let j = oracle_compose(model);
    match model.variant {
        Variant::GeneralInner => {
            let r = (j.mi(&["U"], &["Y"], &["Q"]) - j.mi(&["U"], &["V11"], &["Q"])).max(0.0);
            let rf1 = j.mi(&["V11"], &["S"], &["Q"])
                + j.mi(&["V12"], &["S", "Z"], &["U", "V11", "V2", "Q"]);
            let rf2 = j.mi(&["V2"], &["S", "Z"], &["U", "V11", "V12", "Q"]);
            let rf_sum = j.mi(&["V11"], &["S"], &["Q"])
                + j.mi(&["V12", "V2"], &["S", "Z"], &["U", "V11", "Q"]);
            OraclePoint {
                r_max: r,
                rf1_min: rf1,
                rf2_min: Some(rf2),
                rf_sum_min: rf_sum,
                achieved_d: j.estimator_distortion(&["Q", "U", "X", "V12", "V2"], d),
                achieved_d1: None,
            }
        }
        Variant::PerfectFeedbackInner | Variant::PerfectFeedbackOuter => {
            let r = j.mi(&["X"], &["Y"], &["V11", "S"]);
            let rf1 =
                j.mi(&["V11"], &["S"], &[]) + j.mi(&["V12"], &["S"], &["X", "Y", "V11"]);
            OraclePoint {
                r_max: r,
                rf1_min: rf1,
                rf2_min: None,
                rf_sum_min: rf1,
                achieved_d: j.estimator_distortion(&["X", "Y", "V12"], d),
                achieved_d1: None,
            }
        }
        Variant::SuccessiveRefinement => {
            let r = j.mi(&["X"], &["Y"], &["V11", "S"]);
            let rf1 =
                j.mi(&["V11"], &["S"], &[]) + j.mi(&["V12"], &["S"], &["X", "Y", "V11"]);
            OraclePoint {
                r_max: r,
                rf1_min: rf1,
                rf2_min: None,
                rf_sum_min: rf1,
                achieved_d: j.estimator_distortion(&["X", "Y", "V12"], d),
                achieved_d1: Some(j.estimator_distortion(&["V11"], d)),
            }
        }
        Variant::DecomposableIn1 => {
            let r = j.mi(&["X"], &["Y"], &["S", "V11", "T"]);
            let rf1 = j.mi(&["V11"], &["S"], &[])
                + j.mi(&["T"], &["S"], &["V11"])
                + j.mi(&["V12"], &["S"], &["X", "Y", "V11", "T"]);
            let rf2 = j.cond_entropy(&["Y"], &["X", "V11", "V12", "T"]);
            let rf_sum = j.mi(&["V11"], &["S"], &[])
                + j.mi(&["T"], &["S"], &["V11"])
                + j.mi(&["V12"], &["S"], &["X", "Y", "V11", "T"])
                + j.cond_entropy(&["Y"], &["X", "V11", "T"]);
            OraclePoint {
                r_max: r,
                rf1_min: rf1,
                rf2_min: Some(rf2),
                rf_sum_min: rf_sum,
                achieved_d: j.estimator_distortion(&["T", "V12", "X", "Y"], d),
                achieved_d1: None,
            }
        }
        Variant::DecomposableIn2 => {
            let r = j.mi(&["X"], &["Y"], &["S", "V11"]);
            let rf1 = j.mi(&["V11"], &["S"], &[])
                + j.mi(&["V12"], &["S"], &["X", "Y", "V11", "T"]);
            let rf2 = j.mi(&["T"], &["Y"], &["V11"])
                + j.cond_entropy(&["Y"], &["X", "V11", "V12", "T"]);
            let rf_sum = j.mi(&["V11"], &["S"], &[])
                + j.mi(&["T"], &["Y"], &["V11"])
                + j.mi(&["V12"], &["S"], &["X", "Y", "V11", "T"])
                + j.cond_entropy(&["Y"], &["X", "V11", "T"]);
            OraclePoint {
                r_max: r,
                rf1_min: rf1,
                rf2_min: Some(rf2),
                rf_sum_min: rf_sum,
                achieved_d: j.estimator_distortion(&["T", "V12", "X", "Y"], d),
                achieved_d1: None,
            }
        }
        Variant::DecomposableOuter => {
            let r = j.mi(&["X"], &["Y"], &["S", "V11"]);
            let rf1 = j.mi(&["V11"], &["S"], &[])
                + j.mi(&["V12"], &["S"], &["X", "Y", "V11", "T"]);
            let rf2 = j.cond_entropy(&["Y"], &["X", "V11", "V12", "T"]);
            let rf_sum = j.mi(&["V11"], &["S"], &[])
                + j.mi(&["T"], &["S"], &["V11", "X"])
                + j.mi(&["V12"], &["S"], &["T", "X", "Y", "V11"])
                + j.cond_entropy(&["Y"], &["T", "V11", "X"]);
            OraclePoint {
                r_max: r,
                rf1_min: rf1,
                rf2_min: Some(rf2),
                rf_sum_min: rf_sum,
                achieved_d: j.estimator_distortion(&["T", "V12", "X", "Y"], d),
                achieved_d1: None,
            }
        }
        Variant::Causal => {
            let r = j.mi(&["X"], &["Y"], &["S"]);
            let rf1 = j.mi(&["V"], &["S"], &["X", "Y", "T"]);
            let rf2 = j.cond_entropy(&["Y"], &["X", "V", "T"]);
            let rf_sum =
                j.mi(&["T", "V"], &["S"], &["X"]) + j.cond_entropy(&["Y"], &["T", "V", "X"]);
            OraclePoint {
                r_max: r,
                rf1_min: rf1,
                rf2_min: Some(rf2),
                rf_sum_min: rf_sum,
                achieved_d: j.estimator_distortion(&["T", "V", "X", "Y"], d),
                achieved_d1: None,
            }
        }
    }
}
