//! Factored models: one pmf factorization per region variant, validated
//! against a fixed signature and composed into a dense joint distribution.

use super::{enumerate_assignments, Alphabet, JointDist, INPUT_NORMALIZATION_TOL};
use crate::error::{Error, Result};
use crate::region::extract_common_part;
use serde::{Deserialize, Serialize};

/// Which factorization (and therefore which constraint set) a model carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    GeneralInner,
    PerfectFeedbackInner,
    PerfectFeedbackOuter,
    DecomposableIn1,
    DecomposableIn2,
    DecomposableOuter,
    Causal,
    SuccessiveRefinement,
}

impl Variant {
    pub const ALL: [Variant; 8] = [
        Variant::GeneralInner,
        Variant::PerfectFeedbackInner,
        Variant::PerfectFeedbackOuter,
        Variant::DecomposableIn1,
        Variant::DecomposableIn2,
        Variant::DecomposableOuter,
        Variant::Causal,
        Variant::SuccessiveRefinement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::GeneralInner => "general-inner",
            Variant::PerfectFeedbackInner => "perfect-feedback-inner",
            Variant::PerfectFeedbackOuter => "perfect-feedback-outer",
            Variant::DecomposableIn1 => "decomposable-in1",
            Variant::DecomposableIn2 => "decomposable-in2",
            Variant::DecomposableOuter => "decomposable-outer",
            Variant::Causal => "causal",
            Variant::SuccessiveRefinement => "successive-refinement",
        }
    }

    /// Variables of the composed joint, in canonical order.
    pub fn variables(self) -> &'static [&'static str] {
        match self {
            Variant::GeneralInner => &["S", "Q", "V11", "V12", "U", "X", "Y", "Z", "V2"],
            Variant::PerfectFeedbackInner
            | Variant::PerfectFeedbackOuter
            | Variant::SuccessiveRefinement => &["S", "V11", "V12", "X", "Y"],
            Variant::DecomposableIn1 | Variant::DecomposableIn2 => {
                &["S", "V11", "V12", "X", "Y", "T", "K"]
            }
            Variant::DecomposableOuter => &["S", "V11", "V12", "X", "Y", "T"],
            Variant::Causal => &["S", "X", "Y", "V", "T"],
        }
    }

    /// Declared factorization, in composition order.
    pub fn signature(self) -> &'static [FactorSig] {
        const GENERAL: &[FactorSig] = &[
            FactorSig::new(&["S"], &[]),
            FactorSig::new(&["Q"], &[]),
            FactorSig::new(&["V11", "V12"], &["S", "Q"]),
            FactorSig::new(&["U"], &["V11", "Q"]),
            FactorSig::new(&["X"], &["U", "V11", "Q"]),
            FactorSig::new(&["Y", "Z"], &["X", "S"]),
            FactorSig::new(&["V2"], &["Z", "Q"]),
        ];
        const PF_INNER: &[FactorSig] = &[
            FactorSig::new(&["S"], &[]),
            FactorSig::new(&["V11", "V12"], &["S"]),
            FactorSig::new(&["X"], &["V11"]),
            FactorSig::new(&["Y"], &["X", "S"]),
        ];
        const PF_OUTER: &[FactorSig] = &[
            FactorSig::new(&["S"], &[]),
            FactorSig::new(&["V11", "V12"], &["S"]),
            FactorSig::new(&["X"], &["V11", "V12"]),
            FactorSig::new(&["Y"], &["X", "S"]),
        ];
        const DEC_IN1: &[FactorSig] = &[
            FactorSig::new(&["S"], &[]),
            FactorSig::new(&["V11"], &["S"]),
            FactorSig::new(&["T"], &["K", "V11"]),
            FactorSig::new(&["V12"], &["S", "T", "V11"]),
            FactorSig::new(&["X"], &["V11"]),
            FactorSig::new(&["Y"], &["X", "S"]),
        ];
        const DEC_IN2: &[FactorSig] = &[
            FactorSig::new(&["S"], &[]),
            FactorSig::new(&["V11"], &["S"]),
            FactorSig::new(&["T"], &["K"]),
            FactorSig::new(&["V12"], &["S", "T", "V11"]),
            FactorSig::new(&["X"], &["V11"]),
            FactorSig::new(&["Y"], &["X", "S"]),
        ];
        const DEC_OUTER: &[FactorSig] = &[
            FactorSig::new(&["S"], &[]),
            FactorSig::new(&["V11"], &["S"]),
            FactorSig::new(&["X"], &["V11"]),
            FactorSig::new(&["T"], &["S", "V11", "X"]),
            FactorSig::new(&["V12"], &["S", "T", "V11", "X"]),
            FactorSig::new(&["Y"], &["X", "S"]),
        ];
        const CAUSAL: &[FactorSig] = &[
            FactorSig::new(&["S"], &[]),
            FactorSig::new(&["X"], &[]),
            FactorSig::new(&["V", "T"], &["S", "X"]),
            FactorSig::new(&["Y"], &["X", "S"]),
        ];
        match self {
            Variant::GeneralInner => GENERAL,
            Variant::PerfectFeedbackInner => PF_INNER,
            Variant::PerfectFeedbackOuter | Variant::SuccessiveRefinement => PF_OUTER,
            Variant::DecomposableIn1 => DEC_IN1,
            Variant::DecomposableIn2 => DEC_IN2,
            Variant::DecomposableOuter => DEC_OUTER,
            Variant::Causal => CAUSAL,
        }
    }

    /// True for the two decomposable inner variants whose `T` factor
    /// conditions on the common component `K`.
    pub fn uses_common_component(self) -> bool {
        matches!(self, Variant::DecomposableIn1 | Variant::DecomposableIn2)
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant `{s}`")))
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Target/given role lists a factor must match exactly.
#[derive(Debug, Clone, Copy)]
pub struct FactorSig {
    pub targets: &'static [&'static str],
    pub givens: &'static [&'static str],
}

impl FactorSig {
    const fn new(targets: &'static [&'static str], givens: &'static [&'static str]) -> Self {
        Self { targets, givens }
    }
}

/// Conditional distribution table. Rows are indexed row-major by the given
/// variables (last fastest); each row is a distribution over the target
/// assignments, again row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondDist {
    #[serde(rename = "target")]
    pub targets: Vec<String>,
    #[serde(rename = "given", default)]
    pub givens: Vec<String>,
    pub table: Vec<Vec<f64>>,
}

impl CondDist {
    pub fn new(targets: &[&str], givens: &[&str], table: Vec<Vec<f64>>) -> Self {
        Self {
            targets: targets.iter().map(|s| s.to_string()).collect(),
            givens: givens.iter().map(|s| s.to_string()).collect(),
            table,
        }
    }

    /// Builds a table from a closure of (target assignment, given assignment).
    pub fn from_fn(
        targets: &[&str],
        givens: &[&str],
        target_sizes: &[usize],
        given_sizes: &[usize],
        f: impl Fn(&[usize], &[usize]) -> f64,
    ) -> Self {
        let table = enumerate_assignments(given_sizes)
            .iter()
            .map(|g| {
                enumerate_assignments(target_sizes)
                    .iter()
                    .map(|t| f(t, g))
                    .collect()
            })
            .collect();
        Self::new(targets, givens, table)
    }

    /// Validates shapes and row normalization, then renormalizes each row
    /// exactly.
    fn validate(&mut self, sizes: impl Fn(&str) -> Result<usize>) -> Result<()> {
        let rows: usize = self
            .givens
            .iter()
            .map(|r| sizes(r))
            .product::<Result<usize>>()?;
        let cols: usize = self
            .targets
            .iter()
            .map(|r| sizes(r))
            .product::<Result<usize>>()?;
        if self.table.len() != rows {
            return Err(Error::ShapeMismatch {
                expected: rows,
                got: self.table.len(),
            });
        }
        for row in &mut self.table {
            if row.len() != cols {
                return Err(Error::ShapeMismatch {
                    expected: cols,
                    got: row.len(),
                });
            }
            if let Some((index, &value)) = row.iter().enumerate().find(|(_, &p)| p < 0.0) {
                return Err(Error::NegativeProbability { index, value });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > INPUT_NORMALIZATION_TOL {
                return Err(Error::NotNormalized { sum });
            }
            row.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(())
    }

    fn value(&self, target_sizes: &[usize], t: &[usize], given_sizes: &[usize], g: &[usize]) -> f64 {
        let row = flat_index(g, given_sizes);
        let col = flat_index(t, target_sizes);
        self.table[row][col]
    }
}

fn flat_index(assignment: &[usize], sizes: &[usize]) -> usize {
    let mut flat = 0usize;
    for (a, s) in assignment.iter().zip(sizes) {
        flat = flat * s + a;
    }
    flat
}

/// A variant tag plus the alphabets and conditional factors of its pmf.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactoredModel {
    pub variant: Variant,
    pub alphabets: Vec<Alphabet>,
    pub factors: Vec<CondDist>,
    #[serde(default)]
    pub cardinality_override: bool,
}

impl FactoredModel {
    pub fn new(variant: Variant, alphabets: Vec<Alphabet>, factors: Vec<CondDist>) -> Self {
        Self {
            variant,
            alphabets,
            factors,
            cardinality_override: false,
        }
    }

    pub fn alphabet(&self, role: &str) -> Result<&Alphabet> {
        self.alphabets
            .iter()
            .find(|a| a.name == role)
            .ok_or_else(|| Error::UnknownVariable(role.to_string()))
    }

    pub fn size(&self, role: &str) -> Result<usize> {
        Ok(self.alphabet(role)?.size())
    }

    /// The factor whose target list equals `targets`.
    pub fn factor(&self, targets: &[&str]) -> Result<&CondDist> {
        self.factors
            .iter()
            .find(|f| f.targets.iter().map(String::as_str).eq(targets.iter().copied()))
            .ok_or_else(|| Error::FactorSignatureMismatch {
                variant: self.variant.name().into(),
                detail: format!("no factor with targets {targets:?}"),
            })
    }

    pub fn factor_mut(&mut self, targets: &[&str]) -> Result<&mut CondDist> {
        let variant = self.variant;
        self.factors
            .iter_mut()
            .find(|f| f.targets.iter().map(String::as_str).eq(targets.iter().copied()))
            .ok_or_else(|| Error::FactorSignatureMismatch {
                variant: variant.name().into(),
                detail: format!("no factor with targets {targets:?}"),
            })
    }

    /// Checks the factor list against the variant signature and every table
    /// against the declared alphabets. Rows are renormalized in place.
    pub fn validate(&mut self) -> Result<()> {
        let sig = self.variant.signature();
        if self.factors.len() != sig.len() {
            return Err(Error::FactorSignatureMismatch {
                variant: self.variant.name().into(),
                detail: format!("expected {} factors, got {}", sig.len(), self.factors.len()),
            });
        }
        for (factor, expect) in self.factors.iter().zip(sig) {
            let t_ok = factor
                .targets
                .iter()
                .map(String::as_str)
                .eq(expect.targets.iter().copied());
            let g_ok = factor
                .givens
                .iter()
                .map(String::as_str)
                .eq(expect.givens.iter().copied());
            if !t_ok || !g_ok {
                return Err(Error::FactorSignatureMismatch {
                    variant: self.variant.name().into(),
                    detail: format!(
                        "factor P({:?}|{:?}) does not match declared P({:?}|{:?})",
                        factor.targets, factor.givens, expect.targets, expect.givens
                    ),
                });
            }
        }
        for role in self.variant.variables() {
            self.alphabet(role)?;
        }
        let alphabets = self.alphabets.clone();
        let sizes = |role: &str| -> Result<usize> {
            alphabets
                .iter()
                .find(|a| a.name == role)
                .map(Alphabet::size)
                .ok_or_else(|| Error::UnknownVariable(role.to_string()))
        };
        for factor in &mut self.factors {
            factor.validate(sizes)?;
        }
        Ok(())
    }

    /// Composes the factors into the joint distribution over the variant's
    /// variable list. For the decomposable inner variants the common
    /// component `K` is derived from the composed state-output distribution
    /// and appended as a deterministic coordinate.
    pub fn compose(&self) -> Result<JointDist> {
        let mut model = self.clone();
        model.validate()?;
        let variant = model.variant;
        let var_roles = variant.variables();

        // Deterministic map s -> k for the inner decomposable variants.
        let k_of_s: Option<Vec<usize>> = if variant.uses_common_component() {
            let p_sy = model.state_output_joint()?;
            let common = extract_common_part(&p_sy)?;
            let declared = model.size("K")?;
            if declared != common.k.size() {
                return Err(Error::FactorSignatureMismatch {
                    variant: variant.name().into(),
                    detail: format!(
                        "alphabet K has {declared} symbols but the state-output \
                         distribution has {} connected components",
                        common.k.size()
                    ),
                });
            }
            Some(common.c1)
        } else {
            None
        };

        let vars: Vec<(String, Alphabet)> = var_roles
            .iter()
            .map(|r| Ok((r.to_string(), model.alphabet(r)?.clone())))
            .collect::<Result<_>>()?;
        let dims: Vec<usize> = vars.iter().map(|(_, a)| a.size()).collect();
        let var_pos = |role: &str| var_roles.iter().position(|r| *r == role).unwrap();
        let s_pos = var_pos("S");
        let k_pos = var_roles.iter().position(|r| *r == "K");

        // Per-factor variable positions and sizes, resolved once.
        struct Resolved<'a> {
            factor: &'a CondDist,
            t_pos: Vec<usize>,
            g_pos: Vec<usize>,
            t_sizes: Vec<usize>,
            g_sizes: Vec<usize>,
        }
        let resolved: Vec<Resolved> = model
            .factors
            .iter()
            .map(|factor| Resolved {
                factor,
                t_pos: factor.targets.iter().map(|r| var_pos(r)).collect(),
                g_pos: factor.givens.iter().map(|r| var_pos(r)).collect(),
                t_sizes: factor.targets.iter().map(|r| model.size(r).unwrap()).collect(),
                g_sizes: factor.givens.iter().map(|r| model.size(r).unwrap()).collect(),
            })
            .collect();

        let total: usize = dims.iter().product();
        let mut probs = vec![0.0f64; total];
        let mut assignment = vec![0usize; dims.len()];
        for (flat, slot) in probs.iter_mut().enumerate() {
            let mut rem = flat;
            for i in (0..dims.len()).rev() {
                assignment[i] = rem % dims[i];
                rem /= dims[i];
            }
            if let (Some(map), Some(kp)) = (&k_of_s, k_pos) {
                if assignment[kp] != map[assignment[s_pos]] {
                    continue;
                }
            }
            let mut p = 1.0f64;
            for r in &resolved {
                let t: Vec<usize> = r.t_pos.iter().map(|&i| assignment[i]).collect();
                let g: Vec<usize> = r.g_pos.iter().map(|&i| assignment[i]).collect();
                p *= r.factor.value(&r.t_sizes, &t, &r.g_sizes, &g);
                if p == 0.0 {
                    break;
                }
            }
            *slot = p;
        }
        JointDist::new(vars, probs)
    }

    /// The state-output marginal P(S,Y) implied by the model's own factors,
    /// used for common-component extraction.
    pub fn state_output_joint(&self) -> Result<JointDist> {
        let s_size = self.size("S")?;
        let y_size = self.size("Y")?;
        let v11_size = self.size("V11")?;
        let x_size = self.size("X")?;
        let p_s = self.factor(&["S"])?;
        let p_v11 = self.factor(&["V11"])?;
        let p_x = self.factor(&["X"])?;
        let p_y = self.factor(&["Y"])?;
        let mut probs = vec![0.0f64; s_size * y_size];
        for s in 0..s_size {
            for v11 in 0..v11_size {
                for x in 0..x_size {
                    for y in 0..y_size {
                        probs[s * y_size + y] += p_s.value(&[s_size], &[s], &[], &[])
                            * p_v11.value(&[v11_size], &[v11], &[s_size], &[s])
                            * p_x.value(&[x_size], &[x], &[v11_size], &[v11])
                            * p_y.value(&[y_size], &[y], &[x_size, s_size], &[x, s]);
                    }
                }
            }
        }
        JointDist::new(
            vec![
                ("S".to_string(), self.alphabet("S")?.clone()),
                ("Y".to_string(), self.alphabet("Y")?.clone()),
            ],
            probs,
        )
    }

    /// Conditional independences implied by the variant's factorization,
    /// used as composition self-checks in tests.
    pub fn implied_markov_constraints(&self) -> Vec<super::MarkovConstraint> {
        use super::MarkovConstraint as Mc;
        match self.variant {
            Variant::GeneralInner => vec![
                Mc::new(&["U"], &["S"], &["V11", "Q"]),
                Mc::new(&["X"], &["S", "V12"], &["U", "V11", "Q"]),
                Mc::new(&["Y", "Z"], &["Q", "V11", "V12", "U"], &["X", "S"]),
                Mc::new(&["V2"], &["S", "X", "Y", "V11", "V12", "U"], &["Z", "Q"]),
                Mc::new(&["Q"], &["S"], &[]),
            ],
            Variant::PerfectFeedbackInner => vec![
                Mc::new(&["X"], &["S", "V12"], &["V11"]),
                Mc::new(&["Y"], &["V11", "V12"], &["X", "S"]),
            ],
            Variant::PerfectFeedbackOuter | Variant::SuccessiveRefinement => vec![
                Mc::new(&["X"], &["S"], &["V11", "V12"]),
                Mc::new(&["Y"], &["V11", "V12"], &["X", "S"]),
            ],
            Variant::DecomposableIn1 => vec![
                Mc::new(&["T"], &["S"], &["K", "V11"]),
                Mc::new(&["X"], &["S", "V12", "T"], &["V11"]),
                Mc::new(&["Y"], &["V11", "V12", "T"], &["X", "S"]),
            ],
            Variant::DecomposableIn2 => vec![
                Mc::new(&["T"], &["S", "V11"], &["K"]),
                Mc::new(&["X"], &["S", "V12", "T"], &["V11"]),
                Mc::new(&["Y"], &["V11", "V12", "T"], &["X", "S"]),
            ],
            Variant::DecomposableOuter => vec![
                Mc::new(&["X"], &["S"], &["V11"]),
                Mc::new(&["Y"], &["V11", "V12", "T"], &["X", "S"]),
            ],
            Variant::Causal => vec![
                Mc::new(&["X"], &["S"], &[]),
                Mc::new(&["Y"], &["V", "T"], &["X", "S"]),
            ],
        }
    }
}

/// Composes a validated factored model into its joint distribution.
pub fn compose_factored(model: &FactoredModel) -> Result<JointDist> {
    model.compose()
}
