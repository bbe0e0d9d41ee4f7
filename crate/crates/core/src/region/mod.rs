//! Rate-region constraint evaluation for every supported pmf variant,
//! sender-side optimal estimation, and common-component extraction.

mod common;
mod estimator;

pub use common::{extract_common_part, is_decomposable, CommonPart, SUPPORT_THRESHOLD};
pub use estimator::{optimal_estimator, DistortionSpec, EstimatorTable};

use crate::error::{Error, Result};
use crate::info::{mutual_information as mi, entropy, Bits};
use crate::prob::{FactoredModel, JointDist, Variant};
use serde::{Deserialize, Serialize};

/// One evaluated point of a rate region: the communication-rate ceiling, the
/// helper-rate floors, and the distortion the built-in estimator achieves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub r_max: Bits,
    pub rf1_min: Bits,
    /// Absent for the perfect-feedback variants (rate-unlimited feedback).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rf2_min: Option<Bits>,
    pub rf_sum_min: Bits,
    pub achieved_d: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub achieved_d1: Option<f64>,
}

/// Maximum auxiliary-alphabet sizes for a variant, derived from the state,
/// input, and feedback alphabet sizes.
#[derive(Debug, Clone, Serialize)]
pub struct CardinalityBounds {
    pub bounds: Vec<(String, usize)>,
}

impl CardinalityBounds {
    pub fn for_variant(variant: Variant, s: usize, x: usize, z: usize) -> Self {
        let sx = s * x;
        let bounds = match variant {
            Variant::GeneralInner => vec![
                ("Q".to_string(), 5),
                ("V11".to_string(), sx + 1),
                ("V12".to_string(), sx * (sx + 1) + 4),
                ("U".to_string(), sx * (sx + 1) + 1),
                ("V2".to_string(), z + 4),
            ],
            Variant::PerfectFeedbackInner | Variant::PerfectFeedbackOuter => vec![
                ("V11".to_string(), sx + 1),
                ("V12".to_string(), s * (sx + 1) + 1),
            ],
            Variant::SuccessiveRefinement => vec![
                ("V11".to_string(), sx + 2),
                ("V12".to_string(), s * (sx + 1) + 1),
            ],
            // No single-letter bounds are stated for these variants.
            Variant::DecomposableIn1
            | Variant::DecomposableIn2
            | Variant::DecomposableOuter
            | Variant::Causal => vec![],
        };
        Self { bounds }
    }

    pub fn check(&self, model: &FactoredModel) -> Result<()> {
        for (role, bound) in &self.bounds {
            let size = model.size(role)?;
            if size > *bound {
                return Err(Error::CardinalityExceeded {
                    role: role.clone(),
                    size,
                    bound: *bound,
                });
            }
        }
        Ok(())
    }
}

fn check_cardinality(model: &FactoredModel) -> Result<()> {
    if model.cardinality_override {
        return Ok(());
    }
    let s = model.size("S")?;
    let x = model.size("X")?;
    let z = model.size("Z").unwrap_or(0);
    CardinalityBounds::for_variant(model.variant, s, x, z).check(model)
}

fn expect_variant(model: &FactoredModel, allowed: &[Variant]) -> Result<()> {
    if allowed.contains(&model.variant) {
        Ok(())
    } else {
        Err(Error::FactorSignatureMismatch {
            variant: model.variant.name().into(),
            detail: format!(
                "evaluator accepts {:?}",
                allowed.iter().map(|v| v.name()).collect::<Vec<_>>()
            ),
        })
    }
}

fn clamp0(x: Bits) -> Bits {
    x.max(0.0)
}

/// General inner-bound constraints for a model with time sharing.
///
/// R ≤ I(U;Y|Q) − I(U;V11|Q), the two helper floors, their sum floor, and
/// the distortion reached by the optimal estimator on (Q, U, X, V12, V2).
pub fn eval_general_inner(model: &FactoredModel, d: &DistortionSpec) -> Result<RegionPoint> {
    expect_variant(model, &[Variant::GeneralInner])?;
    check_cardinality(model)?;
    let joint = model.compose()?;
    let r_max = clamp0(
        mi(&joint, &["U"], &["Y"], &["Q"])? - mi(&joint, &["U"], &["V11"], &["Q"])?,
    );
    let rf1 = mi(&joint, &["V11"], &["S"], &["Q"])?
        + mi(&joint, &["V12"], &["S", "Z"], &["U", "V11", "V2", "Q"])?;
    let rf2 = mi(&joint, &["V2"], &["S", "Z"], &["U", "V11", "V12", "Q"])?;
    let rf_sum = mi(&joint, &["V11"], &["S"], &["Q"])?
        + mi(&joint, &["V12", "V2"], &["S", "Z"], &["U", "V11", "Q"])?;
    let (_, achieved_d) = optimal_estimator(&joint, &["Q", "U", "X", "V12", "V2"], d)?;
    Ok(RegionPoint {
        r_max,
        rf1_min: rf1,
        rf2_min: Some(rf2),
        rf_sum_min: rf_sum,
        achieved_d,
        achieved_d1: None,
    })
}

/// Perfect-feedback constraints (state known at the decoder, feedback helper
/// rate-unlimited): R ≤ I(X;Y|V11,S), Rf1 ≥ I(V11;S) + I(V12;S|X,Y,V11).
/// Accepts both the inner and outer factorization.
pub fn eval_perfect_feedback(model: &FactoredModel, d: &DistortionSpec) -> Result<RegionPoint> {
    expect_variant(
        model,
        &[Variant::PerfectFeedbackInner, Variant::PerfectFeedbackOuter],
    )?;
    check_cardinality(model)?;
    let joint = model.compose()?;
    perfect_feedback_point(&joint, d)
}

fn perfect_feedback_point(joint: &JointDist, d: &DistortionSpec) -> Result<RegionPoint> {
    let r_max = mi(joint, &["X"], &["Y"], &["V11", "S"])?;
    let rf1 = mi(joint, &["V11"], &["S"], &[])?
        + mi(joint, &["V12"], &["S"], &["X", "Y", "V11"])?;
    let (_, achieved_d) = optimal_estimator(joint, &["X", "Y", "V12"], d)?;
    Ok(RegionPoint {
        r_max,
        rf1_min: rf1,
        rf2_min: None,
        rf_sum_min: rf1,
        achieved_d,
        achieved_d1: None,
    })
}

/// Decomposable-channel constraints. The three variants share the helper
/// floor on Rf1 but differ in who transmits the common component and in the
/// sum-rate expression.
pub fn eval_decomposable(model: &FactoredModel, d: &DistortionSpec) -> Result<RegionPoint> {
    expect_variant(
        model,
        &[
            Variant::DecomposableIn1,
            Variant::DecomposableIn2,
            Variant::DecomposableOuter,
        ],
    )?;
    check_cardinality(model)?;
    if model.variant.uses_common_component() {
        let p_sy = model.state_output_joint()?;
        if !is_decomposable(&p_sy)? {
            return Err(Error::NotDecomposable);
        }
    }
    let joint = model.compose()?;
    let (r_max, rf1, rf2, rf_sum) = match model.variant {
        Variant::DecomposableIn1 => {
            let r = mi(&joint, &["X"], &["Y"], &["S", "V11", "T"])?;
            let rf1 = mi(&joint, &["V11"], &["S"], &[])?
                + mi(&joint, &["T"], &["S"], &["V11"])?
                + mi(&joint, &["V12"], &["S"], &["X", "Y", "V11", "T"])?;
            let rf2 = entropy(&joint, &["Y"], &["X", "V11", "V12", "T"])?;
            let rf_sum = mi(&joint, &["V11"], &["S"], &[])?
                + mi(&joint, &["T"], &["S"], &["V11"])?
                + mi(&joint, &["V12"], &["S"], &["X", "Y", "V11", "T"])?
                + entropy(&joint, &["Y"], &["X", "V11", "T"])?;
            (r, rf1, rf2, rf_sum)
        }
        Variant::DecomposableIn2 => {
            let r = mi(&joint, &["X"], &["Y"], &["S", "V11"])?;
            let rf1 = mi(&joint, &["V11"], &["S"], &[])?
                + mi(&joint, &["V12"], &["S"], &["X", "Y", "V11", "T"])?;
            let rf2 = mi(&joint, &["T"], &["Y"], &["V11"])?
                + entropy(&joint, &["Y"], &["X", "V11", "V12", "T"])?;
            let rf_sum = mi(&joint, &["V11"], &["S"], &[])?
                + mi(&joint, &["T"], &["Y"], &["V11"])?
                + mi(&joint, &["V12"], &["S"], &["X", "Y", "V11", "T"])?
                + entropy(&joint, &["Y"], &["X", "V11", "T"])?;
            (r, rf1, rf2, rf_sum)
        }
        Variant::DecomposableOuter => {
            let r = mi(&joint, &["X"], &["Y"], &["S", "V11"])?;
            let rf1 = mi(&joint, &["V11"], &["S"], &[])?
                + mi(&joint, &["V12"], &["S"], &["X", "Y", "V11", "T"])?;
            let rf2 = entropy(&joint, &["Y"], &["X", "V11", "V12", "T"])?;
            let rf_sum = mi(&joint, &["V11"], &["S"], &[])?
                + mi(&joint, &["T"], &["S"], &["V11", "X"])?
                + mi(&joint, &["V12"], &["S"], &["T", "X", "Y", "V11"])?
                + entropy(&joint, &["Y"], &["T", "V11", "X"])?;
            (r, rf1, rf2, rf_sum)
        }
        _ => unreachable!(),
    };
    let (_, achieved_d) = optimal_estimator(&joint, &["T", "V12", "X", "Y"], d)?;
    Ok(RegionPoint {
        r_max,
        rf1_min: rf1,
        rf2_min: Some(rf2),
        rf_sum_min: rf_sum,
        achieved_d,
        achieved_d1: None,
    })
}

/// Causal-helper constraints under P(S)P(X)P(V,T|S,X)P(Y|X,S):
/// R ≤ I(X;Y|S), Rf1 ≥ I(V;S|X,Y,T), Rf2 ≥ H(Y|X,V,T),
/// Rf1+Rf2 ≥ I(T,V;S|X) + H(Y|T,V,X).
pub fn eval_causal(model: &FactoredModel, d: &DistortionSpec) -> Result<RegionPoint> {
    expect_variant(model, &[Variant::Causal])?;
    check_cardinality(model)?;
    let joint = model.compose()?;
    let r_max = mi(&joint, &["X"], &["Y"], &["S"])?;
    let rf1 = mi(&joint, &["V"], &["S"], &["X", "Y", "T"])?;
    let rf2 = entropy(&joint, &["Y"], &["X", "V", "T"])?;
    let rf_sum = mi(&joint, &["T", "V"], &["S"], &["X"])? + entropy(&joint, &["Y"], &["T", "V", "X"])?;
    let (_, achieved_d) = optimal_estimator(&joint, &["T", "V", "X", "Y"], d)?;
    Ok(RegionPoint {
        r_max,
        rf1_min: rf1,
        rf2_min: Some(rf2),
        rf_sum_min: rf_sum,
        achieved_d,
        achieved_d1: None,
    })
}

/// Successive-refinement constraints: perfect-feedback rate expressions on
/// the outer pmf, plus a first-stage estimate from V11 alone.
pub fn eval_successive_refinement(
    model: &FactoredModel,
    d: &DistortionSpec,
) -> Result<RegionPoint> {
    expect_variant(model, &[Variant::SuccessiveRefinement])?;
    check_cardinality(model)?;
    if d.budget1.is_none() {
        return Err(Error::MissingBudget);
    }
    let joint = model.compose()?;
    let mut point = perfect_feedback_point(&joint, d)?;
    let (_, achieved_d1) = optimal_estimator(&joint, &["V11"], d)?;
    point.achieved_d1 = Some(achieved_d1);
    Ok(point)
}

/// Dispatches to the evaluator matching the model's variant.
pub fn eval_region(model: &FactoredModel, d: &DistortionSpec) -> Result<RegionPoint> {
    match model.variant {
        Variant::GeneralInner => eval_general_inner(model, d),
        Variant::PerfectFeedbackInner | Variant::PerfectFeedbackOuter => {
            eval_perfect_feedback(model, d)
        }
        Variant::DecomposableIn1 | Variant::DecomposableIn2 | Variant::DecomposableOuter => {
            eval_decomposable(model, d)
        }
        Variant::Causal => eval_causal(model, d),
        Variant::SuccessiveRefinement => eval_successive_refinement(model, d),
    }
}
