//! Sensitivity analysis: the basic/generalized decomposition, nonsampling
//! multipliers, imperfect-weight indices, combined corrections, and the
//! double-ratio bias approximation.
//!
//! Naming of the weight-error indices follows the estimator each one
//! attaches to: `k_f1` indexes errors in the frame weights as they affect
//! reports about the *probe groups* (y_{i,𝒜}), `k_f2` as they affect
//! reports about the *hidden population* (y_{i,H}), and `k_h` indexes
//! errors in the hidden sample's relative weights as they affect reported
//! visibility.

use crate::netsim::CensusQuantities;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("multiplier component {component} must be positive (got {value})")]
    NonpositiveComponent { component: &'static str, value: f64 },
    #[error("decomposition identity violated: relative error {rel_err}")]
    DecompositionBroken { rel_err: f64 },
    #[error("degenerate census denominator: {quantity}")]
    DegenerateDenominator { quantity: &'static str },
    #[error("k-index needs {need}, got {got}")]
    BadInput { need: &'static str, got: String },
    #[error("missing correlation `{pair}` for the selected structure")]
    MissingCorrelation { pair: &'static str },
}

fn neutral_one() -> f64 {
    1.0
}

/// A what-if scenario for nonsampling and sampling violations. Defaults
/// are neutral (multipliers 1, indices 0), so scenario files only state
/// what deviates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensitivityScenario {
    /// Registry-size multiplier: the analyst's N_{𝒜∩F} (or N_𝒜) is c₁ × truth.
    pub c1: f64,
    /// Reporting multiplier: reported totals are c₂ × actual ties.
    pub c2: f64,
    /// Probe-alter multiplier: probe exposure rate is c₃ × the frame's.
    pub c3: f64,
    /// Mean of the frame weight-error ratios ε_i = w'_i / w_i.
    pub eps_bar_f: f64,
    /// Weight-error index for frame reports about probe groups.
    pub k_f1: f64,
    /// Weight-error index for frame reports about the hidden population.
    pub k_f2: f64,
    /// Weight-error index for the hidden sample's reported visibility.
    pub k_h: f64,
    /// Precision of out-reports.
    pub eta: f64,
    /// Degree ratio assumed when adjusting a modified basic estimate.
    pub delta: f64,
    /// True positive rate assumed when adjusting a modified basic estimate.
    pub tau: f64,
}

impl Default for SensitivityScenario {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c2: 1.0,
            c3: 1.0,
            eps_bar_f: neutral_one(),
            k_f1: 0.0,
            k_f2: 0.0,
            k_h: 0.0,
            eta: 1.0,
            delta: 1.0,
            tau: 1.0,
        }
    }
}

impl SensitivityScenario {
    fn check_positive(&self, pairs: &[(&'static str, f64)]) -> Result<(), SensitivityError> {
        for (component, value) in pairs {
            if !(value.is_finite() && *value > 0.0) {
                return Err(SensitivityError::NonpositiveComponent {
                    component,
                    value: *value,
                });
            }
        }
        Ok(())
    }
}

/// Census-level decomposition of the two estimands: the basic estimand
/// times 1/(φδτ) equals the generalized estimand equals N_H.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub basic_estimand: f64,
    pub phi: f64,
    pub delta: f64,
    pub tau: f64,
    pub generalized_estimand: f64,
}

/// Computes the decomposition and verifies the triple identity to a
/// relative tolerance of 1e-12.
pub fn decompose(cq: &CensusQuantities) -> Result<Decomposition, SensitivityError> {
    for (value, name) in [
        (cq.d_bar_uf, "d_bar_uf"),
        (cq.d_bar_ff, "d_bar_ff"),
        (cq.d_bar_hf, "d_bar_hf"),
        (cq.v_bar_hf, "v_bar_hf"),
    ] {
        if value <= 0.0 {
            return Err(SensitivityError::DegenerateDenominator { quantity: name });
        }
    }
    let basic = cq.basic_estimand();
    let generalized = cq.generalized_estimand();
    let adjusted = basic / (cq.phi * cq.delta * cq.tau);
    let truth = cq.n_hidden as f64;
    let rel = |a: f64, b: f64| (a - b).abs() / b;
    let worst = rel(adjusted, truth).max(rel(generalized, truth));
    if worst > 1e-12 {
        return Err(SensitivityError::DecompositionBroken { rel_err: worst });
    }
    Ok(Decomposition {
        basic_estimand: basic,
        phi: cq.phi,
        delta: cq.delta,
        tau: cq.tau,
        generalized_estimand: generalized,
    })
}

/// Correction for a generalized scale-up estimate under the scenario:
/// `est · (1+K_H) / (ε̄_F (1+K_F₂)) · (c₃c₂/c₁) · η` is consistent and
/// essentially unbiased for N_H.
pub fn adjust_generalized(
    est: f64,
    sc: &SensitivityScenario,
) -> Result<f64, SensitivityError> {
    sc.check_positive(&[
        ("1 + k_h", 1.0 + sc.k_h),
        ("1 + k_f2", 1.0 + sc.k_f2),
        ("eps_bar_f", sc.eps_bar_f),
        ("c1", sc.c1),
        ("c2", sc.c2),
        ("c3", sc.c3),
        ("eta", sc.eta),
    ])?;
    Ok(est * (1.0 + sc.k_h) / (sc.eps_bar_f * (1.0 + sc.k_f2)) * (sc.c3 * sc.c2 / sc.c1)
        * sc.eta)
}

/// Correction for a modified basic scale-up estimate under the scenario:
/// `est · (1+K_F₁)/(1+K_F₂) · (c₂c₃/c₁) · η/(δτ)` is consistent and
/// essentially unbiased for N_H. The frame-weight mean ε̄ cancels because
/// numerator and denominator come from the same sample.
pub fn adjust_modified_basic(
    est: f64,
    sc: &SensitivityScenario,
) -> Result<f64, SensitivityError> {
    sc.check_positive(&[
        ("1 + k_f1", 1.0 + sc.k_f1),
        ("1 + k_f2", 1.0 + sc.k_f2),
        ("c1", sc.c1),
        ("c2", sc.c2),
        ("c3", sc.c3),
        ("eta", sc.eta),
        ("delta", sc.delta),
        ("tau", sc.tau),
    ])?;
    Ok(est * (1.0 + sc.k_f1) / (1.0 + sc.k_f2) * (sc.c2 * sc.c3 / sc.c1) * sc.eta
        / (sc.delta * sc.tau))
}

/// Finite-population covariance with denominator N.
fn covariance_n(values: &[f64], eps: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mv = values.iter().sum::<f64>() / n;
    let me = eps.iter().sum::<f64>() / n;
    values
        .iter()
        .zip(eps)
        .map(|(v, e)| (v - mv) * (e - me))
        .sum::<f64>()
        / n
}

/// Imperfect-weight index K = cor(values, eps) · cv(values) · cv(eps),
/// with finite-population moments computed with denominator N. Equals
/// cov(values, eps) / (mean(values) · mean(eps)), so it is invariant to
/// rescaling eps by a positive constant.
pub fn k_index(values: &[f64], eps: &[f64]) -> Result<f64, SensitivityError> {
    if values.len() != eps.len() {
        return Err(SensitivityError::BadInput {
            need: "equal lengths",
            got: format!("{} vs {}", values.len(), eps.len()),
        });
    }
    if values.len() < 2 {
        return Err(SensitivityError::BadInput {
            need: "at least two elements",
            got: values.len().to_string(),
        });
    }
    let n = values.len() as f64;
    let mv = values.iter().sum::<f64>() / n;
    let me = eps.iter().sum::<f64>() / n;
    if mv == 0.0 || me == 0.0 {
        return Err(SensitivityError::BadInput {
            need: "nonzero means (cv undefined)",
            got: format!("means {mv}, {me}"),
        });
    }
    Ok(covariance_n(values, eps) / (mv * me))
}

/// Estimators whose nonsampling sensitivity is tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorId {
    MeanDegreeFrame,
    MeanDegreeUniverseToFrame,
    FrameRatio,
    VisibilityMean,
    DegreeRatio,
    TruePositiveRate,
    GeneralizedScaleup,
    AdjustedScaleup,
}

/// Effective-estimand multiplier under imperfect nonsampling conditions:
/// the estimator converges to `multiplier × truth`. The c's are local to
/// each row: c₁ scales the analyst's group-size total, c₂ the reporting
/// condition, c₃ the probe-alter (or component-estimator) condition.
pub fn nonsampling_multiplier(
    estimator: EstimatorId,
    c1: f64,
    c2: f64,
    c3: f64,
) -> Result<f64, SensitivityError> {
    for (component, value) in [("c1", c1), ("c2", c2), ("c3", c3)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(SensitivityError::NonpositiveComponent { component, value });
        }
    }
    Ok(match estimator {
        EstimatorId::MeanDegreeFrame | EstimatorId::MeanDegreeUniverseToFrame => c2 * c3 / c1,
        EstimatorId::FrameRatio | EstimatorId::DegreeRatio | EstimatorId::TruePositiveRate => {
            c1 / c2
        }
        EstimatorId::VisibilityMean => c3 * c2 / c1,
        EstimatorId::GeneralizedScaleup => 1.0 / c1,
        EstimatorId::AdjustedScaleup => 1.0 / (c1 * c2 * c3),
    })
}

/// Which means a double-ratio estimator is built from. The general form
/// is (ȳ₁ x̄₀) / (x̄₁ ȳ₀); simpler estimators omit terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatioStructure {
    /// x̄₀ / ȳ₀ (component ratios such as the visibility mean).
    SingleRatio,
    /// x̄₀ / (ȳ₀ x̄₁) (degree ratio, true positive rate).
    CompoundDenominator,
    /// ȳ₁ x̄₀ / ȳ₀ (the generalized size estimator).
    NumeratorProduct,
    /// Full double ratio ȳ₁ x̄₀ / (x̄₁ ȳ₀).
    DoubleRatio,
}

impl RatioStructure {
    fn uses(self) -> [bool; 4] {
        // order: x0, x1, y0, y1
        match self {
            RatioStructure::SingleRatio => [true, false, true, false],
            RatioStructure::CompoundDenominator => [true, true, true, false],
            RatioStructure::NumeratorProduct => [true, false, true, true],
            RatioStructure::DoubleRatio => [true, true, true, true],
        }
    }
}

/// Pairwise correlations among the four component estimators. Leave a
/// pair unset only if the structure does not use it; correlations across
/// independent samples should be set to zero explicitly.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComponentCorrelations {
    pub x0_x1: Option<f64>,
    pub x0_y0: Option<f64>,
    pub x0_y1: Option<f64>,
    pub x1_y0: Option<f64>,
    pub x1_y1: Option<f64>,
    pub y0_y1: Option<f64>,
}

/// Inputs to the double-ratio bias approximation: coefficients of
/// variation of the component estimators and their correlations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioBiasInputs {
    pub cv_x0: f64,
    pub cv_x1: f64,
    pub cv_y0: f64,
    pub cv_y1: f64,
    pub cor: ComponentCorrelations,
    pub structure: RatioStructure,
}

/// Second-order approximation to the relative bias of a double-ratio
/// estimator:
///
/// B ≈ C(x₁,y₀) − C(x₁,y₁) − C(y₀,y₁) − C(x₀,x₁) − C(x₀,y₀) + C(y₁,x₀)
///     + C²(y₀) + C²(x₁)
///
/// where C(a,b) = cor(a,b)·cv(a)·cv(b) are relative covariances of the
/// component estimators; terms whose components the structure omits are
/// dropped.
pub fn double_ratio_bias(inputs: &RatioBiasInputs) -> Result<f64, SensitivityError> {
    let [use_x0, use_x1, use_y0, use_y1] = inputs.structure.uses();
    let cv = [inputs.cv_x0, inputs.cv_x1, inputs.cv_y0, inputs.cv_y1];
    let used = [use_x0, use_x1, use_y0, use_y1];
    // (a, b, sign, correlation, name); indices follow [x0, x1, y0, y1].
    let terms: [(usize, usize, f64, Option<f64>, &'static str); 6] = [
        (1, 2, 1.0, inputs.cor.x1_y0, "x1_y0"),
        (1, 3, -1.0, inputs.cor.x1_y1, "x1_y1"),
        (2, 3, -1.0, inputs.cor.y0_y1, "y0_y1"),
        (0, 1, -1.0, inputs.cor.x0_x1, "x0_x1"),
        (0, 2, -1.0, inputs.cor.x0_y0, "x0_y0"),
        (0, 3, 1.0, inputs.cor.x0_y1, "x0_y1"),
    ];
    let mut bias = 0.0;
    for (a, b, sign, cor, pair) in terms {
        if used[a] && used[b] {
            let c = cor.ok_or(SensitivityError::MissingCorrelation { pair })?;
            bias += sign * c * cv[a] * cv[b];
        }
    }
    if use_y0 {
        bias += cv[2] * cv[2];
    }
    if use_x1 {
        bias += cv[1] * cv[1];
    }
    Ok(bias)
}

/// Double-ratio bias specialization for simple random sampling without
/// replacement: all four means come from one sample of size `n` drawn
/// from `population` columns (x0, x1, y0, y1), and the estimator-level
/// relative covariances are κ·S_ab/(ā·b̄) with κ = 1/n − 1/N and S the
/// finite-population covariance with denominator N−1.
pub fn srs_double_ratio_bias(
    x0: &[f64],
    x1: &[f64],
    y0: &[f64],
    y1: &[f64],
    n: usize,
) -> Result<f64, SensitivityError> {
    let big_n = x0.len();
    if big_n < 2 || [x1.len(), y0.len(), y1.len()].iter().any(|&l| l != big_n) {
        return Err(SensitivityError::BadInput {
            need: "four equal-length columns with N >= 2",
            got: format!("{}, {}, {}, {}", x0.len(), x1.len(), y0.len(), y1.len()),
        });
    }
    if n < 1 || n > big_n {
        return Err(SensitivityError::BadInput {
            need: "1 <= n <= N",
            got: n.to_string(),
        });
    }
    let kappa = 1.0 / n as f64 - 1.0 / big_n as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / big_n as f64;
    let cov = |a: &[f64], b: &[f64]| {
        let (ma, mb) = (mean(a), mean(b));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - ma) * (y - mb))
            .sum::<f64>()
            / (big_n - 1) as f64
    };
    let rel = |a: &[f64], b: &[f64]| kappa * cov(a, b) / (mean(a) * mean(b));
    Ok(rel(x1, y0) - rel(x1, y1) - rel(y0, y1) - rel(x0, x1) - rel(x0, y0) + rel(y1, x0)
        + rel(y0, y0)
        + rel(x1, x1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netsim::{census_quantities, generate_population, SimConfig};

    fn census(seed: u64, rho: f64, p_frame: f64) -> CensusQuantities {
        let g = generate_population(&SimConfig {
            n: 300,
            p_frame,
            p_hidden: 0.1,
            p_frame_given_hidden: 1.0,
            zeta: 0.1,
            xi: 0.5,
            rho,
            tau: 1.0,
            seed,
        })
        .unwrap();
        census_quantities(&g).unwrap()
    }

    #[test]
    fn decomposition_holds_on_random_graphs() {
        for seed in 0..10 {
            let cq = census(seed, 0.4, 0.6);
            let d = decompose(&cq).unwrap();
            assert!((d.generalized_estimand - cq.n_hidden as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn decomposition_trivial_when_model_holds() {
        let cq = census(3, 1.0, 1.0);
        let d = decompose(&cq).unwrap();
        assert!((d.phi - 1.0).abs() < 1e-12);
        assert!((d.tau - 1.0).abs() < 1e-12);
        assert!((d.basic_estimand / d.delta - d.generalized_estimand).abs() < 1e-9);
    }

    #[test]
    fn neutral_scenario_is_identity() {
        let sc = SensitivityScenario::default();
        assert_eq!(adjust_generalized(123.0, &sc).unwrap(), 123.0);
        assert_eq!(adjust_modified_basic(123.0, &sc).unwrap(), 123.0);
    }

    #[test]
    fn eta_scales_linearly() {
        let sc = SensitivityScenario {
            eta: 0.8,
            ..Default::default()
        };
        assert!((adjust_generalized(100.0, &sc).unwrap() - 80.0).abs() < 1e-12);
    }

    #[test]
    fn curitiba_style_modified_adjustment() {
        let sc = SensitivityScenario {
            delta: 0.69,
            tau: 0.77,
            ..Default::default()
        };
        let adjusted = adjust_modified_basic(1.0, &sc).unwrap();
        assert!((adjusted - 1.0 / (0.69 * 0.77)).abs() < 1e-12);
    }

    #[test]
    fn adjustments_invert_with_reciprocal_scenario() {
        let sc = SensitivityScenario {
            c1: 1.2,
            c2: 0.9,
            c3: 1.1,
            eps_bar_f: 1.05,
            k_f1: 0.08,
            k_f2: -0.03,
            k_h: 0.02,
            eta: 0.85,
            delta: 0.7,
            tau: 0.8,
        };
        // Reciprocal scenario: every multiplier component inverted.
        let inv = SensitivityScenario {
            c1: 1.0 / sc.c1,
            c2: 1.0 / sc.c2,
            c3: 1.0 / sc.c3,
            eps_bar_f: 1.0 / sc.eps_bar_f,
            k_f1: 1.0 / (1.0 + sc.k_f1) - 1.0,
            k_f2: 1.0 / (1.0 + sc.k_f2) - 1.0,
            k_h: 1.0 / (1.0 + sc.k_h) - 1.0,
            eta: 1.0 / sc.eta,
            delta: 1.0 / sc.delta,
            tau: 1.0 / sc.tau,
        };
        let once = adjust_generalized(42.0, &sc).unwrap();
        let back = adjust_generalized(once, &inv).unwrap();
        assert!((back - 42.0).abs() < 1e-9);
        let once = adjust_modified_basic(42.0, &sc).unwrap();
        let back = adjust_modified_basic(once, &inv).unwrap();
        assert!((back - 42.0).abs() < 1e-9);
    }

    #[test]
    fn k_index_zero_for_constant_eps() {
        let values = [1.0, 5.0, 2.0, 7.0];
        let eps = [0.5; 4];
        assert_eq!(k_index(&values, &eps).unwrap(), 0.0);
    }

    #[test]
    fn k_index_for_proportional_eps_is_cv_squared() {
        let values = [1.0, 2.0, 3.0, 4.0, 5.0];
        let eps: Vec<f64> = values.iter().map(|v| 0.3 * v).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let cv2 = var / (mean * mean);
        let k = k_index(&values, &eps).unwrap();
        assert!((k - cv2).abs() < 1e-12);
    }

    #[test]
    fn k_index_two_routes_agree() {
        // Definition (cor·cv·cv) versus cov/(mean·mean).
        let values = [2.0, 4.0, 1.0, 6.0, 3.0];
        let eps = [1.1, 0.8, 1.3, 0.9, 1.0];
        let n = values.len() as f64;
        let mv = values.iter().sum::<f64>() / n;
        let me = eps.iter().sum::<f64>() / n;
        let sv = (values.iter().map(|v| (v - mv).powi(2)).sum::<f64>() / n).sqrt();
        let se = (eps.iter().map(|e| (e - me).powi(2)).sum::<f64>() / n).sqrt();
        let cov = values
            .iter()
            .zip(&eps)
            .map(|(v, e)| (v - mv) * (e - me))
            .sum::<f64>()
            / n;
        let cor = cov / (sv * se);
        let direct = cor * (sv / mv) * (se / me);
        assert!((k_index(&values, &eps).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn k_index_scale_invariant_in_eps() {
        let values = [2.0, 4.0, 1.0, 6.0, 3.0];
        let eps = [1.1, 0.8, 1.3, 0.9, 1.0];
        let scaled: Vec<f64> = eps.iter().map(|e| e * 37.0).collect();
        let a = k_index(&values, &eps).unwrap();
        let b = k_index(&values, &scaled).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn multiplier_table_worked_example() {
        // Reporting condition off by 10% on the frame degree estimator.
        let m = nonsampling_multiplier(EstimatorId::MeanDegreeFrame, 1.0, 1.1, 1.0).unwrap();
        assert!((m - 1.1).abs() < 1e-12);
        for id in [
            EstimatorId::MeanDegreeFrame,
            EstimatorId::MeanDegreeUniverseToFrame,
            EstimatorId::FrameRatio,
            EstimatorId::VisibilityMean,
            EstimatorId::DegreeRatio,
            EstimatorId::TruePositiveRate,
            EstimatorId::GeneralizedScaleup,
            EstimatorId::AdjustedScaleup,
        ] {
            assert_eq!(nonsampling_multiplier(id, 1.0, 1.0, 1.0).unwrap(), 1.0);
        }
    }

    #[test]
    fn multiplier_chaining_matches_combined_formula() {
        // Generalized N̂ = ŷ / v̂̄: a multiplier m on the visibility estimand
        // maps the size estimand to 1/m, matching the tabulated rows.
        let (c1, c2, c3) = (1.2, 0.9, 1.05);
        let vis = nonsampling_multiplier(EstimatorId::VisibilityMean, c1, c2, c3).unwrap();
        let gen_row = nonsampling_multiplier(EstimatorId::GeneralizedScaleup, vis, 1.0, 1.0);
        assert!((gen_row.unwrap() - 1.0 / vis).abs() < 1e-12);
        // Chained component corrections match the combined correction.
        let sc = SensitivityScenario {
            c1,
            c2,
            c3,
            ..Default::default()
        };
        let est = 100.0;
        let combined = adjust_generalized(est, &sc).unwrap();
        assert!((combined - est * vis).abs() < 1e-9);
    }

    #[test]
    fn zero_cv_means_zero_ratio_bias() {
        let inputs = RatioBiasInputs {
            cv_x0: 0.0,
            cv_x1: 0.0,
            cv_y0: 0.0,
            cv_y1: 0.0,
            cor: ComponentCorrelations {
                x0_x1: Some(0.0),
                x0_y0: Some(0.0),
                x0_y1: Some(0.0),
                x1_y0: Some(0.0),
                x1_y1: Some(0.0),
                y0_y1: Some(0.0),
            },
            structure: RatioStructure::DoubleRatio,
        };
        assert_eq!(double_ratio_bias(&inputs).unwrap(), 0.0);
    }

    #[test]
    fn single_ratio_needs_only_its_correlation() {
        let inputs = RatioBiasInputs {
            cv_x0: 0.1,
            cv_x1: f64::NAN,
            cv_y0: 0.2,
            cv_y1: f64::NAN,
            cor: ComponentCorrelations {
                x0_y0: Some(0.5),
                ..Default::default()
            },
            structure: RatioStructure::SingleRatio,
        };
        let b = double_ratio_bias(&inputs).unwrap();
        // C²(y0) − C(x0,y0) = 0.04 − 0.5·0.1·0.2
        assert!((b - (0.04 - 0.01)).abs() < 1e-12);
    }

    #[test]
    fn missing_correlation_is_an_error() {
        let inputs = RatioBiasInputs {
            cv_x0: 0.1,
            cv_x1: 0.1,
            cv_y0: 0.1,
            cv_y1: 0.1,
            cor: ComponentCorrelations::default(),
            structure: RatioStructure::DoubleRatio,
        };
        assert!(matches!(
            double_ratio_bias(&inputs),
            Err(SensitivityError::MissingCorrelation { .. })
        ));
    }

    #[test]
    fn srs_specialization_matches_generic_form() {
        // Build a small population, compute the SRS bias two ways: once via
        // the κ-specialization, once through the generic estimator-level
        // inputs.
        let x0 = [1.0, 1.1, 0.9, 1.05, 0.95, 1.02, 0.98, 1.04, 0.96, 1.0];
        let x1 = [2.0, 2.1, 1.9, 2.2, 1.8, 2.05, 1.95, 2.15, 1.85, 2.0];
        let y0 = [3.0, 3.2, 2.8, 3.1, 2.9, 3.05, 2.95, 3.15, 2.85, 3.0];
        let y1 = [1.5, 1.6, 1.4, 1.55, 1.45, 1.52, 1.48, 1.58, 1.42, 1.5];
        let n = 4;
        let kappa = 1.0 / n as f64 - 1.0 / 10.0;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / 10.0;
        let cov = |a: &[f64], b: &[f64]| {
            let (ma, mb) = (mean(a), mean(b));
            a.iter().zip(b).map(|(p, q)| (p - ma) * (q - mb)).sum::<f64>() / 9.0
        };
        let cv = |a: &[f64]| (kappa * cov(a, a)).sqrt() / mean(a);
        let cor = |a: &[f64], b: &[f64]| cov(a, b) / (cov(a, a).sqrt() * cov(b, b).sqrt());
        let inputs = RatioBiasInputs {
            cv_x0: cv(&x0),
            cv_x1: cv(&x1),
            cv_y0: cv(&y0),
            cv_y1: cv(&y1),
            cor: ComponentCorrelations {
                x0_x1: Some(cor(&x0, &x1)),
                x0_y0: Some(cor(&x0, &y0)),
                x0_y1: Some(cor(&x0, &y1)),
                x1_y0: Some(cor(&x1, &y0)),
                x1_y1: Some(cor(&x1, &y1)),
                y0_y1: Some(cor(&y0, &y1)),
            },
            structure: RatioStructure::DoubleRatio,
        };
        let generic = double_ratio_bias(&inputs).unwrap();
        let specialized = srs_double_ratio_bias(&x0, &x1, &y0, &y1, n).unwrap();
        assert!((generic - specialized).abs() < 1e-12);
    }
}
