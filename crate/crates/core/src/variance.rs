//! Confidence intervals: the model-based interval used historically by
//! scale-up studies, percentile bootstrap intervals under the simple and
//! rescaled resamplers, and the two-sample combined procedure.

use crate::data::{
    survey_digest, DataError, Estimate, FrameSurvey, HiddenSurvey, Interval,
    KnownPopulationRegistry,
};
use crate::estimators::EstimatorError;
use crate::sampling::{
    rds_two_group_bootstrap, rescaled_bootstrap_replicate, simple_bootstrap_replicate,
    SampleError,
};
use crate::{exec, sampling};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VarianceError {
    #[error("need at least two finite replicates, got {got}")]
    InsufficientReplicates { got: usize },
    #[error("level {level} outside (0,1)")]
    BadLevel { level: f64 },
    #[error("degree sum must be positive")]
    ZeroDegreeSum,
    #[error("{share:.1}% of replicates were degenerate (limit 1%)")]
    ExcessiveDegenerateReplicates { share: f64 },
    #[error(transparent)]
    Sampling(#[from] SampleError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Standard-normal quantile via the Acklam rational approximation
/// (absolute error below 1e-8 over (0,1)).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0,1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KillworthInterval {
    pub se: f64,
    pub low: f64,
    pub high: f64,
}

/// Model-based interval: se = sqrt(N·N̂_H / Σ d̂_i), interval N̂_H ± z·se.
/// Known to be severely anticonservative; kept for comparison.
pub fn killworth_interval(
    n_hat: f64,
    sum_degree_hat: f64,
    universe_size: u64,
    level: f64,
) -> Result<KillworthInterval, VarianceError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(VarianceError::BadLevel { level });
    }
    if sum_degree_hat <= 0.0 {
        return Err(VarianceError::ZeroDegreeSum);
    }
    assert!(n_hat >= 0.0);
    let se = (universe_size as f64 * n_hat / sum_degree_hat).sqrt();
    let z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    Ok(KillworthInterval {
        se,
        low: n_hat - z * se,
        high: n_hat + z * se,
    })
}

/// Unweighted sum of estimated degrees Σ_{i∈s} d̂_{i,U} with d̂_{i,U} =
/// y_{i,𝒜}·N/N_𝒜, the plug-in the historical interval expects.
pub fn killworth_degree_sum(
    frame: &FrameSurvey,
    registry: &KnownPopulationRegistry,
) -> Result<f64, VarianceError> {
    let total = registry.total_size();
    if total == 0 {
        return Err(VarianceError::ZeroDegreeSum);
    }
    let scale = registry.universe_size as f64 / total as f64;
    Ok(frame
        .rows()
        .iter()
        .map(|r| r.y_probe.values().sum::<u64>() as f64 * scale)
        .sum())
}

/// Percentile interval by the nearest-rank rule: the endpoints are the
/// ceil(q·B)-th order statistics at q = (1−level)/2 and 1−(1−level)/2,
/// so both are elements of the replicate multiset. Non-finite replicates
/// are ignored.
pub fn percentile_interval(replicates: &[f64], level: f64) -> Result<(f64, f64), VarianceError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(VarianceError::BadLevel { level });
    }
    let mut finite: Vec<f64> = replicates.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.len() < 2 {
        return Err(VarianceError::InsufficientReplicates { got: finite.len() });
    }
    finite.sort_by(f64::total_cmp);
    let rank = |q: f64| -> usize {
        let r = (q * finite.len() as f64).ceil() as usize;
        r.clamp(1, finite.len()) - 1
    };
    let alpha = 1.0 - level;
    Ok((finite[rank(alpha / 2.0)], finite[rank(1.0 - alpha / 2.0)]))
}

/// Resampling scheme for the frame-population sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameResampler {
    /// Respondent-level i.i.d. resampling.
    Simple,
    /// Stratified PSU-level resampling with weight rescaling.
    Rescaled,
}

/// Resampling scheme for the hidden-population sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HiddenResampler {
    Simple,
    /// Two-group chain bootstrap for respondent-driven samples.
    Rds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub level: f64,
    pub frame_method: FrameResampler,
    pub hidden_method: HiddenResampler,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            level: 0.95,
            frame_method: FrameResampler::Simple,
            hidden_method: HiddenResampler::Simple,
            replicates: 1_000,
            seed: 0,
        }
    }
}

/// Bootstrap distribution of an arbitrary estimator. Frame and hidden
/// replicates are generated independently and paired by index; replicate
/// evaluation runs in parallel with per-replicate streams, so the result
/// is identical for any worker count. Replicates on which the estimator
/// is degenerate are excluded and counted; more than 1% of them is an
/// error.
pub fn bootstrap_estimate<F>(
    est_fn: F,
    frame: &FrameSurvey,
    hidden: Option<&HiddenSurvey>,
    registry: &KnownPopulationRegistry,
    method: &str,
    cfg: &BootstrapConfig,
) -> Result<Estimate, VarianceError>
where
    F: Fn(&FrameSurvey, Option<&HiddenSurvey>) -> Result<f64, EstimatorError> + Sync + Send,
{
    let point = est_fn(frame, hidden)?;
    let b = cfg.replicates;
    if b < 2 {
        return Err(VarianceError::InsufficientReplicates { got: b });
    }
    if cfg.frame_method == FrameResampler::Rescaled {
        // Surface singleton-stratum problems before spawning workers.
        rescaled_bootstrap_replicate(frame, cfg.seed, 0)?;
    }
    let hidden_rds: Option<Vec<Vec<u32>>> = match (hidden, cfg.hidden_method) {
        (Some(h), HiddenResampler::Rds) => Some(rds_two_group_bootstrap(h, b, cfg.seed)?),
        _ => None,
    };

    let results: Vec<Result<f64, VarianceError>> = exec::map_indexed(b, |rep| {
        let rep_u64 = rep as u64;
        let frame_rep = match cfg.frame_method {
            FrameResampler::Simple => {
                let idx = simple_bootstrap_replicate(frame.rows().len(), cfg.seed, rep_u64);
                frame.resample(&idx)?
            }
            FrameResampler::Rescaled => {
                let w = rescaled_bootstrap_replicate(frame, cfg.seed, rep_u64)?;
                frame.reweighted(&w)?
            }
        };
        let hidden_rep = match hidden {
            None => None,
            Some(h) => Some(match (&hidden_rds, cfg.hidden_method) {
                (Some(reps), _) => h.resample(&reps[rep])?,
                (None, _) => {
                    // Independent stream family from the frame resampler.
                    let idx = simple_bootstrap_replicate(
                        h.rows().len(),
                        cfg.seed ^ 0x9E37_79B9_7F4A_7C15,
                        rep_u64,
                    );
                    h.resample(&idx)?
                }
            }),
        };
        Ok(est_fn(&frame_rep, hidden_rep.as_ref()))
    })
    .into_iter()
    .map(|r| match r {
        Ok(inner) => inner.map_err(VarianceError::from),
        Err(e) => Err(e),
    })
    .collect();

    let mut replicate_values = Vec::with_capacity(b);
    let mut excluded = 0u64;
    for r in results {
        match r {
            Ok(v) => replicate_values.push(v),
            Err(VarianceError::Estimator(EstimatorError::DegenerateVisibility)) => excluded += 1,
            Err(VarianceError::Estimator(EstimatorError::ZeroDenominator { .. })) => {
                excluded += 1
            }
            Err(e) => return Err(e),
        }
    }
    let share = 100.0 * excluded as f64 / b as f64;
    if share > 1.0 {
        return Err(VarianceError::ExcessiveDegenerateReplicates { share });
    }
    let (low, high) = percentile_interval(&replicate_values, cfg.level)?;

    let mut est = Estimate::point(point, method, survey_digest(Some(frame), hidden, Some(registry)));
    est.replicates = Some(replicate_values);
    est.interval = Some(Interval {
        low,
        high,
        level: cfg.level,
    });
    est.excluded_replicates = excluded;
    Ok(est)
}

/// Re-export: pairing of independently generated replicate samples.
pub use sampling::two_sample_replicates;
