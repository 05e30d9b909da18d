//! Point estimators for hidden-population size and its components.
//!
//! Frame-side quantities are Horvitz-Thompson totals over design weights;
//! hidden-side quantities are Hájek (weighted-mean) estimators, which only
//! need weights known up to a constant — the unknown constant cancels in
//! every ratio. The generalized size estimator divides the estimated total
//! of out-reports from the frame by the estimated mean visibility of
//! hidden members; the basic estimators divide the same numerator by a
//! known-population degree estimate instead, and adjustment factors bridge
//! the two.

use crate::data::{FrameSurvey, HiddenSurvey, KnownPopulationRegistry};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("empty sample")]
    EmptySample,
    #[error("estimated visibility is degenerate (zero)")]
    DegenerateVisibility,
    #[error("zero denominator in {quantity}")]
    ZeroDenominator { quantity: &'static str },
    #[error("registry has no usable probe groups for {context}")]
    NoUsableGroups { context: &'static str },
    #[error("probe group `{group}` missing from survey")]
    MissingGroup { group: String },
    #[error("adjustment factor {factor} must be positive (got {value})")]
    NonpositiveFactor { factor: &'static str, value: f64 },
    #[error("need at least two probe groups, got {got}")]
    TooFewGroups { got: usize },
    #[error("no respondents flagged as probe-group members")]
    NoFlaggedMembers,
}

/// Σ_{i∈s_F} y_{i,H} · w_i — Horvitz-Thompson total of out-reports.
pub fn ht_total_reports_to_hidden(frame: &FrameSurvey) -> Result<f64, EstimatorError> {
    if frame.rows().is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    Ok(frame
        .rows()
        .iter()
        .map(|r| r.y_hidden as f64 * r.weight)
        .sum())
}

/// Σ_{i∈s_F} Σ_j y_{i,A_j} · w_i over the given groups; repeated group ids
/// count repeatedly (multiset semantics).
pub fn ht_total_reports_to_probes(
    frame: &FrameSurvey,
    groups: &[&str],
) -> Result<f64, EstimatorError> {
    if frame.rows().is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    let mut total = 0.0;
    for row in frame.rows() {
        let mut y = 0.0;
        for g in groups {
            let v = row
                .y_probe
                .get(*g)
                .ok_or_else(|| EstimatorError::MissingGroup {
                    group: (*g).to_string(),
                })?;
            y += *v as f64;
        }
        total += y * row.weight;
    }
    Ok(total)
}

/// Which average degree the known-population estimator is read as.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeTarget {
    /// d̄_FF — probe alters typical of frame members' ties to the frame.
    FrameToFrame,
    /// d̄_UF — probe alters typical of the whole universe's ties to the frame.
    UniverseToFrame,
    /// d̄_FU = d̄_UF · N/N_F.
    FrameToUniverse,
}

/// Known-population mean degree: ŷ_{F,𝒜} / N_𝒜 (the HT form, which needs
/// absolute weights; see [`weight_scale_ratio`] for the scale check), with
/// the FrameToUniverse variant rescaled by N/N_F.
pub fn kp_mean_degree(
    frame: &FrameSurvey,
    registry: &KnownPopulationRegistry,
    target: DegreeTarget,
) -> Result<f64, EstimatorError> {
    let groups = registry.group_ids();
    if groups.is_empty() {
        return Err(EstimatorError::NoUsableGroups {
            context: "known-population degree",
        });
    }
    let total_size = registry.total_size();
    if total_size == 0 {
        return Err(EstimatorError::ZeroDenominator {
            quantity: "registry total size",
        });
    }
    let ht = ht_total_reports_to_probes(frame, &groups)?;
    let mean = ht / total_size as f64;
    Ok(match target {
        DegreeTarget::FrameToFrame | DegreeTarget::UniverseToFrame => mean,
        DegreeTarget::FrameToUniverse => {
            mean * registry.universe_size as f64 / registry.frame_size as f64
        }
    })
}

/// Ratio of the survey's total weight to the frame size. Values far from
/// one mean the weights are not on the absolute 1/π scale that HT totals
/// require; callers should warn beyond ±10% and may post-stratify with
/// [`FrameSurvey::with_scaled_weights`].
pub fn weight_scale_ratio(frame: &FrameSurvey, registry: &KnownPopulationRegistry) -> f64 {
    frame.total_weight() / registry.frame_size as f64
}

/// Groups usable for hidden-side estimators: those with known positive
/// frame intersection that also appear in the hidden survey.
fn on_frame_groups<'a>(
    hidden: &HiddenSurvey,
    registry: &'a KnownPopulationRegistry,
) -> Vec<&'a str> {
    let present = hidden.probe_group_ids();
    registry
        .groups
        .iter()
        .filter(|g| g.size_on_frame > 0 && present.contains(&g.id.as_str()))
        .map(|g| g.id.as_str())
        .collect()
}

fn hajek_mean_over_groups(
    hidden: &HiddenSurvey,
    groups: &[&str],
    visibility: bool,
) -> Result<f64, EstimatorError> {
    if hidden.rows().is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for row in hidden.rows() {
        let source = if visibility {
            &row.vis_probe_on_frame
        } else {
            &row.y_probe_on_frame
        };
        let mut total = 0.0;
        for g in groups {
            let v = source
                .get(*g)
                .ok_or_else(|| EstimatorError::MissingGroup {
                    group: (*g).to_string(),
                })?;
            total += *v as f64;
        }
        num += total * row.rel_weight;
        den += row.rel_weight;
    }
    Ok(num / den)
}

/// v̂̄_{H,F} = (N_F / N_{𝒜∩F}) · Hájek mean of ṽ_{i,𝒜∩F}; consistent for
/// the mean visibility of hidden members to the frame when the probe
/// alters are as exposed to the hidden population as the frame overall.
pub fn visibility_mean(
    hidden: &HiddenSurvey,
    registry: &KnownPopulationRegistry,
) -> Result<f64, EstimatorError> {
    let groups = on_frame_groups(hidden, registry);
    if groups.is_empty() {
        return Err(EstimatorError::NoUsableGroups {
            context: "visibility",
        });
    }
    let on_frame: u64 = groups
        .iter()
        .map(|g| registry.group(g).unwrap().size_on_frame)
        .sum();
    let mean = hajek_mean_over_groups(hidden, &groups, true)?;
    let value = registry.frame_size as f64 / on_frame as f64 * mean;
    if value == 0.0 {
        return Err(EstimatorError::DegenerateVisibility);
    }
    Ok(value)
}

/// d̂̄_{H,F}: same Hájek form with reported ties in place of visibility.
pub fn mean_degree_hidden_to_frame(
    hidden: &HiddenSurvey,
    registry: &KnownPopulationRegistry,
) -> Result<f64, EstimatorError> {
    let groups = on_frame_groups(hidden, registry);
    if groups.is_empty() {
        return Err(EstimatorError::NoUsableGroups {
            context: "hidden mean degree",
        });
    }
    let on_frame: u64 = groups
        .iter()
        .map(|g| registry.group(g).unwrap().size_on_frame)
        .sum();
    let mean = hajek_mean_over_groups(hidden, &groups, false)?;
    let value = registry.frame_size as f64 / on_frame as f64 * mean;
    if value == 0.0 {
        return Err(EstimatorError::ZeroDenominator {
            quantity: "mean degree of hidden members",
        });
    }
    Ok(value)
}

/// φ̂_F = d̂̄_FF(reg₁) / d̂̄_UF(reg₂). The two registries hold probe alters
/// typical of F→F ties and of U→F ties respectively.
pub fn frame_ratio(
    frame: &FrameSurvey,
    registry_ff: &KnownPopulationRegistry,
    registry_uf: &KnownPopulationRegistry,
) -> Result<f64, EstimatorError> {
    let num = kp_mean_degree(frame, registry_ff, DegreeTarget::FrameToFrame)?;
    let den = kp_mean_degree(frame, registry_uf, DegreeTarget::UniverseToFrame)?;
    if den == 0.0 {
        return Err(EstimatorError::ZeroDenominator {
            quantity: "d_bar_uf",
        });
    }
    Ok(num / den)
}

/// δ̂_F = d̂̄_HF / d̂̄_FF over the probe groups shared by both surveys.
pub fn degree_ratio(
    hidden: &HiddenSurvey,
    frame: &FrameSurvey,
    registry: &KnownPopulationRegistry,
) -> Result<f64, EstimatorError> {
    let frame_groups = frame.probe_group_ids();
    let shared: Vec<&str> = on_frame_groups(hidden, registry)
        .into_iter()
        .filter(|g| frame_groups.contains(g))
        .collect();
    if shared.is_empty() {
        return Err(EstimatorError::NoUsableGroups {
            context: "degree ratio",
        });
    }
    let shared_reg = registry
        .subset(&shared)
        .map_err(|_| EstimatorError::NoUsableGroups {
            context: "degree ratio",
        })?;
    let num = mean_degree_hidden_to_frame(hidden, &shared_reg)?;
    let den = kp_mean_degree(frame, &shared_reg, DegreeTarget::FrameToFrame)?;
    if den == 0.0 {
        return Err(EstimatorError::ZeroDenominator {
            quantity: "d_bar_ff",
        });
    }
    Ok(num / den)
}

/// τ̂_F = Σ_i ṽ_{i,𝒜}·w_i / Σ_i y_{i,𝒜}·w_i. Registry-free: every factor
/// involving the size of the probe alters cancels, so groups of unknown
/// size are usable here.
pub fn true_positive_rate(hidden: &HiddenSurvey) -> Result<f64, EstimatorError> {
    if hidden.rows().is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for row in hidden.rows() {
        num += row.total_reported_visibility() as f64 * row.rel_weight;
        den += row.total_reported_ties() as f64 * row.rel_weight;
    }
    if den == 0.0 {
        return Err(EstimatorError::ZeroDenominator {
            quantity: "reported ties",
        });
    }
    Ok(num / den)
}

/// Which basic scale-up estimator to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasicVariant {
    /// ŷ_FH / (d̂_FU/N): probe alters should be typical of U's ties to F.
    Classic,
    /// ŷ_FH / (d̂_FF/N_F): probe alters should be typical of F's ties to F.
    Modified,
}

/// Basic scale-up estimator.
pub fn basic_scaleup(
    frame: &FrameSurvey,
    registry: &KnownPopulationRegistry,
    variant: BasicVariant,
) -> Result<f64, EstimatorError> {
    let numerator = ht_total_reports_to_hidden(frame)?;
    let target = match variant {
        BasicVariant::Classic => DegreeTarget::UniverseToFrame,
        BasicVariant::Modified => DegreeTarget::FrameToFrame,
    };
    let degree = kp_mean_degree(frame, registry, target)?;
    if degree == 0.0 {
        return Err(EstimatorError::ZeroDenominator {
            quantity: "mean degree",
        });
    }
    Ok(numerator / degree)
}

/// Generalized scale-up estimator ŷ_FH / v̂̄_HF.
pub fn generalized_scaleup(
    frame: &FrameSurvey,
    hidden: &HiddenSurvey,
    registry: &KnownPopulationRegistry,
) -> Result<f64, EstimatorError> {
    let numerator = ht_total_reports_to_hidden(frame)?;
    let visibility = visibility_mean(hidden, registry)?;
    Ok(numerator / visibility)
}

/// Where an adjustment-factor value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorProvenance {
    Estimated,
    Assumed,
    Census,
}

/// The multiplicative adjustment factors linking basic and generalized
/// scale-up estimands, with provenance per factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustmentFactors {
    pub phi: f64,
    pub delta: f64,
    pub tau: f64,
    /// Precision of out-reports; there is no estimator for it, so it is
    /// always a user input.
    pub eta: f64,
    pub provenance: FactorProvenanceMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorProvenanceMap {
    pub phi: FactorProvenance,
    pub delta: FactorProvenance,
    pub tau: FactorProvenance,
    pub eta: FactorProvenance,
}

impl AdjustmentFactors {
    pub fn assumed(phi: f64, delta: f64, tau: f64, eta: f64) -> Self {
        Self {
            phi,
            delta,
            tau,
            eta,
            provenance: FactorProvenanceMap {
                phi: FactorProvenance::Assumed,
                delta: FactorProvenance::Assumed,
                tau: FactorProvenance::Assumed,
                eta: FactorProvenance::Assumed,
            },
        }
    }

    pub fn validate(&self) -> Result<(), EstimatorError> {
        for (value, factor) in [
            (self.phi, "phi"),
            (self.delta, "delta"),
            (self.tau, "tau"),
            (self.eta, "eta"),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(EstimatorError::NonpositiveFactor { factor, value });
            }
        }
        Ok(())
    }
}

/// Adjusted scale-up variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjustedVariant {
    /// Classic basic estimate × 1/(φ δ τ).
    ClassicPhiDeltaTau,
    /// Modified basic estimate × 1/(δ τ).
    ModifiedDeltaTau,
    /// Modified basic estimate × η/(δ τ).
    ModifiedWithEta,
}

/// Applies adjustment factors to a basic scale-up estimate.
pub fn adjusted_scaleup(
    basic_estimate: f64,
    factors: &AdjustmentFactors,
    variant: AdjustedVariant,
) -> Result<f64, EstimatorError> {
    factors.validate()?;
    Ok(match variant {
        AdjustedVariant::ClassicPhiDeltaTau => {
            basic_estimate / (factors.phi * factors.delta * factors.tau)
        }
        AdjustedVariant::ModifiedDeltaTau => basic_estimate / (factors.delta * factors.tau),
        AdjustedVariant::ModifiedWithEta => {
            basic_estimate * factors.eta / (factors.delta * factors.tau)
        }
    })
}

/// Empirical probe-alter check: weighted mean reports about the hidden
/// population over all respondents versus over respondents who are
/// themselves probe-group members (counted once per membership).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeAlterCheck {
    pub mean_frame_to_hidden: f64,
    pub mean_probe_members_to_hidden: f64,
    /// mean_frame_to_hidden − mean_probe_members_to_hidden; near zero when
    /// the probe alter condition holds.
    pub difference: f64,
}

pub fn probe_alter_check(frame: &FrameSurvey) -> Result<ProbeAlterCheck, EstimatorError> {
    if frame.rows().is_empty() {
        return Err(EstimatorError::EmptySample);
    }
    let mut num_all = 0.0;
    let mut den_all = 0.0;
    let mut num_members = 0.0;
    let mut den_members = 0.0;
    for row in frame.rows() {
        num_all += row.y_hidden as f64 * row.weight;
        den_all += row.weight;
        if let Some(members) = &row.probe_membership {
            let multiplicity = members.values().filter(|&&m| m).count() as f64;
            num_members += row.y_hidden as f64 * row.weight * multiplicity;
            den_members += row.weight * multiplicity;
        }
    }
    if den_members == 0.0 {
        return Err(EstimatorError::NoFlaggedMembers);
    }
    let mean_frame_to_hidden = num_all / den_all;
    let mean_probe_members_to_hidden = num_members / den_members;
    Ok(ProbeAlterCheck {
        mean_frame_to_hidden,
        mean_probe_members_to_hidden,
        difference: mean_frame_to_hidden - mean_probe_members_to_hidden,
    })
}

/// One row of the internal-consistency check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupConsistency {
    pub group_id: String,
    pub known_size: u64,
    pub estimate: f64,
}

/// Killworth-style internal consistency: re-estimate each known group's
/// size, treating it as hidden (y_{i,H} := y_{i,A_k}) and removing it from
/// the registry.
pub fn internal_consistency(
    frame: &FrameSurvey,
    registry: &KnownPopulationRegistry,
    variant: BasicVariant,
) -> Result<Vec<GroupConsistency>, EstimatorError> {
    if registry.groups.len() < 2 {
        return Err(EstimatorError::TooFewGroups {
            got: registry.groups.len(),
        });
    }
    let mut out = Vec::with_capacity(registry.groups.len());
    for group in &registry.groups {
        let reduced = registry
            .without_group(&group.id)
            .expect("group came from the registry");
        let rows = frame
            .rows()
            .iter()
            .map(|r| {
                let mut row = r.clone();
                row.y_hidden = row.y_probe[&group.id];
                row
            })
            .collect();
        let pseudo = FrameSurvey::new(rows).expect("rows were valid");
        let estimate = basic_scaleup(&pseudo, &reduced, variant)?;
        out.push(GroupConsistency {
            group_id: group.id.clone(),
            known_size: group.size_total,
            estimate,
        });
    }
    Ok(out)
}
