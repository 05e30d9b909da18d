//! Domain types for scale-up survey data, their invariants, and file I/O.
//!
//! Three kinds of input data exist: a registry of known-size probe groups,
//! aggregate relational data from a probability sample of the frame
//! population (CSV), and enriched aggregate relational data from a
//! relative-probability sample of the hidden population (CSV). Estimates
//! round-trip through JSON. All types are immutable after construction and
//! safe to share across worker threads.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub mod io;

/// Errors raised while validating or ingesting survey data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing column `{column}`")]
    MissingColumn { column: String },
    #[error("unknown group `{group}` (column `{column}`)")]
    UnknownGroup { group: String, column: String },
    #[error("non-integer count in row `{row}`, column `{column}`: `{value}`")]
    NonIntegerCount {
        row: String,
        column: String,
        value: String,
    },
    #[error("nonpositive weight in row `{row}`")]
    NonpositiveWeight { row: String },
    #[error("reported visibility exceeds reported ties in row `{row}`, group `{group}`")]
    VisibilityExceedsTies { row: String, group: String },
    #[error("duplicate respondent id `{id}`")]
    DuplicateId { id: String },
    #[error("empty sample")]
    EmptySample,
    #[error("rows carry inconsistent probe columns (row `{row}`)")]
    InconsistentColumns { row: String },
    #[error("invalid registry: {reason}")]
    InvalidRegistry { reason: String },
    #[error("invalid field in row `{row}`, column `{column}`: `{value}`")]
    InvalidField {
        row: String,
        column: String,
        value: String,
    },
    #[error("invalid estimate: {reason}")]
    InvalidEstimate { reason: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// One known-size group of probe alters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeGroup {
    pub id: String,
    /// N_{A_j}: members in the whole universe.
    pub size_total: u64,
    /// N_{A_j ∩ F}: members on the sampling frame.
    pub size_on_frame: u64,
}

/// Registry of probe-group sizes plus the frame and universe totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnownPopulationRegistry {
    pub groups: Vec<ProbeGroup>,
    pub frame_size: u64,
    pub universe_size: u64,
}

impl KnownPopulationRegistry {
    pub fn new(
        groups: Vec<ProbeGroup>,
        frame_size: u64,
        universe_size: u64,
    ) -> Result<Self, DataError> {
        let reg = Self {
            groups,
            frame_size,
            universe_size,
        };
        reg.validate()?;
        Ok(reg)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let mut seen = BTreeSet::new();
        for g in &self.groups {
            if !seen.insert(g.id.as_str()) {
                return Err(DataError::InvalidRegistry {
                    reason: format!("duplicate group id `{}`", g.id),
                });
            }
            if g.size_on_frame > g.size_total {
                return Err(DataError::InvalidRegistry {
                    reason: format!("group `{}` has size_on_frame > size_total", g.id),
                });
            }
        }
        if self.frame_size == 0 || self.universe_size == 0 {
            return Err(DataError::InvalidRegistry {
                reason: "frame_size and universe_size must be positive".into(),
            });
        }
        if self.frame_size > self.universe_size {
            return Err(DataError::InvalidRegistry {
                reason: "frame_size exceeds universe_size".into(),
            });
        }
        Ok(())
    }

    pub fn group(&self, id: &str) -> Option<&ProbeGroup> {
        self.groups.iter().find(|g| g.id == id)
    }

    pub fn group_ids(&self) -> Vec<&str> {
        self.groups.iter().map(|g| g.id.as_str()).collect()
    }

    /// Sum of N_{A_j} over all groups.
    pub fn total_size(&self) -> u64 {
        self.groups.iter().map(|g| g.size_total).sum()
    }

    /// Sum of N_{A_j ∩ F} over all groups.
    pub fn total_on_frame(&self) -> u64 {
        self.groups.iter().map(|g| g.size_on_frame).sum()
    }

    /// Registry restricted to the given group ids (order preserved).
    pub fn subset(&self, ids: &[&str]) -> Result<Self, DataError> {
        let mut groups = Vec::with_capacity(ids.len());
        for id in ids {
            let g = self.group(id).ok_or_else(|| DataError::UnknownGroup {
                group: (*id).to_string(),
                column: String::new(),
            })?;
            groups.push(g.clone());
        }
        Self::new(groups, self.frame_size, self.universe_size)
    }

    /// Registry with one group removed (for internal-consistency checks).
    pub fn without_group(&self, id: &str) -> Result<Self, DataError> {
        if self.group(id).is_none() {
            return Err(DataError::UnknownGroup {
                group: id.to_string(),
                column: String::new(),
            });
        }
        let groups = self
            .groups
            .iter()
            .filter(|g| g.id != id)
            .cloned()
            .collect();
        Self::new(groups, self.frame_size, self.universe_size)
    }
}

/// One respondent from the frame-population survey.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub id: String,
    /// Design weight 1/π_i.
    pub weight: f64,
    pub stratum: String,
    pub psu: String,
    /// Reported connections to the hidden population, y_{i,H}.
    pub y_hidden: u64,
    /// Reported connections per probe group, y_{i,A_j}.
    pub y_probe: BTreeMap<String, u64>,
    /// Self-reported probe-group memberships, when collected.
    pub probe_membership: Option<BTreeMap<String, bool>>,
}

/// Sampling-design kinds we distinguish for variance estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Srs,
    StratifiedMultistage,
    RelativeProbability,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratumMeta {
    pub stratum_id: String,
    /// Number of sampled PSUs in the stratum.
    pub psu_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurveyDesignMeta {
    pub design_kind: DesignKind,
    pub strata: Vec<StratumMeta>,
}

/// Aggregate relational data from a probability sample of the frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSurvey {
    rows: Vec<FrameRow>,
    design: SurveyDesignMeta,
}

impl FrameSurvey {
    pub fn new(rows: Vec<FrameRow>) -> Result<Self, DataError> {
        if rows.is_empty() {
            return Err(DataError::EmptySample);
        }
        let mut ids = BTreeSet::new();
        let keys: Vec<&String> = rows[0].y_probe.keys().collect();
        for row in &rows {
            if !ids.insert(row.id.as_str()) {
                return Err(DataError::DuplicateId {
                    id: row.id.clone(),
                });
            }
            if !(row.weight.is_finite() && row.weight > 0.0) {
                return Err(DataError::NonpositiveWeight {
                    row: row.id.clone(),
                });
            }
            if row.y_probe.keys().ne(keys.iter().copied()) {
                return Err(DataError::InconsistentColumns {
                    row: row.id.clone(),
                });
            }
            if let Some(members) = &row.probe_membership {
                if !members.keys().all(|k| row.y_probe.contains_key(k)) {
                    return Err(DataError::InconsistentColumns {
                        row: row.id.clone(),
                    });
                }
            }
        }
        let design = derive_design(&rows);
        Ok(Self { rows, design })
    }

    pub fn rows(&self) -> &[FrameRow] {
        &self.rows
    }

    pub fn design(&self) -> &SurveyDesignMeta {
        &self.design
    }

    pub fn probe_group_ids(&self) -> Vec<&str> {
        self.rows[0].y_probe.keys().map(String::as_str).collect()
    }

    pub fn total_weight(&self) -> f64 {
        self.rows.iter().map(|r| r.weight).sum()
    }

    /// Same rows with every weight multiplied by `factor` (post-stratified
    /// rescaling to absolute scale is `factor = N_F / Σw`).
    pub fn with_scaled_weights(&self, factor: f64) -> Result<Self, DataError> {
        let rows = self
            .rows
            .iter()
            .map(|r| FrameRow {
                weight: r.weight * factor,
                ..r.clone()
            })
            .collect();
        Self::new(rows)
    }

    /// Replicate survey built from a with-replacement index multiset.
    pub fn resample(&self, indices: &[u32]) -> Result<Self, DataError> {
        let rows = indices
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let mut row = self.rows[i as usize].clone();
                // Resampled rows need fresh unique ids.
                row.id = format!("{}#{k}", row.id);
                row
            })
            .collect();
        Self::new(rows)
    }

    /// Replicate survey with substituted weights; rows whose replicate
    /// weight is zero (unselected PSUs) are dropped. Estimators are
    /// weighted sums, so dropping zero-weight rows is exact.
    pub fn reweighted(&self, weights: &[f64]) -> Result<Self, DataError> {
        assert_eq!(weights.len(), self.rows.len());
        let rows: Vec<FrameRow> = self
            .rows
            .iter()
            .zip(weights)
            .filter(|(_, &w)| w > 0.0)
            .map(|(r, &w)| FrameRow {
                weight: w,
                ..r.clone()
            })
            .collect();
        Self::new(rows)
    }
}

fn derive_design(rows: &[FrameRow]) -> SurveyDesignMeta {
    let mut strata: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for row in rows {
        strata
            .entry(row.stratum.as_str())
            .or_default()
            .insert(row.psu.as_str());
    }
    let psu_total: usize = strata.values().map(BTreeSet::len).sum();
    let design_kind = if strata.len() == 1 && psu_total == rows.len() {
        DesignKind::Srs
    } else {
        DesignKind::StratifiedMultistage
    };
    SurveyDesignMeta {
        design_kind,
        strata: strata
            .into_iter()
            .map(|(id, psus)| StratumMeta {
                stratum_id: id.to_string(),
                psu_count: psus.len(),
            })
            .collect(),
    }
}

/// One respondent from the hidden-population survey.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenRow {
    pub id: String,
    /// Relative design weight 1/(cπ_i); the constant c is unknown.
    pub rel_weight: f64,
    /// Reported connections to each probe group on the frame, y_{i,A_j∩F}.
    pub y_probe_on_frame: BTreeMap<String, u64>,
    /// Reported visibility to each probe group on the frame, ṽ_{i,A_j∩F}.
    pub vis_probe_on_frame: BTreeMap<String, u64>,
    /// Optional binary label used by the two-group RDS bootstrap.
    pub group_flag: Option<u8>,
}

impl HiddenRow {
    pub fn total_reported_ties(&self) -> u64 {
        self.y_probe_on_frame.values().sum()
    }

    pub fn total_reported_visibility(&self) -> u64 {
        self.vis_probe_on_frame.values().sum()
    }
}

/// Enriched aggregate relational data from a relative-probability sample
/// of the hidden population.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenSurvey {
    rows: Vec<HiddenRow>,
    pub weight_scale_known: bool,
}

impl HiddenSurvey {
    pub fn new(rows: Vec<HiddenRow>, weight_scale_known: bool) -> Result<Self, DataError> {
        if rows.is_empty() {
            return Err(DataError::EmptySample);
        }
        let mut ids = BTreeSet::new();
        let keys: Vec<&String> = rows[0].y_probe_on_frame.keys().collect();
        for row in &rows {
            if !ids.insert(row.id.as_str()) {
                return Err(DataError::DuplicateId {
                    id: row.id.clone(),
                });
            }
            if !(row.rel_weight.is_finite() && row.rel_weight > 0.0) {
                return Err(DataError::NonpositiveWeight {
                    row: row.id.clone(),
                });
            }
            if row.y_probe_on_frame.keys().ne(keys.iter().copied())
                || row.vis_probe_on_frame.keys().ne(keys.iter().copied())
            {
                return Err(DataError::InconsistentColumns {
                    row: row.id.clone(),
                });
            }
            for (gid, &v) in &row.vis_probe_on_frame {
                if v > row.y_probe_on_frame[gid] {
                    return Err(DataError::VisibilityExceedsTies {
                        row: row.id.clone(),
                        group: gid.clone(),
                    });
                }
            }
        }
        Ok(Self {
            rows,
            weight_scale_known,
        })
    }

    pub fn rows(&self) -> &[HiddenRow] {
        &self.rows
    }

    pub fn probe_group_ids(&self) -> Vec<&str> {
        self.rows[0]
            .y_probe_on_frame
            .keys()
            .map(String::as_str)
            .collect()
    }

    pub fn with_scaled_weights(&self, factor: f64) -> Result<Self, DataError> {
        let rows = self
            .rows
            .iter()
            .map(|r| HiddenRow {
                rel_weight: r.rel_weight * factor,
                ..r.clone()
            })
            .collect();
        Self::new(rows, self.weight_scale_known)
    }

    pub fn resample(&self, indices: &[u32]) -> Result<Self, DataError> {
        let rows = indices
            .iter()
            .enumerate()
            .map(|(k, &i)| {
                let mut row = self.rows[i as usize].clone();
                row.id = format!("{}#{k}", row.id);
                row
            })
            .collect();
        Self::new(rows, self.weight_scale_known)
    }
}

/// Confidence interval attached to an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub level: f64,
}

fn default_schema_version() -> u32 {
    1
}

/// A point estimate with optional replicate values and interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<Interval>,
    pub method: String,
    pub inputs_digest: String,
    /// Replicates excluded because the estimator was degenerate on them.
    #[serde(default)]
    pub excluded_replicates: u64,
}

impl Estimate {
    pub fn point(value: f64, method: impl Into<String>, inputs_digest: impl Into<String>) -> Self {
        Self {
            schema_version: default_schema_version(),
            value,
            replicates: None,
            interval: None,
            method: method.into(),
            inputs_digest: inputs_digest.into(),
            excluded_replicates: 0,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if let Some(iv) = &self.interval {
            if !(iv.level > 0.0 && iv.level < 1.0) {
                return Err(DataError::InvalidEstimate {
                    reason: format!("interval level {} outside (0,1)", iv.level),
                });
            }
            if iv.low > iv.high {
                return Err(DataError::InvalidEstimate {
                    reason: "interval low exceeds high".into(),
                });
            }
            if self.value < iv.low || self.value > iv.high {
                // Percentile intervals on skewed replicate distributions can
                // exclude the point estimate; surface it, don't reject it.
                log::warn!(
                    "estimate {} lies outside its interval [{}, {}]",
                    self.value,
                    iv.low,
                    iv.high
                );
            }
        }
        Ok(())
    }
}

/// Hex SHA-256 over the concatenation of the given parts, used to stamp
/// estimates with a provenance digest of their inputs.
pub fn inputs_digest(parts: &[&[u8]]) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    for p in parts {
        hasher.update((p.len() as u64).to_le_bytes());
        hasher.update(p);
    }
    let out = hasher.finalize();
    let mut s = String::with_capacity(64);
    for b in out {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Digest of the canonical serialization of a survey pair plus registry.
pub fn survey_digest(
    frame: Option<&FrameSurvey>,
    hidden: Option<&HiddenSurvey>,
    registry: Option<&KnownPopulationRegistry>,
) -> String {
    let f = frame.map(io::frame_survey_to_csv).unwrap_or_default();
    let h = hidden.map(io::hidden_survey_to_csv).unwrap_or_default();
    let r = registry
        .and_then(|r| serde_json::to_string(r).ok())
        .unwrap_or_default();
    inputs_digest(&[f.as_bytes(), h.as_bytes(), r.as_bytes()])
}

/// Loads a frame survey from CSV. See [`io`] for the schema.
pub fn load_frame_survey(
    path: impl AsRef<Path>,
    registry: &KnownPopulationRegistry,
    top_code: Option<u64>,
) -> Result<FrameSurvey, DataError> {
    io::read_frame_survey(std::fs::File::open(path)?, registry, top_code)
}

/// Loads a hidden-population survey from CSV. See [`io`] for the schema.
pub fn load_hidden_survey(
    path: impl AsRef<Path>,
    registry: &KnownPopulationRegistry,
) -> Result<HiddenSurvey, DataError> {
    io::read_hidden_survey(std::fs::File::open(path)?, registry)
}

/// Loads a known-population registry from JSON.
pub fn load_registry(path: impl AsRef<Path>) -> Result<KnownPopulationRegistry, DataError> {
    let text = std::fs::read_to_string(path)?;
    let reg: KnownPopulationRegistry = serde_json::from_str(&text)?;
    reg.validate()?;
    Ok(reg)
}

/// Writes an estimate as JSON; `load_estimate` reads it back losslessly.
pub fn save_estimate(est: &Estimate, path: impl AsRef<Path>) -> Result<(), DataError> {
    est.validate()?;
    let text = serde_json::to_string_pretty(est)?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_estimate(path: impl AsRef<Path>) -> Result<Estimate, DataError> {
    let text = std::fs::read_to_string(path)?;
    let est: Estimate = serde_json::from_str(&text)?;
    est.validate()?;
    Ok(est)
}
