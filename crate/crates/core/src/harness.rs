//! Orchestration of whole simulation experiments: probe-group embedding,
//! survey synthesis from a population graph, the estimator-bias grid, and
//! a coverage experiment for the interval procedures.
//!
//! Probe-group embedding is a construction of this laboratory, not of the
//! estimators: by default the groups form a uniformly random partition of
//! the universe, which makes the probe-alter conditions and the degree
//! identity y_{i,𝒜} = d_{i,U} hold exactly per realization, so grid-level
//! comparisons against census quantities are free of probe-assignment
//! noise. A partition of the frame serves estimators that want probe
//! alters typical of the frame, and a degree-biased mode deliberately
//! violates the conditions to exercise the empirical checks.

use crate::data::{
    DataError, FrameRow, FrameSurvey, HiddenRow, HiddenSurvey, KnownPopulationRegistry,
    ProbeGroup,
};
use crate::estimators::{self, BasicVariant, EstimatorError};
use crate::netsim::{
    apply_transmission_error, census_quantities, generate_population, predicted_basic_bias,
    CensusQuantities, PopulationGraph, SimConfig, SimError,
};
use crate::rng::{derive_seed, stream};
use crate::sampling::{
    relative_sample_from_hidden, rescaled_bootstrap_replicate, simple_bootstrap_replicate,
    srs_from_frame, DrawnSample, SampleError,
};
use crate::variance::{killworth_interval, percentile_interval, VarianceError};
use crate::exec;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("probe assignment infeasible: {reason}")]
    ProbeAssignment { reason: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Variance(#[from] VarianceError),
}

/// How probe groups are embedded in the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMode {
    /// Uniform random partition of the whole universe.
    UniversePartition,
    /// Uniform random partition of the frame population.
    FramePartition,
    /// Independent uniform draws within the frame (groups may overlap).
    FrameUniform,
    /// Groups filled from the highest-degree frame members downward;
    /// violates the probe-alter conditions on purpose.
    DegreeBiased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    pub mode: ProbeMode,
    pub group_count: usize,
    /// Group sizes; defaults to near-equal sizes for the partition modes
    /// and is required for the within-frame modes.
    #[serde(default)]
    pub sizes: Option<Vec<u64>>,
}

impl ProbeSpec {
    pub fn partition_of_universe(group_count: usize) -> Self {
        Self {
            mode: ProbeMode::UniversePartition,
            group_count,
            sizes: None,
        }
    }

    pub fn partition_of_frame(group_count: usize) -> Self {
        Self {
            mode: ProbeMode::FramePartition,
            group_count,
            sizes: None,
        }
    }
}

/// Probe groups embedded in a concrete population: the registry carries
/// the exact realized sizes, including each group's frame intersection.
#[derive(Debug, Clone)]
pub struct ProbeGroups {
    pub registry: KnownPopulationRegistry,
    group_ids: Vec<String>,
    /// Group indices each node belongs to (multiset across groups).
    node_groups: Vec<Vec<u16>>,
}

impl ProbeGroups {
    pub fn group_ids(&self) -> &[String] {
        &self.group_ids
    }

    pub fn groups_of(&self, node: usize) -> &[u16] {
        &self.node_groups[node]
    }
}

fn equal_chunks(total: usize, parts: usize) -> Vec<u64> {
    let base = total / parts;
    let extra = total % parts;
    (0..parts)
        .map(|i| (base + usize::from(i < extra)) as u64)
        .collect()
}

/// Embeds probe groups into the population per `spec`.
pub fn assign_probe_groups(
    graph: &PopulationGraph,
    spec: &ProbeSpec,
    seed: u64,
) -> Result<ProbeGroups, HarnessError> {
    if spec.group_count == 0 {
        return Err(HarnessError::ProbeAssignment {
            reason: "need at least one probe group".into(),
        });
    }
    let n = graph.node_count();
    let frame: Vec<u32> = graph.frame_nodes();
    let mut rng = stream(seed, &[crate::rng::domain::PROBE_GROUPS]);
    let mut node_groups: Vec<Vec<u16>> = vec![Vec::new(); n];
    let mut groups: Vec<ProbeGroup> = Vec::with_capacity(spec.group_count);
    let group_ids: Vec<String> = (0..spec.group_count).map(|i| format!("g{i}")).collect();

    let mut push_members = |members: &[u32], gi: usize, groups: &mut Vec<ProbeGroup>| {
        let on_frame = members
            .iter()
            .filter(|&&m| graph.in_frame(m as usize))
            .count() as u64;
        groups.push(ProbeGroup {
            id: group_ids[gi].clone(),
            size_total: members.len() as u64,
            size_on_frame: on_frame,
        });
        for &m in members {
            node_groups[m as usize].push(gi as u16);
        }
    };

    match spec.mode {
        ProbeMode::UniversePartition | ProbeMode::FramePartition => {
            let mut pool: Vec<u32> = if spec.mode == ProbeMode::UniversePartition {
                (0..n as u32).collect()
            } else {
                frame.clone()
            };
            let sizes = spec
                .sizes
                .clone()
                .unwrap_or_else(|| equal_chunks(pool.len(), spec.group_count));
            if sizes.len() != spec.group_count
                || sizes.iter().sum::<u64>() != pool.len() as u64
            {
                return Err(HarnessError::ProbeAssignment {
                    reason: "partition sizes must cover the population exactly".into(),
                });
            }
            pool.shuffle(&mut rng);
            let mut start = 0usize;
            for (gi, &size) in sizes.iter().enumerate() {
                let end = start + size as usize;
                push_members(&pool[start..end], gi, &mut groups);
                start = end;
            }
        }
        ProbeMode::FrameUniform | ProbeMode::DegreeBiased => {
            // Default: equal groups covering half the frame.
            let sizes = spec
                .sizes
                .clone()
                .unwrap_or_else(|| equal_chunks(frame.len() / 2, spec.group_count));
            if sizes.len() != spec.group_count {
                return Err(HarnessError::ProbeAssignment {
                    reason: "one size per group required".into(),
                });
            }
            if sizes.iter().any(|&s| s as usize > frame.len()) {
                return Err(HarnessError::ProbeAssignment {
                    reason: "group size exceeds frame size".into(),
                });
            }
            if spec.mode == ProbeMode::FrameUniform {
                for (gi, &size) in sizes.iter().enumerate() {
                    let mut pool = frame.clone();
                    pool.shuffle(&mut rng);
                    push_members(&pool[..size as usize], gi, &mut groups);
                }
            } else {
                // Highest-degree frame members first; groups are nested
                // slices of the degree ranking, so their alters are
                // atypically well-connected.
                let mut ranked = frame.clone();
                ranked.sort_by_key(|&i| std::cmp::Reverse(graph.degree(i as usize)));
                if sizes.iter().sum::<u64>() as usize > ranked.len() {
                    return Err(HarnessError::ProbeAssignment {
                        reason: "biased groups exceed frame size".into(),
                    });
                }
                let mut start = 0usize;
                for (gi, &size) in sizes.iter().enumerate() {
                    let end = start + size as usize;
                    push_members(&ranked[start..end], gi, &mut groups);
                    start = end;
                }
            }
        }
    }

    let registry = KnownPopulationRegistry::new(
        groups,
        graph.frame_size() as u64,
        graph.node_count() as u64,
    )?;
    Ok(ProbeGroups {
        registry,
        group_ids,
        node_groups,
    })
}

fn probe_tie_counts(graph: &PopulationGraph, probes: &ProbeGroups, node: usize) -> Vec<u64> {
    let mut counts = vec![0u64; probes.group_ids.len()];
    for &j in graph.neighbors(node) {
        for &g in probes.groups_of(j as usize) {
            counts[g as usize] += 1;
        }
    }
    counts
}

fn probe_tie_counts_on_frame(
    graph: &PopulationGraph,
    probes: &ProbeGroups,
    node: usize,
) -> Vec<u64> {
    let mut counts = vec![0u64; probes.group_ids.len()];
    for &j in graph.neighbors(node) {
        if graph.in_frame(j as usize) {
            for &g in probes.groups_of(j as usize) {
                counts[g as usize] += 1;
            }
        }
    }
    counts
}

/// Visibility of `node` per probe group, restricted to reporters on the
/// frame: sources j with a surviving report edge j → node.
fn visibility_counts_on_frame(
    graph: &PopulationGraph,
    probes: &ProbeGroups,
    node: usize,
) -> Vec<u64> {
    let mut counts = vec![0u64; probes.group_ids.len()];
    let target = node as u32;
    for &j in graph.neighbors(node) {
        let j = j as usize;
        if graph.in_frame(j) && graph.report_targets(j).binary_search(&target).is_ok() {
            for &g in probes.groups_of(j) {
                counts[g as usize] += 1;
            }
        }
    }
    counts
}

/// Materializes survey data from drawn samples.
///
/// Frame rows carry true out-report counts and true probe-group tie
/// counts; hidden rows carry on-frame tie counts and the respondent's
/// actual surviving in-report count per group (perfect awareness of
/// visibility, so reported and actual visibility coincide).
pub fn synthesize_surveys(
    graph: &PopulationGraph,
    probes: &ProbeGroups,
    frame_sample: &DrawnSample,
    hidden_sample: &DrawnSample,
) -> Result<(FrameSurvey, HiddenSurvey), HarnessError> {
    let gids = &probes.group_ids;
    let frame_rows = frame_sample
        .member_ids
        .iter()
        .zip(&frame_sample.inclusion_weights)
        .enumerate()
        .map(|(k, (&node, &w))| {
            let ties = probe_tie_counts(graph, probes, node);
            FrameRow {
                id: format!("f{node}"),
                weight: w,
                stratum: "s1".to_string(),
                psu: format!("p{k}"),
                y_hidden: graph.out_reports(node) as u64,
                y_probe: gids.iter().cloned().zip(ties).collect(),
                probe_membership: Some(
                    gids.iter()
                        .enumerate()
                        .map(|(gi, gid)| {
                            (gid.clone(), probes.groups_of(node).contains(&(gi as u16)))
                        })
                        .collect(),
                ),
            }
        })
        .collect();
    let frame_survey = FrameSurvey::new(frame_rows)?;

    let hidden_rows = hidden_sample
        .member_ids
        .iter()
        .zip(&hidden_sample.inclusion_weights)
        .map(|(&node, &w)| {
            let ties = probe_tie_counts_on_frame(graph, probes, node);
            let vis = visibility_counts_on_frame(graph, probes, node);
            HiddenRow {
                id: format!("h{node}"),
                rel_weight: w,
                y_probe_on_frame: gids.iter().cloned().zip(ties).collect(),
                vis_probe_on_frame: gids.iter().cloned().zip(vis).collect(),
                group_flag: None,
            }
        })
        .collect();
    let hidden_survey = HiddenSurvey::new(hidden_rows, false)?;
    Ok((frame_survey, hidden_survey))
}

/// Desk-scale knobs for one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellKnobs {
    pub networks: usize,
    pub surveys: usize,
    pub frame_sample_size: usize,
    pub hidden_sample_size: usize,
    /// Exponent of the degree-proportional hidden sampling design.
    pub hidden_exponent: f64,
    pub probes: ProbeSpec,
}

impl Default for CellKnobs {
    fn default() -> Self {
        Self {
            networks: 3,
            surveys: 100,
            frame_sample_size: 500,
            hidden_sample_size: 30,
            hidden_exponent: 1.0,
            probes: ProbeSpec::partition_of_universe(4),
        }
    }
}

/// Per-survey estimates retained for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurveyEstimates {
    pub network: u32,
    pub survey: u32,
    pub basic: f64,
    pub generalized: f64,
}

/// Aggregates for one parameter combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub rho: f64,
    pub p_frame: f64,
    pub tau: f64,
    pub true_hidden_size: f64,
    pub mean_basic: f64,
    pub sd_basic: f64,
    pub mean_generalized: f64,
    pub sd_generalized: f64,
    pub observed_basic_bias: f64,
    pub predicted_basic_bias: f64,
    pub census: Vec<CensusQuantities>,
    pub samples: Vec<SurveyEstimates>,
}

fn mean_sd(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

/// Runs one cell: generate networks, degrade reporting, survey repeatedly,
/// estimate, and aggregate against census truth.
pub fn run_cell(
    cfg: &SimConfig,
    knobs: &CellKnobs,
    master_seed: u64,
    cell_tag: u64,
) -> Result<CellResult, HarnessError> {
    let mut census = Vec::with_capacity(knobs.networks);
    let mut samples = Vec::with_capacity(knobs.networks * knobs.surveys);
    let mut predicted = 0.0;
    for net in 0..knobs.networks {
        let net = net as u64;
        let sim = SimConfig {
            seed: derive_seed(master_seed, &[cell_tag, net, 0]),
            ..cfg.clone()
        };
        let pristine = generate_population(&sim)?;
        let graph = apply_transmission_error(
            &pristine,
            cfg.tau,
            derive_seed(master_seed, &[cell_tag, net, 1]),
        )?;
        let probes = assign_probe_groups(
            &graph,
            &knobs.probes,
            derive_seed(master_seed, &[cell_tag, net, 2]),
        )?;
        let cq = census_quantities(&graph)?;
        predicted += predicted_basic_bias(&cq, cq.basic_estimand())?;

        let survey_results: Vec<Result<(f64, f64), HarnessError>> =
            exec::map_indexed(knobs.surveys, |s| {
                let s64 = s as u64;
                let frame_sample = srs_from_frame(
                    &graph,
                    knobs.frame_sample_size,
                    derive_seed(master_seed, &[cell_tag, net, 3, s64]),
                )?;
                let hidden_sample = relative_sample_from_hidden(
                    &graph,
                    knobs.hidden_sample_size,
                    knobs.hidden_exponent,
                    derive_seed(master_seed, &[cell_tag, net, 4, s64]),
                )?;
                let (frame_survey, hidden_survey) =
                    synthesize_surveys(&graph, &probes, &frame_sample, &hidden_sample)?;
                let basic =
                    estimators::basic_scaleup(&frame_survey, &probes.registry, BasicVariant::Classic)?;
                let generalized =
                    estimators::generalized_scaleup(&frame_survey, &hidden_survey, &probes.registry)?;
                Ok((basic, generalized))
            });
        for (s, r) in survey_results.into_iter().enumerate() {
            let (basic, generalized) = r?;
            samples.push(SurveyEstimates {
                network: net as u32,
                survey: s as u32,
                basic,
                generalized,
            });
        }
        census.push(cq);
    }
    let true_hidden_size = census[0].n_hidden as f64;
    let (mean_basic, sd_basic) = mean_sd(samples.iter().map(|s| s.basic));
    let (mean_generalized, sd_generalized) = mean_sd(samples.iter().map(|s| s.generalized));
    Ok(CellResult {
        rho: cfg.rho,
        p_frame: cfg.p_frame,
        tau: cfg.tau,
        true_hidden_size,
        mean_basic,
        sd_basic,
        mean_generalized,
        sd_generalized,
        observed_basic_bias: mean_basic - true_hidden_size,
        predicted_basic_bias: predicted / knobs.networks as f64,
        census,
        samples,
    })
}

/// Parameter grid specification. The defaults sweep the mixing parameter
/// over 0.1..=1.0 in steps of 0.1 and the frame share and true positive
/// rate over {0.1, 0.5, 1}, on populations of 5,000 with a hidden share
/// of 0.03 (true size 150).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub rho: Vec<f64>,
    pub p_frame: Vec<f64>,
    pub tau: Vec<f64>,
    pub n: usize,
    pub p_hidden: f64,
    pub p_frame_given_hidden: f64,
    pub zeta: f64,
    pub xi: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            rho: (1..=10).map(|i| i as f64 / 10.0).collect(),
            p_frame: vec![0.1, 0.5, 1.0],
            tau: vec![0.1, 0.5, 1.0],
            n: 5_000,
            p_hidden: 0.03,
            p_frame_given_hidden: 1.0,
            zeta: 0.05,
            xi: 0.4,
        }
    }
}

impl GridSpec {
    pub fn cells(&self) -> Vec<SimConfig> {
        let mut out = Vec::new();
        for &rho in &self.rho {
            for &p_frame in &self.p_frame {
                for &tau in &self.tau {
                    out.push(SimConfig {
                        n: self.n,
                        p_frame,
                        p_hidden: self.p_hidden,
                        p_frame_given_hidden: self.p_frame_given_hidden,
                        zeta: self.zeta,
                        xi: self.xi,
                        rho,
                        tau,
                        seed: 0,
                    });
                }
            }
        }
        out
    }
}

/// Evaluates the whole grid with per-cell seeds derived from the master
/// seed and cell index.
pub fn run_grid(
    spec: &GridSpec,
    knobs: &CellKnobs,
    master_seed: u64,
) -> Result<Vec<CellResult>, HarnessError> {
    spec.cells()
        .iter()
        .enumerate()
        .map(|(idx, cfg)| run_cell(cfg, knobs, master_seed, idx as u64))
        .collect()
}

/// Long-format CSV matching the grid axes: one row per (cell, estimator).
pub fn grid_to_csv(results: &[CellResult]) -> String {
    let mut out =
        String::from("rho,p_frame,tau,estimator,mean,sd,bias,predicted_bias,true_size\n");
    for cell in results {
        let _ = writeln!(
            out,
            "{},{},{},basic,{},{},{},{},{}",
            cell.rho,
            cell.p_frame,
            cell.tau,
            cell.mean_basic,
            cell.sd_basic,
            cell.observed_basic_bias,
            cell.predicted_basic_bias,
            cell.true_hidden_size
        );
        let _ = writeln!(
            out,
            "{},{},{},generalized,{},{},{},0,{}",
            cell.rho,
            cell.p_frame,
            cell.tau,
            cell.mean_generalized,
            cell.sd_generalized,
            cell.mean_generalized - cell.true_hidden_size,
            cell.true_hidden_size
        );
    }
    out
}

pub fn write_grid_csv(results: &[CellResult], path: impl AsRef<Path>) -> Result<(), HarnessError> {
    std::fs::write(path, grid_to_csv(results)).map_err(DataError::from)?;
    Ok(())
}

/// Empirical coverage of the three interval procedures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub killworth: f64,
    pub simple: f64,
    pub rescaled: f64,
    pub trials: usize,
}

/// Knobs for the coverage experiment: a stratified two-stage frame design
/// whose PSUs cluster hidden-population members together, plus a
/// relative-probability hidden sample. Reports about the hidden
/// population then concentrate in a few PSUs, which respondent-level
/// resampling cannot see.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageKnobs {
    pub surveys: usize,
    pub replicates: usize,
    pub strata: usize,
    pub psus_per_stratum_sampled: usize,
    pub respondents_per_psu: usize,
    pub psu_size: usize,
    pub probe_groups: usize,
    pub hidden_sample_size: usize,
    pub level: f64,
}

impl Default for CoverageKnobs {
    fn default() -> Self {
        Self {
            surveys: 200,
            replicates: 500,
            strata: 2,
            psus_per_stratum_sampled: 8,
            respondents_per_psu: 10,
            psu_size: 25,
            probe_groups: 4,
            hidden_sample_size: 50,
            level: 0.95,
        }
    }
}

struct ClusterFrame {
    /// stratum -> PSUs -> member nodes.
    strata: Vec<Vec<Vec<u32>>>,
}

/// Clusters frame members into PSUs by hidden membership and degree,
/// mimicking the geographic concentration of a hidden population.
fn build_clusters(graph: &PopulationGraph, knobs: &CoverageKnobs) -> ClusterFrame {
    let mut frame = graph.frame_nodes();
    frame.sort_by_key(|&i| {
        let i = i as usize;
        (!graph.in_hidden(i), graph.degree(i), i)
    });
    let psus: Vec<Vec<u32>> = frame
        .chunks(knobs.psu_size)
        .map(|c| c.to_vec())
        .collect();
    let per_stratum = psus.len().div_ceil(knobs.strata);
    let strata: Vec<Vec<Vec<u32>>> = psus
        .chunks(per_stratum)
        .map(|c| c.to_vec())
        .filter(|s| !s.is_empty())
        .collect();
    ClusterFrame { strata }
}

/// Coverage of the true hidden-population size by three interval
/// procedures around the generalized estimator: the historical
/// model-based interval, the two-sample simple bootstrap, and the
/// two-sample bootstrap with the rescaled resampler on the frame side.
pub fn coverage_experiment(
    cfg: &SimConfig,
    knobs: &CoverageKnobs,
    master_seed: u64,
) -> Result<CoverageReport, HarnessError> {
    let pristine = generate_population(cfg)?;
    let graph = apply_transmission_error(&pristine, cfg.tau, derive_seed(master_seed, &[1]))?;
    let probes = assign_probe_groups(
        &graph,
        &ProbeSpec::partition_of_frame(knobs.probe_groups),
        derive_seed(master_seed, &[2]),
    )?;
    let clusters = build_clusters(&graph, knobs);
    for (h, psus) in clusters.strata.iter().enumerate() {
        if psus.len() < knobs.psus_per_stratum_sampled {
            return Err(HarnessError::ProbeAssignment {
                reason: format!("stratum {h} has too few PSUs for the design"),
            });
        }
    }
    let registry = probes.registry.clone();
    let truth = graph.hidden_size() as f64;

    let hits: Vec<[u64; 3]> = exec::map_indexed(knobs.surveys, |svy| {
        let svy64 = svy as u64;
        let mut rng = stream(master_seed, &[3, svy64]);
        // Stratified two-stage frame draw: SRS of PSUs, SRS of
        // respondents within each sampled PSU.
        let mut rows: Vec<FrameRow> = Vec::new();
        for (h, psus) in clusters.strata.iter().enumerate() {
            let mut order: Vec<usize> = (0..psus.len()).collect();
            order.shuffle(&mut rng);
            for &p in order.iter().take(knobs.psus_per_stratum_sampled) {
                let mut members = psus[p].clone();
                members.shuffle(&mut rng);
                let take = knobs.respondents_per_psu.min(members.len());
                let weight = (psus.len() as f64 / knobs.psus_per_stratum_sampled as f64)
                    * (members.len() as f64 / take as f64);
                for &node in members.iter().take(take) {
                    let ties = probe_tie_counts(&graph, &probes, node as usize);
                    rows.push(FrameRow {
                        id: format!("f{node}"),
                        weight,
                        stratum: format!("s{h}"),
                        psu: format!("s{h}p{p}"),
                        y_hidden: graph.out_reports(node as usize) as u64,
                        y_probe: probes.group_ids().iter().cloned().zip(ties).collect(),
                        probe_membership: None,
                    });
                }
            }
        }
        let frame_survey = FrameSurvey::new(rows).expect("synthesized rows are valid");
        let hidden_sample = relative_sample_from_hidden(
            &graph,
            knobs.hidden_sample_size,
            0.0,
            derive_seed(master_seed, &[4, svy64]),
        )
        .expect("hidden sample fits");

        // Flat arrays for fast replicate evaluation.
        let frame_y: Vec<f64> = frame_survey
            .rows()
            .iter()
            .map(|r| r.y_hidden as f64)
            .collect();
        let frame_w: Vec<f64> = frame_survey.rows().iter().map(|r| r.weight).collect();
        let hidden_v: Vec<f64> = hidden_sample
            .member_ids
            .iter()
            .map(|&node| {
                visibility_counts_on_frame(&graph, &probes, node)
                    .iter()
                    .sum::<u64>() as f64
            })
            .collect();
        let scale = registry.frame_size as f64 / registry.total_on_frame() as f64;
        let estimate = |yw: f64, vis: &[u32]| -> f64 {
            // Hájek mean over a hidden index multiset (unit weights).
            let v_mean = vis.iter().map(|&i| hidden_v[i as usize]).sum::<f64>()
                / vis.len() as f64;
            yw / (scale * v_mean)
        };
        let identity: Vec<u32> = (0..hidden_v.len() as u32).collect();
        let y_total: f64 = frame_y.iter().zip(&frame_w).map(|(y, w)| y * w).sum();
        let point = estimate(y_total, &identity);

        let mut counts = [0u64; 3];
        // Historical model-based interval around the point estimate.
        let degree_scale = registry.universe_size as f64 / registry.total_size() as f64;
        let degree_sum: f64 = frame_survey
            .rows()
            .iter()
            .map(|r| r.y_probe.values().sum::<u64>() as f64 * degree_scale)
            .sum();
        if let Ok(iv) = killworth_interval(point, degree_sum, registry.universe_size, knobs.level)
        {
            if iv.low <= truth && truth <= iv.high {
                counts[0] += 1;
            }
        }

        // Two-sample bootstrap replicates, simple and rescaled frame side.
        let n_rows = frame_y.len();
        let mut simple_reps = Vec::with_capacity(knobs.replicates);
        let mut rescaled_reps = Vec::with_capacity(knobs.replicates);
        for b in 0..knobs.replicates as u64 {
            let hidden_idx = simple_bootstrap_replicate(
                hidden_v.len(),
                derive_seed(master_seed, &[5, svy64]),
                b,
            );
            let frame_idx =
                simple_bootstrap_replicate(n_rows, derive_seed(master_seed, &[6, svy64]), b);
            let y_simple: f64 = frame_idx
                .iter()
                .map(|&i| frame_y[i as usize] * frame_w[i as usize])
                .sum();
            simple_reps.push(estimate(y_simple, &hidden_idx));

            let rw = rescaled_bootstrap_replicate(
                &frame_survey,
                derive_seed(master_seed, &[7, svy64]),
                b,
            )
            .expect("design has n_h >= 2");
            let y_rescaled: f64 = frame_y.iter().zip(&rw).map(|(y, w)| y * w).sum();
            rescaled_reps.push(estimate(y_rescaled, &hidden_idx));
        }
        for (method, reps) in [(1usize, &simple_reps), (2, &rescaled_reps)] {
            if let Ok((low, high)) = percentile_interval(reps, knobs.level) {
                if low <= truth && truth <= high {
                    counts[method] += 1;
                }
            }
        }
        counts
    });

    let trials = knobs.surveys;
    let mut totals = [0u64; 3];
    for h in hits {
        for (t, v) in totals.iter_mut().zip(h) {
            *t += v;
        }
    }
    Ok(CoverageReport {
        killworth: totals[0] as f64 / trials as f64,
        simple: totals[1] as f64 / trials as f64,
        rescaled: totals[2] as f64 / trials as f64,
        trials,
    })
}
