//! Survey sampling designs over synthetic populations and bootstrap
//! resampling engines over observed surveys.
//!
//! Every resampler is deterministic given `(seed, B)`: replicate `b`
//! draws from its own random stream, so replicates can be generated
//! independently, lazily, and in parallel without changing the result.

use crate::data::{FrameSurvey, HiddenSurvey};
use crate::netsim::PopulationGraph;
use crate::rng::{domain, stream};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("requested sample size {requested} exceeds population size {available}")]
    SampleTooLarge { requested: usize, available: usize },
    #[error("isolated member {id} has zero selection weight under nonzero exponent")]
    IsolatedMember { id: usize },
    #[error("stratum `{stratum}` has a single sampled PSU; rescaled bootstrap needs n_h >= 2")]
    SingletonStratum { stratum: String },
    #[error("replicate sequences have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
}

/// A drawn sample: member ids plus design weights. When the inclusion
/// probabilities are known only up to a constant, `relative_only` is set
/// and the weights are usable in ratio (Hájek) estimators only.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawnSample {
    pub member_ids: Vec<usize>,
    pub inclusion_weights: Vec<f64>,
    pub relative_only: bool,
}

/// Simple random sample without replacement from the frame population;
/// every weight is |F|/n.
pub fn srs_from_frame(
    graph: &PopulationGraph,
    n: usize,
    seed: u64,
) -> Result<DrawnSample, SampleError> {
    let mut frame = graph.frame_nodes();
    if n == 0 {
        return Err(SampleError::Empty);
    }
    if n > frame.len() {
        return Err(SampleError::SampleTooLarge {
            requested: n,
            available: frame.len(),
        });
    }
    let frame_size = frame.len();
    let mut rng = stream(seed, &[domain::FRAME_SAMPLE]);
    let (chosen, _) = frame.partial_shuffle(&mut rng, n);
    let weight = frame_size as f64 / n as f64;
    Ok(DrawnSample {
        member_ids: chosen.iter().map(|&i| i as usize).collect(),
        inclusion_weights: vec![weight; n],
        relative_only: false,
    })
}

/// Successive sampling without replacement from the hidden population
/// with selection weight `degree^exponent`. The returned weights are the
/// reciprocals of the selection weights, known only up to a constant, so
/// `relative_only` is set. `exponent = 0` gives a uniform sample.
pub fn relative_sample_from_hidden(
    graph: &PopulationGraph,
    n: usize,
    exponent: f64,
    seed: u64,
) -> Result<DrawnSample, SampleError> {
    let hidden = graph.hidden_nodes();
    if n == 0 {
        return Err(SampleError::Empty);
    }
    if n > hidden.len() {
        return Err(SampleError::SampleTooLarge {
            requested: n,
            available: hidden.len(),
        });
    }
    let mut pool: Vec<(usize, f64)> = Vec::with_capacity(hidden.len());
    for &i in &hidden {
        let d = graph.degree(i as usize) as f64;
        if d == 0.0 && exponent != 0.0 {
            return Err(SampleError::IsolatedMember { id: i as usize });
        }
        let w = if exponent == 0.0 { 1.0 } else { d.powf(exponent) };
        pool.push((i as usize, w));
    }
    let mut rng = stream(seed, &[domain::HIDDEN_SAMPLE]);
    let mut member_ids = Vec::with_capacity(n);
    let mut inclusion_weights = Vec::with_capacity(n);
    let mut total: f64 = pool.iter().map(|(_, w)| w).sum();
    for _ in 0..n {
        let mut target = rng.random::<f64>() * total;
        let mut pick = pool.len() - 1;
        for (idx, (_, w)) in pool.iter().enumerate() {
            target -= w;
            if target < 0.0 {
                pick = idx;
                break;
            }
        }
        let (id, w) = pool.swap_remove(pick);
        total -= w;
        member_ids.push(id);
        inclusion_weights.push(1.0 / w);
    }
    Ok(DrawnSample {
        member_ids,
        inclusion_weights,
        relative_only: true,
    })
}

/// Index multiset for replicate `b` of an i.i.d. with-replacement
/// bootstrap over `n` rows.
pub fn simple_bootstrap_replicate(n: usize, seed: u64, b: u64) -> Vec<u32> {
    let mut rng = stream(seed, &[domain::SIMPLE_BOOT, b]);
    (0..n).map(|_| rng.random_range(0..n as u32)).collect()
}

/// All `B` simple-bootstrap index multisets.
pub fn simple_bootstrap(n: usize, b: usize, seed: u64) -> Vec<Vec<u32>> {
    assert!(n >= 1 && b >= 1);
    (0..b).map(|i| simple_bootstrap_replicate(n, seed, i as u64)).collect()
}

/// PSU structure of a stratified survey, precomputed for resampling.
struct PsuLayout {
    /// Per stratum: (stratum id, PSU row lists).
    strata: Vec<(String, Vec<Vec<usize>>)>,
}

fn psu_layout(survey: &FrameSurvey) -> PsuLayout {
    let mut strata: BTreeMap<&str, BTreeMap<&str, Vec<usize>>> = BTreeMap::new();
    for (idx, row) in survey.rows().iter().enumerate() {
        strata
            .entry(row.stratum.as_str())
            .or_default()
            .entry(row.psu.as_str())
            .or_default()
            .push(idx);
    }
    PsuLayout {
        strata: strata
            .into_iter()
            .map(|(sid, psus)| (sid.to_string(), psus.into_values().collect()))
            .collect(),
    }
}

/// Replicate weight vector `b` of the rescaled bootstrap: per stratum `h`,
/// draw `n_h - 1` PSUs with replacement; the replicate weight of
/// respondent j in PSU i is `w_ij * n_h/(n_h - 1) * r_i`, where `r_i` is
/// the PSU's selection multiplicity. Respondents in unselected PSUs get
/// weight zero.
pub fn rescaled_bootstrap_replicate(
    survey: &FrameSurvey,
    seed: u64,
    b: u64,
) -> Result<Vec<f64>, SampleError> {
    let layout = psu_layout(survey);
    for (sid, psus) in &layout.strata {
        if psus.len() < 2 {
            return Err(SampleError::SingletonStratum {
                stratum: sid.clone(),
            });
        }
    }
    let mut weights = vec![0.0; survey.rows().len()];
    let mut rng = stream(seed, &[domain::RESCALED_BOOT, b]);
    for (_, psus) in &layout.strata {
        let n_h = psus.len();
        let mut multiplicity = vec![0u32; n_h];
        for _ in 0..(n_h - 1) {
            multiplicity[rng.random_range(0..n_h)] += 1;
        }
        let scale = n_h as f64 / (n_h - 1) as f64;
        for (psu_rows, &r) in psus.iter().zip(&multiplicity) {
            if r == 0 {
                continue;
            }
            for &row_idx in psu_rows {
                weights[row_idx] = survey.rows()[row_idx].weight * scale * r as f64;
            }
        }
    }
    Ok(weights)
}

/// All `B` rescaled-bootstrap weight vectors.
pub fn rescaled_bootstrap(
    survey: &FrameSurvey,
    b: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>, SampleError> {
    (0..b)
        .map(|i| rescaled_bootstrap_replicate(survey, seed, i as u64))
        .collect()
}

/// Two-group assignment used by the RDS bootstrap: explicit flags when
/// every row carries one, otherwise a median split of each respondent's
/// total reported visibility (at or below the median → group 0).
pub fn rds_groups(survey: &HiddenSurvey) -> Vec<u8> {
    let rows = survey.rows();
    if rows.iter().all(|r| r.group_flag.is_some()) {
        return rows.iter().map(|r| r.group_flag.unwrap()).collect();
    }
    let mut vis: Vec<f64> = rows
        .iter()
        .map(|r| r.total_reported_visibility() as f64)
        .collect();
    let mut sorted = vis.clone();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let median = if sorted.len().is_multiple_of(2) {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    } else {
        sorted[mid]
    };
    vis.drain(..).map(|v| u8::from(v > median)).collect()
}

/// Transition proportions of the two-group chain, estimated from the
/// sample ordering. A group with no observed outgoing transition falls
/// back to the marginal group proportions.
fn rds_transition_matrix(groups: &[u8]) -> [[f64; 2]; 2] {
    let n = groups.len();
    let mut counts = [[0usize; 2]; 2];
    for w in groups.windows(2) {
        counts[w[0] as usize][w[1] as usize] += 1;
    }
    let marginal1 = groups.iter().filter(|&&g| g == 1).count() as f64 / n as f64;
    let mut matrix = [[0.0; 2]; 2];
    for g in 0..2 {
        let total = counts[g][0] + counts[g][1];
        if total == 0 {
            matrix[g] = [1.0 - marginal1, marginal1];
        } else {
            matrix[g] = [
                counts[g][0] as f64 / total as f64,
                counts[g][1] as f64 / total as f64,
            ];
        }
    }
    matrix
}

/// Index multisets for the two-group chain bootstrap used with
/// respondent-driven samples: each replicate walks a two-state Markov
/// chain of length n (seeded at the first respondent's group) and samples
/// a respondent uniformly with replacement from the current group.
/// Degenerates to the simple bootstrap when only one group is present.
pub fn rds_two_group_bootstrap(
    survey: &HiddenSurvey,
    b: usize,
    seed: u64,
) -> Result<Vec<Vec<u32>>, SampleError> {
    let groups = rds_groups(survey);
    let n = groups.len();
    let members: [Vec<u32>; 2] = {
        let mut m: [Vec<u32>; 2] = Default::default();
        for (idx, &g) in groups.iter().enumerate() {
            m[g as usize].push(idx as u32);
        }
        m
    };
    if members[0].is_empty() || members[1].is_empty() {
        return Ok(simple_bootstrap(n, b, seed));
    }
    let matrix = rds_transition_matrix(&groups);
    let start = groups[0] as usize;
    let replicates = (0..b)
        .map(|rep| {
            let mut rng = stream(seed, &[domain::RDS_BOOT, rep as u64]);
            let mut state = start;
            let mut indices = Vec::with_capacity(n);
            for step in 0..n {
                if step > 0 {
                    state = usize::from(rng.random::<f64>() < matrix[state][1]);
                }
                let pool = &members[state];
                indices.push(pool[rng.random_range(0..pool.len())]);
            }
            indices
        })
        .collect();
    Ok(replicates)
}

/// Pairs frame and hidden replicates by index, preserving independence.
pub fn two_sample_replicates<T, U>(
    frame_reps: Vec<T>,
    hidden_reps: Vec<U>,
) -> Result<Vec<(T, U)>, SampleError> {
    if frame_reps.len() != hidden_reps.len() {
        return Err(SampleError::LengthMismatch {
            left: frame_reps.len(),
            right: hidden_reps.len(),
        });
    }
    Ok(frame_reps.into_iter().zip(hidden_reps).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FrameRow, HiddenRow};
    use crate::netsim::{generate_population, SimConfig};
    use std::collections::BTreeMap;

    fn test_graph() -> PopulationGraph {
        generate_population(&SimConfig {
            n: 100,
            p_frame: 0.5,
            p_hidden: 0.2,
            p_frame_given_hidden: 1.0,
            zeta: 0.2,
            xi: 0.6,
            rho: 0.6,
            tau: 1.0,
            seed: 5,
        })
        .unwrap()
    }

    fn frame_survey(strata: &[(&str, &[&str])], rows_per_psu: usize) -> FrameSurvey {
        let mut rows = Vec::new();
        for (s, psus) in strata {
            for p in *psus {
                for k in 0..rows_per_psu {
                    rows.push(FrameRow {
                        id: format!("{s}-{p}-{k}"),
                        weight: 2.0,
                        stratum: s.to_string(),
                        psu: p.to_string(),
                        y_hidden: 1,
                        y_probe: BTreeMap::from([("a".to_string(), 1)]),
                        probe_membership: None,
                    });
                }
            }
        }
        FrameSurvey::new(rows).unwrap()
    }

    #[test]
    fn census_sample_has_unit_weights() {
        let g = test_graph();
        let n = g.frame_size();
        let s = srs_from_frame(&g, n, 1).unwrap();
        assert!(s.inclusion_weights.iter().all(|&w| w == 1.0));
        let mut ids = s.member_ids.clone();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), n);
    }

    #[test]
    fn srs_inclusion_frequencies_match_design() {
        let g = test_graph();
        let frame = g.frame_nodes();
        let n = 10;
        let draws = 20_000;
        let mut counts: BTreeMap<usize, u32> = BTreeMap::new();
        for s in 0..draws {
            for &id in &srs_from_frame(&g, n, 40_000 + s).unwrap().member_ids {
                *counts.entry(id).or_default() += 1;
            }
        }
        let p = n as f64 / frame.len() as f64;
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        for &id in &frame {
            let freq = counts.get(&(id as usize)).copied().unwrap_or(0) as f64 / draws as f64;
            assert!(
                (freq - p).abs() < 4.0 * se,
                "node {id}: {freq} vs {p} (se {se})"
            );
        }
    }

    #[test]
    fn oversized_sample_rejected() {
        let g = test_graph();
        assert!(matches!(
            srs_from_frame(&g, g.frame_size() + 1, 1),
            Err(SampleError::SampleTooLarge { .. })
        ));
    }

    #[test]
    fn uniform_relative_sample_has_equal_weights() {
        let g = test_graph();
        let s = relative_sample_from_hidden(&g, 5, 0.0, 2).unwrap();
        assert!(s.relative_only);
        assert!(s.inclusion_weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn degree_weighted_sample_prefers_high_degree() {
        let g = test_graph();
        let hidden = g.hidden_nodes();
        let draws = 4000;
        let mut freq: BTreeMap<usize, u32> = BTreeMap::new();
        for s in 0..draws {
            for &id in &relative_sample_from_hidden(&g, 3, 1.0, 60_000 + s)
                .unwrap()
                .member_ids
            {
                *freq.entry(id).or_default() += 1;
            }
        }
        // Split hidden members at the median degree; the heavier half must
        // be drawn more often in aggregate.
        let mut degs: Vec<usize> = hidden.iter().map(|&i| g.degree(i as usize)).collect();
        degs.sort_unstable();
        let med = degs[degs.len() / 2];
        let heavy: u32 = hidden
            .iter()
            .filter(|&&i| g.degree(i as usize) > med)
            .map(|&i| freq.get(&(i as usize)).copied().unwrap_or(0))
            .sum();
        let light: u32 = hidden
            .iter()
            .filter(|&&i| g.degree(i as usize) <= med)
            .map(|&i| freq.get(&(i as usize)).copied().unwrap_or(0))
            .sum();
        let heavy_count = hidden.iter().filter(|&&i| g.degree(i as usize) > med).count();
        let light_count = hidden.len() - heavy_count;
        assert!(
            heavy as f64 / heavy_count as f64 > light as f64 / light_count as f64,
            "heavy {heavy}/{heavy_count} vs light {light}/{light_count}"
        );
    }

    #[test]
    fn single_row_bootstrap_is_constant() {
        for rep in simple_bootstrap(1, 16, 3) {
            assert_eq!(rep, vec![0]);
        }
    }

    #[test]
    fn bootstrap_multiplicities_are_uniform() {
        let n = 25;
        let b = 10_000;
        let reps = simple_bootstrap(n, b, 8);
        let mut counts = vec![0u64; n];
        for rep in &reps {
            for &i in rep {
                counts[i as usize] += 1;
            }
        }
        // Multinomial oracle: mean multiplicity 1, se = sqrt((1-1/n)/B).
        let se = ((1.0 - 1.0 / n as f64) / b as f64).sqrt();
        for &c in &counts {
            let mean = c as f64 / b as f64;
            assert!((mean - 1.0).abs() < 4.0 * se, "{mean} vs 1 (se {se})");
        }
    }

    #[test]
    fn rescaled_two_psu_stratum_doubles_or_zeroes() {
        let survey = frame_survey(&[("s1", &["p1", "p2"])], 3);
        for b in 0..32 {
            let w = rescaled_bootstrap_replicate(&survey, 5, b).unwrap();
            // One PSU drawn once (weight x2), the other xe0.
            let mut seen = [false, false];
            for (row, &wi) in survey.rows().iter().zip(&w) {
                let psu = if row.psu == "p1" { 0 } else { 1 };
                if wi == 2.0 * row.weight {
                    seen[psu] = true;
                } else {
                    assert_eq!(wi, 0.0);
                }
            }
            assert!(seen[0] ^ seen[1]);
        }
    }

    #[test]
    fn rescaled_expected_weights_equal_originals() {
        // Exhaustive enumeration over PSU resamples, in integer arithmetic:
        // sum of multiplicities per PSU over all (n_h)^(n_h-1) outcomes is
        // (n_h-1) * n_h^(n_h-2), so E[w^(b)] = w exactly.
        for n_h in 2usize..=4 {
            let outcomes = n_h.pow((n_h - 1) as u32);
            let per_psu_draws = (n_h - 1) * n_h.pow((n_h.max(2) - 2) as u32);
            // scale * E[r] = n_h/(n_h-1) * per_psu_draws/outcomes == 1
            assert_eq!(n_h * per_psu_draws, (n_h - 1) * outcomes);
        }
    }

    #[test]
    fn singleton_stratum_rejected() {
        let survey = frame_survey(&[("s1", &["p1", "p2"]), ("s2", &["q1"])], 2);
        assert!(matches!(
            rescaled_bootstrap_replicate(&survey, 1, 0),
            Err(SampleError::SingletonStratum { stratum }) if stratum == "s2"
        ));
    }

    fn hidden_survey(vis: &[u64], flags: Option<&[u8]>) -> HiddenSurvey {
        let rows = vis
            .iter()
            .enumerate()
            .map(|(i, &v)| HiddenRow {
                id: format!("h{i}"),
                rel_weight: 1.0,
                y_probe_on_frame: BTreeMap::from([("a".to_string(), v + 2)]),
                vis_probe_on_frame: BTreeMap::from([("a".to_string(), v)]),
                group_flag: flags.map(|f| f[i]),
            })
            .collect();
        HiddenSurvey::new(rows, false).unwrap()
    }

    #[test]
    fn median_split_groups() {
        let survey = hidden_survey(&[1, 2, 3, 4], None);
        assert_eq!(rds_groups(&survey), vec![0, 0, 1, 1]);
    }

    #[test]
    fn one_group_degenerates_to_simple_bootstrap() {
        let survey = hidden_survey(&[1, 1, 1], Some(&[0, 0, 0]));
        let rds = rds_two_group_bootstrap(&survey, 5, 9).unwrap();
        assert_eq!(rds, simple_bootstrap(3, 5, 9));
    }

    #[test]
    fn replicate_group_frequencies_approach_stationary_distribution() {
        // Alternating groups: transition matrix is (0 1; 1 0)-ish, with
        // stationary distribution (1/2, 1/2).
        let flags = [0u8, 1, 0, 1, 0, 1, 0, 1];
        let survey = hidden_survey(&[1, 5, 1, 5, 1, 5, 1, 5], Some(&flags));
        let groups = rds_groups(&survey);
        let b = 4000;
        let reps = rds_two_group_bootstrap(&survey, b, 17).unwrap();
        let mut ones = 0u64;
        let mut total = 0u64;
        for rep in &reps {
            for &i in rep {
                ones += groups[i as usize] as u64;
                total += 1;
            }
        }
        let freq = ones as f64 / total as f64;
        assert!((freq - 0.5).abs() < 0.02, "group-1 frequency {freq}");
    }

    #[test]
    fn two_sample_pairing_checks_length() {
        assert!(two_sample_replicates(vec![1, 2], vec![3]).is_err());
        let pairs = two_sample_replicates(vec![1, 2], vec![3, 4]).unwrap();
        assert_eq!(pairs, vec![(1, 3), (2, 4)]);
    }

    #[test]
    fn resamplers_are_deterministic() {
        let g = test_graph();
        assert_eq!(
            srs_from_frame(&g, 10, 3).unwrap(),
            srs_from_frame(&g, 10, 3).unwrap()
        );
        assert_eq!(
            relative_sample_from_hidden(&g, 5, 1.0, 3).unwrap(),
            relative_sample_from_hidden(&g, 5, 1.0, 3).unwrap()
        );
        assert_eq!(simple_bootstrap(7, 4, 3), simple_bootstrap(7, 4, 3));
    }
}
