//! CSV ingestion and serialization for survey data.
//!
//! Frame survey schema (one column per probe group, prefix `y_`; optional
//! self-reported memberships with prefix `member_`):
//!
//! ```text
//! id,weight,stratum,psu,y_hidden,y_<gid>...,member_<gid>...
//! ```
//!
//! Hidden survey schema (`y_` columns are ties to each group on the frame,
//! `v_` columns the reported visibility to that group):
//!
//! ```text
//! id,rel_weight,group_flag,y_<gid>...,v_<gid>...
//! ```
//!
//! Parsing is strict: unexpected columns, unknown group ids, non-integer
//! counts, and nonpositive weights are rejected with row/column
//! diagnostics. Rows missing any probe response are rejected rather than
//! imputed. Parsing is order-preserving.

use super::*;
use std::io::Read;

fn parse_count(row: &str, column: &str, value: &str) -> Result<u64, DataError> {
    value
        .trim()
        .parse::<u64>()
        .map_err(|_| DataError::NonIntegerCount {
            row: row.to_string(),
            column: column.to_string(),
            value: value.to_string(),
        })
}

fn parse_weight(row: &str, column: &str, value: &str) -> Result<f64, DataError> {
    let w: f64 = value
        .trim()
        .parse()
        .map_err(|_| DataError::InvalidField {
            row: row.to_string(),
            column: column.to_string(),
            value: value.to_string(),
        })?;
    if !(w.is_finite() && w > 0.0) {
        return Err(DataError::NonpositiveWeight {
            row: row.to_string(),
        });
    }
    Ok(w)
}

struct Header {
    fixed: Vec<usize>,
    /// (column index, group id) pairs per prefix, in header order.
    y_cols: Vec<(usize, String)>,
    v_cols: Vec<(usize, String)>,
    member_cols: Vec<(usize, String)>,
}

fn scan_header(
    headers: &csv::StringRecord,
    fixed_names: &[&str],
    registry: &KnownPopulationRegistry,
    allow_v: bool,
    allow_member: bool,
) -> Result<Header, DataError> {
    let mut fixed = vec![usize::MAX; fixed_names.len()];
    let mut y_cols = Vec::new();
    let mut v_cols = Vec::new();
    let mut member_cols = Vec::new();
    for (idx, name) in headers.iter().enumerate() {
        let name = name.trim();
        if let Some(pos) = fixed_names.iter().position(|f| *f == name) {
            fixed[pos] = idx;
        } else if let Some(gid) = name.strip_prefix("y_") {
            if registry.group(gid).is_none() {
                return Err(DataError::UnknownGroup {
                    group: gid.to_string(),
                    column: name.to_string(),
                });
            }
            y_cols.push((idx, gid.to_string()));
        } else if allow_v && name.strip_prefix("v_").is_some() {
            let gid = name.strip_prefix("v_").unwrap();
            if registry.group(gid).is_none() {
                return Err(DataError::UnknownGroup {
                    group: gid.to_string(),
                    column: name.to_string(),
                });
            }
            v_cols.push((idx, gid.to_string()));
        } else if allow_member && name.strip_prefix("member_").is_some() {
            let gid = name.strip_prefix("member_").unwrap();
            if registry.group(gid).is_none() {
                return Err(DataError::UnknownGroup {
                    group: gid.to_string(),
                    column: name.to_string(),
                });
            }
            member_cols.push((idx, gid.to_string()));
        } else {
            return Err(DataError::InvalidField {
                row: "<header>".to_string(),
                column: name.to_string(),
                value: "unexpected column".to_string(),
            });
        }
    }
    for (pos, name) in fixed_names.iter().enumerate() {
        if fixed[pos] == usize::MAX {
            return Err(DataError::MissingColumn {
                column: (*name).to_string(),
            });
        }
    }
    // Every registry group must have a response column.
    for g in &reg_ids(registry) {
        if !y_cols.iter().any(|(_, gid)| gid == g) {
            return Err(DataError::MissingColumn {
                column: format!("y_{g}"),
            });
        }
        if allow_v && !v_cols.iter().any(|(_, gid)| gid == g) {
            return Err(DataError::MissingColumn {
                column: format!("v_{g}"),
            });
        }
    }
    Ok(Header {
        fixed,
        y_cols,
        v_cols,
        member_cols,
    })
}

fn reg_ids(registry: &KnownPopulationRegistry) -> Vec<String> {
    registry.groups.iter().map(|g| g.id.clone()).collect()
}

fn field<'a>(record: &'a csv::StringRecord, idx: usize, row: &str, col: &str) -> Result<&'a str, DataError> {
    record.get(idx).ok_or_else(|| DataError::MissingColumn {
        column: format!("{col} (row `{row}`)"),
    })
}

/// Parses a frame survey from any reader. `top_code` caps every reported
/// count at the given value.
pub fn read_frame_survey<R: Read>(
    reader: R,
    registry: &KnownPopulationRegistry,
    top_code: Option<u64>,
) -> Result<FrameSurvey, DataError> {
    let mut csv_reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let header = scan_header(
        &headers,
        &["id", "weight", "stratum", "psu", "y_hidden"],
        registry,
        false,
        true,
    )?;
    let cap = |v: u64| top_code.map_or(v, |t| v.min(t));

    let mut rows = Vec::new();
    for record in csv_reader.records() {
        let record = record?;
        let id = field(&record, header.fixed[0], "?", "id")?.to_string();
        let weight = parse_weight(&id, "weight", field(&record, header.fixed[1], &id, "weight")?)?;
        let stratum = field(&record, header.fixed[2], &id, "stratum")?.to_string();
        let psu = field(&record, header.fixed[3], &id, "psu")?.to_string();
        let y_hidden = cap(parse_count(
            &id,
            "y_hidden",
            field(&record, header.fixed[4], &id, "y_hidden")?,
        )?);
        let mut y_probe = BTreeMap::new();
        for (idx, gid) in &header.y_cols {
            let v = parse_count(&id, &format!("y_{gid}"), field(&record, *idx, &id, gid)?)?;
            y_probe.insert(gid.clone(), cap(v));
        }
        let probe_membership = if header.member_cols.is_empty() {
            None
        } else {
            let mut members = BTreeMap::new();
            for (idx, gid) in &header.member_cols {
                let raw = field(&record, *idx, &id, gid)?;
                let flag = match raw.trim() {
                    "1" | "true" => true,
                    "0" | "false" => false,
                    other => {
                        return Err(DataError::InvalidField {
                            row: id.clone(),
                            column: format!("member_{gid}"),
                            value: other.to_string(),
                        })
                    }
                };
                members.insert(gid.clone(), flag);
            }
            Some(members)
        };
        rows.push(FrameRow {
            id,
            weight,
            stratum,
            psu,
            y_hidden,
            y_probe,
            probe_membership,
        });
    }
    FrameSurvey::new(rows)
}

/// Parses a hidden-population survey from any reader.
pub fn read_hidden_survey<R: Read>(
    reader: R,
    registry: &KnownPopulationRegistry,
) -> Result<HiddenSurvey, DataError> {
    let mut csv_reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = csv_reader.headers()?.clone();
    let header = scan_header(
        &headers,
        &["id", "rel_weight", "group_flag"],
        registry,
        true,
        false,
    )?;

    let mut rows = Vec::new();
    for record in csv_reader.records() {
        let record = record?;
        let id = field(&record, header.fixed[0], "?", "id")?.to_string();
        let rel_weight = parse_weight(
            &id,
            "rel_weight",
            field(&record, header.fixed[1], &id, "rel_weight")?,
        )?;
        let flag_raw = field(&record, header.fixed[2], &id, "group_flag")?;
        let group_flag = match flag_raw.trim() {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            other => {
                return Err(DataError::InvalidField {
                    row: id.clone(),
                    column: "group_flag".to_string(),
                    value: other.to_string(),
                })
            }
        };
        let mut y_probe_on_frame = BTreeMap::new();
        for (idx, gid) in &header.y_cols {
            let v = parse_count(&id, &format!("y_{gid}"), field(&record, *idx, &id, gid)?)?;
            y_probe_on_frame.insert(gid.clone(), v);
        }
        let mut vis_probe_on_frame = BTreeMap::new();
        for (idx, gid) in &header.v_cols {
            let v = parse_count(&id, &format!("v_{gid}"), field(&record, *idx, &id, gid)?)?;
            vis_probe_on_frame.insert(gid.clone(), v);
        }
        rows.push(HiddenRow {
            id,
            rel_weight,
            y_probe_on_frame,
            vis_probe_on_frame,
            group_flag,
        });
    }
    HiddenSurvey::new(rows, false)
}

/// Canonical CSV serialization of a frame survey (round-trips through
/// [`read_frame_survey`]).
pub fn frame_survey_to_csv(survey: &FrameSurvey) -> String {
    let gids: Vec<&str> = survey.probe_group_ids();
    let member_gids: Vec<&str> = survey.rows()[0]
        .probe_membership
        .as_ref()
        .map(|m| m.keys().map(String::as_str).collect())
        .unwrap_or_default();
    let mut out = String::from("id,weight,stratum,psu,y_hidden");
    for g in &gids {
        let _ = write!(out, ",y_{g}");
    }
    for g in &member_gids {
        let _ = write!(out, ",member_{g}");
    }
    out.push('\n');
    for row in survey.rows() {
        let _ = write!(
            out,
            "{},{},{},{},{}",
            row.id, row.weight, row.stratum, row.psu, row.y_hidden
        );
        for g in &gids {
            let _ = write!(out, ",{}", row.y_probe[*g]);
        }
        if let Some(members) = &row.probe_membership {
            for g in &member_gids {
                let _ = write!(out, ",{}", u8::from(members[*g]));
            }
        }
        out.push('\n');
    }
    out
}

/// Canonical CSV serialization of a hidden survey.
pub fn hidden_survey_to_csv(survey: &HiddenSurvey) -> String {
    let gids: Vec<&str> = survey.probe_group_ids();
    let mut out = String::from("id,rel_weight,group_flag");
    for g in &gids {
        let _ = write!(out, ",y_{g}");
    }
    for g in &gids {
        let _ = write!(out, ",v_{g}");
    }
    out.push('\n');
    for row in survey.rows() {
        let _ = write!(out, "{},{}", row.id, row.rel_weight);
        match row.group_flag {
            Some(f) => {
                let _ = write!(out, ",{f}");
            }
            None => out.push(','),
        }
        for g in &gids {
            let _ = write!(out, ",{}", row.y_probe_on_frame[*g]);
        }
        for g in &gids {
            let _ = write!(out, ",{}", row.vis_probe_on_frame[*g]);
        }
        out.push('\n');
    }
    out
}

/// Writes survey CSV files next to each other (used by the simulator).
pub fn write_frame_survey(survey: &FrameSurvey, path: impl AsRef<Path>) -> Result<(), DataError> {
    std::fs::write(path, frame_survey_to_csv(survey))?;
    Ok(())
}

pub fn write_hidden_survey(
    survey: &HiddenSurvey,
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    std::fs::write(path, hidden_survey_to_csv(survey))?;
    Ok(())
}

pub fn write_registry(
    registry: &KnownPopulationRegistry,
    path: impl AsRef<Path>,
) -> Result<(), DataError> {
    registry.validate()?;
    std::fs::write(path, serde_json::to_string_pretty(registry)?)?;
    Ok(())
}
