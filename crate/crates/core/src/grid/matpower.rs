//! Importer for MATPOWER-style `.m` case files.
//!
//! Only the columns needed for DC cascade analysis are mapped:
//!
//! * `mpc.bus`: `BUS_I`, `BUS_TYPE`, `PD`
//! * `mpc.gen`: `GEN_BUS`, `PG`, `GEN_STATUS`, `PMAX`, `PMIN`
//! * `mpc.branch`: `F_BUS`, `T_BUS`, `BR_X`, `RATE_A`, `RATE_B`, `RATE_C`, `BR_STATUS`
//!
//! Remaining columns are ignored (with a warning). Ratings of zero mean
//! "unspecified" in MATPOWER; zero `RATE_B`/`RATE_C` are synthesized from
//! `RATE_A` and a zero `RATE_A` is a validation error. Coordinates are not
//! part of the format and must come from a coordinate file.

use super::{BranchRecord, BusRecord, CaseDocument, Generator};
use crate::error::{Error, Result};

const BUS_COLS: usize = 3;
const GEN_COLS: usize = 10;
const BRANCH_COLS: usize = 11;

pub fn parse(text: &str) -> Result<CaseDocument> {
    let stripped: String = text
        .lines()
        .map(|l| match l.find('%') {
            Some(i) => &l[..i],
            None => l,
        })
        .collect::<Vec<_>>()
        .join("\n");

    let base_mva = scalar(&stripped, "baseMVA")?;
    let bus = matrix(&stripped, "bus", BUS_COLS)?;
    let gen = matrix(&stripped, "gen", GEN_COLS)?;
    let branch = matrix(&stripped, "branch", BRANCH_COLS)?;

    let buses = bus
        .iter()
        .map(|r| BusRecord {
            id: r[0] as i64,
            x_km: None,
            y_km: None,
            load_mw: r[2].max(0.0),
            is_slack_candidate: matches!(r[1] as i64, 2 | 3),
        })
        .collect();

    let mut generators = Vec::new();
    for (i, r) in gen.iter().enumerate() {
        if r[7] <= 0.0 {
            log::warn!("generator row {} is out of service; skipped", i + 1);
            continue;
        }
        let p_min = r[9].max(0.0);
        let p_max = r[8].max(p_min);
        generators.push(Generator {
            id: i as i64 + 1,
            bus: r[0] as i64,
            p_mw: r[1].clamp(p_min, p_max),
            p_max_mw: p_max,
            p_min_mw: p_min,
        });
    }

    let optional = |v: f64| if v > 0.0 { Some(v) } else { None };
    let branches = branch
        .iter()
        .enumerate()
        .map(|(i, r)| BranchRecord {
            id: i as i64 + 1,
            from_bus: r[0] as i64,
            to_bus: r[1] as i64,
            reactance_pu: r[3],
            rate_a_mw: r[5],
            rate_b_mw: optional(r[6]),
            rate_c_mw: optional(r[7]),
            in_service: r[10] > 0.0,
        })
        .collect();

    Ok(CaseDocument {
        base_mva,
        buses,
        branches,
        generators,
        outage_probability: None,
    })
}

fn scalar(text: &str, name: &str) -> Result<f64> {
    let key = format!("mpc.{name}");
    let start = text
        .find(&key)
        .ok_or_else(|| Error::Parse(format!("missing {key}")))?;
    let rest = &text[start + key.len()..];
    let eq = rest
        .find('=')
        .ok_or_else(|| Error::Parse(format!("malformed {key}")))?;
    let end = rest[eq..]
        .find(';')
        .ok_or_else(|| Error::Parse(format!("unterminated {key}")))?;
    rest[eq + 1..eq + end]
        .trim()
        .parse()
        .map_err(|e| Error::Parse(format!("{key}: {e}")))
}

fn matrix(text: &str, name: &str, min_cols: usize) -> Result<Vec<Vec<f64>>> {
    let key = format!("mpc.{name}");
    let start = find_assignment(text, &key).ok_or_else(|| Error::Parse(format!("missing {key}")))?;
    let rest = &text[start..];
    let open = rest
        .find('[')
        .ok_or_else(|| Error::Parse(format!("{key}: missing '['")))?;
    let close = rest
        .find(']')
        .ok_or_else(|| Error::Parse(format!("{key}: missing ']'")))?;
    let body = &rest[open + 1..close];
    let mut rows = Vec::new();
    let mut warned = false;
    for (line_no, row) in body.split([';', '\n']).enumerate() {
        let fields: Vec<&str> = row
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .collect();
        if fields.is_empty() {
            continue;
        }
        let values = fields
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{key} row {}: '{f}': {e}", line_no + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() < min_cols {
            return Err(Error::Parse(format!(
                "{key} row {}: expected at least {min_cols} columns, got {}",
                line_no + 1,
                values.len()
            )));
        }
        if values.len() > min_cols && !warned {
            log::warn!("{key}: ignoring {} unmapped columns", values.len() - min_cols);
            warned = true;
        }
        rows.push(values);
    }
    Ok(rows)
}

/// Position of `key` followed by `=`, skipping longer names sharing the prefix
/// (`mpc.gen` vs `mpc.gencost`).
fn find_assignment(text: &str, key: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(pos) = text[from..].find(key) {
        let at = from + pos + key.len();
        let tail = text[at..].trim_start();
        if tail.starts_with('=') {
            return Some(at);
        }
        from = at;
    }
    None
}
