//! Serialized form of a case, with the optional fields that the loader fills in.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    rate_to_probability, Branch, BranchId, Bus, BusId, Generator, GridCase,
    DEFAULT_OUTAGE_RATE_HOURS, RATE_B_FACTOR, RATE_C_FACTOR,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusRecord {
    pub id: BusId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_km: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_km: Option<f64>,
    #[serde(default)]
    pub load_mw: f64,
    #[serde(default)]
    pub is_slack_candidate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchRecord {
    pub id: BranchId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub reactance_pu: f64,
    pub rate_a_mw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_b_mw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_c_mw: Option<f64>,
    #[serde(default = "default_true")]
    pub in_service: bool,
}

fn default_true() -> bool {
    true
}

/// Either one probability shared by every branch or one per branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutageProbabilitySpec {
    Uniform(f64),
    PerBranch(Vec<f64>),
}

/// Native JSON case layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseDocument {
    pub base_mva: f64,
    pub buses: Vec<BusRecord>,
    pub branches: Vec<BranchRecord>,
    pub generators: Vec<Generator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outage_probability: Option<OutageProbabilitySpec>,
}

/// Fill absent `rate_b`/`rate_c` with 110% / 150% of `rate_a`. Present values
/// are left untouched, so the operation is idempotent.
pub fn synthesize_ratings(branches: &mut [BranchRecord]) {
    for br in branches {
        if br.rate_b_mw.is_none() {
            br.rate_b_mw = Some(RATE_B_FACTOR * br.rate_a_mw);
        }
        if br.rate_c_mw.is_none() {
            br.rate_c_mw = Some(RATE_C_FACTOR * br.rate_a_mw);
        }
    }
}

impl CaseDocument {
    pub fn apply_coordinates(&mut self, coords: &HashMap<BusId, (f64, f64)>) -> Result<()> {
        for bus in &mut self.buses {
            if let Some(&(x, y)) = coords.get(&bus.id) {
                bus.x_km = Some(x);
                bus.y_km = Some(y);
            }
        }
        Ok(())
    }

    /// Synthesize missing ratings, resolve probabilities and validate.
    pub fn into_case(mut self) -> Result<GridCase> {
        synthesize_ratings(&mut self.branches);
        let buses = self
            .buses
            .iter()
            .map(|b| match (b.x_km, b.y_km) {
                (Some(x_km), Some(y_km)) => Ok(Bus {
                    id: b.id,
                    x_km,
                    y_km,
                    load_mw: b.load_mw,
                    is_slack_candidate: b.is_slack_candidate,
                }),
                _ => Err(Error::Validation(format!(
                    "bus {} has no coordinates; supply a coordinate file",
                    b.id
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let branches: Vec<Branch> = self
            .branches
            .iter()
            .map(|b| Branch {
                id: b.id,
                from_bus: b.from_bus,
                to_bus: b.to_bus,
                reactance_pu: b.reactance_pu,
                rate_a_mw: b.rate_a_mw,
                rate_b_mw: b.rate_b_mw.unwrap_or(RATE_B_FACTOR * b.rate_a_mw),
                rate_c_mw: b.rate_c_mw.unwrap_or(RATE_C_FACTOR * b.rate_a_mw),
                in_service: b.in_service,
            })
            .collect();
        let probabilities = match self.outage_probability {
            None => vec![rate_to_probability(DEFAULT_OUTAGE_RATE_HOURS)?; branches.len()],
            Some(OutageProbabilitySpec::Uniform(p)) => vec![p; branches.len()],
            Some(OutageProbabilitySpec::PerBranch(v)) => v,
        };
        GridCase::new(self.base_mva, buses, branches, self.generators, probabilities)
    }
}

impl TryFrom<CaseDocument> for GridCase {
    type Error = Error;

    fn try_from(doc: CaseDocument) -> Result<Self> {
        doc.into_case()
    }
}

impl From<GridCase> for CaseDocument {
    fn from(case: GridCase) -> Self {
        let probs = case.outage_probabilities();
        let outage_probability = match probs.first() {
            Some(&p0) if probs.iter().all(|&p| p == p0) => Some(OutageProbabilitySpec::Uniform(p0)),
            Some(_) => Some(OutageProbabilitySpec::PerBranch(probs.to_vec())),
            None => None,
        };
        CaseDocument {
            base_mva: case.base_mva(),
            buses: case
                .buses()
                .iter()
                .map(|b| BusRecord {
                    id: b.id,
                    x_km: Some(b.x_km),
                    y_km: Some(b.y_km),
                    load_mw: b.load_mw,
                    is_slack_candidate: b.is_slack_candidate,
                })
                .collect(),
            branches: case
                .branches()
                .iter()
                .map(|b| BranchRecord {
                    id: b.id,
                    from_bus: b.from_bus,
                    to_bus: b.to_bus,
                    reactance_pu: b.reactance_pu,
                    rate_a_mw: b.rate_a_mw,
                    rate_b_mw: Some(b.rate_b_mw),
                    rate_c_mw: Some(b.rate_c_mw),
                    in_service: b.in_service,
                })
                .collect(),
            generators: case.generators().to_vec(),
            outage_probability,
        }
    }
}

#[derive(Debug, Deserialize)]
struct CoordinateRow {
    bus_id: BusId,
    x_km: f64,
    y_km: f64,
}

/// Read a `bus_id,x_km,y_km` coordinate CSV.
pub fn load_coordinates(path: &Path) -> Result<HashMap<BusId, (f64, f64)>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut out = HashMap::new();
    for row in reader.deserialize() {
        let row: CoordinateRow = row.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        out.insert(row.bus_id, (row.x_km, row.y_km));
    }
    Ok(out)
}

#[derive(Debug, Deserialize)]
struct ProbabilityRow {
    branch_id: BranchId,
    probability: f64,
}

/// Read a `branch_id,probability` CSV and return a per-branch probability
/// vector for `case`; branches not listed keep their current probability.
pub fn load_probabilities(path: &Path, case: &GridCase) -> Result<Vec<f64>> {
    let mut probs = case.outage_probabilities().to_vec();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    for row in reader.deserialize() {
        let row: ProbabilityRow = row.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        let i = case
            .branch_index(row.branch_id)
            .ok_or_else(|| Error::Validation(format!("unknown branch id {}", row.branch_id)))?;
        probs[i] = row.probability;
    }
    Ok(probs)
}
