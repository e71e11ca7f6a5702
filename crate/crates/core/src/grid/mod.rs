//! Transmission-grid case model: buses, branches, generators and the
//! per-branch independent outage probabilities.
//!
//! A [`GridCase`] is validated on construction and immutable afterwards, so it
//! can be shared by reference across any number of simulation workers.

mod document;
pub mod matpower;

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use document::{
    load_coordinates, load_probabilities, synthesize_ratings, BranchRecord, BusRecord,
    CaseDocument, OutageProbabilitySpec,
};

pub type BusId = i64;
pub type BranchId = i64;
pub type GeneratorId = i64;

/// Hours in a (non-leap) year; converts outage-hours per year into a
/// per-hour outage probability.
pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Mean branch outage rate (hours per year) assigned uniformly when a case
/// carries no outage data.
pub const DEFAULT_OUTAGE_RATE_HOURS: f64 = 0.9158;

/// Emergency ratings synthesized from the normal rating when absent.
pub const RATE_B_FACTOR: f64 = 1.10;
pub const RATE_C_FACTOR: f64 = 1.50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: BusId,
    pub x_km: f64,
    pub y_km: f64,
    pub load_mw: f64,
    #[serde(default)]
    pub is_slack_candidate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: BranchId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    pub reactance_pu: f64,
    pub rate_a_mw: f64,
    pub rate_b_mw: f64,
    pub rate_c_mw: f64,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: GeneratorId,
    pub bus: BusId,
    pub p_mw: f64,
    pub p_max_mw: f64,
    pub p_min_mw: f64,
}

/// On-disk case formats understood by [`load_case`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseFormat {
    NativeJson,
    Matpower,
}

impl CaseFormat {
    /// Guess the format from a file extension (`.m` is MATPOWER, anything else JSON).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("m") => CaseFormat::Matpower,
            _ => CaseFormat::NativeJson,
        }
    }
}

/// Dense indices derived from the id-keyed records. Rebuilt on construction.
#[derive(Debug, Clone, Default)]
pub(crate) struct CaseIndex {
    pub bus_index: HashMap<BusId, usize>,
    pub branch_index: HashMap<BranchId, usize>,
    /// (from, to) bus indices per branch.
    pub ends: Vec<(usize, usize)>,
    /// Generator indices attached to each bus.
    pub gens_at_bus: Vec<Vec<usize>>,
    pub gen_bus: Vec<usize>,
}

/// Validated, immutable transmission-grid model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "CaseDocument", into = "CaseDocument")]
pub struct GridCase {
    base_mva: f64,
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    outage_probability: Vec<f64>,
    index: CaseIndex,
}

impl PartialEq for GridCase {
    fn eq(&self, other: &Self) -> bool {
        self.base_mva == other.base_mva
            && self.buses == other.buses
            && self.branches == other.branches
            && self.generators == other.generators
            && self.outage_probability == other.outage_probability
    }
}

impl GridCase {
    /// Build and validate a case. `outage_probability` must have one entry per
    /// branch, in branch order.
    pub fn new(
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
        outage_probability: Vec<f64>,
    ) -> Result<Self> {
        let index = validate(&base_mva, &buses, &branches, &generators, &outage_probability)?;
        let case = GridCase {
            base_mva,
            buses,
            branches,
            generators,
            outage_probability,
            index,
        };
        let components = case.connected_components();
        if components > 1 {
            log::warn!(
                "case is not connected with all branches in service: {components} components"
            );
        }
        Ok(case)
    }

    /// Same as [`GridCase::new`] with the default uniform outage probability.
    pub fn with_default_probability(
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
    ) -> Result<Self> {
        let p = rate_to_probability(DEFAULT_OUTAGE_RATE_HOURS)?;
        let n = branches.len();
        Self::new(base_mva, buses, branches, generators, vec![p; n])
    }

    pub fn base_mva(&self) -> f64 {
        self.base_mva
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Per-branch independent outage probability, in branch order.
    pub fn outage_probabilities(&self) -> &[f64] {
        &self.outage_probability
    }

    /// Number of branches, N.
    pub fn n_branches(&self) -> usize {
        self.branches.len()
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn total_load_mw(&self) -> f64 {
        self.buses.iter().map(|b| b.load_mw).sum()
    }

    pub fn total_generation_mw(&self) -> f64 {
        self.generators.iter().map(|g| g.p_mw).sum()
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.index.bus_index.get(&id).copied()
    }

    pub fn branch_index(&self, id: BranchId) -> Option<usize> {
        self.index.branch_index.get(&id).copied()
    }

    /// Translate branch ids to dense indices, failing on unknown ids.
    pub fn branch_indices(&self, ids: &[BranchId]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&id| {
                self.branch_index(id)
                    .ok_or_else(|| Error::Validation(format!("unknown branch id {id}")))
            })
            .collect()
    }

    pub fn branch_by_id(&self, id: BranchId) -> Option<&Branch> {
        self.branch_index(id).map(|i| &self.branches[i])
    }

    pub(crate) fn index(&self) -> &CaseIndex {
        &self.index
    }

    /// Straight-segment endpoints (km) of a branch, by dense index.
    pub fn branch_segment(&self, branch: usize) -> crate::geometry::Segment {
        let (f, t) = self.index.ends[branch];
        crate::geometry::Segment::new(
            [self.buses[f].x_km, self.buses[f].y_km],
            [self.buses[t].x_km, self.buses[t].y_km],
        )
    }

    /// Number of connected components with every in-service branch closed.
    pub fn connected_components(&self) -> usize {
        let mut dsu = DisjointSet::new(self.buses.len());
        for (i, br) in self.branches.iter().enumerate() {
            if br.in_service {
                let (f, t) = self.index.ends[i];
                dsu.union(f, t);
            }
        }
        (0..self.buses.len()).filter(|&b| dsu.find(b) == b).count()
    }

    /// Multiply every load by `factor` and redispatch generation
    /// proportionally within limits so that total generation equals total load.
    pub fn scale_load(&self, factor: f64) -> Result<GridCase> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Domain(format!("load factor must be positive, got {factor}")));
        }
        let mut buses = self.buses.clone();
        for b in &mut buses {
            b.load_mw *= factor;
        }
        let load: f64 = buses.iter().map(|b| b.load_mw).sum();
        let mut generators = self.generators.clone();
        let limits: Vec<(f64, f64, f64)> = generators
            .iter()
            .map(|g| (g.p_mw, g.p_min_mw, g.p_max_mw))
            .collect();
        let dispatch = proportional_dispatch(&limits, load).ok_or_else(|| {
            Error::InfeasibleDispatch {
                load_mw: load,
                min_mw: limits.iter().map(|l| l.1).sum(),
                max_mw: limits.iter().map(|l| l.2).sum(),
            }
        })?;
        for (g, p) in generators.iter_mut().zip(dispatch) {
            g.p_mw = p;
        }
        GridCase::new(
            self.base_mva,
            buses,
            self.branches.clone(),
            generators,
            self.outage_probability.clone(),
        )
    }

    /// Replace the per-branch outage probabilities.
    pub fn with_outage_probabilities(&self, probabilities: Vec<f64>) -> Result<GridCase> {
        GridCase::new(
            self.base_mva,
            self.buses.clone(),
            self.branches.clone(),
            self.generators.clone(),
            probabilities,
        )
    }

    /// Raise the ratings of branches loaded above `rate_a` in the intact base
    /// case so that `|flow| * margin <= rate_a`. Emergency ratings keep their
    /// ratio to `rate_a`. Used to adjust published cases that are not
    /// secure as distributed.
    pub fn relieve_base_overloads(&self, margin: f64) -> Result<GridCase> {
        if !(margin >= 1.0) {
            return Err(Error::Domain(format!("overload margin must be >= 1, got {margin}")));
        }
        let flows = crate::powerflow::base_case_flows(self)?;
        let mut branches = self.branches.clone();
        for (br, flow) in branches.iter_mut().zip(flows) {
            let needed = flow.abs() * margin;
            if br.in_service && needed > br.rate_a_mw {
                let scale = needed / br.rate_a_mw;
                br.rate_a_mw *= scale;
                br.rate_b_mw *= scale;
                br.rate_c_mw *= scale;
            }
        }
        GridCase::new(
            self.base_mva,
            self.buses.clone(),
            branches,
            self.generators.clone(),
            self.outage_probability.clone(),
        )
    }

    /// Serialize to the native JSON format.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<GridCase> {
        let doc: CaseDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.into_case()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

/// Load a case from disk. Missing emergency ratings are synthesized; missing
/// coordinates must be supplied through `coordinates` (CSV `bus_id,x_km,y_km`).
pub fn load_case(path: &Path, format: CaseFormat, coordinates: Option<&Path>) -> Result<GridCase> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut doc = match format {
        CaseFormat::NativeJson => {
            serde_json::from_str::<CaseDocument>(&text).map_err(|e| Error::Parse(e.to_string()))?
        }
        CaseFormat::Matpower => matpower::parse(&text)?,
    };
    if let Some(coord_path) = coordinates {
        let coords = load_coordinates(coord_path)?;
        doc.apply_coordinates(&coords)?;
    }
    doc.into_case()
}

/// Convert an outage rate in hours per year into a per-hour outage probability.
pub fn rate_to_probability(rate_hours_per_year: f64) -> Result<f64> {
    if !(rate_hours_per_year >= 0.0) || !rate_hours_per_year.is_finite() {
        return Err(Error::Domain(format!(
            "outage rate must be a finite non-negative number, got {rate_hours_per_year}"
        )));
    }
    let p = rate_hours_per_year / HOURS_PER_YEAR;
    if p >= 0.5 {
        return Err(Error::Domain(format!(
            "outage rate {rate_hours_per_year} h/yr gives probability {p} >= 0.5"
        )));
    }
    Ok(p)
}

/// Redispatch `(p, p_min, p_max)` units so they sum to `target`, moving each
/// unit proportionally to its headroom in the needed direction.
/// Returns `None` when the target lies outside `[Σ p_min, Σ p_max]`.
pub(crate) fn proportional_dispatch(units: &[(f64, f64, f64)], target: f64) -> Option<Vec<f64>> {
    let total: f64 = units.iter().map(|u| u.0).sum();
    let min: f64 = units.iter().map(|u| u.1).sum();
    let max: f64 = units.iter().map(|u| u.2).sum();
    let tol = 1e-9 * target.abs().max(1.0);
    if target > max + tol || target < min - tol {
        return None;
    }
    if total == target {
        return Some(units.iter().map(|u| u.0).collect());
    }
    if target > total {
        let room = max - total;
        let need = target - total;
        Some(
            units
                .iter()
                .map(|&(p, _, hi)| if room > 0.0 { p + need * (hi - p) / room } else { p })
                .collect(),
        )
    } else {
        let room = total - min;
        let need = total - target;
        Some(
            units
                .iter()
                .map(|&(p, lo, _)| if room > 0.0 { p - need * (p - lo) / room } else { p })
                .collect(),
        )
    }
}

fn validate(
    base_mva: &f64,
    buses: &[Bus],
    branches: &[Branch],
    generators: &[Generator],
    probabilities: &[f64],
) -> Result<CaseIndex> {
    let invalid = |msg: String| Err(Error::Validation(msg));
    if !(*base_mva > 0.0 && base_mva.is_finite()) {
        return invalid(format!("base_mva must be positive, got {base_mva}"));
    }
    if buses.is_empty() {
        return invalid("case has no buses".into());
    }
    let mut index = CaseIndex::default();
    for (i, b) in buses.iter().enumerate() {
        if index.bus_index.insert(b.id, i).is_some() {
            return invalid(format!("duplicate bus id {}", b.id));
        }
        if !b.x_km.is_finite() || !b.y_km.is_finite() {
            return invalid(format!("bus {} has non-finite coordinates", b.id));
        }
        if !(b.load_mw >= 0.0) || !b.load_mw.is_finite() {
            return invalid(format!("bus {} has negative or non-finite load", b.id));
        }
    }
    for (i, br) in branches.iter().enumerate() {
        if index.branch_index.insert(br.id, i).is_some() {
            return invalid(format!("duplicate branch id {}", br.id));
        }
        let (Some(&f), Some(&t)) = (index.bus_index.get(&br.from_bus), index.bus_index.get(&br.to_bus))
        else {
            return invalid(format!("branch {} references an unknown bus", br.id));
        };
        if f == t {
            return invalid(format!("branch {} connects bus {} to itself", br.id, br.from_bus));
        }
        if !(br.reactance_pu > 0.0) || !br.reactance_pu.is_finite() {
            return invalid(format!(
                "branch {} has nonpositive reactance {}",
                br.id, br.reactance_pu
            ));
        }
        if !(br.rate_a_mw > 0.0) || !br.rate_a_mw.is_finite() {
            return invalid(format!("branch {} has nonpositive rate_a {}", br.id, br.rate_a_mw));
        }
        if !(br.rate_a_mw <= br.rate_b_mw && br.rate_b_mw <= br.rate_c_mw) {
            return invalid(format!(
                "branch {} ratings not ordered: a={} b={} c={}",
                br.id, br.rate_a_mw, br.rate_b_mw, br.rate_c_mw
            ));
        }
        index.ends.push((f, t));
    }
    index.gens_at_bus = vec![Vec::new(); buses.len()];
    let mut gen_ids = HashMap::new();
    for (i, g) in generators.iter().enumerate() {
        if gen_ids.insert(g.id, i).is_some() {
            return invalid(format!("duplicate generator id {}", g.id));
        }
        let Some(&b) = index.bus_index.get(&g.bus) else {
            return invalid(format!("generator {} references unknown bus {}", g.id, g.bus));
        };
        if !(g.p_min_mw >= 0.0 && g.p_min_mw <= g.p_mw && g.p_mw <= g.p_max_mw) {
            return invalid(format!(
                "generator {} violates p_min <= p <= p_max ({} <= {} <= {})",
                g.id, g.p_min_mw, g.p_mw, g.p_max_mw
            ));
        }
        index.gens_at_bus[b].push(i);
        index.gen_bus.push(b);
    }
    if probabilities.len() != branches.len() {
        return invalid(format!(
            "{} outage probabilities for {} branches",
            probabilities.len(),
            branches.len()
        ));
    }
    if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0 && **p < 0.5)) {
        return invalid(format!("outage probability {p} outside [0, 0.5)"));
    }
    let load: f64 = buses.iter().map(|b| b.load_mw).sum();
    let capacity: f64 = generators.iter().map(|g| g.p_max_mw).sum();
    if capacity + 1e-9 * load.max(1.0) < load {
        return invalid(format!(
            "generation capacity {capacity} MW cannot meet load {load} MW"
        ));
    }
    Ok(index)
}

/// Union-find over dense indices.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
    }
}
