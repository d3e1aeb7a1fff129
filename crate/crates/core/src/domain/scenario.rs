use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::{AreaId, Band, Grid, InterferenceMatrix, SpectrumPlan};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSite {
    pub id: usize,
    pub tile: (usize, usize),
    /// One flag per band of the spectrum plan.
    pub band_supported: Vec<bool>,
    /// The site may transmit on at most one band at a time.
    pub single_band: bool,
    /// Sorted ids of the covered areas.
    pub coverage: Vec<AreaId>,
}

impl CellSite {
    pub fn covers(&self, area: AreaId) -> bool {
        self.coverage.binary_search(&area).is_ok()
    }

    pub fn supports(&self, band: usize) -> bool {
        self.band_supported.get(band).copied().unwrap_or(false)
    }
}

/// What a tenant wants done with a request that was not admitted in a slot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetryPolicy {
    #[default]
    KeepInBuffer,
    Drop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: usize,
    #[serde(default)]
    pub tenant: usize,
    pub area: AreaId,
    /// Number of contiguous PRBs required.
    pub demand: usize,
    #[serde(default = "default_weight")]
    pub weight: f64,
    #[serde(default)]
    pub retry_policy: RetryPolicy,
}

fn default_weight() -> f64 {
    1.0
}

impl Request {
    pub fn new(id: usize, area: AreaId, demand: usize) -> Self {
        Self { id, tenant: 0, area, demand, weight: 1.0, retry_policy: RetryPolicy::KeepInBuffer }
    }

    pub fn with_weight(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }
}

/// A complete, validated problem instance. Site and band ids equal their
/// positions; request ids are arbitrary but unique.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    grid: Grid,
    sites: Vec<CellSite>,
    spectrum: SpectrumPlan,
    interference: InterferenceMatrix,
    requests: Vec<Request>,
    request_index: HashMap<usize, usize>,
}

impl Scenario {
    pub fn new(
        grid: Grid,
        sites: Vec<CellSite>,
        spectrum: SpectrumPlan,
        interference: InterferenceMatrix,
        requests: Vec<Request>,
    ) -> Result<Self> {
        for (pos, s) in sites.iter().enumerate() {
            if s.id != pos {
                return invalid(format!("site at position {pos} has id {}", s.id));
            }
            if !grid.contains(s.tile) {
                return invalid(format!("site {} tile {:?} is off the grid", s.id, s.tile));
            }
            if s.band_supported.len() != spectrum.num_bands() {
                return invalid(format!(
                    "site {} lists {} band flags, spectrum has {} bands",
                    s.id,
                    s.band_supported.len(),
                    spectrum.num_bands()
                ));
            }
            if s.coverage.windows(2).any(|w| w[0] >= w[1]) {
                return invalid(format!("site {} coverage must be sorted and unique", s.id));
            }
            if let Some(&a) = s.coverage.iter().find(|&&a| a >= grid.area_count()) {
                return invalid(format!("site {} covers area {a}, which is off the grid", s.id));
            }
        }
        if interference.len() != sites.len() {
            return invalid(format!(
                "interference relation has {} sites, scenario has {}",
                interference.len(),
                sites.len()
            ));
        }
        let request_index = index_requests(&grid, &requests)?;
        Ok(Self { grid, sites, spectrum, interference, requests, request_index })
    }

    /// Same infrastructure, different request set.
    pub fn with_requests(&self, requests: Vec<Request>) -> Result<Self> {
        let request_index = index_requests(&self.grid, &requests)?;
        Ok(Self { requests, request_index, ..self.clone() })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn sites(&self) -> &[CellSite] {
        &self.sites
    }

    pub fn spectrum(&self) -> &SpectrumPlan {
        &self.spectrum
    }

    pub fn interference(&self) -> &InterferenceMatrix {
        &self.interference
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn num_requests(&self) -> usize {
        self.requests.len()
    }

    pub fn request_index(&self, id: usize) -> Option<usize> {
        self.request_index.get(&id).copied()
    }

    /// `r_{i,b}`: site `site` covers the area of the request at `req`.
    pub fn covers(&self, req: usize, site: usize) -> bool {
        self.sites[site].covers(self.requests[req].area)
    }

    /// `beta_{b,f}` over the global PRB index.
    pub fn prb_supported(&self, site: usize, prb: usize) -> bool {
        self.spectrum.band_of(prb).is_some_and(|w| self.sites[site].supports(w))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ScenarioDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ScenarioDoc = serde_json::from_str(text)?;
        doc.try_into()
    }
}

fn index_requests(grid: &Grid, requests: &[Request]) -> Result<HashMap<usize, usize>> {
    let mut index = HashMap::with_capacity(requests.len());
    for (pos, r) in requests.iter().enumerate() {
        if r.area >= grid.area_count() {
            return invalid(format!("request {} targets area {}, which is off the grid", r.id, r.area));
        }
        if r.demand == 0 {
            return invalid(format!("request {} has zero demand", r.id));
        }
        if !(r.weight >= 0.0) || !r.weight.is_finite() {
            return invalid(format!("request {} has invalid weight {}", r.id, r.weight));
        }
        if index.insert(r.id, pos).is_some() {
            return invalid(format!("duplicate request id {}", r.id));
        }
    }
    Ok(index)
}

/// On-disk form of a [`Scenario`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub grid: Grid,
    pub bands: Vec<Band>,
    pub sites: Vec<CellSite>,
    /// Interfering site pairs, each listed once.
    pub interference: Vec<[usize; 2]>,
    pub requests: Vec<Request>,
}

impl From<&Scenario> for ScenarioDoc {
    fn from(s: &Scenario) -> Self {
        Self {
            grid: s.grid,
            bands: s.spectrum.bands().to_vec(),
            sites: s.sites.clone(),
            interference: s.interference.pairs().map(|(a, b)| [a, b]).collect(),
            requests: s.requests.clone(),
        }
    }
}

impl TryFrom<ScenarioDoc> for Scenario {
    type Error = crate::Error;

    fn try_from(doc: ScenarioDoc) -> Result<Self> {
        let grid = Grid::new(doc.grid.rows(), doc.grid.cols())?;
        let spectrum = SpectrumPlan::new(doc.bands)?;
        let interference = InterferenceMatrix::from_pairs(
            doc.sites.len(),
            doc.interference.iter().map(|p| (p[0], p[1])),
        )?;
        Scenario::new(grid, doc.sites, spectrum, interference, doc.requests)
    }
}
