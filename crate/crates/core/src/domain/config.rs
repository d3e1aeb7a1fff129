use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

use super::DEFAULT_COVERAGE_RADIUS;

/// How cell sites are laid out on the grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SitePlacement {
    /// Distinct tiles drawn uniformly at random per run.
    #[default]
    Random,
    /// Evenly spaced over the row-major tile order; identical in every run.
    Lattice,
}

/// Demand of each generated request: `unit * U{min_blocks..=max_blocks}` PRBs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandModel {
    #[serde(default = "one")]
    pub min_blocks: usize,
    /// Defaults to `floor(prbs_per_band / unit)`.
    #[serde(default)]
    pub max_blocks: Option<usize>,
    /// PRBs per block. Defaults to the group size, or 1 when grouping is
    /// automatic; fixing it keeps demands unchanged across a group-size sweep.
    #[serde(default)]
    pub unit: Option<usize>,
}

impl Default for DemandModel {
    fn default() -> Self {
        Self { min_blocks: 1, max_blocks: None, unit: None }
    }
}

fn one() -> usize {
    1
}

/// Parameters of one Monte Carlo campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub rows: usize,
    pub cols: usize,
    pub num_sites: usize,
    pub num_bands: usize,
    pub prbs_per_band: usize,
    pub num_requests: usize,
    pub num_tenants: usize,
    pub p_ns: f64,
    pub p_sb: f64,
    /// PRB group size; 0 selects the GCD of the generated demands.
    pub group_size: usize,
    pub demand_model: DemandModel,
    pub runs: usize,
    pub seed: u64,
    pub placement: SitePlacement,
    pub coverage_radius: f64,
    /// Per-solve time limit in seconds; 0 disables it.
    pub time_limit_s: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            rows: 21,
            cols: 11,
            num_sites: 20,
            num_bands: 5,
            prbs_per_band: 138,
            num_requests: 20,
            num_tenants: 1,
            p_ns: 0.0,
            p_sb: 0.0,
            group_size: 23,
            demand_model: DemandModel::default(),
            runs: 100,
            seed: 1,
            placement: SitePlacement::Random,
            coverage_radius: DEFAULT_COVERAGE_RADIUS,
            time_limit_s: 0.0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return invalid("rows and cols must be positive");
        }
        if self.num_sites > self.rows * self.cols {
            return invalid(format!(
                "cannot place {} sites on {} distinct tiles",
                self.num_sites,
                self.rows * self.cols
            ));
        }
        if self.num_bands == 0 || self.prbs_per_band == 0 {
            return invalid("num_bands and prbs_per_band must be positive");
        }
        if self.num_tenants == 0 {
            return invalid("num_tenants must be positive");
        }
        for (name, p) in [("p_ns", self.p_ns), ("p_sb", self.p_sb)] {
            if !(0.0..=1.0).contains(&p) {
                return invalid(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if self.runs == 0 {
            return invalid("runs must be at least 1");
        }
        if !(self.coverage_radius >= 0.0) || !self.coverage_radius.is_finite() {
            return invalid("coverage_radius must be finite and non-negative");
        }
        if !(self.time_limit_s >= 0.0) {
            return invalid("time_limit_s must be non-negative");
        }
        let (lo, hi) = self.demand_blocks();
        if lo == 0 || hi < lo {
            return invalid(format!("demand_model range [{lo}, {hi}] is empty"));
        }
        Ok(())
    }

    /// PRBs per demand block.
    pub fn demand_unit(&self) -> usize {
        self.demand_model.unit.unwrap_or(self.group_size).max(1)
    }

    pub fn demand_blocks(&self) -> (usize, usize) {
        let hi = self
            .demand_model
            .max_blocks
            .unwrap_or(self.prbs_per_band / self.demand_unit());
        (self.demand_model.min_blocks, hi)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
