//! Search-space reduction: placement enumeration over structurally feasible
//! variables only, and PRB grouping into fixed-size blocks.

use serde::{Deserialize, Serialize};

use crate::domain::{Band, Request, Scenario, SpectrumPlan};
use crate::error::{invalid, Result};
use crate::feasibility;
use crate::solver::{to_assignment, Solution};

/// One request served by `length` contiguous PRBs starting at global index
/// `start`, inside `band`, at `site`. `request` is the request id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Placement {
    pub request: usize,
    pub site: usize,
    pub band: usize,
    pub start: usize,
    pub length: usize,
}

impl Placement {
    pub fn end(&self) -> usize {
        self.start + self.length
    }
}

/// Every placement of every request, indexed like `scenario.requests()` and
/// sorted by `(site, band, start)`. A request with no placement cannot be
/// served at all.
pub fn enumerate_placements(s: &Scenario) -> Vec<Vec<Placement>> {
    (0..s.num_requests()).map(|i| placements_for(s, i)).collect()
}

pub(crate) fn placements_for(s: &Scenario, i: usize) -> Vec<Placement> {
    let req = &s.requests()[i];
    let mut out = Vec::new();
    for (b, site) in s.sites().iter().enumerate() {
        if !site.covers(req.area) {
            continue;
        }
        for w in 0..s.spectrum().num_bands() {
            if !site.supports(w) {
                continue;
            }
            let range = s.spectrum().band_range(w);
            if req.demand > range.len() {
                continue;
            }
            for start in range.start..=range.end - req.demand {
                out.push(Placement { request: req.id, site: b, band: w, start, length: req.demand });
            }
        }
    }
    out
}

/// Size of the unreduced variable space: `I*B*F + I*B`.
pub fn count_variables(requests: u64, sites: u64, prbs: u64) -> u64 {
    requests * sites * prbs + requests * sites
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// GCD of all demands.
pub fn gcd_group_size(requests: &[Request]) -> Result<usize> {
    if requests.is_empty() {
        return invalid("group size of an empty request list is undefined");
    }
    Ok(requests.iter().fold(0, |g, r| gcd(g, r.demand)))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingMode {
    /// Every demand must be a multiple of the group size.
    #[default]
    Exact,
    /// Demands are rounded up to whole blocks.
    RoundUp,
}

/// A scenario recast in units of `k`-PRB blocks. Each band keeps
/// `floor(F_w / k)` blocks; trailing PRBs that do not fill a block are unused.
#[derive(Debug, Clone)]
pub struct GroupedScenario {
    base: Scenario,
    k: usize,
    grouped: Scenario,
}

impl GroupedScenario {
    pub fn base(&self) -> &Scenario {
        &self.base
    }

    pub fn group_size(&self) -> usize {
        self.k
    }

    /// The block-level scenario, solvable like any other.
    pub fn scenario(&self) -> &Scenario {
        &self.grouped
    }

    /// Raw PRB window `[first, last]` covered by global block `block`.
    pub fn raw_window(&self, block: usize) -> (usize, usize) {
        let band = self.grouped.spectrum().band_of(block).expect("block in range");
        let local = block - self.grouped.spectrum().band_range(band).start;
        let first = self.base.spectrum().band_range(band).start + local * self.k;
        (first, first + self.k - 1)
    }

    /// Blocks of `band` overlapping the raw PRB range `[start, start + len)`.
    pub(crate) fn blocks_touching(&self, band: usize, start: usize, len: usize) -> std::ops::Range<usize> {
        let raw = self.base.spectrum().band_range(band);
        let blocks = self.grouped.spectrum().band_range(band);
        let lo = (start - raw.start) / self.k;
        let hi = ((start + len - 1 - raw.start) / self.k + 1).min(blocks.len());
        blocks.start + lo.min(blocks.len())..blocks.start + hi
    }
}

pub fn group_scenario(s: &Scenario, k: usize, mode: GroupingMode) -> Result<GroupedScenario> {
    if k == 0 {
        return invalid("group size must be at least 1");
    }
    let mut bands = Vec::with_capacity(s.spectrum().num_bands());
    for band in s.spectrum().bands() {
        if band.prb_count < k {
            return invalid(format!(
                "group size {k} exceeds the {} PRBs of band {}",
                band.prb_count, band.id
            ));
        }
        bands.push(Band { id: band.id, prb_count: band.prb_count / k });
    }
    let mut requests = Vec::with_capacity(s.num_requests());
    for r in s.requests() {
        if mode == GroupingMode::Exact && r.demand % k != 0 {
            return invalid(format!("demand {} of request {} is not a multiple of {k}", r.demand, r.id));
        }
        requests.push(Request { demand: r.demand.div_ceil(k), ..r.clone() });
    }
    let grouped = Scenario::new(
        *s.grid(),
        s.sites().to_vec(),
        SpectrumPlan::new(bands)?,
        s.interference().clone(),
        requests,
    )?;
    Ok(GroupedScenario { base: s.clone(), k, grouped })
}

/// Expands a block-level solution to raw PRBs. Each request gets exactly its
/// demand, starting at the first PRB of its first block; PRBs of a partially
/// used last block stay reserved and are counted in
/// `stats.over_allocated_prbs`.
pub fn ungroup_solution(g: &GroupedScenario, gsol: &Solution) -> Result<Solution> {
    let asg = to_assignment(gsol, g.scenario())?;
    let violations = feasibility::check(g.scenario(), &asg)?;
    if !violations.is_empty() {
        return invalid(format!(
            "grouped solution is infeasible ({} violations, first: {})",
            violations.len(),
            violations[0]
        ));
    }
    Ok(expand_solution(g, gsol))
}

/// [`ungroup_solution`] without re-validating the block-level solution.
pub(crate) fn expand_solution(g: &GroupedScenario, gsol: &Solution) -> Solution {
    let mut accepted = Vec::with_capacity(gsol.accepted.len());
    let mut over = 0;
    for p in &gsol.accepted {
        let idx = g.base.request_index(p.request).expect("grouping keeps request ids");
        let demand = g.base.requests()[idx].demand;
        let (first, _) = g.raw_window(p.start);
        over += p.length * g.k - demand;
        accepted.push(Placement { start: first, length: demand, ..*p });
    }
    let mut sol = Solution { accepted, ..gsol.clone() };
    sol.stats.over_allocated_prbs += over;
    sol
}
