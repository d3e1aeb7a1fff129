//! Exact branch-and-bound over per-request placement decisions.
//!
//! Each node branches on every conflict-free placement of one request and
//! finally on rejecting it. Independent groups of requests are solved
//! separately and repeated states are cached. Among optimal solutions the
//! one returned is the lexicographically smallest sequence of
//! (request id, site, band, start) over the requests in id order, with
//! rejection ranked after every placement.

mod search;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::domain::Scenario;
use crate::error::{invalid, Result};
use crate::feasibility::Assignment;
use crate::reduction::{
    enumerate_placements, expand_solution, gcd_group_size, group_scenario, GroupingMode, Placement,
};

pub(crate) use search::objective_eps;
use search::{Engine, SearchInput};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
/// Branching order. Affects running time only, not the returned solution.
pub enum RequestOrder {
    /// At every node, the request with the fewest placements that still fit,
    /// then larger weight, then lower id.
    #[default]
    MostConstrainedFirst,
    InputOrder,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum GroupSize {
    /// Solve at single-PRB resolution.
    #[default]
    Off,
    /// Group by the GCD of the demands.
    Auto,
    /// Fixed block size; demands are rounded up to whole blocks.
    Fixed(usize),
}

impl std::str::FromStr for GroupSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(Self::Auto),
            "off" | "none" => Ok(Self::Off),
            _ => match s.parse::<usize>() {
                Ok(0) => Ok(Self::Auto),
                Ok(1) => Ok(Self::Off),
                Ok(k) => Ok(Self::Fixed(k)),
                Err(_) => Err(format!("expected a positive integer, `auto` or `off`, got `{s}`")),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolveOptions {
    /// Stop and return the incumbent after this long.
    pub time_limit: Option<Duration>,
    pub order: RequestOrder,
    pub group_size: GroupSize,
    /// Bound-based and repeated-state pruning; turning it off leaves a plain
    /// exhaustive search.
    pub prune: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { time_limit: None, order: RequestOrder::default(), group_size: GroupSize::Off, prune: true }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub nodes: u64,
    pub prunes: u64,
    pub wall_time: Duration,
    /// PRBs reserved by block rounding but not demanded.
    pub over_allocated_prbs: usize,
    /// The value is optimal but the tie-break among optima ran out of its
    /// node budget, so another optimum may have been returned.
    pub tie_unresolved: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    /// At most one placement per request, sorted by request id.
    pub accepted: Vec<Placement>,
    pub objective: f64,
    /// False when a time limit cut the search short.
    pub optimal: bool,
    pub stats: SolveStats,
}

impl Solution {
    pub fn empty() -> Self {
        Self { accepted: Vec::new(), objective: 0.0, optimal: true, stats: SolveStats::default() }
    }

    /// Wraps externally produced placements; the objective sums the weights
    /// of the referenced requests that exist in `s`.
    pub fn from_placements(s: &Scenario, mut accepted: Vec<Placement>) -> Self {
        accepted.sort();
        let objective = accepted
            .iter()
            .filter_map(|p| s.request_index(p.request))
            .map(|i| s.requests()[i].weight)
            .sum();
        Self { accepted, objective, optimal: false, stats: SolveStats::default() }
    }

    pub fn to_json(&self, timing: bool) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SolutionDoc::from_solution(self, timing))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SolutionDoc = serde_json::from_str(text)?;
        Ok(doc.into())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsDoc {
    nodes: u64,
    prunes: u64,
    wall_time_ms: f64,
    #[serde(default)]
    over_allocated_prbs: usize,
    #[serde(default)]
    tie_unresolved: bool,
}

/// On-disk form of a [`Solution`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionDoc {
    objective: f64,
    optimal: bool,
    accepted: Vec<Placement>,
    stats: StatsDoc,
}

impl SolutionDoc {
    fn from_solution(s: &Solution, timing: bool) -> Self {
        Self {
            objective: s.objective,
            optimal: s.optimal,
            accepted: s.accepted.clone(),
            stats: StatsDoc {
                nodes: s.stats.nodes,
                prunes: s.stats.prunes,
                wall_time_ms: if timing { s.stats.wall_time.as_secs_f64() * 1e3 } else { 0.0 },
                over_allocated_prbs: s.stats.over_allocated_prbs,
                tie_unresolved: s.stats.tie_unresolved,
            },
        }
    }
}

impl From<SolutionDoc> for Solution {
    fn from(d: SolutionDoc) -> Self {
        Self {
            accepted: d.accepted,
            objective: d.objective,
            optimal: d.optimal,
            stats: SolveStats {
                nodes: d.stats.nodes,
                prunes: d.stats.prunes,
                wall_time: Duration::from_secs_f64(d.stats.wall_time_ms.max(0.0) / 1e3),
                over_allocated_prbs: d.stats.over_allocated_prbs,
                tie_unresolved: d.stats.tie_unresolved,
            },
        }
    }
}

/// Optimal value-maximal allocation for `s`.
pub fn solve(s: &Scenario, opts: &SolveOptions) -> Result<Solution> {
    solve_with_reserved(s, &[], opts)
}

/// Like [`solve`], with spectrum already held by earlier allocations.
/// `reserved` windows use raw PRB indices of `s`; their request ids are
/// ignored.
pub fn solve_with_reserved(s: &Scenario, reserved: &[Placement], opts: &SolveOptions) -> Result<Solution> {
    let started = Instant::now();
    for r in reserved {
        check_window(s, r)?;
    }
    let k = match opts.group_size {
        GroupSize::Off => 1,
        GroupSize::Auto if s.num_requests() == 0 => 1,
        GroupSize::Auto => gcd_group_size(s.requests())?,
        GroupSize::Fixed(k) => k,
    };
    let mut sol = if k > 1 {
        let g = group_scenario(s, k, GroupingMode::RoundUp)?;
        let mut blocks = Vec::new();
        for r in reserved {
            for b in g.blocks_touching(r.band, r.start, r.length) {
                blocks.push((r.site, b));
            }
        }
        let gsol = solve_placements(g.scenario(), &blocks, opts, started);
        expand_solution(&g, &gsol)
    } else {
        let cells: Vec<(usize, usize)> = reserved
            .iter()
            .flat_map(|r| (r.start..r.end()).map(move |f| (r.site, f)))
            .collect();
        solve_placements(s, &cells, opts, started)
    };
    sol.stats.wall_time = started.elapsed();
    Ok(sol)
}

fn check_window(s: &Scenario, p: &Placement) -> Result<()> {
    if p.site >= s.num_sites() || p.band >= s.spectrum().num_bands() {
        return invalid(format!("placement {p:?} references a missing site or band"));
    }
    let range = s.spectrum().band_range(p.band);
    if p.length == 0 || p.start < range.start || p.end() > range.end {
        return invalid(format!("placement {p:?} does not fit inside band {}", p.band));
    }
    Ok(())
}

/// Static search order over request positions.
pub(crate) fn request_order(s: &Scenario, counts: &[usize], order: RequestOrder) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..s.num_requests()).collect();
    if order == RequestOrder::MostConstrainedFirst {
        let reqs = s.requests();
        idx.sort_by(|&a, &b| {
            counts[a]
                .cmp(&counts[b])
                .then(reqs[b].weight.total_cmp(&reqs[a].weight))
                .then(reqs[a].id.cmp(&reqs[b].id))
        });
    } else {
        idx.sort_by_key(|&i| s.requests()[i].id);
    }
    idx
}

fn solve_placements(
    s: &Scenario,
    reserved: &[(usize, usize)],
    opts: &SolveOptions,
    started: Instant,
) -> Solution {
    let placements = enumerate_placements(s);
    let counts: Vec<usize> = placements.iter().map(Vec::len).collect();
    let order = request_order(s, &counts, opts.order);
    let deadline = opts.time_limit.map(|t| started + t);
    let dynamic = opts.order == RequestOrder::MostConstrainedFirst;
    let input = SearchInput { scenario: s, placements: &placements, reserved, prune: opts.prune, dynamic, deadline };

    let mut accepted = Vec::new();
    let mut stats = SolveStats::default();
    let mut optimal = true;
    for component in search::components(&input, &order) {
        let mut engine = Engine::new(&input, &component);
        let outcome = engine.run();
        stats.nodes += outcome.nodes;
        stats.prunes += outcome.prunes;
        optimal &= !outcome.timed_out;
        stats.tie_unresolved |= !outcome.canonical && !outcome.timed_out;
        accepted.extend(outcome.chosen);
    }
    let mut sol = Solution::from_placements(s, accepted);
    sol.optimal = optimal;
    sol.stats = stats;
    sol
}

/// The `(x, y)` bits implied by a solution's placements.
pub fn to_assignment(sol: &Solution, s: &Scenario) -> Result<Assignment> {
    let mut asg = Assignment::for_scenario(s);
    let total = s.spectrum().total_prbs();
    for p in &sol.accepted {
        let Some(i) = s.request_index(p.request) else {
            return invalid(format!("solution references unknown request {}", p.request));
        };
        if p.site >= s.num_sites() {
            return invalid(format!("solution references unknown site {}", p.site));
        }
        if p.band >= s.spectrum().num_bands() {
            return invalid(format!("solution references unknown band {}", p.band));
        }
        if p.end() > total {
            return invalid(format!("window of request {} runs past PRB {}", p.request, total));
        }
        asg.set_y(i, p.site, true);
        for f in p.start..p.end() {
            asg.set_x(i, p.site, f, true);
        }
    }
    Ok(asg)
}

#[cfg(test)]
mod tests;
