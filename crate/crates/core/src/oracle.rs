//! Brute-force reference optimizers for tiny instances.
//!
//! Nothing here shares conflict logic with the solver: legality of every
//! candidate is decided by [`feasibility::check`] alone. Partial candidates
//! are discarded as soon as `check` reports a violation that no further
//! assignment could repair.

use std::ops::RangeInclusive;

use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{
    compute_coverage, compute_interference, run_rng, Band, CellSite, Grid, Request, Scenario, SpectrumPlan,
};
use crate::error::{Error, Result};
use crate::feasibility::{check, Assignment};
use crate::reduction::{enumerate_placements, Placement};
use crate::solver::{objective_eps, solve, Solution, SolveOptions};

pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Exhaustive search over per-request choices (one placement or reject).
///
/// Requests are branched on by increasing id, options in enumeration order
/// with reject last, and only strictly better candidates replace the
/// incumbent. The result is the lexicographically smallest optimum, the
/// same one [`solve`] returns.
pub fn brute_force(s: &Scenario, budget: u128) -> Result<Solution> {
    let placements = enumerate_placements(s);
    let needed = placements
        .iter()
        .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128 + 1));
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let mut order: Vec<usize> = (0..s.num_requests()).collect();
    order.sort_by_key(|&i| s.requests()[i].id);
    let mut search = PlacementSearch {
        s,
        placements: &placements,
        order,
        asg: Assignment::for_scenario(s),
        current: Vec::new(),
        best: Vec::new(),
        best_value: f64::NEG_INFINITY,
        eps: objective_eps(s),
        nodes: 0,
    };
    search.dfs(0, 0.0)?;
    let mut sol = Solution::from_placements(s, search.best);
    sol.optimal = true;
    sol.stats.nodes = search.nodes;
    Ok(sol)
}

struct PlacementSearch<'a> {
    s: &'a Scenario,
    placements: &'a [Vec<Placement>],
    order: Vec<usize>,
    asg: Assignment,
    current: Vec<Placement>,
    best: Vec<Placement>,
    best_value: f64,
    eps: f64,
    nodes: u64,
}

impl PlacementSearch<'_> {
    /// Placements of request `i` that keep the decided prefix legal. Every
    /// violation of such a prefix is permanent: the undecided requests are
    /// all-zero rows.
    fn legal(&mut self, i: usize) -> Result<Vec<Placement>> {
        let mut out = Vec::new();
        for p in &self.placements[i] {
            paint(&mut self.asg, i, p, true);
            if check(self.s, &self.asg)?.is_empty() {
                out.push(*p);
            }
            paint(&mut self.asg, i, p, false);
        }
        Ok(out)
    }

    fn dfs(&mut self, depth: usize, value: f64) -> Result<()> {
        self.nodes += 1;
        let Some(&i) = self.order.get(depth) else {
            if value > self.best_value + self.eps {
                self.best_value = value;
                self.best = self.current.clone();
            }
            return Ok(());
        };
        let weight = self.s.requests()[i].weight;
        for p in &self.legal(i)? {
            paint(&mut self.asg, i, p, true);
            self.current.push(*p);
            self.dfs(depth + 1, value + weight)?;
            self.current.pop();
            paint(&mut self.asg, i, p, false);
        }
        self.dfs(depth + 1, value)
    }
}

fn paint(asg: &mut Assignment, i: usize, p: &Placement, on: bool) {
    asg.set_y(i, p.site, on);
    for f in p.start..p.end() {
        asg.set_x(i, p.site, f, on);
    }
}

/// Optimum over the raw `(x, y)` bit space, without placement enumeration.
#[derive(Debug, Clone)]
pub struct RawOptimum {
    pub objective: f64,
    pub assignment: Assignment,
    /// Number of `check` calls made.
    pub checks: u64,
}

/// One request's full row: `(site, y, x bits)` for each site with a nonzero row.
type RowPattern = Vec<(usize, bool, Vec<bool>)>;

/// Exhaustive optimum over every `(x, y)` bitmap.
///
/// Each request's bits are enumerated site row by site row; a row survives
/// when `check` finds no violation with that row alone, which is necessary
/// for any feasible completion. Surviving rows are then combined across
/// sites and requests, again pruning on any violation of a complete prefix.
/// `budget` caps the product of per-request pattern counts.
pub fn brute_force_raw(s: &Scenario, budget: u128) -> Result<RawOptimum> {
    let n_sites = s.num_sites();
    let n_prbs = s.spectrum().total_prbs();
    if n_prbs + 1 >= 32 {
        return Err(Error::BudgetExceeded { needed: 1u128 << (n_prbs + 1).min(127), budget });
    }
    let mut asg = Assignment::for_scenario(s);
    let mut checks = 0u64;

    let mut patterns: Vec<Vec<RowPattern>> = Vec::with_capacity(s.num_requests());
    for i in 0..s.num_requests() {
        let mut rows: Vec<Vec<(bool, Vec<bool>)>> = Vec::with_capacity(n_sites);
        for b in 0..n_sites {
            let mut ok = Vec::new();
            for bits in 0u32..(1 << (n_prbs + 1)) {
                let y = bits & 1 == 1;
                let x: Vec<bool> = (0..n_prbs).map(|f| bits >> (f + 1) & 1 == 1).collect();
                set_row(&mut asg, i, b, y, &x);
                checks += 1;
                if check(s, &asg)?.is_empty() {
                    ok.push((y, x));
                }
                set_row(&mut asg, i, b, false, &vec![false; n_prbs]);
            }
            rows.push(ok);
        }
        let mut combos = Vec::new();
        combine_rows(s, &mut asg, i, &rows, 0, &mut Vec::new(), &mut combos, &mut checks)?;
        patterns.push(combos);
    }

    let needed = patterns
        .iter()
        .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128));
    if needed > budget {
        return Err(Error::BudgetExceeded { needed, budget });
    }

    let mut best = (f64::NEG_INFINITY, Assignment::for_scenario(s));
    combine_requests(s, &mut asg, &patterns, 0, 0.0, &mut best, &mut checks)?;
    Ok(RawOptimum { objective: best.0, assignment: best.1, checks })
}

fn set_row(asg: &mut Assignment, i: usize, b: usize, y: bool, x: &[bool]) {
    asg.set_y(i, b, y);
    for (f, &v) in x.iter().enumerate() {
        asg.set_x(i, b, f, v);
    }
}

fn clear_row(asg: &mut Assignment, i: usize, b: usize) {
    let n = asg.dims().2;
    asg.set_y(i, b, false);
    for f in 0..n {
        asg.set_x(i, b, f, false);
    }
}

#[allow(clippy::too_many_arguments)]
fn combine_rows(
    s: &Scenario,
    asg: &mut Assignment,
    i: usize,
    rows: &[Vec<(bool, Vec<bool>)>],
    b: usize,
    current: &mut RowPattern,
    out: &mut Vec<RowPattern>,
    checks: &mut u64,
) -> Result<()> {
    if b == rows.len() {
        out.push(current.clone());
        return Ok(());
    }
    for (y, x) in &rows[b] {
        let nonzero = *y || x.iter().any(|&v| v);
        set_row(asg, i, b, *y, x);
        *checks += 1;
        if check(s, asg)?.is_empty() {
            if nonzero {
                current.push((b, *y, x.clone()));
            }
            combine_rows(s, asg, i, rows, b + 1, current, out, checks)?;
            if nonzero {
                current.pop();
            }
        }
        clear_row(asg, i, b);
    }
    Ok(())
}

fn combine_requests(
    s: &Scenario,
    asg: &mut Assignment,
    patterns: &[Vec<RowPattern>],
    i: usize,
    value: f64,
    best: &mut (f64, Assignment),
    checks: &mut u64,
) -> Result<()> {
    if i == patterns.len() {
        if value > best.0 {
            *best = (value, asg.clone());
        }
        return Ok(());
    }
    for pattern in &patterns[i] {
        for (b, y, x) in pattern {
            set_row(asg, i, *b, *y, x);
        }
        *checks += 1;
        if check(s, asg)?.is_empty() {
            let gained = pattern.iter().filter(|(_, y, _)| *y).count() as f64 * s.requests()[i].weight;
            combine_requests(s, asg, patterns, i + 1, value + gained, best, checks)?;
        }
        for (b, _, _) in pattern {
            clear_row(asg, i, *b);
        }
    }
    Ok(())
}

/// Shape of the random tiny instances used for cross-checking.
#[derive(Debug, Clone, PartialEq)]
pub struct TinyConfig {
    pub rows: usize,
    pub cols: usize,
    pub radius: f64,
    pub sites: RangeInclusive<usize>,
    pub bands: RangeInclusive<usize>,
    pub prbs_per_band: RangeInclusive<usize>,
    /// Upper bound on the total PRB count; bands are shrunk to respect it.
    pub max_total_prbs: Option<usize>,
    pub requests: RangeInclusive<usize>,
    pub demand: RangeInclusive<usize>,
    pub p_ns: Vec<f64>,
    pub p_sb: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Default for TinyConfig {
    fn default() -> Self {
        Self {
            rows: 2,
            cols: 3,
            radius: 1.0,
            sites: 1..=3,
            bands: 1..=2,
            prbs_per_band: 4..=8,
            max_total_prbs: None,
            requests: 1..=4,
            demand: 1..=4,
            p_ns: vec![0.0, 0.5],
            p_sb: vec![0.0, 1.0],
            weights: vec![1.0, 2.0, 3.0],
        }
    }
}

/// Deterministic tiny scenario number `index` of the stream seeded by `seed`.
pub fn tiny_scenario(cfg: &TinyConfig, seed: u64, index: u64) -> Result<Scenario> {
    let mut rng = run_rng(seed, index);
    let grid = Grid::new(cfg.rows, cfg.cols)?;
    let n_sites = rng.random_range(cfg.sites.clone()).min(grid.area_count());
    let n_bands = rng.random_range(cfg.bands.clone());
    let mut counts: Vec<usize> = (0..n_bands).map(|_| rng.random_range(cfg.prbs_per_band.clone())).collect();
    if let Some(cap) = cfg.max_total_prbs {
        while counts.iter().sum::<usize>() > cap {
            let widest = (0..counts.len()).max_by_key(|&w| (counts[w], w)).expect("at least one band");
            counts[widest] -= 1;
        }
    }
    let spectrum = SpectrumPlan::new(
        counts.iter().enumerate().map(|(id, &prb_count)| Band { id, prb_count }).collect(),
    )?;
    let p_ns = *cfg.p_ns.choose(&mut rng).unwrap_or(&0.0);
    let p_sb = *cfg.p_sb.choose(&mut rng).unwrap_or(&0.0);

    let picks = rand::seq::index::sample(&mut rng, grid.area_count(), n_sites);
    let mut sites = Vec::with_capacity(n_sites);
    for (id, area) in picks.into_iter().enumerate() {
        let tile = grid.tile(area).expect("sampled area on grid");
        sites.push(CellSite {
            id,
            tile,
            band_supported: (0..n_bands).map(|_| rng.random::<f64>() >= p_ns).collect(),
            single_band: rng.random::<f64>() < p_sb,
            coverage: compute_coverage(tile, &grid, cfg.radius)?,
        });
    }
    let interference = compute_interference(&sites);
    let mut covered: Vec<usize> = sites.iter().flat_map(|s| s.coverage.iter().copied()).collect();
    covered.sort_unstable();
    covered.dedup();

    let n_req = rng.random_range(cfg.requests.clone());
    let requests = (0..n_req)
        .map(|id| {
            let area = *covered.choose(&mut rng).expect("sites cover their own tile");
            let demand = rng.random_range(cfg.demand.clone());
            let weight = *cfg.weights.choose(&mut rng).unwrap_or(&1.0);
            Request::new(id, area, demand).with_weight(weight)
        })
        .collect();
    Scenario::new(grid, sites, spectrum, interference, requests)
}

#[derive(Debug, Clone, Serialize)]
pub struct Mismatch {
    pub index: u64,
    pub solver: f64,
    pub oracle: f64,
    pub scenario: crate::domain::ScenarioDoc,
}

#[derive(Debug, Clone, Default)]
pub struct OracleReport {
    pub instances: usize,
    pub matched: usize,
    pub mismatches: Vec<Mismatch>,
}

/// Solves `instances` tiny scenarios with both the solver and
/// [`brute_force`] and records every disagreement, or any solver output the
/// validator rejects.
pub fn oracle_check(cfg: &TinyConfig, instances: usize, seed: u64) -> Result<OracleReport> {
    let results: Vec<Result<Option<Mismatch>>> = (0..instances as u64)
        .into_par_iter()
        .map(|index| {
            let s = tiny_scenario(cfg, seed, index)?;
            let sol = solve(&s, &SolveOptions::default())?;
            let truth = brute_force(&s, DEFAULT_BUDGET)?;
            let clean = check(&s, &crate::solver::to_assignment(&sol, &s)?)?.is_empty();
            let same = sol.objective == truth.objective && sol.accepted == truth.accepted;
            Ok((!same || !clean).then(|| Mismatch {
                index,
                solver: sol.objective,
                oracle: truth.objective,
                scenario: (&s).into(),
            }))
        })
        .collect();
    let mut report = OracleReport { instances, ..Default::default() };
    for r in results {
        match r? {
            None => report.matched += 1,
            Some(m) => report.mismatches.push(m),
        }
    }
    Ok(report)
}
