//! 0-1 linear model of the allocation problem.
//!
//! The only non-linear terms are the adjacent-PRB products of the
//! contiguity constraint and the cross-band products of the single-band
//! constraint. Each adjacent product `x_f * x_{f+1}` becomes a binary `z`
//! with its McCormick envelope; the single-band restriction uses one binary
//! `u` per (site, band) that must be on for the band to carry any PRB.
//!
//! The model can be written in LP format for external MILP solvers, and
//! tiny models can be solved exhaustively to cross-check the linearization.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::domain::Scenario;
use crate::error::{Error, Result};
use crate::feasibility::Assignment;

pub const DEFAULT_EXHAUSTIVE_BUDGET: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    X,
    Y,
    ZAux,
    BandUse,
}

/// What a model variable stands for. Indices are scenario positions; `prb`
/// is the global PRB index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X { request: usize, site: usize, prb: usize },
    Y { request: usize, site: usize },
    /// Product of `X` at `prb` and `prb + 1`.
    Z { request: usize, site: usize, prb: usize },
    U { site: usize, band: usize },
}

impl Var {
    pub fn kind(&self) -> VarKind {
        match self {
            Var::X { .. } => VarKind::X,
            Var::Y { .. } => VarKind::Y,
            Var::Z { .. } => VarKind::ZAux,
            Var::U { .. } => VarKind::BandUse,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub var: Var,
}

impl Variable {
    pub fn kind(&self) -> VarKind {
        self.var.kind()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// Which constraint family a row comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    OneSite,
    Capacity,
    Interference,
    Demand,
    Locality,
    Contiguity,
    McCormick,
    BandUse,
    BandChoice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub family: Family,
    pub terms: Vec<(f64, usize)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    fn holds(&self, lhs: f64) -> bool {
        const TOL: f64 = 1e-9;
        match self.sense {
            Sense::Le => lhs <= self.rhs + TOL,
            Sense::Ge => lhs >= self.rhs - TOL,
            Sense::Eq => (lhs - self.rhs).abs() <= TOL,
        }
    }
}

/// A maximization 0-1 program.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(f64, usize)>,
    index: HashMap<Var, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearizeOptions {
    /// Materialize only variables at covering sites on supported PRBs.
    pub variable_reduction: bool,
}

impl Default for LinearizeOptions {
    fn default() -> Self {
        Self { variable_reduction: true }
    }
}

impl LinearModel {
    pub fn add_var(&mut self, name: impl Into<String>, var: Var) -> usize {
        let k = self.variables.len();
        self.variables.push(Variable { name: name.into(), var });
        self.index.insert(var, k);
        k
    }

    pub fn add_constraint(&mut self, family: Family, terms: Vec<(f64, usize)>, sense: Sense, rhs: f64) {
        self.constraints.push(Constraint { family, terms, sense, rhs });
    }

    pub fn var_index(&self, var: &Var) -> Option<usize> {
        self.index.get(var).copied()
    }

    pub fn count_vars(&self, kind: VarKind) -> usize {
        self.variables.iter().filter(|v| v.kind() == kind).count()
    }

    pub fn count_constraints(&self, family: Family) -> usize {
        self.constraints.iter().filter(|c| c.family == family).count()
    }

    /// Objective value of a full 0-1 point, or `None` if it violates a row.
    pub fn evaluate(&self, values: &[bool]) -> Option<f64> {
        let dot = |terms: &[(f64, usize)]| -> f64 {
            terms.iter().filter(|&&(_, v)| values[v]).map(|&(a, _)| a).sum()
        };
        if self.constraints.iter().all(|c| c.holds(dot(&c.terms))) {
            Some(dot(&self.objective))
        } else {
            None
        }
    }
}

/// Builds the linear model of `s`.
pub fn linearize(s: &Scenario, opts: &LinearizeOptions) -> LinearModel {
    let mut m = LinearModel::default();
    let n_req = s.num_requests();
    let n_site = s.num_sites();
    let n_prb = s.spectrum().total_prbs();
    let spec = s.spectrum();
    let reqs = s.requests();
    let sites = s.sites();
    let keep_site = |i: usize, b: usize| !opts.variable_reduction || s.covers(i, b);
    let keep_x = |i: usize, b: usize, f: usize| keep_site(i, b) && (!opts.variable_reduction || s.prb_supported(b, f));

    for i in 0..n_req {
        let rid = reqs[i].id;
        for b in 0..n_site {
            if !keep_site(i, b) {
                continue;
            }
            m.add_var(format!("y_{rid}_{}", sites[b].id), Var::Y { request: i, site: b });
            for f in 0..n_prb {
                if keep_x(i, b, f) {
                    m.add_var(format!("x_{rid}_{}_{f}", sites[b].id), Var::X { request: i, site: b, prb: f });
                }
            }
        }
    }
    let x = |m: &LinearModel, i, b, f| m.var_index(&Var::X { request: i, site: b, prb: f });
    let y = |m: &LinearModel, i, b| m.var_index(&Var::Y { request: i, site: b });

    // (1) one site per request
    for i in 0..n_req {
        let terms: Vec<_> = (0..n_site).filter_map(|b| y(&m, i, b)).map(|v| (1.0, v)).collect();
        if !terms.is_empty() {
            m.add_constraint(Family::OneSite, terms, Sense::Le, 1.0);
        }
    }

    // (2) each PRB of a site used at most once, and only if supported
    for b in 0..n_site {
        for f in 0..n_prb {
            let terms: Vec<_> = (0..n_req).filter_map(|i| x(&m, i, b, f)).map(|v| (1.0, v)).collect();
            if !terms.is_empty() {
                let beta = f64::from(u8::from(s.prb_supported(b, f)));
                m.add_constraint(Family::Capacity, terms, Sense::Le, beta);
            }
        }
    }

    // (3) interfering sites never share a PRB
    for (b, b2) in s.interference().pairs() {
        for f in 0..n_prb {
            let mut terms = Vec::new();
            for site in [b, b2] {
                if s.prb_supported(site, f) {
                    terms.extend((0..n_req).filter_map(|i| x(&m, i, site, f)).map(|v| (1.0, v)));
                }
            }
            if terms.len() > 1 {
                m.add_constraint(Family::Interference, terms, Sense::Le, 1.0);
            }
        }
    }

    // (4) exact demand at the chosen site
    for i in 0..n_req {
        let demand = reqs[i].demand as f64;
        for b in 0..n_site {
            let Some(yv) = y(&m, i, b) else { continue };
            let mut terms: Vec<_> = if s.covers(i, b) {
                (0..n_prb)
                    .filter(|&f| s.prb_supported(b, f))
                    .filter_map(|f| x(&m, i, b, f))
                    .map(|v| (1.0, v))
                    .collect()
            } else {
                Vec::new()
            };
            terms.push((-demand, yv));
            m.add_constraint(Family::Demand, terms, Sense::Eq, 0.0);
        }
    }

    // (5) nothing at non-covering sites
    for i in 0..n_req {
        let mut terms = Vec::new();
        for b in (0..n_site).filter(|&b| !s.covers(i, b)) {
            terms.extend(y(&m, i, b).map(|v| (1.0, v)));
            terms.extend((0..n_prb).filter_map(|f| x(&m, i, b, f)).map(|v| (1.0, v)));
        }
        if !terms.is_empty() {
            m.add_constraint(Family::Locality, terms, Sense::Eq, 0.0);
        }
    }

    // (6) contiguity: delta - 1 adjacent pairs inside one band
    for i in 0..n_req {
        let demand = reqs[i].demand;
        if demand < 2 {
            continue;
        }
        let rid = reqs[i].id;
        for b in 0..n_site {
            let Some(yv) = y(&m, i, b) else { continue };
            let mut terms = Vec::new();
            for f in 0..n_prb.saturating_sub(1) {
                if !spec.adjacent(f, f + 1) {
                    continue;
                }
                let (Some(x1), Some(x2)) = (x(&m, i, b, f), x(&m, i, b, f + 1)) else { continue };
                let z = m.add_var(format!("z_{rid}_{}_{f}", sites[b].id), Var::Z { request: i, site: b, prb: f });
                m.add_constraint(Family::McCormick, vec![(1.0, z), (-1.0, x1)], Sense::Le, 0.0);
                m.add_constraint(Family::McCormick, vec![(1.0, z), (-1.0, x2)], Sense::Le, 0.0);
                m.add_constraint(Family::McCormick, vec![(1.0, z), (-1.0, x1), (-1.0, x2)], Sense::Ge, -1.0);
                terms.push((1.0, z));
            }
            terms.push((-((demand - 1) as f64), yv));
            m.add_constraint(Family::Contiguity, terms, Sense::Eq, 0.0);
        }
    }

    // (7) single-band sites: a band carries PRBs only if selected, and at
    // most one band is selected
    for b in 0..n_site {
        if !sites[b].single_band {
            continue;
        }
        let mut choice = Vec::new();
        for (w, band) in spec.bands().iter().enumerate() {
            let terms: Vec<_> = spec
                .band_range(w)
                .flat_map(|f| (0..n_req).map(move |i| (i, f)))
                .filter_map(|(i, f)| x(&m, i, b, f))
                .map(|v| (1.0, v))
                .collect();
            if terms.is_empty() {
                continue;
            }
            let u = m.add_var(format!("u_{}_{w}", sites[b].id), Var::U { site: b, band: w });
            let mut terms = terms;
            terms.push((-(band.prb_count as f64), u));
            m.add_constraint(Family::BandUse, terms, Sense::Le, 0.0);
            choice.push((1.0, u));
        }
        if !choice.is_empty() {
            m.add_constraint(Family::BandChoice, choice, Sense::Le, 1.0);
        }
    }

    m.objective = (0..n_req)
        .flat_map(|i| (0..n_site).map(move |b| (i, b)))
        .filter_map(|(i, b)| y(&m, i, b).map(|v| (reqs[i].weight, v)))
        .filter(|&(w, _)| w != 0.0)
        .collect();
    m
}

fn format_coef(a: f64) -> String {
    if a.fract() == 0.0 && a.abs() < 1e15 {
        format!("{}", a as i64)
    } else {
        format!("{a}")
    }
}

/// Writes `a1 v1 + a2 v2 ...`; unit coefficients are left implicit.
fn write_terms(out: &mut String, m: &LinearModel, terms: &[(f64, usize)]) {
    const PER_LINE: usize = 8;
    for (k, &(a, v)) in terms.iter().enumerate() {
        if k > 0 && k % PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let name = &m.variables[v].name;
        let sign = if a < 0.0 { "-" } else { "+" };
        let mag = a.abs();
        if k == 0 {
            if a < 0.0 {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag != 1.0 {
            let _ = write!(out, "{} ", format_coef(mag));
        }
        out.push_str(name);
    }
}

/// The model in LP format.
pub fn lp_string(m: &LinearModel) -> String {
    let mut out = String::from("Maximize\n obj:");
    if !m.objective.is_empty() {
        out.push(' ');
        write_terms(&mut out, m, &m.objective);
    }
    out.push_str("\nSubject To\n");
    for (k, c) in m.constraints.iter().enumerate() {
        let _ = write!(out, " c{k}: ");
        if c.terms.is_empty() {
            // LP rows need a variable; a constant row is written with a
            // zero coefficient on the first variable
            if let Some(v) = m.variables.first() {
                let _ = write!(out, "0 {}", v.name);
            }
        } else {
            write_terms(&mut out, m, &c.terms);
        }
        let _ = writeln!(out, " {} {}", c.sense.symbol(), format_coef(c.rhs));
    }
    out.push_str("Binary\n");
    for v in &m.variables {
        let _ = writeln!(out, " {}", v.name);
    }
    out.push_str("End\n");
    out
}

pub fn write_lp(m: &LinearModel, w: &mut impl Write) -> Result<()> {
    w.write_all(lp_string(m).as_bytes())?;
    Ok(())
}

pub fn export_lp(m: &LinearModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, lp_string(m))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveOptimum {
    pub objective: f64,
    pub values: Vec<bool>,
    /// Partial assignments visited.
    pub nodes: u64,
}

/// Exact optimum by enumerating 0-1 assignments variable by variable.
/// Branches whose rows can no longer be satisfied, or whose objective can
/// no longer beat the incumbent, are cut. Returns `None` when infeasible.
pub fn solve_exhaustive(m: &LinearModel, budget: usize) -> Result<Option<ExhaustiveOptimum>> {
    let n = m.variables.len();
    if n > budget {
        return Err(Error::BudgetExceeded { needed: n as u128, budget: budget as u128 });
    }
    let mut e = Enumerator::new(m, true);
    if !e.consistent_at_root() {
        return Ok(None);
    }
    e.dfs(0);
    Ok(e.best.map(|(objective, values)| ExhaustiveOptimum { objective, values, nodes: e.nodes }))
}

/// Whether the `x`/`y` part of `asg` extends to a feasible point of `m`
/// (by choosing the auxiliary `z` and `u` variables). Bits set in `asg` for
/// variables the model does not carry make the point infeasible.
pub fn extends(m: &LinearModel, asg: &Assignment) -> bool {
    let (n_req, n_site, n_prb) = asg.dims();
    for i in 0..n_req {
        for b in 0..n_site {
            if asg.y(i, b) && m.var_index(&Var::Y { request: i, site: b }).is_none() {
                return false;
            }
            for f in 0..n_prb {
                if asg.x(i, b, f) && m.var_index(&Var::X { request: i, site: b, prb: f }).is_none() {
                    return false;
                }
            }
        }
    }
    let mut e = Enumerator::new(m, false);
    if !e.consistent_at_root() {
        return false;
    }
    let mut free = Vec::new();
    for (k, v) in m.variables.iter().enumerate() {
        let fixed = match v.var {
            Var::X { request, site, prb } => Some(asg.x(request, site, prb)),
            Var::Y { request, site } => Some(asg.y(request, site)),
            _ => None,
        };
        match fixed {
            Some(val) => {
                if !e.assign(k, val) {
                    return false;
                }
            }
            None => free.push(k),
        }
    }
    e.order = free;
    e.dfs(0);
    e.best.is_some()
}

/// Depth-first 0-1 enumeration with interval propagation on the rows.
struct Enumerator<'a> {
    m: &'a LinearModel,
    occurs: Vec<Vec<(usize, f64)>>,
    /// Smallest and largest lhs still reachable per row.
    lo: Vec<f64>,
    hi: Vec<f64>,
    values: Vec<bool>,
    obj_coef: Vec<f64>,
    obj_now: f64,
    /// Sum of positive objective coefficients of unassigned variables.
    obj_open: f64,
    order: Vec<usize>,
    optimize: bool,
    best: Option<(f64, Vec<bool>)>,
    nodes: u64,
}

impl<'a> Enumerator<'a> {
    fn new(m: &'a LinearModel, optimize: bool) -> Self {
        let n = m.variables.len();
        let mut occurs = vec![Vec::new(); n];
        let mut lo = vec![0.0; m.constraints.len()];
        let mut hi = vec![0.0; m.constraints.len()];
        for (c, row) in m.constraints.iter().enumerate() {
            for &(a, v) in &row.terms {
                occurs[v].push((c, a));
                lo[c] += a.min(0.0);
                hi[c] += a.max(0.0);
            }
        }
        let mut obj_coef = vec![0.0; n];
        for &(a, v) in &m.objective {
            obj_coef[v] += a;
        }
        let obj_open = obj_coef.iter().map(|a| a.max(0.0)).sum();
        Self {
            m,
            occurs,
            lo,
            hi,
            values: vec![false; n],
            obj_coef,
            obj_now: 0.0,
            obj_open,
            order: (0..n).collect(),
            optimize,
            best: None,
            nodes: 0,
        }
    }

    fn row_possible(&self, c: usize) -> bool {
        const TOL: f64 = 1e-9;
        let row = &self.m.constraints[c];
        match row.sense {
            Sense::Le => self.lo[c] <= row.rhs + TOL,
            Sense::Ge => self.hi[c] >= row.rhs - TOL,
            Sense::Eq => self.lo[c] <= row.rhs + TOL && self.hi[c] >= row.rhs - TOL,
        }
    }

    fn consistent_at_root(&self) -> bool {
        (0..self.m.constraints.len()).all(|c| self.row_possible(c))
    }

    fn shift(&mut self, v: usize, val: bool, undo: bool) {
        let s = if undo { -1.0 } else { 1.0 };
        for &(c, a) in &self.occurs[v] {
            let fixed = if val { a } else { 0.0 };
            self.lo[c] += s * (fixed - a.min(0.0));
            self.hi[c] += s * (fixed - a.max(0.0));
        }
        let a = self.obj_coef[v];
        self.obj_now += s * if val { a } else { 0.0 };
        self.obj_open -= s * a.max(0.0);
    }

    /// Fixes `v`; on failure the assignment is rolled back.
    fn assign(&mut self, v: usize, val: bool) -> bool {
        self.shift(v, val, false);
        self.values[v] = val;
        let ok = self.occurs[v].iter().all(|&(c, _)| self.row_possible(c));
        if !ok {
            self.shift(v, val, true);
        }
        ok
    }

    fn dfs(&mut self, depth: usize) {
        self.nodes += 1;
        if let Some((best, _)) = &self.best {
            if !self.optimize || self.obj_now + self.obj_open <= best + 1e-9 {
                return;
            }
        }
        if depth == self.order.len() {
            self.best = Some((self.obj_now, self.values.clone()));
            return;
        }
        let v = self.order[depth];
        for val in [true, false] {
            if self.assign(v, val) {
                self.dfs(depth + 1);
                self.shift(v, val, true);
            }
        }
        self.values[v] = false;
    }
}

#[cfg(test)]
mod tests;
