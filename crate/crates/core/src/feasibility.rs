//! Literal evaluation of the allocation constraints over explicit 0-1
//! `(x, y)` values.
//!
//! Nothing here is shared with the solver: the quadratic contiguity and
//! single-band constraints are evaluated as products of 0-1 values, and
//! every violated instance is reported rather than stopping at the first.
//! Request and site positions in [`Witness`] are indices into the
//! scenario's lists.

use std::fmt;

use serde::Serialize;

use crate::domain::Scenario;
use crate::error::{invalid, Result};

/// Explicit `y[i][b]` and `x[i][b][f]` values, possibly infeasible.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment {
    requests: usize,
    sites: usize,
    prbs: usize,
    y: Vec<bool>,
    x: Vec<bool>,
}

impl Assignment {
    pub fn zeros(requests: usize, sites: usize, prbs: usize) -> Self {
        Self {
            requests,
            sites,
            prbs,
            y: vec![false; requests * sites],
            x: vec![false; requests * sites * prbs],
        }
    }

    pub fn for_scenario(s: &Scenario) -> Self {
        Self::zeros(s.num_requests(), s.num_sites(), s.spectrum().total_prbs())
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.requests, self.sites, self.prbs)
    }

    pub fn y(&self, i: usize, b: usize) -> bool {
        self.y[i * self.sites + b]
    }

    pub fn x(&self, i: usize, b: usize, f: usize) -> bool {
        self.x[(i * self.sites + b) * self.prbs + f]
    }

    pub fn set_y(&mut self, i: usize, b: usize, v: bool) {
        self.y[i * self.sites + b] = v;
    }

    pub fn set_x(&mut self, i: usize, b: usize, f: usize, v: bool) {
        self.x[(i * self.sites + b) * self.prbs + f] = v;
    }

    /// Raw `x` bits of request `i` at site `b`.
    pub fn x_row(&self, i: usize, b: usize) -> &[bool] {
        let start = (i * self.sites + b) * self.prbs;
        &self.x[start..start + self.prbs]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ConstraintKind {
    /// At most one serving site per request.
    C1OneSite,
    /// A PRB serves at most one request, and only on supported bands.
    C2Overprovision,
    /// Interfering sites never share a PRB.
    C3Interference,
    /// Exactly the demanded number of PRBs at the serving site.
    C4Demand,
    /// No variables at non-covering sites.
    C5Locality,
    /// The allocated PRBs form one run inside one band.
    C6Contiguity,
    /// Single-band sites use at most one band.
    C7SingleBand,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    Request { request: usize },
    RequestSite { request: usize, site: usize },
    SitePrb { site: usize, prb: usize },
    PairPrb { site: usize, other: usize, prb: usize },
    SiteBand { site: usize, band: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub constraint: ConstraintKind,
    pub witness: Witness,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {:?}", self.constraint, self.witness)
    }
}

/// Every violated constraint instance; empty iff the assignment is feasible.
pub fn check(s: &Scenario, asg: &Assignment) -> Result<Vec<Violation>> {
    let n_req = s.num_requests();
    let n_site = s.num_sites();
    let n_prb = s.spectrum().total_prbs();
    if asg.dims() != (n_req, n_site, n_prb) {
        return invalid(format!(
            "assignment dimensions {:?} do not match scenario ({n_req}, {n_site}, {n_prb})",
            asg.dims()
        ));
    }
    let beta = |b: usize, f: usize| u32::from(s.prb_supported(b, f));
    let xv = |i: usize, b: usize, f: usize| u32::from(asg.x(i, b, f));
    let yv = |i: usize, b: usize| u32::from(asg.y(i, b));
    let mut out = Vec::new();

    // (1) sum_b y[i][b] <= 1
    for i in 0..n_req {
        let sum: u32 = (0..n_site).map(|b| yv(i, b)).sum();
        if sum > 1 {
            out.push(Violation { constraint: ConstraintKind::C1OneSite, witness: Witness::Request { request: i } });
        }
    }

    // (2) sum_i x[i][b][f] <= beta[b][f]
    for b in 0..n_site {
        for f in 0..n_prb {
            let sum: u32 = (0..n_req).map(|i| xv(i, b, f)).sum();
            if sum > beta(b, f) {
                out.push(Violation {
                    constraint: ConstraintKind::C2Overprovision,
                    witness: Witness::SitePrb { site: b, prb: f },
                });
            }
        }
    }

    // (3) sum_i (x[i][b][f] beta[b][f] + x[i][b'][f] beta[b'][f]) <= 1
    for (b, b2) in s.interference().pairs() {
        for f in 0..n_prb {
            let sum: u32 = (0..n_req)
                .map(|i| xv(i, b, f) * beta(b, f) + xv(i, b2, f) * beta(b2, f))
                .sum();
            if sum > 1 {
                out.push(Violation {
                    constraint: ConstraintKind::C3Interference,
                    witness: Witness::PairPrb { site: b, other: b2, prb: f },
                });
            }
        }
    }

    // (4) sum_f x[i][b][f] beta[b][f] r[i][b] = delta_i y[i][b]
    for i in 0..n_req {
        let demand = s.requests()[i].demand as u32;
        for b in 0..n_site {
            let r = u32::from(s.covers(i, b));
            let lhs: u32 = (0..n_prb).map(|f| xv(i, b, f) * beta(b, f) * r).sum();
            if lhs != demand * yv(i, b) {
                out.push(Violation {
                    constraint: ConstraintKind::C4Demand,
                    witness: Witness::RequestSite { request: i, site: b },
                });
            }
        }
    }

    // (5) sum_{b not covering} (y[i][b] + sum_f x[i][b][f]) = 0
    for i in 0..n_req {
        let sum: u32 = (0..n_site)
            .filter(|&b| !s.covers(i, b))
            .map(|b| yv(i, b) + (0..n_prb).map(|f| xv(i, b, f)).sum::<u32>())
            .sum();
        if sum != 0 {
            out.push(Violation { constraint: ConstraintKind::C5Locality, witness: Witness::Request { request: i } });
        }
    }

    // (6) sum_f x[i][b][f] x[i][b][f+1] alpha(f, f+1) = (delta_i - 1) y[i][b]
    for i in 0..n_req {
        let demand = s.requests()[i].demand as u32;
        for b in 0..n_site {
            let lhs: u32 = (0..n_prb.saturating_sub(1))
                .map(|f| xv(i, b, f) * xv(i, b, f + 1) * u32::from(s.spectrum().adjacent(f, f + 1)))
                .sum();
            if lhs != (demand - 1) * yv(i, b) {
                out.push(Violation {
                    constraint: ConstraintKind::C6Contiguity,
                    witness: Witness::RequestSite { request: i, site: b },
                });
            }
        }
    }

    // (7) for single-band sites: (sum_{f in w} sum_i x) * (sum_{f not in w} sum_i x) = 0
    let spectrum = s.spectrum();
    for b in (0..n_site).filter(|&b| s.sites()[b].single_band) {
        let per_prb: Vec<u32> = (0..n_prb).map(|f| (0..n_req).map(|i| xv(i, b, f)).sum()).collect();
        let total: u32 = per_prb.iter().sum();
        for w in 0..spectrum.num_bands() {
            let inside: u32 = per_prb[spectrum.band_range(w)].iter().sum();
            if inside * (total - inside) != 0 {
                out.push(Violation {
                    constraint: ConstraintKind::C7SingleBand,
                    witness: Witness::SiteBand { site: b, band: w },
                });
            }
        }
    }

    Ok(out)
}

/// `sum_{i,b} y[i][b] w_i`.
pub fn objective(s: &Scenario, asg: &Assignment) -> f64 {
    let (n_req, n_site, _) = asg.dims();
    (0..n_req.min(s.num_requests()))
        .map(|i| {
            let count = (0..n_site).filter(|&b| asg.y(i, b)).count();
            count as f64 * s.requests()[i].weight
        })
        .sum()
}
