use crate::error::{invalid, Result};

use super::{AreaId, CellSite, Grid};

/// Default coverage radius `3*sqrt(2)/2`, in tile widths.
pub const DEFAULT_COVERAGE_RADIUS: f64 = 1.5 * std::f64::consts::SQRT_2;

// Slack for radii whose square is meant to be an exact integer or half-integer.
const DIST_EPS: f64 = 1e-9;

/// Areas whose center lies within `radius` tile widths of `tile`'s center.
/// The boundary is inclusive and the result is sorted.
pub fn compute_coverage(tile: (usize, usize), grid: &Grid, radius: f64) -> Result<Vec<AreaId>> {
    if !grid.contains(tile) {
        return invalid(format!(
            "tile ({}, {}) is outside the {}x{} grid",
            tile.0,
            tile.1,
            grid.rows(),
            grid.cols()
        ));
    }
    if !(radius >= 0.0) || !radius.is_finite() {
        return invalid(format!("coverage radius must be a finite non-negative number, got {radius}"));
    }
    let reach = radius.floor() as usize;
    let limit = radius * radius + DIST_EPS;
    let (r0, c0) = tile;
    let mut out = Vec::new();
    for r in r0.saturating_sub(reach)..=(r0 + reach).min(grid.rows() - 1) {
        for c in c0.saturating_sub(reach)..=(c0 + reach).min(grid.cols() - 1) {
            let dr = r as f64 - r0 as f64;
            let dc = c as f64 - c0 as f64;
            if dr * dr + dc * dc <= limit {
                out.push(r * grid.cols() + c);
            }
        }
    }
    Ok(out)
}

/// Symmetric site-by-site interference relation with a false diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InterferenceMatrix {
    n: usize,
    cells: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
}

impl InterferenceMatrix {
    pub fn empty(n: usize) -> Self {
        Self { n, cells: vec![false; n * n], neighbors: vec![Vec::new(); n] }
    }

    /// Builds the relation from unordered pairs. Self pairs and out-of-range
    /// indices are rejected; duplicates are harmless.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut m = Self::empty(n);
        for (a, b) in pairs {
            if a >= n || b >= n {
                return invalid(format!("interference pair [{a}, {b}] references a missing site"));
            }
            if a == b {
                return invalid(format!("site {a} cannot interfere with itself"));
            }
            m.cells[a * n + b] = true;
            m.cells[b * n + a] = true;
        }
        for a in 0..n {
            m.neighbors[a] = (0..n).filter(|&b| m.cells[a * n + b]).collect();
        }
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, a: usize, b: usize) -> bool {
        self.cells[a * self.n + b]
    }

    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.neighbors[site]
    }

    /// Interfering pairs `(a, b)` with `a < b`, in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| {
            self.neighbors[a].iter().copied().filter(move |&b| b > a).map(move |b| (a, b))
        })
    }
}

/// Two distinct sites interfere iff their coverage sets intersect.
pub fn compute_interference(sites: &[CellSite]) -> InterferenceMatrix {
    let mut pairs = Vec::new();
    for (a, sa) in sites.iter().enumerate() {
        for (b, sb) in sites.iter().enumerate().skip(a + 1) {
            if sorted_intersect(&sa.coverage, &sb.coverage) {
                pairs.push((a, b));
            }
        }
    }
    InterferenceMatrix::from_pairs(sites.len(), pairs).expect("pairs are in range by construction")
}

fn sorted_intersect(a: &[AreaId], b: &[AreaId]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}
