//! Problem instances: grid, spectrum, cell sites, requests, and the
//! deterministic generator used by the simulation campaigns.

mod config;
mod generate;
mod geometry;
mod grid;
mod scenario;
mod spectrum;

pub use config::{DemandModel, SimConfig, SitePlacement};
pub use generate::{generate_scenario, run_rng, splitmix64};
pub use geometry::{compute_coverage, compute_interference, InterferenceMatrix, DEFAULT_COVERAGE_RADIUS};
pub use grid::{generate_grid, AreaId, Grid};
pub use scenario::{CellSite, Request, RetryPolicy, Scenario, ScenarioDoc};
pub use spectrum::{Band, SpectrumPlan};

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn coverage_monotone_in_radius(
            rows in 1usize..8, cols in 1usize..8, r in 0usize..8, c in 0usize..8,
            r1 in 0.0f64..4.0, extra in 0.0f64..3.0,
        ) {
            let g = Grid::new(rows, cols).unwrap();
            let tile = (r % rows, c % cols);
            let small = compute_coverage(tile, &g, r1).unwrap();
            let big = compute_coverage(tile, &g, r1 + extra).unwrap();
            prop_assert!(small.contains(&g.area_id(tile).unwrap()));
            prop_assert!(small.iter().all(|a| big.contains(a)));
        }

        #[test]
        fn generated_interference_is_symmetric(seed in any::<u64>(), run in 0u64..50) {
            let cfg = SimConfig { num_sites: 12, num_requests: 4, seed, runs: 1, ..Default::default() };
            let s = generate_scenario(&cfg, run).unwrap();
            let m = s.interference();
            for a in 0..s.num_sites() {
                prop_assert!(!m.get(a, a));
                for b in 0..s.num_sites() {
                    prop_assert_eq!(m.get(a, b), m.get(b, a));
                }
            }
        }
    }
}
