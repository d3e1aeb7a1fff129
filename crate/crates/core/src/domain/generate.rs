use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

use super::{
    compute_coverage, compute_interference, CellSite, Grid, Request, RetryPolicy, Scenario,
    SimConfig, SitePlacement, SpectrumPlan,
};

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha8 stream for run `run_index` of a campaign seeded with `seed`.
///
/// The 32-byte key is four successive SplitMix64 outputs starting from
/// `seed ^ splitmix64(run_index)`, little-endian.
pub fn run_rng(seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut state = seed ^ splitmix64(run_index);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Deterministic scenario for run `run_index` of `cfg`.
///
/// Draw order: site tiles, then one `U[0,1)` per (site, band) for band
/// support, one per site for the single-band flag, then per request its area
/// (uniform over the union of coverage sets) and its demand.
pub fn generate_scenario(cfg: &SimConfig, run_index: u64) -> Result<Scenario> {
    cfg.validate()?;
    let grid = Grid::new(cfg.rows, cfg.cols)?;
    let spectrum = SpectrumPlan::uniform(cfg.num_bands, cfg.prbs_per_band)?;
    let mut rng = run_rng(cfg.seed, run_index);

    let tiles = site_tiles(cfg, &grid, &mut rng)?;
    let mut sites = Vec::with_capacity(tiles.len());
    for (id, tile) in tiles.into_iter().enumerate() {
        let coverage = compute_coverage(tile, &grid, cfg.coverage_radius)?;
        sites.push(CellSite { id, tile, band_supported: Vec::new(), single_band: false, coverage });
    }
    for site in &mut sites {
        site.band_supported = (0..cfg.num_bands)
            .map(|_| rng.random::<f64>() >= cfg.p_ns)
            .collect();
    }
    for site in &mut sites {
        site.single_band = rng.random::<f64>() < cfg.p_sb;
    }
    let interference = compute_interference(&sites);

    let mut covered: Vec<usize> = sites.iter().flat_map(|s| s.coverage.iter().copied()).collect();
    covered.sort_unstable();
    covered.dedup();

    let unit = cfg.demand_unit();
    let (lo, hi) = cfg.demand_blocks();
    let mut requests = Vec::with_capacity(cfg.num_requests);
    if !covered.is_empty() {
        for id in 0..cfg.num_requests {
            let area = covered[rng.random_range(0..covered.len())];
            let demand = unit * rng.random_range(lo..=hi);
            requests.push(Request {
                id,
                tenant: id % cfg.num_tenants,
                area,
                demand,
                weight: 1.0,
                retry_policy: RetryPolicy::KeepInBuffer,
            });
        }
    }
    Scenario::new(grid, sites, spectrum, interference, requests)
}

fn site_tiles(cfg: &SimConfig, grid: &Grid, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>> {
    let a = grid.area_count();
    let b = cfg.num_sites;
    if b > a {
        return invalid(format!("cannot place {b} sites on {a} distinct tiles"));
    }
    let ids: Vec<usize> = match cfg.placement {
        SitePlacement::Random => index::sample(rng, a, b).into_vec(),
        // k * A / B + A / (2B), strictly increasing for B <= A
        SitePlacement::Lattice => (0..b).map(|k| (2 * k * a + a) / (2 * b)).collect(),
    };
    Ok(ids.into_iter().map(|id| grid.tile(id).expect("tile id in range")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SimConfig {
        SimConfig { num_sites: 20, num_requests: 30, seed: 42, ..Default::default() }
    }

    #[test]
    fn deterministic_per_run() {
        let a = generate_scenario(&cfg(), 3).unwrap();
        let b = generate_scenario(&cfg(), 3).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        let c = generate_scenario(&cfg(), 4).unwrap();
        assert_ne!(a.to_json().unwrap(), c.to_json().unwrap());
    }

    #[test]
    fn distinct_tiles_and_covered_requests() {
        let s = generate_scenario(&cfg(), 0).unwrap();
        let mut tiles: Vec<_> = s.sites().iter().map(|x| x.tile).collect();
        tiles.sort();
        tiles.dedup();
        assert_eq!(tiles.len(), 20);
        for r in 0..s.num_requests() {
            assert!((0..s.num_sites()).any(|b| s.covers(r, b)));
            assert_eq!(s.requests()[r].demand % 23, 0);
            assert!((23..=138).contains(&s.requests()[r].demand));
        }
    }

    #[test]
    fn paper_spectrum_size() {
        let s = generate_scenario(&SimConfig { num_bands: 5, ..cfg() }, 0).unwrap();
        assert_eq!(s.spectrum().total_prbs(), 138 * 5);
    }

    #[test]
    fn probability_extremes() {
        let s = generate_scenario(&SimConfig { p_ns: 1.0, ..cfg() }, 0).unwrap();
        assert!(s.sites().iter().all(|x| x.band_supported.iter().all(|&b| !b)));
        let s = generate_scenario(&SimConfig { p_ns: 0.0, p_sb: 0.0, ..cfg() }, 0).unwrap();
        assert!(s.sites().iter().all(|x| x.band_supported.iter().all(|&b| b)));
        assert!(s.sites().iter().all(|x| !x.single_band));
        let s = generate_scenario(&SimConfig { p_sb: 1.0, ..cfg() }, 0).unwrap();
        assert!(s.sites().iter().all(|x| x.single_band));
    }

    #[test]
    fn too_many_sites() {
        let c = SimConfig { rows: 2, cols: 2, num_sites: 5, ..cfg() };
        assert!(generate_scenario(&c, 0).is_err());
    }

    #[test]
    fn lattice_placement_is_fixed() {
        let c = SimConfig { placement: SitePlacement::Lattice, ..cfg() };
        let a = generate_scenario(&c, 0).unwrap();
        let b = generate_scenario(&c, 1).unwrap();
        let ta: Vec<_> = a.sites().iter().map(|s| s.tile).collect();
        let tb: Vec<_> = b.sites().iter().map(|s| s.tile).collect();
        assert_eq!(ta, tb);
        let mut d = ta.clone();
        d.dedup();
        assert_eq!(d.len(), 20);
    }
}
