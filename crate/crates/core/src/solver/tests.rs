use proptest::prelude::*;

use super::*;
use crate::domain::{CellSite, Grid, InterferenceMatrix, Request, SpectrumPlan};
use crate::feasibility::check;
use crate::oracle::{brute_force, tiny_scenario, TinyConfig, DEFAULT_BUDGET};

/// Sites on a 1×n strip, site `b` covering exactly area `b`.
fn strip(n_sites: usize, bands: usize, prbs: usize, pairs: &[(usize, usize)], reqs: Vec<Request>) -> Scenario {
    let grid = Grid::new(1, n_sites).unwrap();
    let sites = (0..n_sites)
        .map(|b| CellSite { id: b, tile: (0, b), band_supported: vec![true; bands], single_band: false, coverage: vec![b] })
        .collect();
    Scenario::new(
        grid,
        sites,
        SpectrumPlan::uniform(bands, prbs).unwrap(),
        InterferenceMatrix::from_pairs(n_sites, pairs.iter().copied()).unwrap(),
        reqs,
    )
    .unwrap()
}

fn objective_of(s: &Scenario) -> f64 {
    solve(s, &SolveOptions::default()).unwrap().objective
}

#[test]
fn independent_sites_both_accepted() {
    let s = strip(2, 1, 10, &[], vec![Request::new(0, 0, 3), Request::new(1, 1, 3)]);
    let sol = solve(&s, &SolveOptions::default()).unwrap();
    assert_eq!(sol.objective, 2.0);
    assert!(sol.optimal);
    assert!(check(&s, &to_assignment(&sol, &s).unwrap()).unwrap().is_empty());
}

#[test]
fn windows_that_cannot_share_four_prbs() {
    let s = strip(1, 1, 4, &[], vec![Request::new(0, 0, 2), Request::new(1, 0, 3)]);
    assert_eq!(objective_of(&s), 1.0);
}

#[test]
fn interfering_pair_cannot_reuse_prbs() {
    let s = strip(2, 1, 2, &[(0, 1)], vec![Request::new(0, 0, 2), Request::new(1, 1, 2)]);
    assert_eq!(objective_of(&s), 1.0);
    let s = strip(2, 1, 2, &[], vec![Request::new(0, 0, 2), Request::new(1, 1, 2)]);
    assert_eq!(objective_of(&s), 2.0);
}

#[test]
fn value_beats_count() {
    // the heavy request needs the whole band, each light one needs half
    let reqs = vec![Request::new(0, 0, 4).with_weight(5.0), Request::new(1, 0, 2), Request::new(2, 0, 2)];
    let s = strip(1, 1, 4, &[], reqs);
    let sol = solve(&s, &SolveOptions::default()).unwrap();
    assert_eq!(sol.objective, 5.0);
    assert_eq!(sol.accepted.len(), 1);
    assert_eq!(sol.accepted[0].request, 0);
}

#[test]
fn empty_scenario() {
    let s = strip(1, 1, 4, &[], vec![]);
    let sol = solve(&s, &SolveOptions::default()).unwrap();
    assert_eq!(sol.objective, 0.0);
    assert!(sol.accepted.is_empty() && sol.optimal);
}

#[test]
fn single_band_site_uses_one_band() {
    let mut s = strip(1, 2, 3, &[], vec![Request::new(0, 0, 3), Request::new(1, 0, 3)]);
    assert_eq!(objective_of(&s), 2.0);
    let mut sites = s.sites().to_vec();
    sites[0].single_band = true;
    s = Scenario::new(*s.grid(), sites, s.spectrum().clone(), s.interference().clone(), s.requests().to_vec())
        .unwrap();
    assert_eq!(objective_of(&s), 1.0);
}

#[test]
fn assignment_of_empty_solution_is_zero() {
    let s = strip(2, 1, 4, &[], vec![Request::new(0, 0, 2)]);
    let asg = to_assignment(&Solution::empty(), &s).unwrap();
    assert_eq!(asg, crate::feasibility::Assignment::for_scenario(&s));
}

#[test]
fn assignment_expands_window() {
    let s = strip(2, 1, 8, &[], vec![Request::new(0, 1, 2)]);
    let p = Placement { request: 0, site: 1, band: 0, start: 3, length: 2 };
    let asg = to_assignment(&Solution::from_placements(&s, vec![p]), &s).unwrap();
    for b in 0..2 {
        assert_eq!(asg.y(0, b), b == 1);
        for f in 0..8 {
            assert_eq!(asg.x(0, b, f), b == 1 && (f == 3 || f == 4), "b={b} f={f}");
        }
    }
}

#[test]
fn assignment_rejects_unknown_ids() {
    let s = strip(1, 1, 4, &[], vec![Request::new(0, 0, 2)]);
    let bad_req = Placement { request: 9, site: 0, band: 0, start: 0, length: 2 };
    let bad_site = Placement { request: 0, site: 4, band: 0, start: 0, length: 2 };
    assert!(to_assignment(&Solution::from_placements(&s, vec![bad_req]), &s).is_err());
    assert!(to_assignment(&Solution::from_placements(&s, vec![bad_site]), &s).is_err());
}

#[test]
fn solution_json_round_trip() {
    let s = strip(2, 1, 6, &[(0, 1)], vec![Request::new(0, 0, 2), Request::new(1, 1, 3)]);
    let sol = solve(&s, &SolveOptions::default()).unwrap();
    let text = sol.to_json(false).unwrap();
    let back = Solution::from_json(&text).unwrap();
    assert_eq!(back.accepted, sol.accepted);
    assert_eq!(back.objective, sol.objective);
    assert!(Solution::from_json(r#"{"objective":0,"optimal":true,"accepted":[],"stats":{"nodes":0,"prunes":0,"wall_time_ms":0},"extra":1}"#).is_err());
}

#[test]
fn reserved_spectrum_is_respected() {
    let s = strip(2, 1, 4, &[(0, 1)], vec![Request::new(0, 1, 2)]);
    let held = Placement { request: 99, site: 0, band: 0, start: 0, length: 3 };
    let sol = solve_with_reserved(&s, &[held], &SolveOptions::default()).unwrap();
    assert_eq!(sol.objective, 0.0);
    let held = Placement { length: 2, ..held };
    let sol = solve_with_reserved(&s, &[held], &SolveOptions::default()).unwrap();
    assert_eq!(sol.accepted, vec![Placement { request: 0, site: 1, band: 0, start: 2, length: 2 }]);
}

#[test]
fn grouped_solve_is_feasible_and_records_rounding() {
    let s = strip(1, 1, 12, &[], vec![Request::new(0, 0, 5), Request::new(1, 0, 4)]);
    let opts = SolveOptions { group_size: GroupSize::Fixed(4), ..Default::default() };
    let sol = solve(&s, &opts).unwrap();
    assert_eq!(sol.objective, 2.0);
    assert_eq!(sol.stats.over_allocated_prbs, 3);
    assert!(check(&s, &to_assignment(&sol, &s).unwrap()).unwrap().is_empty());
}

#[test]
fn group_size_parsing() {
    assert_eq!("auto".parse::<GroupSize>(), Ok(GroupSize::Auto));
    assert_eq!("0".parse::<GroupSize>(), Ok(GroupSize::Auto));
    assert_eq!("1".parse::<GroupSize>(), Ok(GroupSize::Off));
    assert_eq!("23".parse::<GroupSize>(), Ok(GroupSize::Fixed(23)));
    assert!("x".parse::<GroupSize>().is_err());
}

#[test]
fn matches_oracle_on_fixed_seeds() {
    let cfg = TinyConfig::default();
    for k in 0..60 {
        let s = tiny_scenario(&cfg, 11, k).unwrap();
        let sol = solve(&s, &SolveOptions::default()).unwrap();
        let truth = brute_force(&s, DEFAULT_BUDGET).unwrap();
        assert_eq!(sol.objective, truth.objective, "instance {k}");
        assert_eq!(sol.accepted, truth.accepted, "instance {k}");
    }
}

fn scaled(s: &Scenario, factor: f64) -> Scenario {
    let reqs = s.requests().iter().map(|r| r.clone().with_weight(r.weight * factor)).collect();
    s.with_requests(reqs).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solutions_are_validator_clean(seed in any::<u64>(), k in 0u64..1000) {
        let s = tiny_scenario(&TinyConfig::default(), seed, k).unwrap();
        let sol = solve(&s, &SolveOptions::default()).unwrap();
        let asg = to_assignment(&sol, &s).unwrap();
        prop_assert!(check(&s, &asg).unwrap().is_empty());
        prop_assert_eq!(crate::feasibility::objective(&s, &asg), sol.objective);
    }

    #[test]
    fn pruning_never_changes_the_optimum(seed in any::<u64>(), k in 0u64..1000) {
        let s = tiny_scenario(&TinyConfig::default(), seed, k).unwrap();
        let with = solve(&s, &SolveOptions::default()).unwrap();
        let without = solve(&s, &SolveOptions { prune: false, ..Default::default() }).unwrap();
        prop_assert_eq!(with.objective, without.objective);
        prop_assert_eq!(with.accepted, without.accepted);
    }

    #[test]
    fn deterministic(seed in any::<u64>(), k in 0u64..1000) {
        let s = tiny_scenario(&TinyConfig::default(), seed, k).unwrap();
        let a = solve(&s, &SolveOptions::default()).unwrap();
        let b = solve(&s, &SolveOptions::default()).unwrap();
        prop_assert_eq!(a.accepted, b.accepted);
        prop_assert_eq!(a.stats.nodes, b.stats.nodes);
    }

    #[test]
    fn weight_scaling(seed in any::<u64>(), k in 0u64..1000, factor in prop::sample::select(vec![2.0, 0.5, 3.0, 10.0])) {
        let s = tiny_scenario(&TinyConfig::default(), seed, k).unwrap();
        let base = solve(&s, &SolveOptions::default()).unwrap();
        let big = solve(&scaled(&s, factor), &SolveOptions::default()).unwrap();
        prop_assert!((big.objective - factor * base.objective).abs() < 1e-9);
        let accepted_value: f64 = big
            .accepted
            .iter()
            .map(|p| s.requests()[s.request_index(p.request).unwrap()].weight)
            .sum();
        prop_assert!((accepted_value - base.objective).abs() < 1e-9);
    }

    #[test]
    fn adding_a_request_never_hurts(seed in any::<u64>(), k in 0u64..1000, demand in 1usize..5, pick in any::<prop::sample::Index>()) {
        let s = tiny_scenario(&TinyConfig::default(), seed, k).unwrap();
        let before = objective_of(&s);
        let areas: Vec<usize> = s.sites().iter().flat_map(|b| b.coverage.iter().copied()).collect();
        let mut reqs = s.requests().to_vec();
        reqs.push(Request::new(100, *pick.get(&areas), demand));
        let after = objective_of(&s.with_requests(reqs).unwrap());
        prop_assert!(after >= before);
    }

    #[test]
    fn removing_a_site_never_helps(seed in any::<u64>(), k in 0u64..1000) {
        let s = tiny_scenario(&TinyConfig::default(), seed, k).unwrap();
        prop_assume!(s.num_sites() > 1);
        let before = objective_of(&s);
        // drop the last site by removing all its band support and coverage
        let mut sites = s.sites().to_vec();
        let last = sites.len() - 1;
        sites[last].band_supported.iter_mut().for_each(|v| *v = false);
        let reduced = Scenario::new(
            *s.grid(), sites, s.spectrum().clone(), s.interference().clone(), s.requests().to_vec(),
        ).unwrap();
        prop_assert!(objective_of(&reduced) <= before);
    }
}
