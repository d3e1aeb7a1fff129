use proptest::prelude::*;

use super::*;
use crate::domain::{CellSite, Grid, InterferenceMatrix, Request, SpectrumPlan};
use crate::feasibility::check;
use crate::oracle::{brute_force, tiny_scenario, TinyConfig, DEFAULT_BUDGET};
use crate::solver::{solve, SolveOptions};

fn one_site(bands: usize, prbs: usize, single_band: bool, reqs: Vec<Request>) -> Scenario {
    Scenario::new(
        Grid::new(1, 1).unwrap(),
        vec![CellSite { id: 0, tile: (0, 0), band_supported: vec![true; bands], single_band, coverage: vec![0] }],
        SpectrumPlan::uniform(bands, prbs).unwrap(),
        InterferenceMatrix::empty(1),
        reqs,
    )
    .unwrap()
}

/// Parsed LP file: objective terms, rows `(name, terms, sense, rhs)` and
/// binaries.
#[derive(Debug, Default)]
struct ParsedLp {
    objective: Vec<(f64, String)>,
    rows: Vec<(String, Vec<(f64, String)>, String, f64)>,
    binaries: Vec<String>,
}

fn parse_terms(tokens: &[&str]) -> Vec<(f64, String)> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &t in tokens {
        match t {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => match t.parse::<f64>() {
                Ok(v) => coef = Some(v),
                Err(_) => {
                    out.push((sign * coef.unwrap_or(1.0), t.to_string()));
                    sign = 1.0;
                    coef = None;
                }
            },
        }
    }
    out
}

/// Just enough of the LP grammar to read back what `lp_string` writes.
fn parse_lp(text: &str) -> ParsedLp {
    let mut lp = ParsedLp::default();
    let mut section = "";
    let mut pending = String::new();
    let flush = |pending: &mut String, section: &str, lp: &mut ParsedLp| {
        if pending.trim().is_empty() {
            pending.clear();
            return;
        }
        let (name, body) = pending.split_once(':').expect("named row");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if section == "max" {
            lp.objective = parse_terms(&tokens);
        } else {
            let k = tokens.iter().position(|t| ["<=", ">=", "="].contains(t)).expect("row sense");
            let rhs = tokens[k + 1].parse().unwrap();
            lp.rows.push((name.trim().to_string(), parse_terms(&tokens[..k]), tokens[k].to_string(), rhs));
        }
        pending.clear();
    };
    for line in text.lines() {
        match line.trim() {
            "Maximize" => section = "max",
            "Subject To" => {
                flush(&mut pending, section, &mut lp);
                section = "st";
            }
            "Binary" => {
                flush(&mut pending, section, &mut lp);
                section = "bin";
            }
            "End" => section = "end",
            body => match section {
                "bin" => lp.binaries.push(body.to_string()),
                "max" | "st" => {
                    if body.contains(':') {
                        flush(&mut pending, section, &mut lp);
                    }
                    pending.push(' ');
                    pending.push_str(body);
                }
                _ => panic!("text outside a section: {body}"),
            },
        }
    }
    lp
}

fn assert_round_trip(m: &LinearModel) {
    let lp = parse_lp(&lp_string(m));
    let name = |v: usize| m.variables[v].name.clone();
    let as_named = |terms: &[(f64, usize)]| -> Vec<(f64, String)> { terms.iter().map(|&(a, v)| (a, name(v))).collect() };
    assert_eq!(lp.objective, as_named(&m.objective));
    assert_eq!(lp.rows.len(), m.constraints.len());
    for (k, (row, c)) in lp.rows.iter().zip(&m.constraints).enumerate() {
        assert_eq!(row.0, format!("c{k}"));
        assert_eq!(row.1, as_named(&c.terms), "row {k}");
        assert_eq!(row.2, c.sense.symbol());
        assert_eq!(row.3, c.rhs);
    }
    let names: Vec<String> = m.variables.iter().map(|v| v.name.clone()).collect();
    assert_eq!(lp.binaries, names);
}

#[test]
fn unit_demands_need_no_auxiliaries() {
    let s = one_site(2, 4, false, vec![Request::new(0, 0, 1), Request::new(1, 0, 1)]);
    let m = linearize(&s, &LinearizeOptions::default());
    assert_eq!(m.count_vars(VarKind::ZAux), 0);
    assert_eq!(m.count_vars(VarKind::BandUse), 0);
    assert_eq!(m.count_vars(VarKind::X), 16);
    assert_eq!(m.count_vars(VarKind::Y), 2);
}

#[test]
fn mccormick_is_exact_at_binary_points() {
    let mut m = LinearModel::default();
    let a = m.add_var("x_0_0_0", Var::X { request: 0, site: 0, prb: 0 });
    let b = m.add_var("x_0_0_1", Var::X { request: 0, site: 0, prb: 1 });
    let z = m.add_var("z_0_0_0", Var::Z { request: 0, site: 0, prb: 0 });
    m.add_constraint(Family::McCormick, vec![(1.0, z), (-1.0, a)], Sense::Le, 0.0);
    m.add_constraint(Family::McCormick, vec![(1.0, z), (-1.0, b)], Sense::Le, 0.0);
    m.add_constraint(Family::McCormick, vec![(1.0, z), (-1.0, a), (-1.0, b)], Sense::Ge, -1.0);
    for bits in 0..8u8 {
        let v = [bits & 1 == 1, bits & 2 == 2, bits & 4 == 4];
        assert_eq!(m.evaluate(&v).is_some(), v[2] == (v[0] && v[1]), "{v:?}");
    }
}

#[test]
fn every_product_has_its_envelope() {
    let s = one_site(2, 5, true, vec![Request::new(0, 0, 3), Request::new(1, 0, 2)]);
    let m = linearize(&s, &LinearizeOptions::default());
    // windows of 5 PRBs have 4 adjacent pairs per band, per request
    assert_eq!(m.count_vars(VarKind::ZAux), 2 * 2 * 4);
    assert_eq!(m.count_constraints(Family::McCormick), 3 * m.count_vars(VarKind::ZAux));
    assert_eq!(m.count_vars(VarKind::BandUse), 2);
    assert_eq!(m.count_constraints(Family::BandChoice), 1);
    let mut names: Vec<&str> = m.variables.iter().map(|v| v.name.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    assert_eq!(names.len(), m.variables.len());
}

#[test]
fn names_follow_the_grammar() {
    let s = one_site(2, 3, true, vec![Request::new(7, 0, 2)]);
    let m = linearize(&s, &LinearizeOptions::default());
    let names: Vec<&str> = m.variables.iter().map(|v| v.name.as_str()).collect();
    for expected in ["y_7_0", "x_7_0_0", "x_7_0_5", "z_7_0_0", "z_7_0_4", "u_0_0", "u_0_1"] {
        assert!(names.contains(&expected), "{expected} missing from {names:?}");
    }
    // no product across the band boundary between PRBs 2 and 3
    assert!(!names.contains(&"z_7_0_2"));
}

#[test]
fn empty_model_lp() {
    assert_eq!(lp_string(&LinearModel::default()), "Maximize\n obj:\nSubject To\nBinary\nEnd\n");
}

#[test]
fn single_row_lp() {
    let mut m = LinearModel::default();
    let a = m.add_var("x_0_0_0", Var::X { request: 0, site: 0, prb: 0 });
    let b = m.add_var("x_1_0_0", Var::X { request: 1, site: 0, prb: 0 });
    m.add_constraint(Family::Capacity, vec![(1.0, a), (1.0, b)], Sense::Le, 1.0);
    let text = lp_string(&m);
    let rows: Vec<&str> = text.lines().filter(|l| l.contains("<=")).collect();
    assert_eq!(rows, vec![" c0: x_0_0_0 + x_1_0_0 <= 1"]);
}

#[test]
fn lp_round_trips_through_a_reader() {
    let cfg = TinyConfig::default();
    for k in 0..20 {
        let s = tiny_scenario(&cfg, 5, k).unwrap();
        for variable_reduction in [true, false] {
            assert_round_trip(&linearize(&s, &LinearizeOptions { variable_reduction }));
        }
    }
}

#[test]
fn export_writes_the_lp_text() {
    let s = one_site(1, 4, false, vec![Request::new(0, 0, 2).with_weight(2.5)]);
    let m = linearize(&s, &LinearizeOptions::default());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.lp");
    export_lp(&m, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, lp_string(&m));
    assert!(text.starts_with("Maximize\n obj: 2.5 y_0_0\n"));
    assert!(export_lp(&m, dir.path().join("missing/model.lp")).is_err());
}

#[test]
fn exhaustive_trivial_models() {
    let mut m = LinearModel::default();
    let y = m.add_var("y_0_0", Var::Y { request: 0, site: 0 });
    m.objective.push((1.0, y));
    assert_eq!(solve_exhaustive(&m, DEFAULT_EXHAUSTIVE_BUDGET).unwrap().unwrap().objective, 1.0);

    let mut m = LinearModel::default();
    let x = m.add_var("x_0_0_0", Var::X { request: 0, site: 0, prb: 0 });
    m.add_constraint(Family::Capacity, vec![(1.0, x)], Sense::Le, 0.0);
    m.add_constraint(Family::Capacity, vec![(1.0, x)], Sense::Ge, 1.0);
    assert!(solve_exhaustive(&m, DEFAULT_EXHAUSTIVE_BUDGET).unwrap().is_none());
}

#[test]
fn exhaustive_refuses_large_models() {
    let s = one_site(1, 30, false, vec![Request::new(0, 0, 2)]);
    let m = linearize(&s, &LinearizeOptions::default());
    assert!(matches!(solve_exhaustive(&m, DEFAULT_EXHAUSTIVE_BUDGET), Err(Error::BudgetExceeded { .. })));
}

/// Tiny scenarios whose model fits `budget` variables.
pub(crate) fn small_models(seed: u64, count: usize, budget: usize) -> Vec<(Scenario, LinearModel)> {
    let cfg = TinyConfig {
        sites: 1..=2,
        bands: 1..=2,
        prbs_per_band: 2..=4,
        max_total_prbs: Some(6),
        requests: 1..=3,
        demand: 1..=3,
        ..TinyConfig::default()
    };
    let mut out = Vec::new();
    let mut k = 0;
    while out.len() < count {
        let s = tiny_scenario(&cfg, seed, k).unwrap();
        k += 1;
        let m = linearize(&s, &LinearizeOptions::default());
        if m.variables.len() <= budget {
            out.push((s, m));
        }
    }
    out
}

#[test]
fn exhaustive_optimum_matches_oracle_and_solver() {
    for (s, m) in small_models(3, 40, 40) {
        let opt = solve_exhaustive(&m, 40).unwrap().expect("all-zero point is feasible");
        assert_eq!(m.evaluate(&opt.values), Some(opt.objective));
        let truth = brute_force(&s, DEFAULT_BUDGET).unwrap().objective;
        assert_eq!(opt.objective, truth);
        assert_eq!(solve(&s, &SolveOptions::default()).unwrap().objective, truth);
    }
}

/// Every `(x, y)` bitmap of `s`, as assignments.
fn all_points(s: &Scenario) -> impl Iterator<Item = crate::feasibility::Assignment> + '_ {
    let (n_req, n_site, n_prb) = (s.num_requests(), s.num_sites(), s.spectrum().total_prbs());
    let bits = n_req * n_site * (n_prb + 1);
    (0u64..1 << bits).map(move |mask| {
        let mut asg = crate::feasibility::Assignment::for_scenario(s);
        let mut k = 0;
        for i in 0..n_req {
            for b in 0..n_site {
                asg.set_y(i, b, mask >> k & 1 == 1);
                k += 1;
                for f in 0..n_prb {
                    asg.set_x(i, b, f, mask >> k & 1 == 1);
                    k += 1;
                }
            }
        }
        asg
    })
}

#[test]
fn projection_matches_the_validator() {
    let sb = one_site(2, 2, true, vec![Request::new(0, 0, 2), Request::new(1, 0, 1)]);
    let two = Scenario::new(
        Grid::new(1, 2).unwrap(),
        vec![
            CellSite { id: 0, tile: (0, 0), band_supported: vec![true], single_band: false, coverage: vec![0, 1] },
            CellSite { id: 1, tile: (0, 1), band_supported: vec![true], single_band: false, coverage: vec![1] },
        ],
        SpectrumPlan::uniform(1, 3).unwrap(),
        InterferenceMatrix::from_pairs(2, [(0, 1)]).unwrap(),
        vec![Request::new(0, 1, 2), Request::new(1, 0, 1)],
    )
    .unwrap();
    for s in [sb, two] {
        for variable_reduction in [true, false] {
            let m = linearize(&s, &LinearizeOptions { variable_reduction });
            for asg in all_points(&s) {
                assert_eq!(extends(&m, &asg), check(&s, &asg).unwrap().is_empty());
            }
        }
    }
}

#[test]
fn fig4_variable_counts_are_in_range() {
    use crate::domain::{generate_scenario, SimConfig};
    use crate::reduction::{group_scenario, GroupingMode};
    // x + y counts with VR and PG at I=20, B=50, W=2, from the right panel
    for (k, expected) in [(23usize, 687.7), (138, 161.52)] {
        let cfg = SimConfig { num_sites: 50, num_bands: 2, num_requests: 20, group_size: k, runs: 20, ..SimConfig::default() };
        let mut total = 0.0;
        for r in 0..cfg.runs as u64 {
            let s = generate_scenario(&cfg, r).unwrap();
            let g = group_scenario(&s, k, GroupingMode::RoundUp).unwrap();
            let m = linearize(g.scenario(), &LinearizeOptions::default());
            total += (m.count_vars(VarKind::X) + m.count_vars(VarKind::Y)) as f64;
        }
        let mean = total / cfg.runs as f64;
        assert!((mean / expected - 1.0).abs() < 0.1, "K={k}: {mean} vs {expected}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn solver_points_extend(seed in any::<u64>(), k in 0u64..1000) {
        let s = tiny_scenario(&TinyConfig::default(), seed, k).unwrap();
        let sol = solve(&s, &SolveOptions::default()).unwrap();
        let asg = crate::solver::to_assignment(&sol, &s).unwrap();
        let m = linearize(&s, &LinearizeOptions::default());
        prop_assert!(extends(&m, &asg));
    }

    #[test]
    fn lp_round_trip(seed in any::<u64>(), k in 0u64..1000) {
        let s = tiny_scenario(&TinyConfig::default(), seed, k).unwrap();
        assert_round_trip(&linearize(&s, &LinearizeOptions::default()));
    }
}

#[test]
fn family_counts_cover_every_row() {
    let s = tiny_scenario(&TinyConfig::default(), 1, 2).unwrap();
    let m = linearize(&s, &LinearizeOptions::default());
    let families = [
        Family::OneSite,
        Family::Capacity,
        Family::Interference,
        Family::Demand,
        Family::Locality,
        Family::Contiguity,
        Family::McCormick,
        Family::BandUse,
        Family::BandChoice,
    ];
    assert_eq!(families.iter().map(|&f| m.count_constraints(f)).sum::<usize>(), m.constraints.len());
}
