use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};
use std::time::Instant;

use crate::bitset::Bitset;
use crate::domain::{splitmix64, Scenario};
use crate::reduction::Placement;

pub(crate) struct SearchInput<'a> {
    pub scenario: &'a Scenario,
    pub placements: &'a [Vec<Placement>],
    /// `(site, prb)` cells held before the search starts.
    pub reserved: &'a [(usize, usize)],
    pub prune: bool,
    /// Branch on the most constrained request at each node instead of
    /// following the static order.
    pub dynamic: bool,
    pub deadline: Option<Instant>,
}

pub(crate) struct Outcome {
    pub chosen: Vec<Placement>,
    pub nodes: u64,
    pub prunes: u64,
    pub timed_out: bool,
    /// False when the smallest optimum was not confirmed within the node
    /// budget and another optimum was returned.
    pub canonical: bool,
}

/// Tolerance for comparing objective sums built in different orders.
pub(crate) fn objective_eps(s: &Scenario) -> f64 {
    1e-9 * (1.0 + s.requests().iter().map(|r| r.weight).sum::<f64>())
}

/// Splits request positions into groups that cannot affect each other: two
/// requests interact when one of their candidate sites coincide or
/// interfere. Each group keeps the relative order of `order`.
pub(crate) fn components(input: &SearchInput<'_>, order: &[usize]) -> Vec<Vec<usize>> {
    let s = input.scenario;
    let n = s.num_requests();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut by_site: Vec<Option<usize>> = vec![None; s.num_sites()];
    for (i, ps) in input.placements.iter().enumerate() {
        let mut sites: Vec<usize> = ps.iter().map(|p| p.site).collect();
        sites.dedup();
        for b in sites {
            match by_site[b] {
                None => by_site[b] = Some(i),
                Some(j) => union(&mut parent, i, j),
            }
        }
    }
    for (a, b) in s.interference().pairs() {
        if let (Some(i), Some(j)) = (by_site[a], by_site[b]) {
            union(&mut parent, i, j);
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for &i in order {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn union(parent: &mut [usize], a: usize, b: usize) {
    let (ra, rb) = (find(parent, a), find(parent, b));
    if ra != rb {
        parent[ra.max(rb)] = ra.min(rb);
    }
}

/// Fractional knapsack per group over `(group, weight, demand)` items.
fn knapsack(items: &mut [(usize, f64, usize)], caps: &[usize], integral: bool, eps: f64) -> f64 {
    items.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then_with(|| (b.1 / b.2 as f64).total_cmp(&(a.1 / a.2 as f64)))
    });
    let mut total = 0.0;
    let mut i = 0;
    while i < items.len() {
        let group = items[i].0;
        let mut left = caps[group];
        let mut value = 0.0;
        while i < items.len() && items[i].0 == group {
            let (_, w, d) = items[i];
            if left >= d {
                left -= d;
                value += w;
            } else if left > 0 {
                value += w * left as f64 / d as f64;
                left = 0;
            }
            i += 1;
        }
        total += if integral { (value + eps).floor() } else { value };
    }
    total
}

#[derive(Default)]
struct IdentityHasher(u64);

impl Hasher for IdentityHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = self.0.rotate_left(8) ^ u64::from(b);
        }
    }

    fn write_u128(&mut self, v: u128) {
        self.0 = v as u64;
    }
}

/// What is known about the best value of a subproblem.
#[derive(Clone, Copy)]
struct Known {
    upper: f64,
    exact: bool,
}

type Memo = HashMap<u128, Known, BuildHasherDefault<IdentityHasher>>;

/// Chosen `(request position, option)` pairs.
type Choice = Vec<(usize, usize)>;

const MEMO_CAPACITY: usize = 1 << 21;

/// Nodes granted to confirming the smallest optimum, on top of twice the
/// nodes spent finding the optimal value.
const EXTRACT_NODES: u64 = 50_000;

/// Node budget of each neighbourhood search during local improvement.
const IMPROVE_NODES: u64 = 2_000;
const IMPROVE_PASSES: usize = 3;

fn key128(a: u64) -> u128 {
    (u128::from(splitmix64(a)) << 64) | u128::from(splitmix64(a ^ 0xD6E8_FEB8_6659_FD93))
}

fn mix128(h: u128) -> u128 {
    key128(h as u64) ^ key128(((h >> 64) as u64) ^ 0x9E37_79B9_7F4A_7C15).rotate_left(64)
}

fn request_keys(reqs: &[Req]) -> Vec<u128> {
    let mut classes: Vec<(usize, usize, u64)> = Vec::new();
    reqs.iter()
        .map(|r| {
            let sig = (r.area_slot, r.demand, r.weight.to_bits());
            let class = classes.iter().position(|c| *c == sig).unwrap_or_else(|| {
                classes.push(sig);
                classes.len() - 1
            });
            key128((class as u64).wrapping_mul(0xA076_1D64_78BD_642F)) | 1
        })
        .collect()
}

/// Bron-Kerbosch with pivoting over an adjacency matrix.
fn maximal_cliques(adjacent: &[bool], n: usize) -> Vec<Vec<usize>> {
    fn expand(adj: &[bool], n: usize, r: &mut Vec<usize>, p: Vec<usize>, mut x: Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if p.is_empty() {
            if x.is_empty() {
                out.push(r.clone());
            }
            return;
        }
        let pivot = *p.iter().chain(&x).max_by_key(|&&u| p.iter().filter(|&&v| adj[u * n + v]).count()).expect("nonempty");
        let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot * n + v]).collect();
        let mut p = p;
        for v in candidates {
            r.push(v);
            let np = p.iter().copied().filter(|&u| adj[v * n + u]).collect();
            let nx = x.iter().copied().filter(|&u| adj[v * n + u]).collect();
            expand(adj, n, r, np, nx, out);
            r.pop();
            p.retain(|&u| u != v);
            x.push(v);
        }
    }
    let mut out = Vec::new();
    expand(adjacent, n, &mut Vec::new(), (0..n).collect(), Vec::new(), &mut out);
    out
}

struct Req {
    id: usize,
    weight: f64,
    demand: usize,
    area_slot: usize,
    options: Vec<Placement>,
    /// Distinct `(local site, band)` pairs among the options.
    site_bands: Vec<(usize, usize)>,
}

/// Per-node scratch space of the bound.
#[derive(Default)]
struct Scratch {
    usable: Vec<bool>,
    live: Vec<bool>,
    live_sites: Vec<usize>,
    live_degree: Vec<usize>,
    cliques: Vec<Vec<usize>>,
    clique_of: Vec<usize>,
    item_sites: Vec<Vec<usize>>,
    seeds: Vec<usize>,
    clique_cap: Vec<usize>,
    members: Vec<usize>,
    mask: Bitset,
    /// Undecided requests with a usable window: `(position, weight, demand)`.
    items: Vec<(usize, f64, usize)>,
    item_cliques: Vec<Vec<usize>>,
    flow: Vec<usize>,
    residual: Vec<usize>,
    parent: Vec<(usize, usize)>,
    seen: Vec<bool>,
    queue: Vec<usize>,
    uf: Vec<usize>,
    group_value: Vec<f64>,
    area_items: Vec<(usize, f64, usize)>,
    area_cap: Vec<usize>,
    sent: Vec<usize>,
    in_clique: Vec<bool>,
    confined: Vec<usize>,
    confined_items: Vec<(usize, f64, usize)>,
    /// `(loss, first, end)` ranges of `confined` per maximal clique.
    losses: Vec<(f64, usize, usize, (usize, usize))>,
    claimed: Vec<bool>,
    /// Best packed size of a run of each length; see [`Engine::packed_caps`].
    run_value: Vec<usize>,
    packed_cap: Vec<usize>,
}

pub(crate) struct Engine {
    reqs: Vec<Req>,
    /// Global site ids touched by this component; local index = position.
    sites: Vec<usize>,
    local_of: Vec<usize>,
    adjacent: Vec<bool>,
    single_band: Vec<bool>,
    supported: Vec<Vec<usize>>,
    area_sites: Vec<Vec<usize>>,
    /// Maximal cliques of mutually interfering local sites.
    max_cliques: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    band_ranges: Vec<(usize, usize)>,
    n_bands: usize,
    integral: bool,
    eps: f64,
    prune: bool,
    dynamic: bool,
    deadline: Option<Instant>,

    occ: Vec<Bitset>,
    blocked: Vec<Bitset>,
    /// Placements (or reserved cells) per global site and band.
    band_load: Vec<u32>,
    /// Free PRBs and longest free run per local site and band, refreshed
    /// lazily from `dirty`.
    free: Vec<usize>,
    run: Vec<usize>,
    dirty: Vec<bool>,

    /// Zobrist keys per local site and PRB offset inside a band; the second
    /// half marks cells blocked by sites outside the component.
    zobrist: Vec<u128>,
    max_band_len: usize,
    /// Bands with equal length and equal support at every site are
    /// interchangeable, and each band can be mirrored, so the memo key
    /// hashes every band both ways and sums the smaller hashes per class.
    band_salt: Vec<u128>,
    /// Occupancy hashes per local site and band, forward and mirrored.
    site_fwd: Vec<u128>,
    site_rev: Vec<u128>,
    outer_fwd: Vec<u128>,
    outer_rev: Vec<u128>,
    site_salt: Vec<u128>,
    /// Requests with equal area, demand and weight share a key; a request
    /// set hashes as the sum of its keys.
    req_keys: Vec<u128>,
    memo: Memo,
    /// Requests the bound looks at.
    active: Vec<bool>,
    stamp: Vec<u32>,
    epoch: u32,

    nodes: u64,
    prunes: u64,
    timed_out: bool,
    /// Set on timeout or when `node_cap` is reached; unwinds the search.
    halted: bool,
    node_cap: u64,
    canonical: bool,
    scratch: Scratch,
}

impl Engine {
    pub fn new(input: &SearchInput<'_>, component: &[usize]) -> Self {
        let s = input.scenario;
        let n_sites = s.num_sites();
        let n_bands = s.spectrum().num_bands();
        let n_prbs = s.spectrum().total_prbs();

        let mut sites: Vec<usize> = component
            .iter()
            .flat_map(|&i| input.placements[i].iter().map(|p| p.site))
            .collect();
        sites.sort_unstable();
        sites.dedup();
        let mut local_of = vec![usize::MAX; n_sites];
        for (l, &b) in sites.iter().enumerate() {
            local_of[b] = l;
        }
        let n_local = sites.len();

        let mut areas: Vec<usize> = component.iter().map(|&i| s.requests()[i].area).collect();
        areas.sort_unstable();
        areas.dedup();
        let mut area_sites: Vec<Vec<usize>> = vec![Vec::new(); areas.len()];
        let reqs: Vec<Req> = component
            .iter()
            .map(|&i| {
                let r = &s.requests()[i];
                let options = input.placements[i].clone();
                let mut site_bands: Vec<(usize, usize)> =
                    options.iter().map(|p| (local_of[p.site], p.band)).collect();
                site_bands.dedup();
                let area_slot = areas.binary_search(&r.area).expect("area listed");
                area_sites[area_slot].extend(site_bands.iter().map(|&(l, _)| l));
                Req { id: r.id, weight: r.weight, demand: r.demand, area_slot, options, site_bands }
            })
            .collect();
        for list in &mut area_sites {
            list.sort_unstable();
            list.dedup();
        }

        let mut occ = vec![Bitset::new(n_prbs); n_sites];
        let mut band_load = vec![0u32; n_sites * n_bands];
        for &(b, f) in input.reserved {
            occ[b].set_range(f, 1);
            let w = s.spectrum().band_of(f).expect("reserved cell in range");
            band_load[b * n_bands + w] += 1;
        }
        let neighbors: Vec<Vec<usize>> = (0..n_sites).map(|b| s.interference().neighbors(b).to_vec()).collect();
        let mut blocked = occ.clone();
        for b in 0..n_sites {
            for &nb in &neighbors[b] {
                blocked[b].or_with(&occ[nb]);
            }
        }

        let mut adjacent = vec![false; n_local * n_local];
        for a in 0..n_local {
            for b in 0..n_local {
                adjacent[a * n_local + b] = s.interference().get(sites[a], sites[b]);
            }
        }
        let max_cliques = maximal_cliques(&adjacent, n_local);
        let n_reqs = reqs.len();
        let scratch = Scratch {
            usable: vec![false; n_local * n_bands],
            live: vec![false; n_local],
            live_degree: vec![0; n_local],
            mask: Bitset::new(n_prbs),
            area_cap: vec![0; area_sites.len()],
            in_clique: vec![false; n_local],
            claimed: vec![false; n_reqs],
            ..Default::default()
        };

        Self {
            single_band: sites.iter().map(|&b| s.sites()[b].single_band).collect(),
            supported: sites
                .iter()
                .map(|&b| (0..n_bands).filter(|&w| s.sites()[b].supports(w)).collect())
                .collect(),
            band_ranges: (0..n_bands)
                .map(|w| {
                    let r = s.spectrum().band_range(w);
                    (r.start, r.len())
                })
                .collect(),
            integral: s.requests().iter().all(|r| r.weight.fract() == 0.0),
            eps: objective_eps(s),
            prune: input.prune,
            dynamic: input.dynamic,
            deadline: input.deadline,
            free: vec![0; n_local * n_bands],
            run: vec![0; n_local * n_bands],
            dirty: vec![true; n_local],
            zobrist: Vec::new(),
            max_band_len: (0..n_bands).map(|w| s.spectrum().band_range(w).len()).max().unwrap_or(0),
            band_salt: Vec::new(),
            site_fwd: vec![0; n_local * n_bands],
            site_rev: vec![0; n_local * n_bands],
            outer_fwd: vec![0; n_local * n_bands],
            outer_rev: vec![0; n_local * n_bands],
            site_salt: (0..n_local as u64).map(|l| key128(l ^ 0x51DE_5A17)).collect(),
            req_keys: request_keys(&reqs),
            memo: Memo::default(),
            active: vec![false; n_reqs],
            stamp: vec![0; n_local],
            epoch: 0,
            nodes: 0,
            prunes: 0,
            timed_out: false,
            halted: false,
            node_cap: u64::MAX,
            canonical: true,
            reqs,
            sites,
            local_of,
            adjacent,
            max_cliques,
            area_sites,
            neighbors,
            n_bands,
            occ,
            blocked,
            band_load,
            scratch,
        }
    }

    pub fn run(&mut self) -> Outcome {
        if self.prune {
            self.init_hashes();
        }
        let mut all: Vec<usize> = (0..self.reqs.len()).collect();
        all.sort_by_key(|&pos| self.reqs[pos].id);
        let found = if !self.prune {
            // plain search in id order finds the smallest optimum directly
            self.dynamic = false;
            self.solve_set(&all, f64::NEG_INFINITY)
        } else {
            let total: f64 = all.iter().map(|&pos| self.reqs[pos].weight).sum();
            let upper = total.min(self.bound_of(&all, f64::NEG_INFINITY));
            // the leftmost leaf in id order precedes every other leaf
            let first = self.dive(&all, false);
            if first.0 >= upper - self.eps {
                Some(first)
            } else {
                let other = self.dive(&all, true);
                let start = if other.0 > first.0 + self.eps { other } else { first };
                let incumbent = self.improve(&all, start, upper);
                let best = if incumbent.0 >= upper - self.eps {
                    Some(incumbent)
                } else if self.integral {
                    Some(self.descend(&all, upper, incumbent))
                } else {
                    let found = self.solve_set(&all, incumbent.0 + self.eps);
                    Some(self.better(found, incumbent))
                };
                match best {
                    Some((value, witness)) if !self.timed_out => {
                        let choice = self.smallest(&all, value, witness);
                        // the value is already proven; a late timeout only
                        // leaves the tie-break open
                        if self.timed_out {
                            self.timed_out = false;
                            self.canonical = false;
                        }
                        Some((value, choice))
                    }
                    other => other,
                }
            }
        };
        let chosen = found
            .map(|(_, choice)| choice.iter().map(|&(pos, o)| self.reqs[pos].options[o]).collect())
            .unwrap_or_default();
        Outcome {
            chosen,
            nodes: self.nodes,
            prunes: self.prunes,
            timed_out: self.timed_out,
            canonical: self.canonical && !self.timed_out,
        }
    }

    /// The lexicographically smallest choice worth `value`, given one such
    /// choice. Requests are fixed in id order; a placement earlier than the
    /// witness's is kept when the remaining requests can still make up the
    /// value, and the witness is replaced by the completion found.
    fn smallest(&mut self, all: &[usize], value: f64, witness: Choice) -> Choice {
        let n = self.reqs.len();
        let mut plan: Vec<Option<usize>> = vec![None; n];
        for &(pos, o) in &witness {
            plan[pos] = Some(o);
        }
        let slack = if self.integral { 0.5 } else { 3.0 * self.eps };
        self.node_cap = self.nodes.saturating_mul(2).saturating_add(EXTRACT_NODES);
        let mut need = value;
        let mut placed = Vec::new();
        for (k, &pos) in all.iter().enumerate() {
            let rest = &all[k + 1..];
            let weight = self.reqs[pos].weight;
            // past the budget the witness stands for the remaining requests
            let limit = if self.halted { 0 } else { plan[pos].unwrap_or(self.reqs[pos].options.len()) };
            for o in 0..limit {
                let p = self.reqs[pos].options[o];
                if !self.fits(&p) {
                    continue;
                }
                self.toggle(&p, true);
                let found = self.solve_set(rest, need - weight - slack);
                self.toggle(&p, false);
                if self.halted {
                    break;
                }
                if let Some((_, completion)) = found {
                    for &q in rest {
                        plan[q] = None;
                    }
                    for &(q, c) in &completion {
                        plan[q] = Some(c);
                    }
                    plan[pos] = Some(o);
                    break;
                }
            }
            if let Some(o) = plan[pos] {
                let p = self.reqs[pos].options[o];
                self.toggle(&p, true);
                placed.push(p);
                need -= weight;
            }
        }
        for p in placed.iter().rev() {
            self.toggle(p, false);
        }
        if self.halted && !self.timed_out {
            self.canonical = false;
            self.halted = false;
        }
        self.node_cap = u64::MAX;
        all.iter().filter_map(|&pos| plan[pos].map(|o| (pos, o))).collect()
    }

    /// Integral weights: asks for a value above `u - 1/2` for the root
    /// bound `u`, then `u - 3/2`, and so on down to the value of the first
    /// leaf. The first success is the optimum.
    fn descend(&mut self, all: &[usize], upper: f64, incumbent: (f64, Choice)) -> (f64, Choice) {
        let mut target = (upper + self.eps).floor() - 0.5;
        while target > incumbent.0 {
            let found = self.solve_set(all, target);
            if self.halted {
                return self.better(found, incumbent);
            }
            if let Some(f) = found {
                return f;
            }
            target -= 1.0;
        }
        incumbent
    }

    /// The heavier of a possibly partial search result and `incumbent`,
    /// valuing the result by its placements.
    fn better(&self, found: Option<(f64, Choice)>, incumbent: (f64, Choice)) -> (f64, Choice) {
        match found {
            Some((_, choice)) => {
                let value = choice.iter().map(|&(pos, _)| self.reqs[pos].weight).sum::<f64>();
                if value > incumbent.0 + self.eps {
                    (value, choice)
                } else {
                    incumbent
                }
            }
            None => incumbent,
        }
    }

    /// Local improvement of `best`: the requests around each site are
    /// re-solved with every other placement held fixed, within a node
    /// budget, for a few passes or until no neighbourhood gains.
    fn improve(&mut self, all: &[usize], best: (f64, Choice), upper: f64) -> (f64, Choice) {
        let n_local = self.sites.len();
        let mut plan: Vec<Option<usize>> = vec![None; self.reqs.len()];
        for &(pos, o) in &best.1 {
            plan[pos] = Some(o);
        }
        let mut value = best.0;
        let slack = if self.integral { 0.5 } else { 3.0 * self.eps };
        let mut zone = vec![false; n_local];
        let mut in_hood = vec![false; self.reqs.len()];
        for _ in 0..IMPROVE_PASSES {
            let mut gained = false;
            for l in 0..n_local {
                if value >= upper - self.eps || self.timed_out {
                    break;
                }
                for m in 0..n_local {
                    zone[m] = m == l || self.adjacent[l * n_local + m];
                }
                let hood: Vec<usize> = all
                    .iter()
                    .copied()
                    .filter(|&pos| self.reqs[pos].site_bands.iter().any(|&(s, _)| zone[s]))
                    .collect();
                let current: f64 = hood.iter().filter(|&&pos| plan[pos].is_some()).map(|&pos| self.reqs[pos].weight).sum();
                let most: f64 = hood.iter().map(|&pos| self.reqs[pos].weight).sum();
                if most <= current + self.eps {
                    continue;
                }
                for &pos in &hood {
                    in_hood[pos] = true;
                }
                let fixed: Vec<Placement> = all
                    .iter()
                    .filter(|&&pos| !in_hood[pos])
                    .filter_map(|&pos| plan[pos].map(|o| self.reqs[pos].options[o]))
                    .collect();
                for p in &fixed {
                    self.toggle(p, true);
                }
                self.node_cap = self.nodes.saturating_add(IMPROVE_NODES);
                let found = self.solve_set(&hood, current + slack);
                if self.halted && !self.timed_out {
                    self.halted = false;
                }
                self.node_cap = u64::MAX;
                for p in fixed.iter().rev() {
                    self.toggle(p, false);
                }
                if let Some((_, choice)) = found {
                    let v: f64 = choice.iter().map(|&(pos, _)| self.reqs[pos].weight).sum();
                    if v > current + self.eps {
                        for &pos in &hood {
                            plan[pos] = None;
                        }
                        for &(pos, o) in &choice {
                            plan[pos] = Some(o);
                        }
                        value += v - current;
                        gained = true;
                    }
                }
                for &pos in &hood {
                    in_hood[pos] = false;
                }
            }
            if !gained {
                break;
            }
        }
        let choice: Choice = (0..self.reqs.len()).filter_map(|pos| plan[pos].map(|o| (pos, o))).collect();
        let value = choice.iter().map(|&(pos, _)| self.reqs[pos].weight).sum();
        (value, choice)
    }

    /// The first leaf: every request takes its first fitting placement.
    fn dive(&mut self, all: &[usize], dynamic: bool) -> (f64, Choice) {
        let mut open = all.to_vec();
        let mut choice = Vec::new();
        let mut value = 0.0;
        let mut placed = Vec::new();
        while !open.is_empty() {
            let counts: Vec<usize> =
                open.iter().map(|&pos| self.reqs[pos].options.iter().filter(|p| self.fits(p)).count()).collect();
            let pick = if dynamic { self.select(&open, &counts) } else { 0 };
            let pos = open.remove(pick);
            if let Some(o) = (0..self.reqs[pos].options.len()).find(|&o| self.fits(&self.reqs[pos].options[o])) {
                let p = self.reqs[pos].options[o];
                self.toggle(&p, true);
                placed.push(p);
                choice.push((pos, o));
                value += self.reqs[pos].weight;
            }
        }
        for p in placed.iter().rev() {
            self.toggle(p, false);
        }
        (value, choice)
    }

    fn init_hashes(&mut self) {
        let n_local = self.sites.len();
        let nb = self.n_bands;
        let cells = n_local * self.max_band_len;
        self.zobrist = (0..2 * cells as u64).map(|k| key128(k ^ 0x5151_7E7E)).collect();
        let mut classes: Vec<(usize, Vec<bool>)> = Vec::new();
        self.band_salt = (0..nb)
            .map(|w| {
                let sig = (self.band_ranges[w].1, (0..n_local).map(|l| self.supported[l].contains(&w)).collect());
                let class = classes.iter().position(|c| *c == sig).unwrap_or_else(|| {
                    classes.push(sig);
                    classes.len() - 1
                });
                key128(class as u64 ^ 0x0C1A_55E5)
            })
            .collect();
        for l in 0..n_local {
            let b = self.sites[l];
            let mut outer = Bitset::new(self.band_ranges.iter().map(|r| r.0 + r.1).max().unwrap_or(0));
            for &nb_site in &self.neighbors[b] {
                if self.local_of[nb_site] == usize::MAX {
                    outer.or_with(&self.occ[nb_site]);
                }
            }
            for w in 0..nb {
                let (start, len) = self.band_ranges[w];
                for o in 0..len {
                    let (fwd, rev) = (l * self.max_band_len + o, l * self.max_band_len + len - 1 - o);
                    if self.occ[b].get(start + o) {
                        self.site_fwd[l * nb + w] ^= self.zobrist[fwd];
                        self.site_rev[l * nb + w] ^= self.zobrist[rev];
                    }
                    if outer.get(start + o) {
                        self.outer_fwd[l * nb + w] ^= self.zobrist[cells + fwd];
                        self.outer_rev[l * nb + w] ^= self.zobrist[cells + rev];
                    }
                }
            }
        }
    }

    /// Memo key of the subproblem of `set` whose requests can still use
    /// the local sites stamped with the current epoch. The subproblem
    /// depends only on the occupancy of those sites and their neighbours.
    fn state_key(&mut self, set: &[usize], reach: &[usize]) -> u128 {
        let nb = self.n_bands;
        let mut key = 0u128;
        for &pos in set {
            key = key.wrapping_add(self.req_keys[pos]);
        }
        self.epoch += 1;
        let near = self.epoch;
        let mut fwd = vec![0u128; nb];
        let mut rev = vec![0u128; nb];
        for &l in reach {
            key = key.wrapping_add(self.site_salt[l]);
            for w in 0..nb {
                fwd[w] ^= self.outer_fwd[l * nb + w];
                rev[w] ^= self.outer_rev[l * nb + w];
            }
            let b = self.sites[l];
            for k in 0..=self.neighbors[b].len() {
                let site = if k == 0 { b } else { self.neighbors[b][k - 1] };
                let m = self.local_of[site];
                if m == usize::MAX || self.stamp[m] == near {
                    continue;
                }
                self.stamp[m] = near;
                for w in 0..nb {
                    fwd[w] ^= self.site_fwd[m * nb + w];
                    rev[w] ^= self.site_rev[m * nb + w];
                }
            }
        }
        for w in 0..nb {
            key = key.wrapping_add(mix128(fwd[w].min(rev[w]) ^ self.band_salt[w]));
        }
        key
    }

    fn band_allowed(&self, site: usize, band: usize) -> bool {
        if !self.single_band[self.local_of[site]] {
            return true;
        }
        let base = site * self.n_bands;
        (0..self.n_bands).all(|w| w == band || self.band_load[base + w] == 0)
    }

    fn fits(&self, p: &Placement) -> bool {
        self.blocked[p.site].range_is_clear(p.start, p.length) && self.band_allowed(p.site, p.band)
    }

    fn refresh_blocked(&mut self, site: usize) {
        let mut acc = std::mem::take(&mut self.blocked[site]);
        acc.copy_from(&self.occ[site]);
        for &nb in &self.neighbors[site] {
            acc.or_with(&self.occ[nb]);
        }
        self.blocked[site] = acc;
        if let Some(d) = self.dirty.get_mut(self.local_of[site]) {
            *d = true;
        }
    }

    fn toggle(&mut self, p: &Placement, on: bool) {
        if on {
            self.occ[p.site].set_range(p.start, p.length);
            self.band_load[p.site * self.n_bands + p.band] += 1;
        } else {
            self.occ[p.site].clear_range(p.start, p.length);
            self.band_load[p.site * self.n_bands + p.band] -= 1;
        }
        if self.prune {
            let l = self.local_of[p.site];
            let k = l * self.n_bands + p.band;
            let (start, len) = self.band_ranges[p.band];
            for f in p.start..p.end() {
                let o = f - start;
                self.site_fwd[k] ^= self.zobrist[l * self.max_band_len + o];
                self.site_rev[k] ^= self.zobrist[l * self.max_band_len + len - 1 - o];
            }
        }
        self.refresh_blocked(p.site);
        for k in 0..self.neighbors[p.site].len() {
            let nb = self.neighbors[p.site][k];
            self.refresh_blocked(nb);
        }
    }

    fn should_stop(&mut self) -> bool {
        if !self.halted {
            if self.nodes >= self.node_cap {
                self.halted = true;
            } else if self.nodes.is_multiple_of(1024) {
                if let Some(d) = self.deadline {
                    self.timed_out = Instant::now() >= d;
                    self.halted = self.timed_out;
                }
            }
        }
        self.halted
    }

    /// Best value of `set` if it exceeds `target`, with the first optimal
    /// choice in search order. Requests are branched on one at a time: the
    /// one with the fewest fitting placements (then larger weight, then
    /// lower id), or the first in static order; every fitting placement is
    /// tried in turn and rejection last. Groups of requests that can no
    /// longer interact are solved separately.
    fn solve_set(&mut self, set: &[usize], target: f64) -> Option<(f64, Choice)> {
        self.nodes += 1;
        if self.should_stop() {
            return None;
        }
        // requests with no fitting placement are rejected outright
        let mut live = Vec::with_capacity(set.len());
        let mut counts = Vec::with_capacity(set.len());
        let mut reach_of: Vec<(usize, usize)> = Vec::new();
        for &pos in set {
            let mut count = 0;
            let mut last = usize::MAX;
            for p in &self.reqs[pos].options {
                if self.fits(p) {
                    count += 1;
                    let l = self.local_of[p.site];
                    if l != last {
                        reach_of.push((live.len(), l));
                        last = l;
                    }
                }
            }
            if count > 0 {
                live.push(pos);
                counts.push(count);
            }
        }
        if live.is_empty() {
            return (0.0 > target + self.eps).then(|| (0.0, Vec::new()));
        }
        let mut cap: f64 = live.iter().map(|&pos| self.reqs[pos].weight).sum();
        let mut key = None;
        if self.prune {
            self.epoch += 1;
            let mut reach = Vec::new();
            for &(_, l) in &reach_of {
                if self.stamp[l] != self.epoch {
                    self.stamp[l] = self.epoch;
                    reach.push(l);
                }
            }
            let k = self.state_key(&live, &reach);
            if let Some(known) = self.memo.get(&k) {
                if known.upper <= target {
                    self.prunes += 1;
                    return None;
                }
                if known.exact {
                    cap = cap.min(known.upper);
                }
            }
            key = Some(k);
            let parts = self.split(live.len(), &reach_of);
            if parts.len() > 1 {
                let parts = parts.into_iter().map(|g| g.into_iter().map(|i| live[i]).collect()).collect();
                return self.solve_parts(parts, target, k);
            }
            cap = cap.min(self.bound_of(&live, target));
            if cap <= target + self.eps {
                self.prunes += 1;
                self.remember(k, target, false);
                return None;
            }
        }

        let pick = self.select(&live, &counts);
        let pos = live[pick];
        let weight = self.reqs[pos].weight;
        let rest: Vec<usize> = live.iter().copied().filter(|&q| q != pos).collect();
        let mut best: Option<Choice> = None;
        let mut best_value = target;
        for o in self.option_order(pos) {
            let p = self.reqs[pos].options[o];
            self.toggle(&p, true);
            let found = self.solve_set(&rest, best_value - weight);
            self.toggle(&p, false);
            match found {
                Some((v, mut choice)) if v + weight > best_value + self.eps => {
                    choice.push((pos, o));
                    best_value = v + weight;
                    best = Some(choice);
                }
                // out of time below: keep this placement alone
                None if self.halted && weight > best_value + self.eps => {
                    best_value = weight;
                    best = Some(vec![(pos, o)]);
                }
                _ => {}
            }
            if self.halted || best_value + self.eps >= cap {
                break;
            }
        }
        if !self.halted && best_value + self.eps < cap {
            if let Some((v, choice)) = self.solve_set(&rest, best_value) {
                if v > best_value + self.eps {
                    best_value = v;
                    best = Some(choice);
                }
            }
        }
        if let (Some(k), false) = (key, self.halted) {
            match best {
                Some(_) => self.remember(k, best_value, true),
                None => self.remember(k, target, false),
            }
        }
        best.map(|choice| (best_value, choice))
    }

    /// Independent groups: each must reach its share of `target` given the
    /// bounds of the groups after it.
    fn solve_parts(&mut self, parts: Vec<Vec<usize>>, target: f64, key: u128) -> Option<(f64, Choice)> {
        let uppers: Vec<f64> = parts
            .iter()
            .map(|g| {
                let weight: f64 = g.iter().map(|&pos| self.reqs[pos].weight).sum();
                weight.min(self.bound_of(g, f64::NEG_INFINITY))
            })
            .collect();
        let mut later: f64 = uppers.iter().sum();
        if later <= target + self.eps {
            self.prunes += 1;
            self.remember(key, target, false);
            return None;
        }
        let mut value = 0.0;
        let mut choice = Vec::new();
        for (g, upper) in parts.iter().zip(&uppers) {
            later -= upper;
            match self.solve_set(g, target - value - later) {
                Some((v, c)) => {
                    value += v;
                    choice.extend(c);
                }
                None if self.halted => {}
                None => {
                    self.remember(key, target, false);
                    return None;
                }
            }
        }
        if !self.halted {
            self.remember(key, value, true);
        }
        (value > target + self.eps || self.halted).then_some((value, choice))
    }

    fn remember(&mut self, key: u128, upper: f64, exact: bool) {
        if self.memo.len() >= MEMO_CAPACITY && !self.memo.contains_key(&key) {
            return;
        }
        let known = self.memo.entry(key).or_insert(Known { upper: f64::INFINITY, exact: false });
        if exact {
            *known = Known { upper, exact: true };
        } else if !known.exact && upper < known.upper {
            known.upper = upper;
        }
    }

    /// Groups of `n` requests linked by a shared or interfering reachable
    /// site; `reach_of` lists `(request index, local site)` pairs.
    fn split(&mut self, n: usize, reach_of: &[(usize, usize)]) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..n).collect();
        let mut owner = vec![usize::MAX; self.sites.len()];
        for &(i, l) in reach_of {
            match owner[l] {
                usize::MAX => owner[l] = i,
                j => union(&mut parent, i, j),
            }
        }
        for l in 0..self.sites.len() {
            if owner[l] == usize::MAX {
                continue;
            }
            for &nb_site in &self.neighbors[self.sites[l]] {
                let m = self.local_of[nb_site];
                if m != usize::MAX && owner[m] != usize::MAX {
                    union(&mut parent, owner[l], owner[m]);
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        for i in 0..n {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[root]].push(i);
        }
        groups
    }

    /// Fitting options of `pos`. With pruning on, those that block the
    /// fewest still-free cells at the neighbouring sites come first; the
    /// order only steers the search, never the returned choice.
    fn option_order(&self, pos: usize) -> Vec<usize> {
        let options = &self.reqs[pos].options;
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (o, p) in options.iter().enumerate() {
            if !self.fits(p) {
                continue;
            }
            let mut damage = 0;
            if self.prune && self.dynamic {
                for &nb in &self.neighbors[p.site] {
                    if self.local_of[nb] != usize::MAX {
                        damage += p.length - self.blocked[nb].count_range(p.start, p.length);
                    }
                }
            }
            out.push((damage, o));
        }
        out.sort_unstable();
        out.into_iter().map(|(_, o)| o).collect()
    }

    fn select(&self, live: &[usize], counts: &[usize]) -> usize {
        if !self.dynamic {
            return 0;
        }
        let mut best = 0;
        for k in 1..live.len() {
            let (r, rb) = (&self.reqs[live[k]], &self.reqs[live[best]]);
            let better = counts[k] < counts[best]
                || (counts[k] == counts[best]
                    && (r.weight > rb.weight || (r.weight == rb.weight && r.id < rb.id)));
            if better {
                best = k;
            }
        }
        best
    }

    fn bound_of(&mut self, set: &[usize], limit: f64) -> f64 {
        for &pos in set {
            self.active[pos] = true;
        }
        let value = self.bound(limit);
        for &pos in set {
            self.active[pos] = false;
        }
        value
    }

    fn refresh_site_stats(&mut self) {
        let nb = self.n_bands;
        for l in 0..self.sites.len() {
            if !self.dirty[l] {
                continue;
            }
            self.dirty[l] = false;
            let b = self.sites[l];
            for k in 0..self.supported[l].len() {
                let w = self.supported[l][k];
                let (start, len) = self.band_ranges[w];
                let (free, run) = if !self.band_allowed(b, w) {
                    (0, 0)
                } else {
                    let blocked = &self.blocked[b];
                    (len - blocked.count_range(start, len), blocked.longest_clear_run(start, len))
                };
                self.free[l * nb + w] = free;
                self.run[l * nb + w] = run;
            }
        }
    }

    /// Upper bound on the value obtainable from the undecided requests.
    ///
    /// A request counts only if it still has a conflict-free window. Live
    /// sites are covered greedily by cliques of mutually interfering sites;
    /// a clique uses each PRB at most once, which caps its capacity. The
    /// bound is the better of a fractional transportation of demands onto
    /// those cliques and a fractional knapsack per request area (the sites
    /// covering one area always form a clique).
    /// Stops refining once the bound is at most `limit`.
    fn bound(&mut self, limit: f64) -> f64 {
        self.refresh_site_stats();
        let mut sc = std::mem::take(&mut self.scratch);
        let value = self.bound_with(&mut sc, limit);
        self.scratch = sc;
        value
    }

    fn bound_with(&self, sc: &mut Scratch, limit: f64) -> f64 {
        let nb = self.n_bands;
        sc.usable.iter_mut().for_each(|u| *u = false);
        sc.live.iter_mut().for_each(|u| *u = false);
        sc.items.clear();
        sc.area_items.clear();
        for (pos, r) in self.reqs.iter().enumerate() {
            if !self.active[pos] {
                continue;
            }
            let mut any = false;
            for &(l, w) in &r.site_bands {
                if self.run[l * nb + w] >= r.demand {
                    sc.usable[l * nb + w] = true;
                    sc.live[l] = true;
                    any = true;
                }
            }
            if any {
                sc.items.push((pos, r.weight, r.demand));
                sc.area_items.push((r.area_slot, r.weight, r.demand));
            }
        }
        if sc.items.is_empty() {
            return 0.0;
        }

        sc.area_items.sort_unstable_by_key(|it| it.0);
        let mut a = 0;
        while a < sc.area_items.len() {
            let slot = sc.area_items[a].0;
            sc.members.clear();
            sc.members.extend(self.area_sites[slot].iter().copied().filter(|&l| sc.live[l]));
            let cap = if sc.members.is_empty() { 0 } else { self.subset_capacity(sc) };
            sc.area_cap[slot] = cap;
            while a < sc.area_items.len() && sc.area_items[a].0 == slot {
                a += 1;
            }
        }
        let mut bound = knapsack(&mut sc.area_items, &sc.area_cap, self.integral, self.eps);
        if bound > limit {
            bound = bound.min(self.confined_bound(sc));
        }
        for widest_first in [true, false] {
            if bound <= limit {
                break;
            }
            let n_cliques = self.clique_cover(sc, widest_first);
            bound = bound.min(self.transport_bound(sc, n_cliques, None));
            for parts in [2, 3] {
                if bound <= limit {
                    break;
                }
                let lambda = self.max_band_len.div_ceil(parts);
                self.packed_table(sc, lambda);
                self.packed_caps(sc, n_cliques);
                bound = bound.min(self.transport_bound(sc, n_cliques, Some(lambda)));
            }
        }
        bound
    }

    /// Requests whose usable sites all lie in one maximal clique compete for
    /// that clique's capacity; a knapsack over them gives the clique's loss
    /// against taking them all. Losses of cliques with disjoint request
    /// sets add up.
    fn confined_bound(&self, sc: &mut Scratch) -> f64 {
        let nb = self.n_bands;
        let total: f64 = sc.items.iter().map(|it| it.1).sum();
        let lambda = self.max_band_len.div_ceil(2);
        self.packed_table(sc, lambda);
        sc.confined.clear();
        sc.losses.clear();
        for q in 0..self.max_cliques.len() {
            let clique = &self.max_cliques[q];
            for &l in clique {
                sc.in_clique[l] = true;
            }
            let first = sc.confined.len();
            for &(pos, _, _) in &sc.items {
                let r = &self.reqs[pos];
                let inside = r
                    .site_bands
                    .iter()
                    .all(|&(l, b)| sc.in_clique[l] || self.run[l * nb + b] < r.demand);
                if inside {
                    sc.confined.push(pos);
                }
            }
            for &l in clique {
                sc.in_clique[l] = false;
            }
            if sc.confined.len() == first {
                continue;
            }
            sc.members.clear();
            sc.members.extend(clique.iter().copied().filter(|&l| sc.live[l]));
            let caps = (self.subset_capacity(sc), self.packed_capacity(sc));
            let end = sc.confined.len();
            let loss = self.clique_loss(sc, first, end, caps, lambda);
            if loss > self.eps {
                sc.losses.push((loss, first, end, caps));
            } else {
                sc.confined.truncate(first);
            }
        }
        // largest losses first; later cliques only count requests no
        // earlier clique has claimed
        sc.losses.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut lost = 0.0;
        for k in 0..sc.losses.len() {
            let (_, first, end, caps) = sc.losses[k];
            let loss = self.clique_loss(sc, first, end, caps, lambda);
            if loss <= self.eps {
                continue;
            }
            for &pos in &sc.confined[first..end] {
                sc.claimed[pos] = true;
            }
            lost += loss;
        }
        for &pos in &sc.confined {
            sc.claimed[pos] = false;
        }
        let bound = total - lost;
        if self.integral { (bound + self.eps).floor() } else { bound }
    }

    /// Weight of the unclaimed requests in `sc.confined[first..end]` that
    /// a clique with plain and packed capacities `caps` cannot hold.
    fn clique_loss(&self, sc: &mut Scratch, first: usize, end: usize, caps: (usize, usize), lambda: usize) -> f64 {
        sc.confined_items.clear();
        let mut weight = 0.0;
        for &pos in &sc.confined[first..end] {
            if !sc.claimed[pos] {
                let r = &self.reqs[pos];
                sc.confined_items.push((0, r.weight, r.demand));
                weight += r.weight;
            }
        }
        if sc.confined_items.is_empty() {
            return 0.0;
        }
        let mut kept = knapsack(&mut sc.confined_items, &[caps.0], self.integral, self.eps);
        for it in sc.confined_items.iter_mut() {
            it.2 = self.packed_size(it.2, lambda);
        }
        kept = kept.min(knapsack(&mut sc.confined_items, &[caps.1], self.integral, self.eps));
        weight - kept
    }

    /// Partitions the live sites into cliques of mutually interfering sites.
    /// The usable sites of one request all cover its area, so they are
    /// pairwise interfering; requests seed cliques (those with the most or
    /// the fewest candidate sites first) that are then grown greedily.
    fn clique_cover(&self, sc: &mut Scratch, widest_first: bool) -> usize {
        let nb = self.n_bands;
        let n_local = self.sites.len();
        sc.live_sites.clear();
        sc.live_sites.extend((0..n_local).filter(|&l| sc.live[l]));
        for &a in &sc.live_sites {
            sc.live_degree[a] = sc.live_sites.iter().filter(|&&b| self.adjacent[a * n_local + b]).count();
        }
        let degree = &sc.live_degree;
        sc.live_sites.sort_by_key(|&a| (std::cmp::Reverse(degree[a]), a));
        let m = sc.items.len();
        while sc.item_sites.len() < m {
            sc.item_sites.push(Vec::new());
        }
        for k in 0..m {
            let r = &self.reqs[sc.items[k].0];
            let list = &mut sc.item_sites[k];
            list.clear();
            for &(l, w) in &r.site_bands {
                if self.run[l * nb + w] >= r.demand {
                    list.push(l);
                }
            }
            list.dedup();
        }
        sc.seeds.clear();
        sc.seeds.extend(0..m);
        let item_sites = &sc.item_sites;
        if widest_first {
            sc.seeds.sort_by_key(|&k| (std::cmp::Reverse(item_sites[k].len()), k));
        } else {
            sc.seeds.sort_by_key(|&k| (item_sites[k].len(), k));
        }
        sc.clique_of.clear();
        sc.clique_of.resize(n_local, usize::MAX);
        let mut n_cliques = 0;
        for s_idx in 0..m {
            let k = sc.seeds[s_idx];
            if sc.item_sites[k].iter().all(|&l| sc.clique_of[l] != usize::MAX) {
                continue;
            }
            if sc.cliques.len() == n_cliques {
                sc.cliques.push(Vec::new());
            }
            let c = n_cliques;
            n_cliques += 1;
            sc.cliques[c].clear();
            for idx in 0..sc.item_sites[k].len() {
                let l = sc.item_sites[k][idx];
                if sc.clique_of[l] == usize::MAX {
                    sc.clique_of[l] = c;
                    sc.cliques[c].push(l);
                }
            }
            for idx in 0..sc.live_sites.len() {
                let a = sc.live_sites[idx];
                if sc.clique_of[a] == usize::MAX && sc.cliques[c].iter().all(|&b| self.adjacent[a * n_local + b]) {
                    sc.clique_of[a] = c;
                    sc.cliques[c].push(a);
                }
            }
        }
        sc.clique_cap.clear();
        for c in 0..n_cliques {
            sc.members.clear();
            let (members, cliques) = (&mut sc.members, &sc.cliques);
            members.extend_from_slice(&cliques[c]);
            let cap = self.subset_capacity(sc);
            sc.clique_cap.push(cap);
        }
        n_cliques
    }

    /// Size of a demand in the packed transportation with threshold
    /// `lambda`: windows longer than `C - lambda` (`C` the widest band)
    /// are charged the whole band, windows shorter than `lambda` nothing.
    fn packed_size(&self, demand: usize, lambda: usize) -> usize {
        let c = self.max_band_len;
        if demand + lambda > c {
            c
        } else if demand < lambda {
            0
        } else {
            demand
        }
    }

    /// Fills `run_value`: a free run of length `s` holds windows of packed
    /// size at most `run_value[s]`, the best unbounded knapsack over the
    /// live demands.
    fn packed_table(&self, sc: &mut Scratch, lambda: usize) {
        let top = self.max_band_len;
        sc.run_value.clear();
        sc.run_value.resize(top + 1, 0);
        for s in 1..=top {
            let mut best = sc.run_value[s - 1];
            for &(pos, _, _) in &sc.items {
                let d = self.reqs[pos].demand;
                if d <= s {
                    best = best.max(sc.run_value[s - d] + self.packed_size(d, lambda));
                }
            }
            sc.run_value[s] = best;
        }
    }

    fn packed_caps(&self, sc: &mut Scratch, n_cliques: usize) {
        sc.packed_cap.clear();
        for c in 0..n_cliques {
            sc.members.clear();
            let (members, cliques) = (&mut sc.members, &sc.cliques);
            members.extend_from_slice(&cliques[c]);
            let cap = self.packed_capacity(sc);
            sc.packed_cap.push(cap);
        }
    }

    /// Packed capacity of `sc.members`, a set of mutually interfering sites,
    /// from the free runs of each site and of the PRBs free at any of them.
    fn packed_capacity(&self, sc: &mut Scratch) -> usize {
        let nb = self.n_bands;
        let mut own = 0;
        for &l in &sc.members {
            let blocked = &self.blocked[self.sites[l]];
            let mut per_band = 0;
            let mut site_total = 0;
            for &w in &self.supported[l] {
                if !sc.usable[l * nb + w] {
                    continue;
                }
                let (start, len) = self.band_ranges[w];
                let mut v = 0;
                blocked.clear_runs(start, len, |r| v += sc.run_value[r]);
                per_band = per_band.max(v);
                site_total += v;
            }
            own += if self.single_band[l] { per_band } else { site_total };
        }
        if sc.members.len() <= 1 {
            return own;
        }
        let mut shared = 0;
        for w in 0..nb {
            let (start, len) = self.band_ranges[w];
            let mut count = 0;
            for &l in &sc.members {
                if !sc.usable[l * nb + w] {
                    continue;
                }
                let blocked = &self.blocked[self.sites[l]];
                if count == 0 {
                    sc.mask.copy_from(blocked);
                } else {
                    sc.mask.and_with(blocked);
                }
                count += 1;
            }
            if count > 0 {
                sc.mask.clear_runs(start, len, |r| shared += sc.run_value[r]);
            }
        }
        own.min(shared)
    }

    /// Greedy fractional transportation of request demands onto cliques,
    /// items taken by decreasing value density and earlier flow rerouted
    /// along augmenting paths. Supply vectors of a transportation network
    /// form a polymatroid, so the greedy order is optimal. With `packed`,
    /// sizes and capacities are those of [`Engine::packed_caps`].
    fn transport_bound(&self, sc: &mut Scratch, n_cliques: usize, packed: Option<usize>) -> f64 {
        let nb = self.n_bands;
        let m = sc.items.len();
        let size = |d: usize| packed.map_or(d, |lambda| self.packed_size(d, lambda));
        sc.items.sort_by(|a, b| {
            (b.1 / size(b.2) as f64).total_cmp(&(a.1 / size(a.2) as f64)).then(a.0.cmp(&b.0))
        });
        while sc.item_cliques.len() < m {
            sc.item_cliques.push(Vec::new());
        }
        for k in 0..m {
            let r = &self.reqs[sc.items[k].0];
            let list = &mut sc.item_cliques[k];
            list.clear();
            for &(l, w) in &r.site_bands {
                if sc.usable[l * nb + w] && self.run[l * nb + w] >= r.demand {
                    list.push(sc.clique_of[l]);
                }
            }
            list.sort_unstable();
            list.dedup();
        }
        sc.flow.clear();
        sc.flow.resize(m * n_cliques, 0);
        sc.residual.clear();
        sc.residual.extend_from_slice(if packed.is_some() { &sc.packed_cap[..n_cliques] } else { &sc.clique_cap[..n_cliques] });
        sc.sent.clear();
        sc.sent.resize(m, 0);
        sc.uf.clear();
        sc.uf.extend(0..n_cliques);
        sc.group_value.clear();
        sc.group_value.resize(n_cliques, 0.0);

        for k in 0..m {
            let mut need = size(sc.items[k].2);
            let mut sent = 0;
            while need > 0 {
                // BFS over cliques; parent[c] = (item, previous clique or MAX)
                sc.seen.clear();
                sc.seen.resize(n_cliques, false);
                sc.parent.clear();
                sc.parent.resize(n_cliques, (usize::MAX, usize::MAX));
                sc.queue.clear();
                for &c in &sc.item_cliques[k] {
                    if !sc.seen[c] {
                        sc.seen[c] = true;
                        sc.parent[c] = (k, usize::MAX);
                        sc.queue.push(c);
                    }
                }
                let mut head = 0;
                let mut target = None;
                while head < sc.queue.len() {
                    let c = sc.queue[head];
                    head += 1;
                    if sc.residual[c] > 0 {
                        target = Some(c);
                        break;
                    }
                    for j in 0..k {
                        if sc.flow[j * n_cliques + c] == 0 {
                            continue;
                        }
                        for &c2 in &sc.item_cliques[j] {
                            if !sc.seen[c2] {
                                sc.seen[c2] = true;
                                sc.parent[c2] = (j, c);
                                sc.queue.push(c2);
                            }
                        }
                    }
                }
                let Some(t) = target else { break };
                let mut amount = need.min(sc.residual[t]);
                let mut c = t;
                loop {
                    let (j, prev) = sc.parent[c];
                    if prev == usize::MAX {
                        break;
                    }
                    amount = amount.min(sc.flow[j * n_cliques + prev]);
                    c = prev;
                }
                let mut c = t;
                loop {
                    let (j, prev) = sc.parent[c];
                    sc.flow[j * n_cliques + c] += amount;
                    if prev == usize::MAX {
                        break;
                    }
                    sc.flow[j * n_cliques + prev] -= amount;
                    c = prev;
                }
                sc.residual[t] -= amount;
                need -= amount;
                sent += amount;
            }
            if let Some(&first) = sc.item_cliques[k].first() {
                for &c in &sc.item_cliques[k][1..] {
                    union(&mut sc.uf, first, c);
                }
            }
            sc.sent[k] = sent;
        }
        for k in 0..m {
            let (_, weight, demand) = sc.items[k];
            if let Some(&first) = sc.item_cliques[k].first() {
                let root = find(&mut sc.uf, first);
                let share = match size(demand) {
                    0 => 1.0,
                    d => sc.sent[k] as f64 / d as f64,
                };
                sc.group_value[root] += weight * share;
            }
        }
        let mut total = 0.0;
        for c in 0..n_cliques {
            if find(&mut sc.uf, c) == c {
                let v = sc.group_value[c];
                total += if self.integral { (v + self.eps).floor() } else { v };
            }
        }
        total
    }

    /// PRB capacity of `sc.members`, a set of mutually interfering sites:
    /// the smaller of their own free PRBs and the PRBs free at any of them.
    fn subset_capacity(&self, sc: &mut Scratch) -> usize {
        let nb = self.n_bands;
        let mut own = 0;
        for &l in &sc.members {
            let usable = self.supported[l].iter().filter(|&&w| sc.usable[l * nb + w]).map(|&w| self.free[l * nb + w]);
            own += if self.single_band[l] { usable.max().unwrap_or(0) } else { usable.sum() };
        }
        if sc.members.len() <= 1 {
            return own;
        }
        let mut shared = 0;
        for w in 0..nb {
            let (start, len) = self.band_ranges[w];
            let mut count = 0;
            for &l in &sc.members {
                if !sc.usable[l * nb + w] {
                    continue;
                }
                let blocked = &self.blocked[self.sites[l]];
                if count == 0 {
                    sc.mask.copy_from(blocked);
                } else {
                    sc.mask.and_with(blocked);
                }
                count += 1;
            }
            if count > 0 {
                shared += len - sc.mask.count_range(start, len);
            }
            if shared >= own {
                return own;
            }
        }
        shared
    }
}
