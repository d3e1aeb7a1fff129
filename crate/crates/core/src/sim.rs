//! Monte Carlo campaigns over generated scenarios, parameter sweeps, and the
//! slotted admission engine.

use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{generate_scenario, Request, RetryPolicy, Scenario, SimConfig};
use crate::error::{invalid, Error, Result};
use crate::feasibility;
use crate::reduction::Placement;
use crate::solver::{solve, solve_with_reserved, to_assignment, GroupSize, SolveOptions, Solution};

/// Ratios of a single solved scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    /// Accepted requests over submitted requests.
    pub acceptance: f64,
    /// Sites with at least one allocated PRB over all sites.
    pub activation: f64,
    /// (site, band) pairs with at least one allocated PRB over `B * W`.
    pub band_utilization: f64,
    /// Allocated PRBs over the `B * F` PRBs of all sites.
    pub prb_utilization: f64,
}

/// Ratios of `sol` on `s`. Ratios with an empty denominator are 0.
pub fn metrics(s: &Scenario, sol: &Solution) -> RunMetrics {
    let b = s.num_sites();
    let w = s.spectrum().num_bands();
    let mut sites = vec![false; b];
    let mut bands = vec![false; b * w];
    let mut prbs = 0;
    for p in &sol.accepted {
        sites[p.site] = true;
        bands[p.site * w + p.band] = true;
        prbs += p.length;
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    RunMetrics {
        acceptance: ratio(sol.accepted.len(), s.num_requests()),
        activation: ratio(sites.iter().filter(|&&x| x).count(), b),
        band_utilization: ratio(bands.iter().filter(|&&x| x).count(), b * w),
        prb_utilization: ratio(prbs, b * s.spectrum().total_prbs()),
    }
}

/// Outcome of one run of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: u64,
    pub metrics: RunMetrics,
    pub solve_time_s: f64,
    /// False when the solve hit its time limit.
    pub optimal: bool,
    pub tie_unresolved: bool,
}

/// Aggregate of one campaign. Every `*_ci` field is the half-width of a
/// normal-approximation 95% interval around the matching mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub num_requests: usize,
    pub num_sites: usize,
    pub num_bands: usize,
    pub p_ns: f64,
    pub p_sb: f64,
    pub group_size: usize,
    pub acceptance_ratio: f64,
    pub acceptance_ci: f64,
    pub activation_ratio: f64,
    pub activation_ci: f64,
    pub band_utilization_ratio: f64,
    pub band_ci: f64,
    pub prb_utilization_ratio: f64,
    pub prb_ci: f64,
    pub mean_solve_time_s: f64,
    pub runs: usize,
    /// Runs whose solve was not certified optimal.
    pub tainted_runs: Vec<u64>,
    pub per_run: Vec<RunRecord>,
}

impl MetricsRecord {
    pub fn is_tainted(&self) -> bool {
        !self.tainted_runs.is_empty()
    }
}

/// Solver settings used by campaigns for `cfg`.
pub fn campaign_solve_options(cfg: &SimConfig) -> SolveOptions {
    let group_size = match cfg.group_size {
        0 => GroupSize::Auto,
        1 => GroupSize::Off,
        k => GroupSize::Fixed(k),
    };
    let time_limit = (cfg.time_limit_s > 0.0).then(|| Duration::from_secs_f64(cfg.time_limit_s));
    SolveOptions { time_limit, group_size, ..Default::default() }
}

/// Runs `cfg.runs` independent scenarios on `jobs` threads (0 = one per
/// core). Results do not depend on `jobs` apart from the timings.
pub fn run_campaign(cfg: &SimConfig, jobs: usize) -> Result<MetricsRecord> {
    cfg.validate()?;
    let opts = campaign_solve_options(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<RunRecord> = pool.install(|| {
        (0..cfg.runs as u64)
            .into_par_iter()
            .map(|r| run_once(cfg, &opts, r))
            .collect::<Result<_>>()
    })?;
    Ok(aggregate(cfg, runs))
}

fn run_once(cfg: &SimConfig, opts: &SolveOptions, run_index: u64) -> Result<RunRecord> {
    let s = generate_scenario(cfg, run_index)?;
    let sol = solve(&s, opts)?;
    let violations = feasibility::check(&s, &to_assignment(&sol, &s)?)?;
    if let Some(v) = violations.first() {
        return invalid(format!("run {run_index}: solver returned an infeasible allocation ({v:?})"));
    }
    Ok(RunRecord {
        run_index,
        metrics: metrics(&s, &sol),
        solve_time_s: sol.stats.wall_time.as_secs_f64(),
        optimal: sol.optimal,
        tie_unresolved: sol.stats.tie_unresolved,
    })
}

fn aggregate(cfg: &SimConfig, runs: Vec<RunRecord>) -> MetricsRecord {
    let stat = |f: fn(&RunMetrics) -> f64| mean_ci(&runs.iter().map(|r| f(&r.metrics)).collect::<Vec<_>>());
    let (acceptance_ratio, acceptance_ci) = stat(|m| m.acceptance);
    let (activation_ratio, activation_ci) = stat(|m| m.activation);
    let (band_utilization_ratio, band_ci) = stat(|m| m.band_utilization);
    let (prb_utilization_ratio, prb_ci) = stat(|m| m.prb_utilization);
    let times: Vec<f64> = runs.iter().map(|r| r.solve_time_s).collect();
    MetricsRecord {
        num_requests: cfg.num_requests,
        num_sites: cfg.num_sites,
        num_bands: cfg.num_bands,
        p_ns: cfg.p_ns,
        p_sb: cfg.p_sb,
        group_size: cfg.group_size,
        acceptance_ratio,
        acceptance_ci,
        activation_ratio,
        activation_ci,
        band_utilization_ratio,
        band_ci,
        prb_utilization_ratio,
        prb_ci,
        mean_solve_time_s: mean_ci(&times).0,
        runs: runs.len(),
        tainted_runs: runs.iter().filter(|r| !r.optimal).map(|r| r.run_index).collect(),
        per_run: runs,
    }
}

/// Mean and 95% half-width `1.96 * sd / sqrt(n)` with the sample standard
/// deviation; the half-width is 0 for fewer than two values.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * var.sqrt() / (n as f64).sqrt())
}

/// Configuration parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    /// Number of requests.
    I,
    /// Number of sites.
    B,
    /// Number of bands.
    W,
    /// Group size.
    K,
    PNs,
    PSb,
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "I" | "num_requests" => Ok(Self::I),
            "B" | "num_sites" => Ok(Self::B),
            "W" | "num_bands" => Ok(Self::W),
            "K" | "group_size" => Ok(Self::K),
            "p_ns" => Ok(Self::PNs),
            "p_sb" => Ok(Self::PSb),
            _ => Err(format!("unknown sweep axis `{s}` (expected I, B, W, K, p_ns or p_sb)")),
        }
    }
}

impl Axis {
    /// Copy of `cfg` with this parameter set to `value`.
    pub fn apply(self, cfg: &SimConfig, value: f64) -> Result<SimConfig> {
        let mut c = cfg.clone();
        let count = || {
            if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                invalid(format!("{self:?} takes non-negative integers, got {value}"))
            }
        };
        match self {
            Self::I => c.num_requests = count()?,
            Self::B => c.num_sites = count()?,
            Self::W => c.num_bands = count()?,
            Self::K => c.group_size = count()?,
            Self::PNs => c.p_ns = value,
            Self::PSb => c.p_sb = value,
        }
        c.validate()?;
        Ok(c)
    }
}

/// One sweep dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    /// Parses `axis=v1,v2,...`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, list) = s.split_once('=').ok_or_else(|| format!("expected axis=v1,v2,..., got `{s}`"))?;
        let axis = name.trim().parse()?;
        let values = list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad sweep value `{v}`")))
            .collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() {
            return Err("sweep needs at least one value".into());
        }
        Ok(Self { axis, values })
    }
}

/// One campaign per value of `axis`, in the order given.
pub fn sweep(base: &SimConfig, axis: Axis, values: &[f64], jobs: usize) -> Result<Vec<MetricsRecord>> {
    sweep_nested(base, &[SweepAxis { axis, values: values.to_vec() }], jobs)
}

/// One campaign per point of the Cartesian product of `axes`; the first
/// axis varies slowest.
pub fn sweep_nested(base: &SimConfig, axes: &[SweepAxis], jobs: usize) -> Result<Vec<MetricsRecord>> {
    if axes.iter().any(|a| a.values.is_empty()) {
        return invalid("sweep axis without values");
    }
    let mut configs = vec![base.clone()];
    for a in axes {
        let mut next = Vec::with_capacity(configs.len() * a.values.len());
        for c in &configs {
            for &v in &a.values {
                next.push(a.axis.apply(c, v)?);
            }
        }
        configs = next;
    }
    configs.iter().map(|c| run_campaign(c, jobs)).collect()
}

pub const CSV_HEADER: &str = "I,B,W,p_ns,p_sb,K,acceptance_ratio,acceptance_ci,activation_ratio,activation_ci,\
band_utilization_ratio,band_ci,mean_solve_time_s,runs,prb_utilization_ratio,prb_ci,tainted_runs";

/// CSV table of `records`. Without `timing` the solve-time column is left
/// empty so that the output is reproducible byte for byte.
pub fn to_csv(records: &[MetricsRecord], timing: bool) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let time = if timing { format!("{:.6}", r.mean_solve_time_s) } else { String::new() };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{},{},{:.6},{:.6},{}",
            r.num_requests,
            r.num_sites,
            r.num_bands,
            r.p_ns,
            r.p_sb,
            r.group_size,
            r.acceptance_ratio,
            r.acceptance_ci,
            r.activation_ratio,
            r.activation_ci,
            r.band_utilization_ratio,
            r.band_ci,
            time,
            r.runs,
            r.prb_utilization_ratio,
            r.prb_ci,
            r.tainted_runs.len(),
        );
    }
    out
}

/// Average instantiation times of the deployable applications, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Application {
    BaseStation,
    CoreNetwork,
    NearRtRic,
    XApp,
}

impl Application {
    pub fn activation_latency(self) -> f64 {
        match self {
            Self::BaseStation => 9.55,
            Self::CoreNetwork => 5.90,
            Self::NearRtRic => 2.93,
            Self::XApp => 2.35,
        }
    }
}

impl std::str::FromStr for Application {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base_station" => Ok(Self::BaseStation),
            "core_network" => Ok(Self::CoreNetwork),
            "near_rt_ric" => Ok(Self::NearRtRic),
            "xapp" => Ok(Self::XApp),
            _ => Err(format!("unknown application `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arrival {
    pub time: f64,
    pub request: Request,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    RequestArrived,
    SlotSolved,
    RequestAdmitted,
    RequestRejectedKept,
    RequestRejectedDropped,
    ServiceActive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: EventKind,
    /// Absent for `slot_solved`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub request: Option<usize>,
    /// Placement of an admitted request.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub placement: Option<Placement>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeslotTrace {
    /// Sorted by time; events at equal times keep the order they happened in.
    pub events: Vec<TraceEvent>,
}

impl TimeslotTrace {
    /// One JSON object per line.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &TraceEvent> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeslotOptions {
    /// Slot length; slots end at `delta, 2 * delta, ...`.
    pub delta: f64,
    /// Delay between admission and `service_active`.
    pub activation_latency: f64,
    /// Last slot boundary to process. Without it the run stops once no
    /// arrivals remain and a slot admits nothing.
    pub horizon: Option<f64>,
    pub solve: SolveOptions,
}

/// Admits buffered requests in batches at every slot boundary.
///
/// Each slot solves the buffered requests against the infrastructure of
/// `base` (its own requests are ignored) with all earlier admissions held
/// fixed. Admitted requests never release their spectrum.
pub fn timeslot_run(arrivals: &[Arrival], base: &Scenario, opts: &TimeslotOptions) -> Result<TimeslotTrace> {
    if !(opts.delta > 0.0 && opts.delta.is_finite()) {
        return invalid("delta must be positive and finite");
    }
    if !(opts.activation_latency >= 0.0 && opts.activation_latency.is_finite()) {
        return invalid("activation latency must be non-negative and finite");
    }
    if let Some(a) = arrivals.iter().find(|a| !(a.time >= 0.0 && a.time.is_finite())) {
        return invalid(format!("request {} arrives at invalid time {}", a.request.id, a.time));
    }
    let mut ids: Vec<usize> = arrivals.iter().map(|a| a.request.id).collect();
    ids.sort_unstable();
    if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
        return invalid(format!("request id {} arrives more than once", w[0]));
    }
    // validates every request against the grid up front
    base.with_requests(arrivals.iter().map(|a| a.request.clone()).collect())?;

    let mut pending: Vec<&Arrival> = arrivals.iter().collect();
    pending.sort_by(|a, b| a.time.total_cmp(&b.time));
    let mut next = 0;
    let mut buffer: Vec<Request> = Vec::new();
    let mut reserved: Vec<Placement> = Vec::new();
    let mut events = Vec::new();

    let mut k = 0u64;
    loop {
        k += 1;
        let t = k as f64 * opts.delta;
        if opts.horizon.is_some_and(|h| t > h) {
            break;
        }
        let mut arrived = false;
        while next < pending.len() && pending[next].time <= t {
            let a = pending[next];
            events.push(TraceEvent {
                time: a.time,
                kind: EventKind::RequestArrived,
                request: Some(a.request.id),
                placement: None,
            });
            buffer.push(a.request.clone());
            next += 1;
            arrived = true;
        }
        if buffer.is_empty() {
            if next == pending.len() {
                break;
            }
            // skip empty slots up to the next arrival
            k = k.max(((pending[next].time / opts.delta).ceil() as u64).saturating_sub(1));
            continue;
        }
        let s = base.with_requests(buffer.clone())?;
        let sol = solve_with_reserved(&s, &reserved, &opts.solve)?;
        events.push(TraceEvent { time: t, kind: EventKind::SlotSolved, request: None, placement: None });
        let mut kept = Vec::new();
        for req in buffer.drain(..) {
            match sol.accepted.iter().find(|p| p.request == req.id) {
                Some(p) => {
                    events.push(TraceEvent {
                        time: t,
                        kind: EventKind::RequestAdmitted,
                        request: Some(req.id),
                        placement: Some(*p),
                    });
                    events.push(TraceEvent {
                        time: t + opts.activation_latency,
                        kind: EventKind::ServiceActive,
                        request: Some(req.id),
                        placement: None,
                    });
                }
                None if req.retry_policy == RetryPolicy::KeepInBuffer => {
                    events.push(TraceEvent {
                        time: t,
                        kind: EventKind::RequestRejectedKept,
                        request: Some(req.id),
                        placement: None,
                    });
                    kept.push(req);
                }
                None => events.push(TraceEvent {
                    time: t,
                    kind: EventKind::RequestRejectedDropped,
                    request: Some(req.id),
                    placement: None,
                }),
            }
        }
        let admitted_any = !sol.accepted.is_empty();
        reserved.extend(sol.accepted.iter().copied());
        buffer = kept;
        if opts.horizon.is_none() && next == pending.len() && (buffer.is_empty() || !admitted_any && !arrived) {
            break;
        }
    }
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(TimeslotTrace { events })
}
