//! Experiment drivers.
//!
//! Every trial `i` of a run owns the generator `trial_rng(seed_base, i)`: it
//! draws the cuckoo graph first and, for online runs, keeps drawing from the
//! same generator during insertion. Trials run in parallel and are reduced
//! in trial order, so reports depend only on the spec.

mod output;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{
    aggregate, expected_page_requests, fit_sigmoid, significance_bound,
    unsuccessful_search_requests, SigmoidFit, TrialOutcome, TrialStats,
};
use crate::error::Error;
use crate::graph::{Config, CuckooGraph, KeyChoices};
use crate::rng::{trial_rng, Rng};
use crate::solver::solve;
use crate::table::{serialize_factor, PagedTable, WalkParams};

pub use output::{write_csv, write_fit_json, write_json, write_series_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Offline solves over a load sweep, with a sigmoid fit of the failure rate.
    ThresholdSweep,
    /// Offline solves reporting primary fractions and the `w` distribution.
    OfflineFrac,
    /// Online random-walk insertion of `n` keys.
    #[serde(rename = "randomwalk")]
    RandomWalk,
    /// Random-walk runs over a grid of coin biases.
    BiasSweep,
    /// Insertion phase followed by alternating deletions and insertions.
    Dynamics,
    /// Offline solves on pages of one capacity-`ell` cell.
    #[serde(rename = "smallpages")]
    SmallPages,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        Self::ThresholdSweep,
        Self::OfflineFrac,
        Self::RandomWalk,
        Self::BiasSweep,
        Self::Dynamics,
        Self::SmallPages,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::ThresholdSweep => "threshold-sweep",
            Self::OfflineFrac => "offline-frac",
            Self::RandomWalk => "randomwalk",
            Self::BiasSweep => "bias-sweep",
            Self::Dynamics => "dynamics",
            Self::SmallPages => "smallpages",
        }
    }

    /// Whether the experiment runs the online table.
    pub fn is_online(self) -> bool {
        matches!(self, Self::RandomWalk | Self::BiasSweep | Self::Dynamics)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown experiment kind {s:?}")))
    }
}

/// Load factors visited by an experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadGrid {
    /// `c_start + i * c_step` for `i = 0, 1, ...` while not above `c_end`.
    Sweep {
        c_start: f64,
        c_end: f64,
        c_step: f64,
    },
    List(Vec<f64>),
}

impl LoadGrid {
    /// The grid points. Sweep points are rounded to 12 decimals so that
    /// `0.6 + 3 * 0.1` prints as `0.9`.
    pub fn points(&self) -> Vec<f64> {
        match self {
            LoadGrid::List(v) => v.clone(),
            LoadGrid::Sweep {
                c_start,
                c_end,
                c_step,
            } => {
                let count = ((c_end - c_start) / c_step + 1e-9).floor() as usize + 1;
                (0..count)
                    .map(|i| ((c_start + i as f64 * c_step) * 1e12).round() / 1e12)
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Base configuration; its load factor is replaced by each grid point.
    pub config: Config,
    /// Walk parameters for online runs.
    pub walk: Option<WalkParams>,
    pub loads: LoadGrid,
    /// Coin biases for bias sweeps.
    pub a_values: Vec<f64>,
    /// Trials per point.
    pub trials: u32,
    pub seed_base: u32,
    /// Failure probability tested when a random-walk run sees no failures.
    pub hypothesis_p: Option<f64>,
    /// Delete-insert pairs in the second dynamics phase (default `n`).
    pub dynamics_pairs: Option<u32>,
    /// Run the full legality check after every dynamics operation.
    pub check_legality: bool,
    /// Hash functions of the per-page filters in unsuccessful-search
    /// estimates.
    pub filter_hashes: u32,
}

impl ExperimentSpec {
    /// Spec at the single load `config.c` with 30 trials, seed 1, three
    /// filter hashes and, for online kinds, `a = 0.97` and `b = 30`.
    pub fn new(kind: ExperimentKind, config: Config) -> Self {
        let walk = kind
            .is_online()
            .then(|| WalkParams::new(0.97, 30.0).expect("valid defaults"));
        Self {
            kind,
            config,
            walk,
            loads: LoadGrid::List(vec![config.c]),
            a_values: Vec::new(),
            trials: 30,
            seed_base: 1,
            hypothesis_p: None,
            dynamics_pairs: None,
            check_legality: false,
            filter_hashes: 3,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        let bad = |msg: String| Err(Error::Experiment(msg));
        self.config.validate()?;
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        match &self.loads {
            LoadGrid::Sweep {
                c_start,
                c_end,
                c_step,
            } => {
                if !(c_start.is_finite() && c_end.is_finite() && c_step.is_finite()) {
                    return bad("sweep bounds must be finite".into());
                }
                if c_start >= c_end {
                    return bad(format!("c_start {c_start} must be below c_end {c_end}"));
                }
                if *c_step <= 0.0 {
                    return bad(format!("c_step {c_step} must be positive"));
                }
                if (c_end - c_start) / c_step > 1e7 {
                    return bad("sweep has too many points".into());
                }
            }
            LoadGrid::List(v) if v.is_empty() => return bad("no load factors given".into()),
            LoadGrid::List(_) => {}
        }
        for c in self.loads.points() {
            self.config.with_load(c).validate()?;
        }
        if self.kind.is_online() {
            let Some(walk) = self.walk else {
                return bad(format!("{} needs walk parameters", self.kind));
            };
            WalkParams::new(walk.a_bias, walk.b_factor)?;
        }
        match self.kind {
            ExperimentKind::BiasSweep => {
                if self.a_values.is_empty() {
                    return bad("bias sweep needs at least one coin bias".into());
                }
                if let Some(a) = self.a_values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                    return bad(format!("coin bias {a} outside [0, 1]"));
                }
            }
            ExperimentKind::SmallPages => {
                let c = &self.config;
                if c.kp != 1 || c.kb != 1 || c.s != 1 || c.ell < 2 {
                    return bad("small pages need kp=1, kb=1, s=1 and ell >= 2".into());
                }
            }
            ExperimentKind::ThresholdSweep if self.loads.points().len() < 4 => {
                return bad("a threshold sweep needs at least 4 load factors".into());
            }
            _ => {}
        }
        if let Some(p) = self.hypothesis_p {
            if !(p > 0.0 && p < 1.0) {
                return bad(format!("hypothesis probability {p} outside (0, 1)"));
            }
        }
        if self.filter_hashes == 0 {
            return bad("filter hash count must be positive".into());
        }
        Ok(())
    }
}

/// Expected page requests derived from a point's measurements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PageRequestEstimates {
    /// Successful search, primary page first.
    pub successful: f64,
    /// Unsuccessful search with one filter bit per cell.
    pub unsuccessful: f64,
}

/// Results for one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointReport {
    /// Load factor (keys per cell).
    pub c: f64,
    pub config: Config,
    pub a_bias: Option<f64>,
    #[serde(serialize_with = "serialize_factor_opt")]
    pub b_factor: Option<f64>,
    pub stats: TrialStats,
    pub page_requests: PageRequestEstimates,
    /// Wall-clock seconds for the point; not written to CSV.
    pub seconds: f64,
}

fn serialize_factor_opt<S: serde::Serializer>(b: &Option<f64>, ser: S) -> Result<S::Ok, S::Error> {
    match b {
        Some(b) => serialize_factor(b, ser),
        None => ser.serialize_none(),
    }
}

/// Significance of observing no failures under a hypothesized failure
/// probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Significance {
    pub p: f64,
    pub trials: u64,
    /// `(1 - p)^trials`.
    pub exact: f64,
    /// `exp(-p * trials)`.
    pub bound: f64,
}

/// Windowed averages over the operation sequence of a dynamics run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesPoint {
    /// Index of the last insertion in the window.
    pub insert_index: u64,
    /// 1 for the insertion phase, 2 for the alternating phase.
    pub phase: u8,
    /// Live keys divided by cells at the end of the window.
    pub load: f64,
    /// Fraction of live keys on their primary page at the end of the window.
    pub rp: f64,
    /// Mean steps per inserted key within the window.
    pub st_key: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsReport {
    /// Insertions per window.
    pub window: u32,
    pub pairs: u32,
    /// Averaged over the trials that completed.
    pub series: Vec<SeriesPoint>,
    /// Mean per-key steps in the last window of the insertion phase.
    pub phase1_final_st_key: f64,
    /// Mean per-key steps over the whole alternating phase.
    pub phase2_mean_st_key: f64,
    /// Lowest load at which more than 1% of live keys were backup keys
    /// during the insertion phase, averaged over trials.
    pub backup_one_percent_load: Option<f64>,
    /// State at the end of the insertion phase.
    pub phase1: TrialStats,
    /// State at the end of the alternating phase.
    pub phase2: TrialStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub points: Vec<PointReport>,
    pub fit: Option<SigmoidFit>,
    /// Why the fit was refused, when it was.
    pub fit_error: Option<String>,
    pub significance: Option<Significance>,
    pub dynamics: Option<DynamicsReport>,
}

impl ExperimentReport {
    fn new(spec: &ExperimentSpec) -> Self {
        Self {
            spec: spec.clone(),
            points: Vec::new(),
            fit: None,
            fit_error: None,
            significance: None,
            dynamics: None,
        }
    }
}

/// Runs the experiment named by `spec.kind`.
pub fn run(spec: &ExperimentSpec) -> Result<ExperimentReport, Error> {
    match spec.kind {
        ExperimentKind::ThresholdSweep => run_threshold_sweep(spec),
        ExperimentKind::OfflineFrac => run_offline_frac(spec),
        ExperimentKind::RandomWalk => run_randomwalk(spec),
        ExperimentKind::BiasSweep => run_bias_sweep(spec),
        ExperimentKind::Dynamics => run_dynamics(spec),
        ExperimentKind::SmallPages => run_smallpages(spec),
    }
}

fn check_kind(spec: &ExperimentSpec, kind: ExperimentKind) -> Result<(), Error> {
    if spec.kind != kind {
        return Err(Error::Experiment(format!(
            "spec is for {}, not {kind}",
            spec.kind
        )));
    }
    spec.validate()
}

/// One offline trial: generate a graph and solve it.
pub fn offline_trial(config: &Config, rng: &mut Rng) -> Result<TrialOutcome, Error> {
    let graph = CuckooGraph::generate(config, rng)?;
    let p = solve(&graph);
    Ok(TrialOutcome {
        success: p.is_complete(),
        rp: p.primary_fraction(),
        alphap: p.primary_load(),
        steps: None,
        page_requests: None,
        w: p.backup_per_page().to_vec(),
    })
}

/// One online trial: generate a graph and insert its keys in order until
/// all are stored or an insertion fails.
pub fn walk_trial(config: &Config, walk: WalkParams, rng: &mut Rng) -> Result<TrialOutcome, Error> {
    let graph = CuckooGraph::generate(config, rng)?;
    let mut table = PagedTable::new(*config, walk)?;
    let mut success = true;
    for (i, key) in graph.keys().iter().enumerate() {
        if !table.insert(i as u32, key.clone(), rng)?.success {
            success = false;
            break;
        }
    }
    Ok(online_outcome(&table, success, config.n()))
}

fn online_outcome(table: &PagedTable, success: bool, n: u32) -> TrialOutcome {
    let inserts = table.inserts().max(1) as f64;
    let snap = table.snapshot();
    TrialOutcome {
        success,
        rp: f64::from(snap.n_primary) / f64::from(n.max(1)),
        alphap: f64::from(snap.n_primary) / f64::from(table.config().m),
        steps: Some(table.total_steps() as f64 / inserts),
        page_requests: Some(table.total_page_requests() as f64 / inserts),
        w: snap.w,
    }
}

/// Runs `trials` trials at each configuration, in parallel, returning the
/// outcomes grouped per configuration in trial order.
fn run_trials<F>(configs: &[Config], spec: &ExperimentSpec, trial: F) -> Result<Vec<(Vec<TrialOutcome>, f64)>, Error>
where
    F: Fn(&Config, &mut Rng) -> Result<TrialOutcome, Error> + Sync,
{
    configs
        .iter()
        .map(|config| {
            let start = Instant::now();
            let outcomes = (0..spec.trials)
                .into_par_iter()
                .map(|i| trial(config, &mut trial_rng(spec.seed_base, i)))
                .collect::<Result<Vec<_>, Error>>()?;
            Ok((outcomes, start.elapsed().as_secs_f64()))
        })
        .collect()
}

fn point(
    spec: &ExperimentSpec,
    config: Config,
    walk: Option<WalkParams>,
    outcomes: &[TrialOutcome],
    seconds: f64,
) -> PointReport {
    let stats = aggregate(outcomes);
    let page_requests = PageRequestEstimates {
        successful: expected_page_requests(stats.rp.mean.clamp(0.0, 1.0)),
        unsuccessful: unsuccessful_search_requests(
            &stats.w_histogram,
            config.kp,
            config.s,
            spec.filter_hashes,
        ),
    };
    PointReport {
        c: config.c,
        config,
        a_bias: walk.map(|w| w.a_bias),
        b_factor: walk.map(|w| w.b_factor),
        stats,
        page_requests,
        seconds,
    }
}

fn offline_points(spec: &ExperimentSpec) -> Result<Vec<PointReport>, Error> {
    let configs: Vec<Config> = spec
        .loads
        .points()
        .into_iter()
        .map(|c| spec.config.with_load(c))
        .collect();
    let results = run_trials(&configs, spec, offline_trial)?;
    Ok(configs
        .into_iter()
        .zip(results)
        .map(|(config, (outcomes, secs))| point(spec, config, None, &outcomes, secs))
        .collect())
}

/// Failure rate over a load sweep and the sigmoid fit of the transition.
/// A refused fit is reported in `fit_error`; the points are kept.
pub fn run_threshold_sweep(spec: &ExperimentSpec) -> Result<ExperimentReport, Error> {
    check_kind(spec, ExperimentKind::ThresholdSweep)?;
    let mut report = ExperimentReport::new(spec);
    report.points = offline_points(spec)?;
    let data: Vec<(f64, f64)> = report.points.iter().map(|p| (p.c, p.stats.lambda)).collect();
    match fit_sigmoid(&data) {
        Ok(fit) => report.fit = Some(fit),
        Err(e) => report.fit_error = Some(e.to_string()),
    }
    Ok(report)
}

/// Primary fractions, failure rates and the pooled `w` distribution.
pub fn run_offline_frac(spec: &ExperimentSpec) -> Result<ExperimentReport, Error> {
    check_kind(spec, ExperimentKind::OfflineFrac)?;
    let mut report = ExperimentReport::new(spec);
    report.points = offline_points(spec)?;
    Ok(report)
}

/// Offline solves with `kp = kb = s = 1` and capacity `ell`. Loads are keys
/// per cell; divide by `ell` for the normalized load.
pub fn run_smallpages(spec: &ExperimentSpec) -> Result<ExperimentReport, Error> {
    check_kind(spec, ExperimentKind::SmallPages)?;
    let mut report = ExperimentReport::new(spec);
    report.points = offline_points(spec)?;
    Ok(report)
}

fn online_points(spec: &ExperimentSpec, walks: &[WalkParams]) -> Result<Vec<PointReport>, Error> {
    let mut points = Vec::new();
    for c in spec.loads.points() {
        let config = spec.config.with_load(c);
        for &walk in walks {
            let start = Instant::now();
            let outcomes = (0..spec.trials)
                .into_par_iter()
                .map(|i| walk_trial(&config, walk, &mut trial_rng(spec.seed_base, i)))
                .collect::<Result<Vec<_>, Error>>()?;
            let secs = start.elapsed().as_secs_f64();
            points.push(point(spec, config, Some(walk), &outcomes, secs));
        }
    }
    Ok(points)
}

/// Full insertion runs with the random walk. With `hypothesis_p` set and no
/// failures observed over all points, reports the significance bound.
pub fn run_randomwalk(spec: &ExperimentSpec) -> Result<ExperimentReport, Error> {
    check_kind(spec, ExperimentKind::RandomWalk)?;
    let walk = spec.walk.expect("validated");
    let mut report = ExperimentReport::new(spec);
    report.points = online_points(spec, &[walk])?;
    if let Some(p) = spec.hypothesis_p {
        let failures: u32 = report.points.iter().map(|pt| pt.stats.failures).sum();
        if failures == 0 {
            let trials: u64 = report.points.iter().map(|pt| u64::from(pt.stats.trials)).sum();
            let (exact, bound) = significance_bound(trials, p);
            report.significance = Some(Significance {
                p,
                trials,
                exact,
                bound,
            });
        }
    }
    Ok(report)
}

/// Random-walk runs for each coin bias in `a_values`, with the budget
/// factor of `walk`.
pub fn run_bias_sweep(spec: &ExperimentSpec) -> Result<ExperimentReport, Error> {
    check_kind(spec, ExperimentKind::BiasSweep)?;
    let b = spec.walk.expect("validated").b_factor;
    let walks = spec
        .a_values
        .iter()
        .map(|&a| WalkParams::new(a, b))
        .collect::<Result<Vec<_>, Error>>()?;
    let mut report = ExperimentReport::new(spec);
    report.points = online_points(spec, &walks)?;
    Ok(report)
}

struct DynamicsTrial {
    outcome_phase1: TrialOutcome,
    outcome_phase2: TrialOutcome,
    /// Per window: (insert index, phase, load, rp, mean steps).
    series: Vec<(u64, u8, f64, f64, f64)>,
    one_percent_load: Option<f64>,
}

fn dynamics_trial(
    config: &Config,
    walk: WalkParams,
    pairs: u32,
    window: u32,
    check: bool,
    rng: &mut Rng,
) -> Result<DynamicsTrial, Error> {
    let n = config.n();
    let graph = CuckooGraph::generate(config, rng)?;
    let mut table = PagedTable::new(*config, walk)?;
    let m = f64::from(config.m);
    let legal = |table: &PagedTable, op: u64| -> Result<(), Error> {
        if check {
            table
                .check_legal()
                .map_err(|e| Error::Experiment(format!("illegal table after operation {op}: {e}")))?;
        }
        Ok(())
    };

    let mut series = Vec::new();
    let mut window_steps = 0u64;
    let mut window_len = 0u32;
    let mut ops = 0u64;
    let mut one_percent_load = None;
    let mut inserted = 0u64;
    let mut push_window = |table: &PagedTable, inserted: u64, phase: u8, steps: &mut u64, len: &mut u32| {
        let live = table.live_keys();
        series.push((
            inserted - 1,
            phase,
            f64::from(live) / m,
            f64::from(table.n_primary()) / f64::from(live.max(1)),
            *steps as f64 / f64::from(*len),
        ));
        *steps = 0;
        *len = 0;
    };

    let mut success = true;
    for (i, key) in graph.keys().iter().enumerate() {
        let out = table.insert(i as u32, key.clone(), rng)?;
        ops += 1;
        legal(&table, ops)?;
        if !out.success {
            success = false;
            break;
        }
        inserted += 1;
        window_steps += out.steps;
        window_len += 1;
        if one_percent_load.is_none() && table.n_backup() * 100 > table.live_keys() {
            one_percent_load = Some(f64::from(table.live_keys()) / m);
        }
        if window_len == window || i as u32 + 1 == n {
            push_window(&table, inserted, 1, &mut window_steps, &mut window_len);
        }
    }
    let outcome_phase1 = online_outcome(&table, success, n);
    let phase1_steps = table.total_steps();
    let phase1_requests = table.total_page_requests();
    let phase1_inserts = table.inserts();

    if success {
        table.set_budget(None);
        let mut live: Vec<u32> = table.live_key_ids().collect();
        for next_id in (n..).take(pairs as usize) {
            let idx = rng.index_below(live.len());
            let victim = live.swap_remove(idx);
            let removed = table.delete(victim);
            debug_assert!(removed);
            ops += 1;
            legal(&table, ops)?;
            let key = KeyChoices::draw(config, rng);
            let out = table.insert(next_id, key, rng)?;
            ops += 1;
            legal(&table, ops)?;
            debug_assert!(out.success, "unbounded walks do not fail");
            live.push(next_id);
            inserted += 1;
            window_steps += out.steps;
            window_len += 1;
            if window_len == window {
                push_window(&table, inserted, 2, &mut window_steps, &mut window_len);
            }
        }
        if window_len > 0 {
            push_window(&table, inserted, 2, &mut window_steps, &mut window_len);
        }
    }

    let phase2_inserts = (table.inserts() - phase1_inserts).max(1) as f64;
    let snap = table.snapshot();
    let outcome_phase2 = TrialOutcome {
        success,
        rp: f64::from(snap.n_primary) / f64::from(snap.live.max(1)),
        alphap: f64::from(snap.n_primary) / m,
        steps: Some((table.total_steps() - phase1_steps) as f64 / phase2_inserts),
        page_requests: Some((table.total_page_requests() - phase1_requests) as f64 / phase2_inserts),
        w: snap.w,
    };
    Ok(DynamicsTrial {
        outcome_phase1,
        outcome_phase2,
        series,
        one_percent_load,
    })
}

/// Insertion phase with the spec's walk parameters, then `dynamics_pairs`
/// (default `n`) rounds of deleting a uniformly random live key and
/// inserting a fresh key, with an unbounded budget. The point row describes
/// the alternating phase; `dynamics` holds windowed curves (window `n/100`
/// insertions) and both phase-end states.
pub fn run_dynamics(spec: &ExperimentSpec) -> Result<ExperimentReport, Error> {
    check_kind(spec, ExperimentKind::Dynamics)?;
    let walk = spec.walk.expect("validated");
    let points = spec.loads.points();
    if points.len() != 1 {
        return Err(Error::Experiment("dynamics runs take a single load factor".into()));
    }
    let config = spec.config.with_load(points[0]);
    let n = config.n();
    if n == 0 {
        return Err(Error::Experiment("dynamics needs at least one key".into()));
    }
    let pairs = spec.dynamics_pairs.unwrap_or(n);
    let window = (n / 100).max(1);

    let start = Instant::now();
    let trials = (0..spec.trials)
        .into_par_iter()
        .map(|i| {
            dynamics_trial(
                &config,
                walk,
                pairs,
                window,
                spec.check_legality,
                &mut trial_rng(spec.seed_base, i),
            )
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let secs = start.elapsed().as_secs_f64();

    let phase1: Vec<TrialOutcome> = trials.iter().map(|t| t.outcome_phase1.clone()).collect();
    let phase2: Vec<TrialOutcome> = trials.iter().map(|t| t.outcome_phase2.clone()).collect();
    let complete: Vec<&DynamicsTrial> = trials.iter().filter(|t| t.outcome_phase1.success).collect();

    let mut series = Vec::new();
    if let Some(first) = complete.first() {
        for (w, &(idx, phase, ..)) in first.series.iter().enumerate() {
            let mean = |f: fn(&(u64, u8, f64, f64, f64)) -> f64| {
                complete.iter().map(|t| f(&t.series[w])).sum::<f64>() / complete.len() as f64
            };
            series.push(SeriesPoint {
                insert_index: idx,
                phase,
                load: mean(|s| s.2),
                rp: mean(|s| s.3),
                st_key: mean(|s| s.4),
            });
        }
    }
    let phase1_final_st_key = series
        .iter()
        .rfind(|s| s.phase == 1)
        .map_or(0.0, |s| s.st_key);
    let phase2_mean_st_key = if complete.is_empty() {
        0.0
    } else {
        complete
            .iter()
            .map(|t| t.outcome_phase2.steps.unwrap_or(0.0))
            .sum::<f64>()
            / complete.len() as f64
    };
    let loads: Vec<f64> = complete.iter().filter_map(|t| t.one_percent_load).collect();
    let backup_one_percent_load =
        (!loads.is_empty()).then(|| loads.iter().sum::<f64>() / loads.len() as f64);

    let mut report = ExperimentReport::new(spec);
    report.points = vec![point(spec, config, Some(walk), &phase2, secs)];
    report.dynamics = Some(DynamicsReport {
        window,
        pairs,
        series,
        phase1_final_st_key,
        phase2_mean_st_key,
        backup_one_percent_load,
        phase1: aggregate(&phase1),
        phase2: aggregate(&phase2),
    });
    Ok(report)
}
