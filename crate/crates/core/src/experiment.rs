//! Monte Carlo experiments over replicas of the coupling, with normal-approximation
//! confidence intervals.
//!
//! Replica `r` draws from `replica_rng(seed, r)`, results are collected in replica
//! order and reduced sequentially, so reports do not depend on the thread count.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_rational::Rational64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::classify::{self, gamma_bound, stage_walk, Stage, StateCounts, StateLabel};
use crate::constructions::{build_construction, ConstructionSpec};
use crate::coupling::{default_step_cap, terminating_mass, StepKind, Walker};
use crate::dynamics::replica_rng;
use crate::error::{Error, Result};
use crate::graph::{GraphFile, NeighboringPair};
use crate::lp;
use crate::probs::FlipProbabilities;
use crate::rational::{self, qi, to_f64};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Bound on the distance after one step when no flip exceeds six vertices.
pub const W: usize = 13;

/// `γ` used for the mixed preset.
pub fn mixed_gamma() -> Rational64 {
    Rational64::new(25_597_784, 1_000_000)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VectorSource {
    Vigoda,
    Alt,
    /// The optimal `p` of the mixed program (`N_max = 6`, `m* = 3`, cap on).
    Mixed,
    File(PathBuf),
}

impl VectorSource {
    pub fn load(&self) -> Result<FlipProbabilities> {
        match self {
            VectorSource::Vigoda => Ok(FlipProbabilities::vigoda()),
            VectorSource::Alt => Ok(FlipProbabilities::alt()),
            VectorSource::Mixed => mixed_vector(),
            VectorSource::File(path) => {
                let text =
                    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
                FlipProbabilities::from_json(&text)
            }
        }
    }
}

impl std::str::FromStr for VectorSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<VectorSource> {
        Ok(match s {
            "vigoda" => VectorSource::Vigoda,
            "alt" => VectorSource::Alt,
            "mixed" => VectorSource::Mixed,
            path => VectorSource::File(PathBuf::from(path)),
        })
    }
}

/// Solves the mixed program and reads off `p_1..p_6`.
pub fn mixed_vector() -> Result<FlipProbabilities> {
    let sol = lp::solve_value(&lp::build_mixed_lp(6, 3, mixed_gamma(), true)?)?;
    let p = (1..=6).map(|a| sol.assignment[&format!("p_{a}")].clone()).collect();
    FlipProbabilities::new(p)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StartState {
    Construction(ConstructionSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub replicas: u64,
    pub start: StartState,
    /// Overrides the construction's `k`, or the file's color count.
    pub k: Option<usize>,
    /// Overrides the construction's `d`; rejected for files.
    pub d: Option<usize>,
    pub vector: VectorSource,
    /// Defaults to `⌈100·nk/(k − d − 2)⌉`, or 10⁶ when `k ≤ d + 2`.
    pub step_cap: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(start: StartState, vector: VectorSource) -> ExperimentConfig {
        ExperimentConfig {
            seed: 0,
            replicas: 1000,
            start,
            k: None,
            d: None,
            vector,
            step_cap: None,
        }
    }

    /// The start pair and the probability vector.
    pub fn load(&self) -> Result<(NeighboringPair, FlipProbabilities)> {
        if self.replicas == 0 {
            return Err(Error::Input("need at least one replica".into()));
        }
        let pair = match &self.start {
            StartState::Construction(spec) => {
                let mut spec = *spec;
                spec.k = self.k.unwrap_or(spec.k);
                spec.d = self.d.unwrap_or(spec.d);
                build_construction(spec)?
            }
            StartState::File(path) => {
                if self.d.is_some() {
                    return Err(Error::Input("`d` cannot be overridden for a graph file".into()));
                }
                let text =
                    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
                let pair = GraphFile::parse(&text)?.pair()?;
                match self.k {
                    Some(k) => {
                        let recolor = |c: &crate::Coloring| crate::Coloring::new(c.as_slice().to_vec(), k);
                        NeighboringPair::new(pair.graph.clone(), recolor(&pair.sigma)?, recolor(&pair.tau)?)?
                    }
                    None => pair,
                }
            }
        };
        Ok((pair, self.vector.load()?))
    }

    fn step_cap(&self, pair: &NeighboringPair) -> Result<u64> {
        match self.step_cap {
            Some(0) => Err(Error::Input("step cap must be at least 1".into())),
            Some(c) => Ok(c),
            None => Ok(default_step_cap(pair.n(), pair.k(), pair.graph.d()).unwrap_or(1_000_000)),
        }
    }
}

/// Mean with standard error and 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Estimate {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Estimate::new(f64::NAN, f64::NAN);
        }
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate::new(mean, (var / n).sqrt())
    }

    /// `E[x]/E[y]` with a delta-method standard error.
    pub fn ratio(xs: &[f64], ys: &[f64]) -> Estimate {
        let (ex, ey) = (Estimate::from_samples(xs), Estimate::from_samples(ys));
        let r = ex.mean / ey.mean;
        let n = xs.len() as f64;
        let cov = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| (x - ex.mean) * (y - ey.mean))
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        let (vx, vy) = (ex.se.powi(2) * n, ey.se.powi(2) * n);
        let var = (vx - 2.0 * r * cov + r * r * vy) / (ey.mean * ey.mean * n);
        Estimate::new(r, var.max(0.0).sqrt())
    }

    fn new(mean: f64, se: f64) -> Estimate {
        Estimate {
            mean,
            se,
            ci_low: mean - Z95 * se,
            ci_high: mean + Z95 * se,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub replicas: u64,
    pub exceeded_cap: u64,
    pub metrics: BTreeMap<String, Estimate>,
    /// Exact quantities as `num/den` strings.
    pub exact: BTreeMap<String, String>,
    pub reference: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// Per-replica rows, in replica order.
    #[serde(skip)]
    pub columns: Vec<String>,
    #[serde(skip)]
    pub samples: Vec<Vec<f64>>,
}

impl ExperimentReport {
    fn new(experiment: &str, cfg: &ExperimentConfig, columns: &[&str]) -> ExperimentReport {
        ExperimentReport {
            experiment: experiment.into(),
            seed: cfg.seed,
            replicas: cfg.replicas,
            exceeded_cap: 0,
            metrics: BTreeMap::new(),
            exact: BTreeMap::new(),
            reference: BTreeMap::new(),
            checks: Vec::new(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            samples: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn push_check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail,
        });
    }

    fn column(&self, i: usize) -> Vec<f64> {
        self.samples.iter().map(|row| row[i]).collect()
    }

    /// A plain-text table.
    pub fn to_table(&self) -> String {
        use std::fmt::Write;
        let mut s = format!(
            "{} (seed {}, {} replicas, {} over cap)\n",
            self.experiment, self.seed, self.replicas, self.exceeded_cap
        );
        for (name, e) in &self.metrics {
            let _ = writeln!(
                s,
                "  {name:<24} {:>12.6} ± {:.6}  [{:.6}, {:.6}]",
                e.mean, e.se, e.ci_low, e.ci_high
            );
        }
        for (name, v) in &self.exact {
            let _ = writeln!(s, "  {name:<24} {v}");
        }
        for (name, v) in &self.reference {
            let _ = writeln!(s, "  {name:<24} {v:.6}");
        }
        for c in &self.checks {
            let _ = writeln!(
                s,
                "  {} {}: {}",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        s
    }
}

fn run_replicas<T: Send>(
    cfg: &ExperimentConfig,
    f: impl Fn(&mut rand_chacha::ChaCha8Rng) -> Result<T> + Sync,
) -> Vec<Result<T>> {
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| f(&mut replica_rng(cfg.seed, r)))
        .collect()
}

/// Splits replica results into samples and cap overruns; other errors abort.
fn gather(report: &mut ExperimentReport, results: Vec<Result<Vec<f64>>>) -> Result<()> {
    for r in results {
        match r {
            Ok(row) => report.samples.push(row),
            Err(Error::Capacity(_)) => report.exceeded_cap += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

/// Pair at the first distance change, with the state counts of the pair just before it.
pub struct CountedRun {
    pub t_stop: u64,
    pub final_distance: usize,
    pub before: StateCounts,
}

/// The variable-length coupling, recording `N_bad`, `N_good` at `T_stop − 1`.
pub fn counted_coupling<R: Rng + ?Sized>(
    pair: &NeighboringPair,
    probs: &FlipProbabilities,
    rng: &mut R,
    step_cap: u64,
) -> Result<CountedRun> {
    let mut w = Walker::new(pair, probs)?;
    let mut counts = classify::walker_counts(&mut w)?;
    for t in 1..=step_cap {
        let (kind, dist) = w.step(rng)?;
        if dist != 1 {
            return Ok(CountedRun {
                t_stop: t,
                final_distance: dist,
                before: counts,
            });
        }
        if kind != StepKind::Noop {
            counts = classify::walker_counts(&mut w)?;
        }
    }
    Err(Error::Capacity(format!("distance still 1 after {step_cap} steps")))
}

/// `nk/(k − d − 2)` and the terminating-mass interval at the start pair, when `k > d + 2`.
fn start_references(report: &mut ExperimentReport, pair: &NeighboringPair, probs: &FlipProbabilities) -> Result<()> {
    let (n, k, d) = (pair.n(), pair.k(), pair.graph.d());
    if k <= d + 2 {
        return Ok(());
    }
    let nk = qi((n * k) as i64);
    let bound = &nk / qi((k - d - 2) as i64);
    report.exact.insert("t_stop_bound".into(), rational::fmt(&bound));
    report.reference.insert("t_stop_bound".into(), to_f64(&bound));
    let mass = terminating_mass(pair, probs)?;
    let lo = qi((k - d - 2) as i64) / &nk;
    let hi = (qi(k as i64) + qi(2 * d as i64) * probs.p(2)) / &nk;
    report.exact.insert("terminating_mass".into(), rational::fmt(&mass));
    let inside = lo <= mass && mass <= hi;
    report.push_check(
        "terminating_mass_interval",
        inside,
        format!(
            "{} in [{}, {}]",
            rational::fmt(&mass),
            rational::fmt(&lo),
            rational::fmt(&hi)
        ),
    );
    Ok(())
}

/// Replicas of the variable-length coupling from the configured start pair.
pub fn run_coupling_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (pair, probs) = cfg.load()?;
    let cap = cfg.step_cap(&pair)?;
    let mut report = ExperimentReport::new("couple", cfg, &["t_stop", "final_distance"]);
    let results = run_replicas(cfg, |rng| {
        let rec = crate::coupling::variable_length_coupling(&pair, &probs, rng, cap, false)?;
        Ok(vec![rec.t_stop as f64, rec.final_distance as f64])
    });
    gather(&mut report, results)?;
    let t = Estimate::from_samples(&report.column(0));
    let dist = Estimate::from_samples(&report.column(1));
    let change: Vec<f64> = report.column(1).iter().map(|x| x - 1.0).collect();
    report.metrics.insert("t_stop".into(), t);
    report.metrics.insert("final_distance".into(), dist);
    report
        .metrics
        .insert("final_distance_minus_one".into(), Estimate::from_samples(&change));
    let max = report.column(1).into_iter().fold(0.0f64, f64::max);
    report.reference.insert("max_final_distance".into(), max);
    start_references(&mut report, &pair, &probs)?;
    if let Some(&bound) = report.reference.get("t_stop_bound") {
        report.push_check(
            "t_stop_within_bound",
            t.ci_low <= bound,
            format!("E[T_stop] = {:.4}, bound {bound:.4}", t.mean),
        );
    }
    report.push_check(
        "contraction",
        dist.ci_high < 1.0,
        format!("E[d(T_stop)] upper 95% limit {:.6}", dist.ci_high),
    );
    if probs.n_max() <= 6 {
        report.push_check(
            "excursion_within_w",
            max <= W as f64,
            format!("max d(T_stop) = {max}, W = {W}"),
        );
    }
    Ok(report)
}

/// Replicas of the stage walk for color `c` from a pair in `Bad(c)`; with no
/// color given, the smallest `Bad` color is used.
pub fn run_stage_experiment(cfg: &ExperimentConfig, color: Option<usize>) -> Result<ExperimentReport> {
    let (pair, probs) = cfg.load()?;
    let cap = cfg.step_cap(&pair)?;
    let c = match color {
        Some(c) => c,
        None => (0..pair.k())
            .find(|&c| matches!(classify::classify_color(&pair, c), Ok(StateLabel::Bad)))
            .ok_or_else(|| Error::Input("the start pair has no Bad color".into()))?,
    };
    if classify::classify_color(&pair, c)? != StateLabel::Bad {
        return Err(Error::Input(format!("the start pair is not in state Bad({c})")));
    }
    let mut report = ExperimentReport::new("stages", cfg, &["good_end", "steps"]);
    let results = run_replicas(cfg, |rng| {
        let walk = stage_walk(&pair, c, &probs, rng, cap)?;
        Ok(vec![(walk.outcome == Stage::GoodEnd) as u8 as f64, walk.steps as f64])
    });
    gather(&mut report, results)?;
    let good = Estimate::from_samples(&report.column(0));
    report.metrics.insert("p_good_end".into(), good);
    report
        .metrics
        .insert("steps".into(), Estimate::from_samples(&report.column(1)));
    report.exact.insert("color".into(), c.to_string());
    for (stage, mass) in classify::one_step_stage_masses(&pair, c, &probs, Stage::BadStage)? {
        report
            .exact
            .insert(format!("first_step/{stage:?}"), rational::fmt(&mass));
    }
    let (n, k, d) = (pair.n(), pair.k(), pair.graph.d());
    if let Ok((gamma, _)) = gamma_bound(k, d, &probs.p(2)) {
        let target = (qi(k as i64) + qi(2 * d as i64) * probs.p(2)) / (gamma * qi((n * k) as i64));
        report.exact.insert("target".into(), rational::fmt(&target));
        report.reference.insert("target".into(), to_f64(&target));
        report
            .reference
            .insert("p_good_end_over_target".into(), good.mean / to_f64(&target));
    }
    Ok(report)
}

/// Ratio `E[N_bad]/E[N_good]` at `T_stop − 1` against `γ(k, d, p₂)`.
pub fn estimate_gamma_empirical(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let (pair, probs) = cfg.load()?;
    let cap = cfg.step_cap(&pair)?;
    let mut report = ExperimentReport::new("gamma", cfg, &["n_bad", "n_good", "n_sing", "t_stop", "final_distance"]);
    let results = run_replicas(cfg, |rng| {
        let run = counted_coupling(&pair, &probs, rng, cap)?;
        let c = run.before;
        Ok(vec![
            c.n_bad as f64,
            c.n_good as f64,
            c.n_sing as f64,
            run.t_stop as f64,
            run.final_distance as f64,
        ])
    });
    gather(&mut report, results)?;
    let (bad, good) = (report.column(0), report.column(1));
    report.metrics.insert("n_bad".into(), Estimate::from_samples(&bad));
    report.metrics.insert("n_good".into(), Estimate::from_samples(&good));
    report
        .metrics
        .insert("final_distance".into(), Estimate::from_samples(&report.column(4)));
    let ratio = if bad.iter().all(|&x| x == 0.0) {
        Estimate::new(0.0, 0.0)
    } else {
        Estimate::ratio(&bad, &good)
    };
    report.metrics.insert("ratio".into(), ratio);
    let (k, d) = (pair.k(), pair.graph.d());
    if let Ok((gamma, _)) = gamma_bound(k, d, &probs.p(2)) {
        let g = to_f64(&gamma);
        report.exact.insert("gamma_bound".into(), rational::fmt(&gamma));
        report.reference.insert("gamma_bound".into(), g);
        report.push_check(
            "ratio_within_gamma",
            ratio.ci_low <= g,
            format!("ratio {:.4} ± {:.4}, γ = {g:.4}", ratio.mean, ratio.se),
        );
    }
    Ok(report)
}
