//! The `run` subcommand: seeded trial fan-out, per-trial CSV, and the
//! summary tables.

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::PathBuf;

use secnav_core::metrics::{self, BatchSummary, TrialResult};
use secnav_core::navigator::{navigate, Approach, NavConfig};
use secnav_core::scenario::{self, RealizedPath, Scenario};

use crate::{default_out_dir, CliError};

/// CSV header of the per-trial report.
pub const TRIALS_HEADER: &str =
    "trial,path_class,path_id,approach,percent_error,ade,fde,reached_goal,safety_violations,steps";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApproachFilter {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    Both,
}

impl ApproachFilter {
    pub fn approaches(&self) -> Vec<Approach> {
        match self {
            ApproachFilter::One => vec![Approach::Direct],
            ApproachFilter::Two => vec![Approach::EkfFused],
            ApproachFilter::Both => vec![Approach::Direct, Approach::EkfFused],
        }
    }
}

impl std::str::FromStr for ApproachFilter {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "1" => Ok(ApproachFilter::One),
            "2" => Ok(ApproachFilter::Two),
            "both" => Ok(ApproachFilter::Both),
            other => Err(format!("approach must be 1, 2, or both, got {other}")),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Scenario file to run against.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Seeded trials per path.
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,
    /// Base seed; trial i uses base_seed + i.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Which approach to run: 1, 2, or both.
    #[arg(long, default_value = "both")]
    pub approach: ApproachFilter,
    /// Output directory (default: $SECNAV_OUT_DIR or ./secnav_out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the trial fan-out (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,

    // Parameter overrides.
    /// Corridor margin override, meters (applies to every path).
    #[arg(long)]
    pub margin: Option<f64>,
    /// Corridor segment length override, meters.
    #[arg(long)]
    pub segment_len: Option<f64>,
    /// Range measurement noise sigma, meters.
    #[arg(long)]
    pub sigma_range: Option<f64>,
    /// Speed sensor noise sigma, m/s.
    #[arg(long)]
    pub sigma_speed: Option<f64>,
    /// Process noise sigma on each position axis, meters.
    #[arg(long)]
    pub sigma_pos: Option<f64>,
    /// Process noise sigma on heading, radians.
    #[arg(long)]
    pub sigma_heading: Option<f64>,
    /// Step duration, seconds.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Commanded cruise speed, m/s.
    #[arg(long)]
    pub cruise_speed: Option<f64>,
    /// Goal acceptance radius, meters.
    #[arg(long)]
    pub goal_threshold: Option<f64>,
    /// Landmark detection range, meters.
    #[arg(long)]
    pub detect_range: Option<f64>,
}

/// Resolved configuration, persisted next to the results so `plot` can
/// re-simulate sample trajectories deterministically.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub scenario: String,
    pub trials: u64,
    pub base_seed: u64,
    pub approach: ApproachFilter,
    pub margin: Option<f64>,
    pub segment_len: Option<f64>,
    pub sigma_range: f64,
    pub sigma_speed: f64,
    pub sigma_pos: f64,
    pub sigma_heading: f64,
    pub dt: f64,
    pub cruise_speed: f64,
    pub goal_threshold: f64,
    pub detect_range: f64,
}

impl ResolvedConfig {
    pub fn nav_config(&self) -> NavConfig {
        let mut cfg = NavConfig::experiment_default();
        cfg.measurement.sigma_range = self.sigma_range;
        cfg.measurement.sigma_speed = self.sigma_speed;
        cfg.process.sigma_x = self.sigma_pos;
        cfg.process.sigma_y = self.sigma_pos;
        cfg.process.sigma_theta = self.sigma_heading;
        cfg.motion.dt = self.dt;
        cfg.cruise_speed = self.cruise_speed;
        cfg.goal_threshold = self.goal_threshold;
        cfg.detect_range = self.detect_range;
        cfg.refresh_filter();
        cfg
    }
}

fn resolve(args: &RunArgs) -> ResolvedConfig {
    let defaults = NavConfig::experiment_default();
    ResolvedConfig {
        scenario: args.scenario.display().to_string(),
        trials: args.trials,
        base_seed: args.seed,
        approach: args.approach,
        margin: args.margin,
        segment_len: args.segment_len,
        sigma_range: args.sigma_range.unwrap_or(defaults.measurement.sigma_range),
        sigma_speed: args.sigma_speed.unwrap_or(defaults.measurement.sigma_speed),
        sigma_pos: args.sigma_pos.unwrap_or(defaults.process.sigma_x),
        sigma_heading: args.sigma_heading.unwrap_or(defaults.process.sigma_theta),
        dt: args.dt.unwrap_or(defaults.motion.dt),
        cruise_speed: args.cruise_speed.unwrap_or(defaults.cruise_speed),
        goal_threshold: args.goal_threshold.unwrap_or(defaults.goal_threshold),
        detect_range: args.detect_range.unwrap_or(defaults.detect_range),
    }
}

/// Applies path-level overrides and realizes every path of the scenario.
pub fn realize_paths(
    scenario: &Scenario,
    margin: Option<f64>,
    segment_len: Option<f64>,
) -> Result<Vec<(u32, u32, RealizedPath)>, CliError> {
    let mut out = Vec::new();
    for (path_id, spec) in scenario.paths.iter().enumerate() {
        let mut spec = spec.clone();
        if let Some(m) = margin {
            spec.margin = m;
        }
        if let Some(l) = segment_len {
            spec.segment_len = l;
        }
        let realized = scenario.realize(&spec)?;
        out.push((spec.class_id, path_id as u32, realized));
    }
    Ok(out)
}

/// One per-trial CSV row.
#[derive(Debug, Clone)]
pub struct TrialRow {
    pub trial: u64,
    pub path_class: u32,
    pub path_id: u32,
    pub approach: u8,
    pub percent_error: f64,
    pub ade: f64,
    pub fde: f64,
    pub reached_goal: bool,
    pub safety_violations: usize,
    pub steps: usize,
}

impl TrialRow {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.path_class,
            self.path_id,
            self.approach,
            self.percent_error,
            self.ade,
            self.fde,
            self.reached_goal,
            self.safety_violations,
            self.steps
        )
    }
}

/// Runs the full trial grid. Rows come back sorted by
/// (path_class, path_id, approach, trial) regardless of worker count.
pub fn run_trials(scenario: &Scenario, cfg: &ResolvedConfig) -> Result<Vec<TrialRow>, CliError> {
    let paths = realize_paths(scenario, cfg.margin, cfg.segment_len)?;
    let nav_cfg = cfg.nav_config();
    let approaches = cfg.approach.approaches();

    let mut jobs = Vec::new();
    for (path_ix, (class_id, path_id, _)) in paths.iter().enumerate() {
        for trial in 0..cfg.trials {
            for &approach in &approaches {
                jobs.push((path_ix, *class_id, *path_id, trial, approach));
            }
        }
    }

    let mut rows: Vec<TrialRow> = jobs
        .par_iter()
        .map(|&(path_ix, class_id, path_id, trial, approach)| {
            let rp = &paths[path_ix].2;
            let outcome = navigate(
                &rp.corridor,
                &scenario.map.landmarks,
                rp.truth.polyline[0],
                *rp.truth.polyline.last().expect("non-empty polyline"),
                rp.truth.length,
                approach,
                &nav_cfg,
                cfg.base_seed + trial,
            )
            .map_err(|e| CliError::Runtime(format!("path {path_id} trial {trial}: {e}")))?;
            let timed: Vec<_> = outcome
                .trajectory
                .iter()
                .map(|&(t, s)| (t, s.position))
                .collect();
            let eval = metrics::evaluate(&timed, &rp.truth.polyline)
                .map_err(|e| CliError::Runtime(format!("path {path_id} trial {trial}: {e}")))?;
            Ok(TrialRow {
                trial,
                path_class: class_id,
                path_id,
                approach: approach.index(),
                percent_error: eval.percent_error,
                ade: eval.ade,
                fde: eval.fde,
                reached_goal: outcome.reached_goal,
                safety_violations: outcome.safety_violations,
                steps: outcome.steps(),
            })
        })
        .collect::<Result<_, CliError>>()?;

    rows.sort_by_key(|r| (r.path_class, r.path_id, r.approach, r.trial));
    Ok(rows)
}

pub fn rows_to_csv(rows: &[TrialRow]) -> String {
    let mut out = String::from(TRIALS_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

pub fn summarize(rows: &[TrialRow]) -> BatchSummary {
    let results: Vec<TrialResult> = rows
        .iter()
        .map(|r| TrialResult {
            path_class: r.path_class,
            approach: r.approach,
            eval: metrics::TrajectoryEval {
                percent_error: r.percent_error,
                ade: r.ade,
                fde: r.fde,
                est_length: 0.0,
                true_length: 0.0,
            },
        })
        .collect();
    metrics::batch_evaluate(&results)
}

/// Summary CSV mirroring the per-class / average comparison layout.
pub fn summary_to_csv(summary: &BatchSummary, classes: &[u32]) -> String {
    let mut out = String::from("metric,path_class,approach_1,approach_2,improvement_pct\n");
    let cell = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.4}"));
    for metric in ["percent_error", "ade", "fde"] {
        let pick = |g: &metrics::GroupMeans| match metric {
            "percent_error" => g.percent_error,
            "ade" => g.ade,
            _ => g.fde,
        };
        for &class in classes {
            let a1 = summary.group(class, 1).map(&pick);
            let a2 = summary.group(class, 2).map(&pick);
            let imp = match (a1, a2) {
                (Some(a), Some(b)) => Some(metrics::improvement_pct(a, b)),
                _ => None,
            };
            let _ = writeln!(
                out,
                "{metric},PC{class},{},{},{}",
                cell(a1),
                cell(a2),
                cell(imp)
            );
        }
        let o1 = summary.overall.get(&1).map(&pick);
        let o2 = summary.overall.get(&2).map(&pick);
        let imp = match (o1, o2) {
            (Some(a), Some(b)) => Some(metrics::improvement_pct(a, b)),
            _ => None,
        };
        let _ = writeln!(
            out,
            "{metric},average,{},{},{}",
            cell(o1),
            cell(o2),
            cell(imp)
        );
    }
    out
}

/// Human-readable summary table for stdout.
pub fn summary_table(summary: &BatchSummary, classes: &[u32]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<16} {:<8} {:>12} {:>12} {:>13}",
        "metric", "class", "approach 1", "approach 2", "improvement"
    );
    let cell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    let icell = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.1}%"));
    for metric in ["percent_error", "ade", "fde"] {
        let pick = |g: &metrics::GroupMeans| match metric {
            "percent_error" => g.percent_error,
            "ade" => g.ade,
            _ => g.fde,
        };
        for &class in classes {
            let a1 = summary.group(class, 1).map(&pick);
            let a2 = summary.group(class, 2).map(&pick);
            let imp = match (a1, a2) {
                (Some(a), Some(b)) => Some(metrics::improvement_pct(a, b)),
                _ => None,
            };
            let _ = writeln!(
                out,
                "{:<16} {:<8} {:>12} {:>12} {:>13}",
                metric,
                format!("PC{class}"),
                cell(a1),
                cell(a2),
                icell(imp)
            );
        }
        let o1 = summary.overall.get(&1).map(&pick);
        let o2 = summary.overall.get(&2).map(&pick);
        let imp = match (o1, o2) {
            (Some(a), Some(b)) => Some(metrics::improvement_pct(a, b)),
            _ => None,
        };
        let _ = writeln!(
            out,
            "{:<16} {:<8} {:>12} {:>12} {:>13}",
            metric,
            "average",
            cell(o1),
            cell(o2),
            icell(imp)
        );
    }
    out
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Config("--trials must be at least 1".into()));
    }
    let cfg = resolve(args);
    let loaded = scenario::load_scenario(&args.scenario)?;

    let out_dir = args.out.clone().unwrap_or_else(default_out_dir);
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", out_dir.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let rows = pool.install(|| run_trials(&loaded, &cfg))?;

    let trials_path = out_dir.join("trials.csv");
    std::fs::write(&trials_path, rows_to_csv(&rows))
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", trials_path.display())))?;

    let classes = loaded.class_ids();
    let summary = summarize(&rows);
    let summary_path = out_dir.join("summary.csv");
    std::fs::write(&summary_path, summary_to_csv(&summary, &classes))
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", summary_path.display())))?;

    let mut config_json =
        serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    config_json.push('\n');
    let config_path = out_dir.join("config.json");
    std::fs::write(&config_path, config_json)
        .map_err(|e| CliError::Runtime(format!("writing {}: {e}", config_path.display())))?;

    println!(
        "{} trials x {} paths -> {} rows ({})",
        cfg.trials,
        loaded.paths.len(),
        rows.len(),
        trials_path.display()
    );
    print!("{}", summary_table(&summary, &classes));
    Ok(())
}
