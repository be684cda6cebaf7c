//! The `plot` subcommand: self-contained SVG renders of the map (landmarks,
//! corridor hulls, ground truth, observed trajectories) and per-class metric
//! bar charts.

use plotters::prelude::*;
use std::path::{Path, PathBuf};

use secnav_core::geometry::Point2;
use secnav_core::navigator::navigate;
use secnav_core::scenario::{self, Scenario};

use crate::experiment::{realize_paths, ResolvedConfig, TrialRow, TRIALS_HEADER};
use crate::{CliError, PlotArgs};

const APPROACH_COLORS: [RGBColor; 2] = [RGBColor(204, 0, 0), RGBColor(0, 140, 70)];

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parses the per-trial CSV written by `run`. Returns None when the file is
/// missing or holds no data rows.
fn read_trials(path: &Path) -> Result<Option<Vec<TrialRow>>, CliError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(_) => return Ok(None),
    };
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TRIALS_HEADER => {}
        _ => return Ok(None),
    }
    let mut rows = Vec::new();
    for (ix, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(CliError::Runtime(format!(
                "{}: malformed row {}",
                path.display(),
                ix + 2
            )));
        }
        let parse_err = |what: &str| {
            CliError::Runtime(format!("{}: bad {what} in row {}", path.display(), ix + 2))
        };
        rows.push(TrialRow {
            trial: fields[0].parse().map_err(|_| parse_err("trial"))?,
            path_class: fields[1].parse().map_err(|_| parse_err("path_class"))?,
            path_id: fields[2].parse().map_err(|_| parse_err("path_id"))?,
            approach: fields[3].parse().map_err(|_| parse_err("approach"))?,
            percent_error: fields[4].parse().map_err(|_| parse_err("percent_error"))?,
            ade: fields[5].parse().map_err(|_| parse_err("ade"))?,
            fde: fields[6].parse().map_err(|_| parse_err("fde"))?,
            reached_goal: fields[7].parse().map_err(|_| parse_err("reached_goal"))?,
            safety_violations: fields[8]
                .parse()
                .map_err(|_| parse_err("safety_violations"))?,
            steps: fields[9].parse().map_err(|_| parse_err("steps"))?,
        });
    }
    if rows.is_empty() {
        return Ok(None);
    }
    Ok(Some(rows))
}

/// Largest distance from any trajectory point to the truth polyline.
fn max_deviation(traj: &[Point2], truth: &[Point2]) -> f64 {
    traj.iter()
        .map(|p| {
            truth
                .iter()
                .map(|q| p.distance(*q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn plot_class_map(
    out: &Path,
    scenario: &Scenario,
    cfg: &ResolvedConfig,
    class: u32,
) -> Result<(), CliError> {
    let paths = realize_paths(scenario, cfg.margin, cfg.segment_len)?;
    let class_paths: Vec<_> = paths.iter().filter(|(c, _, _)| *c == class).collect();
    if class_paths.is_empty() {
        return Ok(());
    }

    let root = SVGBackend::new(out, (900, 900)).into_drawing_area();
    root.fill(&WHITE).map_err(runtime)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("path class {class}"), ("sans-serif", 26))
        .margin(12)
        .x_label_area_size(32)
        .y_label_area_size(44)
        .build_cartesian_2d(0.0..scenario.map.width, 0.0..scenario.map.height)
        .map_err(runtime)?;
    chart
        .configure_mesh()
        .x_desc("x [m]")
        .y_desc("y [m]")
        .draw()
        .map_err(runtime)?;

    // Obstacles as filled polygons.
    for poly in &scenario.map.obstacles {
        let pts: Vec<(f64, f64)> = poly.iter().map(|p| (p.x, p.y)).collect();
        chart
            .draw_series(std::iter::once(Polygon::new(pts, RED.mix(0.25))))
            .map_err(runtime)?;
    }

    // Corridor hulls of every path of the class.
    for (_, _, rp) in &class_paths {
        for hull in rp.corridor.hulls() {
            let mut outline: Vec<(f64, f64)> = hull.vertices().iter().map(|p| (p.x, p.y)).collect();
            outline.push(outline[0]);
            chart
                .draw_series(std::iter::once(PathElement::new(
                    outline,
                    BLUE.mix(0.35).stroke_width(1),
                )))
                .map_err(runtime)?;
        }
    }

    // Landmarks.
    chart
        .draw_series(
            scenario
                .map
                .landmarks
                .iter()
                .map(|l| Circle::new((l.position.x, l.position.y), 3, BLACK.filled())),
        )
        .map_err(runtime)?
        .label("landmarks")
        .legend(|(x, y)| Circle::new((x + 10, y), 3, BLACK.filled()));

    // Ground truth of every class path.
    for (i, (_, _, rp)) in class_paths.iter().enumerate() {
        let series = chart
            .draw_series(LineSeries::new(
                rp.truth.polyline.iter().map(|p| (p.x, p.y)),
                BLUE.stroke_width(2),
            ))
            .map_err(runtime)?;
        if i == 0 {
            series
                .label("ground truth")
                .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLUE.stroke_width(2)));
        }
    }

    // Observed trajectories of the first path, trial 0, re-simulated from
    // the recorded configuration.
    let (_, _, rp) = class_paths[0];
    let nav_cfg = cfg.nav_config();
    for approach in cfg.approach.approaches() {
        let outcome = navigate(
            &rp.corridor,
            &scenario.map.landmarks,
            rp.truth.polyline[0],
            *rp.truth.polyline.last().expect("non-empty"),
            rp.truth.length,
            approach,
            &nav_cfg,
            cfg.base_seed,
        )
        .map_err(runtime)?;
        let traj: Vec<Point2> = outcome.positions();
        let dev = max_deviation(&traj, &rp.truth.polyline);
        let color = APPROACH_COLORS[approach.index() as usize - 1];
        chart
            .draw_series(LineSeries::new(
                traj.iter().map(|p| (p.x, p.y)),
                color.stroke_width(2),
            ))
            .map_err(runtime)?
            .label(format!(
                "approach {} observed (max dev {:.2} m)",
                approach.index(),
                dev
            ))
            .legend(move |(x, y)| {
                PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
            });
    }

    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .draw()
        .map_err(runtime)?;
    root.present().map_err(runtime)?;
    Ok(())
}

fn plot_metric_bars(
    out: &Path,
    rows: &[TrialRow],
    classes: &[u32],
    metric: &str,
) -> Result<(), CliError> {
    let pick = |r: &TrialRow| match metric {
        "percent_error" => r.percent_error,
        "ade" => r.ade,
        _ => r.fde,
    };
    let mean = |class: u32, approach: u8| -> Option<f64> {
        let vals: Vec<f64> = rows
            .iter()
            .filter(|r| r.path_class == class && r.approach == approach)
            .map(pick)
            .collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    };

    let mut bars: Vec<(usize, u8, f64)> = Vec::new();
    for (ix, &class) in classes.iter().enumerate() {
        for approach in [1u8, 2] {
            if let Some(v) = mean(class, approach) {
                bars.push((ix, approach, v));
            }
        }
    }
    if bars.is_empty() {
        return Ok(());
    }
    let y_max = bars.iter().map(|b| b.2).fold(0.0, f64::max) * 1.25 + 1e-9;

    let root = SVGBackend::new(out, (700, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(runtime)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("mean {metric} per path class"), ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(32)
        .y_label_area_size(52)
        .build_cartesian_2d(0.0..classes.len() as f64, 0.0..y_max)
        .map_err(runtime)?;
    let class_labels: Vec<String> = classes.iter().map(|c| format!("PC{c}")).collect();
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(classes.len())
        .x_label_formatter(&|x| {
            let ix = x.floor() as usize;
            class_labels.get(ix).cloned().unwrap_or_default()
        })
        .y_desc(metric)
        .draw()
        .map_err(runtime)?;

    for &(class_ix, approach, value) in &bars {
        let x0 = class_ix as f64 + if approach == 1 { 0.15 } else { 0.55 };
        let color = APPROACH_COLORS[approach as usize - 1];
        chart
            .draw_series(std::iter::once(Rectangle::new(
                [(x0, 0.0), (x0 + 0.3, value)],
                color.filled(),
            )))
            .map_err(runtime)?;
    }
    // Legend swatches.
    for (approach, label_y) in [(1u8, 0.94), (2u8, 0.88)] {
        if bars.iter().any(|b| b.1 == approach) {
            let color = APPROACH_COLORS[approach as usize - 1];
            chart
                .draw_series(std::iter::once(Rectangle::new(
                    [
                        (classes.len() as f64 * 0.02, y_max * label_y),
                        (classes.len() as f64 * 0.05, y_max * (label_y + 0.04)),
                    ],
                    color.filled(),
                )))
                .map_err(runtime)?;
            chart
                .draw_series(std::iter::once(Text::new(
                    format!("approach {approach}"),
                    (classes.len() as f64 * 0.06, y_max * (label_y + 0.01)),
                    ("sans-serif", 16),
                )))
                .map_err(runtime)?;
        }
    }
    root.present().map_err(runtime)?;
    Ok(())
}

pub fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let trials_path = args.results.join("trials.csv");
    let rows = match read_trials(&trials_path)? {
        Some(rows) => rows,
        None => {
            eprintln!(
                "warning: no results in {}, nothing to plot",
                args.results.display()
            );
            return Ok(());
        }
    };
    let config_path = args.results.join("config.json");
    let cfg: ResolvedConfig = match std::fs::read_to_string(&config_path) {
        Ok(text) => serde_json::from_str(&text)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", config_path.display())))?,
        Err(_) => {
            eprintln!(
                "warning: missing {}, nothing to plot",
                config_path.display()
            );
            return Ok(());
        }
    };
    let loaded = scenario::load_scenario(&args.scenario)?;

    let out_dir: PathBuf = args.out.clone().unwrap_or_else(|| args.results.clone());
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Runtime(format!("creating {}: {e}", out_dir.display())))?;

    let mut classes: Vec<u32> = rows.iter().map(|r| r.path_class).collect();
    classes.sort_unstable();
    classes.dedup();

    let mut written = Vec::new();
    for &class in &classes {
        let path = out_dir.join(format!("map_class_{class}.svg"));
        plot_class_map(&path, &loaded, &cfg, class)?;
        written.push(path);
    }
    for metric in ["percent_error", "ade", "fde"] {
        let path = out_dir.join(format!("metrics_{metric}.svg"));
        plot_metric_bars(&path, &rows, &classes, metric)?;
        written.push(path);
    }
    println!("wrote {} plots to {}", written.len(), out_dir.display());
    Ok(())
}
