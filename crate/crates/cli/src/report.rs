//! Post-run reporting: per-policy summary statistics of final cumulative
//! regret, and an SVG chart of mean cumulative regret per iteration.
//! The chart is emitted directly as polylines; no plotting dependency.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use evnav_core::bandit::PolicyKind;

use crate::runner::TRACE_HEADER;
use crate::{write_atomic, CliError};

pub const SUMMARY_HEADER: &str =
    "policy,runs,mean_final_cumulative_regret_s,std_final_cumulative_regret_s";

/// All parsed traces of one directory: per policy, one cumulative-regret
/// series per run, plus the seed each came from.
#[derive(Debug, Default)]
pub struct TraceSet {
    pub per_policy: BTreeMap<PolicyKind, Vec<TraceRun>>,
}

#[derive(Debug, Clone)]
pub struct TraceRun {
    pub seed: u64,
    pub instant: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl TraceSet {
    pub fn horizon(&self) -> usize {
        self.per_policy
            .values()
            .flat_map(|runs| runs.iter().map(|r| r.cumulative.len()))
            .max()
            .unwrap_or(0)
    }

    /// Mean cumulative regret across runs at each iteration.
    pub fn mean_curve(&self, kind: PolicyKind) -> Option<Vec<f64>> {
        let runs = self.per_policy.get(&kind)?;
        if runs.is_empty() {
            return None;
        }
        let t_max = runs.iter().map(|r| r.cumulative.len()).min()?;
        let mut mean = vec![0.0; t_max];
        for run in runs {
            for (i, v) in run.cumulative[..t_max].iter().enumerate() {
                mean[i] += v;
            }
        }
        let n = runs.len() as f64;
        for v in &mut mean {
            *v /= n;
        }
        Some(mean)
    }
}

/// Parses every `trace_s*_*.csv` in the directory.
pub fn read_traces(dir: &Path) -> Result<TraceSet, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(format!("reading {}", dir.display()), e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .map(|n| n.starts_with("trace_s") && n.ends_with(".csv"))
                .unwrap_or(false)
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Config(format!(
            "no trace files found in {}",
            dir.display()
        )));
    }
    let mut set = TraceSet::default();
    for path in paths {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == TRACE_HEADER => {}
            _ => return Err(CliError::parse(&path, 1, "bad trace header")),
        }
        let mut seed = 0;
        let mut kind = None;
        let mut instant = Vec::new();
        let mut cumulative = Vec::new();
        for (lineno, line) in lines {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(CliError::parse(&path, lineno + 1, "expected 5 fields"));
            }
            seed = cols[0]
                .parse()
                .map_err(|_| CliError::parse(&path, lineno + 1, "bad seed"))?;
            let k = PolicyKind::parse(cols[1])
                .ok_or_else(|| CliError::parse(&path, lineno + 1, "unknown policy"))?;
            if *kind.get_or_insert(k) != k {
                return Err(CliError::parse(&path, lineno + 1, "mixed policies in one trace"));
            }
            let t: usize = cols[2]
                .parse()
                .map_err(|_| CliError::parse(&path, lineno + 1, "bad iteration"))?;
            if t != instant.len() + 1 {
                return Err(CliError::parse(&path, lineno + 1, "iterations must be contiguous"));
            }
            instant.push(
                cols[3]
                    .parse()
                    .map_err(|_| CliError::parse(&path, lineno + 1, "bad instant regret"))?,
            );
            cumulative.push(
                cols[4]
                    .parse()
                    .map_err(|_| CliError::parse(&path, lineno + 1, "bad cumulative regret"))?,
            );
        }
        let Some(kind) = kind else {
            return Err(CliError::parse(&path, 2, "trace has no rows"));
        };
        set.per_policy
            .entry(kind)
            .or_default()
            .push(TraceRun { seed, instant, cumulative });
    }
    Ok(set)
}

/// Per-policy mean and sample standard deviation of the final cumulative
/// regret across runs.
pub fn summarize(set: &TraceSet) -> Vec<(PolicyKind, usize, f64, f64)> {
    let mut rows = Vec::new();
    for (&kind, runs) in &set.per_policy {
        let finals: Vec<f64> = runs
            .iter()
            .filter_map(|r| r.cumulative.last().copied())
            .collect();
        let n = finals.len();
        if n == 0 {
            continue;
        }
        let mean = finals.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            let ss: f64 = finals.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        rows.push((kind, n, mean, std));
    }
    rows
}

fn policy_color(kind: PolicyKind) -> &'static str {
    match kind {
        PolicyKind::Greedy => "#d62728",
        PolicyKind::EpsilonGreedy => "#ff7f0e",
        PolicyKind::ThompsonSampling => "#2ca02c",
        PolicyKind::BayesUcb => "#1f77b4",
    }
}

fn nice_step(range: f64) -> f64 {
    if range <= 0.0 {
        return 1.0;
    }
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let factor = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    factor * mag
}

/// Renders mean cumulative regret per policy as an 800x600 SVG line chart.
pub fn render_svg(set: &TraceSet) -> String {
    const W: f64 = 800.0;
    const H: f64 = 600.0;
    const LEFT: f64 = 90.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 30.0;
    const BOTTOM: f64 = 60.0;
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let t_max = set.horizon().max(1) as f64;
    let mut y_max: f64 = 0.0;
    let mut curves: Vec<(PolicyKind, Vec<f64>)> = Vec::new();
    for &kind in set.per_policy.keys() {
        if let Some(curve) = set.mean_curve(kind) {
            if let Some(m) = curve.last() {
                y_max = y_max.max(*m);
            }
            curves.push((kind, curve));
        }
    }
    if y_max <= 0.0 {
        y_max = 1.0;
    }
    y_max *= 1.05;
    let x_of = |t: f64| LEFT + plot_w * (t - 1.0) / (t_max - 1.0).max(1.0);
    let y_of = |v: f64| TOP + plot_h * (1.0 - v / y_max);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"13\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    // Axes.
    let _ = writeln!(
        svg,
        "<line x1=\"{LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
        H - BOTTOM,
        W - RIGHT,
        H - BOTTOM
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{LEFT}\" y1=\"{TOP}\" x2=\"{LEFT}\" y2=\"{}\" stroke=\"black\"/>",
        H - BOTTOM
    );
    // Y ticks and grid.
    let y_step = nice_step(y_max);
    let mut v = 0.0;
    while v <= y_max {
        let y = y_of(v);
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#dddddd\"/>",
            LEFT,
            W - RIGHT
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{v}</text>",
            LEFT - 6.0,
            y + 4.0
        );
        v += y_step;
    }
    // X ticks.
    let x_step = nice_step(t_max);
    let mut t = 0.0;
    while t <= t_max {
        let tt = t.max(1.0);
        let x = x_of(tt);
        let _ = writeln!(
            svg,
            "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"black\"/>",
            H - BOTTOM,
            H - BOTTOM + 5.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            H - BOTTOM + 20.0,
            tt
        );
        t += x_step;
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\">iteration</text>",
        LEFT + plot_w / 2.0,
        H - 15.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">mean cumulative regret (s)</text>",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    // Curves.
    for (kind, curve) in &curves {
        let mut points = String::new();
        for (i, v) in curve.iter().enumerate() {
            let _ = write!(points, "{:.2},{:.2} ", x_of((i + 1) as f64), y_of(*v));
        }
        let _ = writeln!(
            svg,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\" points=\"{}\"/>",
            policy_color(*kind),
            points.trim_end()
        );
    }
    // Legend.
    let mut ly = TOP + 12.0;
    for (kind, _) in &curves {
        let _ = writeln!(
            svg,
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{}\" stroke-width=\"2.5\"/>",
            LEFT + 12.0,
            LEFT + 42.0,
            policy_color(*kind)
        );
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{:.2}\">{kind}</text>",
            LEFT + 48.0,
            ly + 4.0
        );
        ly += 18.0;
    }
    svg.push_str("</svg>\n");
    svg
}

/// The `report` subcommand: summary CSV plus the regret SVG.
pub fn report(trace_dir: &Path, out_dir: &Path) -> Result<(), CliError> {
    let set = read_traces(trace_dir)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::io(format!("creating {}", out_dir.display()), e))?;
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for (kind, runs, mean, std) in summarize(&set) {
        let _ = writeln!(out, "{kind},{runs},{mean},{std}");
    }
    write_atomic(&out_dir.join("summary.csv"), out.as_bytes())?;
    write_atomic(&out_dir.join("regret.svg"), render_svg(&set).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write_trace(dir: &Path, seed: u64, kind: &str, rows: &[(f64, f64)]) {
        let mut text = String::from(TRACE_HEADER);
        text.push('\n');
        for (i, (inst, cum)) in rows.iter().enumerate() {
            let _ = writeln!(text, "{seed},{kind},{},{inst},{cum}", i + 1);
        }
        std::fs::write(dir.join(format!("trace_s{seed}_{kind}.csv")), text).unwrap();
    }

    #[test]
    fn single_trace_summary_is_its_final_value() {
        let dir = tempdir().unwrap();
        write_trace(dir.path(), 1, "greedy", &[(5.0, 5.0), (3.0, 8.0)]);
        let set = read_traces(dir.path()).unwrap();
        let rows = summarize(&set);
        assert_eq!(rows.len(), 1);
        let (kind, n, mean, std) = rows[0];
        assert_eq!(kind, PolicyKind::Greedy);
        assert_eq!(n, 1);
        assert_eq!(mean, 8.0);
        assert_eq!(std, 0.0);
    }

    #[test]
    fn zero_traces_give_zero_summary() {
        let dir = tempdir().unwrap();
        for seed in 1..=5 {
            write_trace(dir.path(), seed, "thompson", &[(0.0, 0.0), (0.0, 0.0)]);
        }
        let set = read_traces(dir.path()).unwrap();
        let rows = summarize(&set);
        assert_eq!(rows, vec![(PolicyKind::ThompsonSampling, 5, 0.0, 0.0)]);
    }

    #[test]
    fn summary_matches_hand_computed_statistics() {
        let dir = tempdir().unwrap();
        write_trace(dir.path(), 1, "bayes_ucb", &[(1.0, 1.0), (1.0, 2.0)]);
        write_trace(dir.path(), 2, "bayes_ucb", &[(4.0, 4.0), (2.0, 6.0)]);
        write_trace(dir.path(), 3, "bayes_ucb", &[(0.0, 0.0), (4.0, 4.0)]);
        let set = read_traces(dir.path()).unwrap();
        let rows = summarize(&set);
        let (_, n, mean, std) = rows[0];
        assert_eq!(n, 3);
        assert!((mean - 4.0).abs() < 1e-12);
        // Sample std of {2, 6, 4} = 2.
        assert!((std - 2.0).abs() < 1e-12);
        // Mean curve across runs.
        let curve = set.mean_curve(PolicyKind::BayesUcb).unwrap();
        assert_eq!(curve, vec![5.0 / 3.0, 4.0]);
    }

    #[test]
    fn missing_directory_and_empty_directory_error() {
        let dir = tempdir().unwrap();
        assert!(read_traces(&dir.path().join("nope")).is_err());
        assert!(matches!(read_traces(dir.path()), Err(CliError::Config(_))));
    }

    #[test]
    fn svg_contains_axes_and_one_polyline_per_policy() {
        let dir = tempdir().unwrap();
        write_trace(dir.path(), 1, "greedy", &[(5.0, 5.0), (5.0, 10.0)]);
        write_trace(dir.path(), 1, "thompson", &[(2.0, 2.0), (0.0, 2.0)]);
        let set = read_traces(dir.path()).unwrap();
        let svg = render_svg(&set);
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("viewBox=\"0 0 800 600\""));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("greedy"));
        assert!(svg.contains("thompson"));
        assert!(svg.ends_with("</svg>\n"));
    }

    #[test]
    fn report_writes_summary_and_svg() {
        let dir = tempdir().unwrap();
        write_trace(dir.path(), 1, "greedy", &[(5.0, 5.0)]);
        report(dir.path(), dir.path()).unwrap();
        let summary = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
        assert!(summary.starts_with(SUMMARY_HEADER));
        assert!(summary.contains("greedy,1,5,0"));
        assert!(dir.path().join("regret.svg").exists());
    }
}
