//! End-to-end experiment orchestration: instance acquisition, feasibility
//! preprocessing (with a file cache), and the multi-seed policy runs that
//! emit regret traces and posterior snapshots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use evnav_core::bandit::{Policy, PolicyKind};
use evnav_core::environment::{draw_truth, EdgeFeedback, Environment};
use evnav_core::feasibility::{
    build_feasibility_graph, connect_terminals, usable_window, FeasibilityError, FeasibilityGraph,
};
use evnav_core::numerics::Rng;
use evnav_core::road_graph::{NodeId, RoadGraph};

use crate::config::ExperimentConfig;
use crate::feasibility_io::{load_feasibility, save_feasibility};
use crate::generate::{corner_terminals, generate_instance};
use crate::instance::{load_instance, save_instance};
use crate::{write_atomic, CliError};

pub const TRACE_HEADER: &str = "seed,policy,t,instant_regret_s,cumulative_regret_s";
pub const SNAPSHOT_HEADER: &str =
    "station_id,queue_alpha,queue_beta,charge_ln_pi,charge_gamma,charge_xi,map_fallback";

/// Independent stream purposes hanging off each run seed.
const TAG_TRUTH: u64 = 1;
const TAG_FEEDBACK: u64 = 2;
const TAG_POLICY: u64 = 3;

/// What a finished run produced, for callers that want to inspect it.
#[derive(Debug)]
pub struct RunOutcome {
    pub source: NodeId,
    pub target: NodeId,
    pub station_count: usize,
    pub feasibility_edge_count: usize,
    pub trace_paths: Vec<PathBuf>,
}

fn feasibility_err(e: FeasibilityError) -> CliError {
    match e {
        FeasibilityError::IsolatedTerminal { .. } | FeasibilityError::Unreachable { .. } => {
            CliError::Infeasible(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

/// Loads instance files when configured, otherwise generates the synthetic
/// instance and writes its CSVs into the output directory for the record.
pub fn acquire_instance(cfg: &ExperimentConfig) -> Result<RoadGraph, CliError> {
    if cfg.has_instance_files() {
        let nodes = cfg.nodes_path.as_ref().expect("validated together");
        let edges = cfg.edges_path.as_ref().expect("validated together");
        return load_instance(nodes, edges);
    }
    let Some(gen) = &cfg.generator else {
        return Err(CliError::Config(
            "config needs an [instance] with nodes/edges paths or a [generator] section".into(),
        ));
    };
    let road = generate_instance(gen)?;
    save_instance(
        &road,
        &cfg.output_dir.join("nodes.csv"),
        &cfg.output_dir.join("edges.csv"),
    )?;
    Ok(road)
}

/// Configured terminals, or the bounding-box corner nodes as the default.
pub fn resolve_terminals(cfg: &ExperimentConfig, road: &RoadGraph) -> Result<(NodeId, NodeId), CliError> {
    let check = |id: u64| {
        let node = NodeId(id);
        if road.index_of(node).is_none() {
            return Err(CliError::Config(format!("terminal node {id} not in the instance")));
        }
        Ok(node)
    };
    match (cfg.source, cfg.target) {
        (Some(s), Some(t)) => Ok((check(s)?, check(t)?)),
        (None, None) => Ok(corner_terminals(road)),
        (Some(s), None) => Ok((check(s)?, corner_terminals(road).1)),
        (None, Some(t)) => Ok((corner_terminals(road).0, check(t)?)),
    }
}

/// Builds the base feasibility graph, or reloads it from the cache files in
/// the output directory when they exist. `preprocess` forces a fresh build.
pub fn preprocess(
    cfg: &ExperimentConfig,
    road: &RoadGraph,
    force_rebuild: bool,
) -> Result<FeasibilityGraph, CliError> {
    let stations_path = cfg.output_dir.join("feasibility_stations.csv");
    let edges_path = cfg.output_dir.join("feasibility_edges.csv");
    let window = usable_window(&cfg.vehicle);
    if !force_rebuild && stations_path.exists() && edges_path.exists() {
        return load_feasibility(&stations_path, &edges_path, window, road.max_speed_mps());
    }
    let fg = build_feasibility_graph(road, &cfg.vehicle, false).map_err(feasibility_err)?;
    save_feasibility(&fg, &stations_path, &edges_path)?;
    Ok(fg)
}

fn policy_index(kind: PolicyKind) -> u64 {
    PolicyKind::ALL
        .iter()
        .position(|k| *k == kind)
        .expect("ALL covers every kind") as u64
}

/// One full (seed, policy) trajectory: select, observe, record regret.
/// Returns per-iteration (instant, cumulative) regret rows.
pub fn run_single(
    fg: &FeasibilityGraph,
    cfg: &ExperimentConfig,
    seed: u64,
    kind: PolicyKind,
) -> Result<(Vec<(f64, f64)>, Policy), CliError> {
    let (src, trg) = (
        fg.source().expect("terminals are connected before running"),
        fg.target().expect("terminals are connected before running"),
    );
    let root = Rng::from_seed(seed);
    let truth = draw_truth(fg, &cfg.priors, &root.child(TAG_TRUTH))
        .map_err(|e| CliError::Config(format!("drawing truth for seed {seed}: {e}")))?;
    let mut env = Environment::new(
        fg,
        truth,
        cfg.priors.deficit_scale,
        cfg.truncate_expected_loss,
        &root.child(TAG_FEEDBACK),
    );
    let (_, optimal_loss) = env
        .optimal_expected_path()
        .map_err(|e| CliError::Infeasible(format!("seed {seed}: {e}")))?;
    let mut policy = Policy::new(
        kind,
        fg,
        &cfg.priors,
        root.child(TAG_POLICY).child(policy_index(kind)),
        cfg.epsilon_coeff,
    )
    .map_err(|e| CliError::Config(format!("policy init: {e}")))?;
    let mut rows = Vec::with_capacity(cfg.horizon as usize);
    let mut cumulative = 0.0;
    for _ in 0..cfg.horizon {
        let sel = policy
            .select_path(fg, src, trg)
            .map_err(|e| CliError::Infeasible(format!("seed {seed} {kind}: {e}")))?;
        let instant = env
            .regret_step(&sel.edges, optimal_loss)
            .map_err(|e| CliError::Config(format!("regret: {e}")))?;
        cumulative += instant;
        let feedback: Vec<EdgeFeedback> = sel
            .edges
            .iter()
            .map(|&e| env.sample_feedback(e))
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("feedback: {e}")))?;
        policy
            .observe(fg, &sel, &feedback)
            .map_err(|e| CliError::Config(format!("observe: {e}")))?;
        rows.push((instant, cumulative));
    }
    Ok((rows, policy))
}

pub fn trace_path(dir: &Path, seed: u64, kind: PolicyKind) -> PathBuf {
    dir.join(format!("trace_s{seed}_{kind}.csv"))
}

pub fn snapshot_path(dir: &Path, seed: u64, kind: PolicyKind) -> PathBuf {
    dir.join(format!("posteriors_s{seed}_{kind}.csv"))
}

fn write_trace(
    path: &Path,
    seed: u64,
    kind: PolicyKind,
    rows: &[(f64, f64)],
) -> Result<(), CliError> {
    let mut out = String::with_capacity(rows.len() * 32);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (i, (instant, cumulative)) in rows.iter().enumerate() {
        let _ = writeln!(out, "{seed},{kind},{},{instant},{cumulative}", i + 1);
    }
    write_atomic(path, out.as_bytes())
}

fn write_snapshot(path: &Path, policy: &Policy) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for (id, queue, charge) in policy.posterior_states() {
        let _ = writeln!(
            out,
            "{id},{},{},{},{},{},{}",
            queue.alpha,
            queue.beta,
            charge.ln_pi,
            charge.gamma_p,
            charge.xi,
            charge.map_fallback()
        );
    }
    write_atomic(path, out.as_bytes())
}

/// The `run` subcommand: preprocess (or reuse the cache), then run every
/// (seed, policy) pair against the same per-seed truth, writing one trace
/// and one posterior snapshot per pair.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome, CliError> {
    std::fs::create_dir_all(&cfg.output_dir)
        .map_err(|e| CliError::io(format!("creating {}", cfg.output_dir.display()), e))?;
    let road = acquire_instance(cfg)?;
    let (src, trg) = resolve_terminals(cfg, &road)?;
    let base = preprocess(cfg, &road, false)?;
    if base.stations().len() < 2 {
        return Err(CliError::Infeasible(format!(
            "only {} charging stations survive preprocessing",
            base.stations().len()
        )));
    }
    let fg = connect_terminals(&base, &road, src, trg, &cfg.vehicle, false)
        .map_err(feasibility_err)?;
    let mut trace_paths = Vec::new();
    for &seed in &cfg.seeds {
        for &kind in &cfg.policies {
            let (rows, policy) = run_single(&fg, cfg, seed, kind)?;
            let tp = trace_path(&cfg.output_dir, seed, kind);
            write_trace(&tp, seed, kind, &rows)?;
            write_snapshot(&snapshot_path(&cfg.output_dir, seed, kind), &policy)?;
            trace_paths.push(tp);
        }
    }
    Ok(RunOutcome {
        source: src,
        target: trg,
        station_count: fg.stations().len(),
        feasibility_edge_count: fg.edges().len(),
        trace_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::GeneratorSpec;
    use tempfile::tempdir;

    fn small_cfg(out: &Path) -> ExperimentConfig {
        ExperimentConfig {
            generator: Some(GeneratorSpec {
                node_count: 60,
                charger_fraction: 0.25,
                extent_deg: 1.0,
                radius_deg: 0.3,
                seed: 5,
                ..GeneratorSpec::default()
            }),
            horizon: 25,
            seeds: vec![1, 2],
            output_dir: out.to_path_buf(),
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn run_writes_expected_files_with_expected_rows() {
        let dir = tempdir().unwrap();
        let cfg = small_cfg(dir.path());
        let outcome = run_experiment(&cfg).unwrap();
        // 2 seeds x 4 policies.
        assert_eq!(outcome.trace_paths.len(), 8);
        for p in &outcome.trace_paths {
            let text = std::fs::read_to_string(p).unwrap();
            let mut lines = text.lines();
            assert_eq!(lines.next().unwrap(), TRACE_HEADER);
            assert_eq!(lines.count(), 25);
        }
        // Instance echo and feasibility cache exist.
        assert!(dir.path().join("nodes.csv").exists());
        assert!(dir.path().join("edges.csv").exists());
        assert!(dir.path().join("feasibility_stations.csv").exists());
        // Posterior snapshots cover exactly the charging stations.
        let snap = std::fs::read_to_string(snapshot_path(
            dir.path(),
            1,
            PolicyKind::Greedy,
        ))
        .unwrap();
        let mut charger_rows = 0;
        let stations =
            std::fs::read_to_string(dir.path().join("feasibility_stations.csv")).unwrap();
        for line in stations.lines().skip(1) {
            if !line.is_empty() {
                charger_rows += 1;
            }
        }
        assert_eq!(snap.lines().count() - 1, charger_rows);
        assert!(snap.lines().nth(1).unwrap().split(',').count() == 7);
    }

    #[test]
    fn rerun_is_byte_identical_and_cache_equivalent() {
        let d1 = tempdir().unwrap();
        let d2 = tempdir().unwrap();
        let cfg1 = small_cfg(d1.path());
        let cfg2 = small_cfg(d2.path());
        run_experiment(&cfg1).unwrap();
        run_experiment(&cfg2).unwrap();
        // Fresh-directory reruns agree byte for byte.
        for name in [
            "nodes.csv",
            "edges.csv",
            "feasibility_stations.csv",
            "feasibility_edges.csv",
            "trace_s1_greedy.csv",
            "trace_s2_thompson.csv",
            "posteriors_s1_bayes_ucb.csv",
        ] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs");
        }
        // Second run in the same directory reuses the cache and reproduces
        // the traces exactly.
        let before = std::fs::read(d1.path().join("trace_s1_thompson.csv")).unwrap();
        run_experiment(&cfg1).unwrap();
        let after = std::fs::read(d1.path().join("trace_s1_thompson.csv")).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn cumulative_column_is_prefix_sum() {
        let dir = tempdir().unwrap();
        let mut cfg = small_cfg(dir.path());
        cfg.seeds = vec![3];
        cfg.policies = vec![PolicyKind::ThompsonSampling];
        run_experiment(&cfg).unwrap();
        let text = std::fs::read_to_string(trace_path(dir.path(), 3, PolicyKind::ThompsonSampling))
            .unwrap();
        let mut acc = 0.0;
        for line in text.lines().skip(1) {
            let cols: Vec<&str> = line.split(',').collect();
            let instant: f64 = cols[3].parse().unwrap();
            let cumulative: f64 = cols[4].parse().unwrap();
            assert!(instant >= 0.0);
            acc += instant;
            assert!((acc - cumulative).abs() < 1e-9);
        }
    }

    #[test]
    fn unreachable_terminals_exit_infeasible() {
        let dir = tempdir().unwrap();
        let mut cfg = small_cfg(dir.path());
        // Shrink the battery so no hop fits the window.
        cfg.vehicle.battery_capacity_ws = 1e5;
        let err = run_experiment(&cfg).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
    }
}
