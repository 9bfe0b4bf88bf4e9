//! Export/import of preprocessed feasibility graphs, so the all-pairs
//! station Dijkstras run once and get reused across experiments.
//!
//! Stations CSV mirrors the nodes schema; edges CSV is
//! `from,to,path_time_s,path_energy_ws`.

use std::fmt::Write as _;
use std::path::Path;

use evnav_core::feasibility::{FeasibilityEdge, FeasibilityGraph, Station};
use evnav_core::road_graph::{ChargerSpec, NodeId};

use crate::{write_atomic, CliError};

pub const STATIONS_HEADER: &str = "id,lat,lon,max_power_w,min_power_w";
pub const FG_EDGES_HEADER: &str = "from,to,path_time_s,path_energy_ws";

/// Writes the base (terminal-free) feasibility graph.
pub fn save_feasibility(
    fg: &FeasibilityGraph,
    stations_path: &Path,
    edges_path: &Path,
) -> Result<(), CliError> {
    let mut s_out = String::new();
    s_out.push_str(STATIONS_HEADER);
    s_out.push('\n');
    for s in fg.stations() {
        match s.spec {
            Some(spec) => {
                let _ = writeln!(
                    s_out,
                    "{},{},{},{},{}",
                    s.node_id, s.lat, s.lon, spec.max_power_w, spec.min_power_w
                );
            }
            None => {
                let _ = writeln!(s_out, "{},{},{},,", s.node_id, s.lat, s.lon);
            }
        }
    }
    let mut e_out = String::new();
    e_out.push_str(FG_EDGES_HEADER);
    e_out.push('\n');
    for e in fg.edges() {
        let _ = writeln!(e_out, "{},{},{},{}", e.from, e.to, e.path_time_s, e.path_energy_ws);
    }
    write_atomic(stations_path, s_out.as_bytes())?;
    write_atomic(edges_path, e_out.as_bytes())
}

/// Reads a feasibility graph back. The battery window and the road speed
/// cap are not part of the files; they come from the experiment's vehicle
/// and instance, which must match the ones used at preprocessing time.
pub fn load_feasibility(
    stations_path: &Path,
    edges_path: &Path,
    usable_window_ws: f64,
    max_speed_mps: f64,
) -> Result<FeasibilityGraph, CliError> {
    let s_text = std::fs::read_to_string(stations_path)
        .map_err(|e| CliError::io(format!("reading {}", stations_path.display()), e))?;
    let e_text = std::fs::read_to_string(edges_path)
        .map_err(|e| CliError::io(format!("reading {}", edges_path.display()), e))?;

    let mut stations = Vec::new();
    for (lineno, raw) in s_text.lines().enumerate() {
        let line = raw.trim_end();
        if lineno == 0 {
            if line != STATIONS_HEADER {
                return Err(CliError::parse(stations_path, 1, "bad stations header"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 5 {
            return Err(CliError::parse(stations_path, lineno + 1, "expected 5 fields"));
        }
        let parse = |name: &str, raw: &str| -> Result<f64, CliError> {
            raw.parse::<f64>()
                .map_err(|_| CliError::parse(stations_path, lineno + 1, format!("bad {name}")))
        };
        let id: u64 = cols[0]
            .parse()
            .map_err(|_| CliError::parse(stations_path, lineno + 1, "bad id"))?;
        let spec = if cols[3].is_empty() {
            None
        } else {
            Some(ChargerSpec {
                max_power_w: parse("max_power_w", cols[3])?,
                min_power_w: parse("min_power_w", cols[4])?,
            })
        };
        stations.push(Station {
            node_id: NodeId(id),
            lat: parse("lat", cols[1])?,
            lon: parse("lon", cols[2])?,
            spec,
        });
    }

    let mut edges = Vec::new();
    for (lineno, raw) in e_text.lines().enumerate() {
        let line = raw.trim_end();
        if lineno == 0 {
            if line != FG_EDGES_HEADER {
                return Err(CliError::parse(edges_path, 1, "bad edges header"));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(CliError::parse(edges_path, lineno + 1, "expected 4 fields"));
        }
        let id = |raw: &str| -> Result<u64, CliError> {
            raw.parse()
                .map_err(|_| CliError::parse(edges_path, lineno + 1, "bad station id"))
        };
        let num = |name: &str, raw: &str| -> Result<f64, CliError> {
            raw.parse::<f64>()
                .map_err(|_| CliError::parse(edges_path, lineno + 1, format!("bad {name}")))
        };
        edges.push(FeasibilityEdge {
            from: NodeId(id(cols[0])?),
            to: NodeId(id(cols[1])?),
            path_time_s: num("path_time_s", cols[2])?,
            path_energy_ws: num("path_energy_ws", cols[3])?,
            road_path: None,
        });
    }

    FeasibilityGraph::from_parts(stations, edges, usable_window_ws, max_speed_mps)
        .map_err(|e| CliError::Config(format!("{}: {e}", edges_path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::default_vehicle;
    use crate::generate::{generate_instance, GeneratorSpec};
    use evnav_core::feasibility::{build_feasibility_graph, usable_window};
    use tempfile::tempdir;

    #[test]
    fn feasibility_round_trip_preserves_graph() {
        let spec = GeneratorSpec {
            node_count: 50,
            charger_fraction: 0.3,
            extent_deg: 0.8,
            radius_deg: 0.25,
            seed: 21,
            ..GeneratorSpec::default()
        };
        let road = generate_instance(&spec).unwrap();
        let veh = default_vehicle();
        let fg = build_feasibility_graph(&road, &veh, false).unwrap();
        let dir = tempdir().unwrap();
        let sp = dir.path().join("fg_stations.csv");
        let ep = dir.path().join("fg_edges.csv");
        save_feasibility(&fg, &sp, &ep).unwrap();
        let fg2 = load_feasibility(&sp, &ep, usable_window(&veh), road.max_speed_mps()).unwrap();
        assert_eq!(fg, fg2);
        // Idempotent serialization.
        let sp2 = dir.path().join("fg_stations2.csv");
        let ep2 = dir.path().join("fg_edges2.csv");
        save_feasibility(&fg2, &sp2, &ep2).unwrap();
        assert_eq!(std::fs::read(&sp).unwrap(), std::fs::read(&sp2).unwrap());
        assert_eq!(std::fs::read(&ep).unwrap(), std::fs::read(&ep2).unwrap());
    }
}
