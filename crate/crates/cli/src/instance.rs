//! Road-network instance files.
//!
//! Nodes CSV: header `id,lat,lon,max_power_w,min_power_w`; the power fields
//! are empty for locations without a charger, and an empty minimum defaults
//! to half the maximum. Edges CSV: header `from,to,length_m,speed_mps`, one
//! directed edge per row.

use std::fmt::Write as _;
use std::path::Path;

use evnav_core::road_graph::{ChargerSpec, NodeId, RoadEdge, RoadGraph, RoadNode};

use crate::{write_atomic, CliError};

pub const NODES_HEADER: &str = "id,lat,lon,max_power_w,min_power_w";
pub const EDGES_HEADER: &str = "from,to,length_m,speed_mps";

fn read_rows<'a>(
    text: &'a str,
    path: &Path,
    header: &str,
    fields: usize,
) -> Result<Vec<(usize, Vec<&'a str>)>, CliError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim_end() == header => {}
        Some((_, first)) => {
            return Err(CliError::parse(
                path,
                1,
                format!("expected header `{header}`, found `{first}`"),
            ))
        }
        None => return Err(CliError::parse(path, 1, "empty file")),
    }
    let mut rows = Vec::new();
    for (lineno, raw) in lines {
        let line = raw.trim_end();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != fields {
            return Err(CliError::parse(
                path,
                lineno + 1,
                format!("expected {fields} fields, found {}", cols.len()),
            ));
        }
        rows.push((lineno + 1, cols));
    }
    Ok(rows)
}

fn field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    name: &str,
    raw: &str,
) -> Result<T, CliError> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| CliError::parse(path, line, format!("bad {name} value `{raw}`")))
}

/// Loads and validates an instance from its two CSV files.
///
/// Rows sharing a node id are merged when their coordinates agree exactly
/// (the highest-power charger wins, one station per location); conflicting
/// duplicates are rejected.
pub fn load_instance(nodes_path: &Path, edges_path: &Path) -> Result<RoadGraph, CliError> {
    let nodes_text = std::fs::read_to_string(nodes_path)
        .map_err(|e| CliError::io(format!("reading {}", nodes_path.display()), e))?;
    let edges_text = std::fs::read_to_string(edges_path)
        .map_err(|e| CliError::io(format!("reading {}", edges_path.display()), e))?;

    let mut nodes: Vec<RoadNode> = Vec::new();
    let mut index: std::collections::BTreeMap<u64, usize> = std::collections::BTreeMap::new();
    for (line, cols) in read_rows(&nodes_text, nodes_path, NODES_HEADER, 5)? {
        let id: u64 = field(nodes_path, line, "id", cols[0])?;
        let lat: f64 = field(nodes_path, line, "lat", cols[1])?;
        let lon: f64 = field(nodes_path, line, "lon", cols[2])?;
        let charger = if cols[3].trim().is_empty() {
            if !cols[4].trim().is_empty() {
                return Err(CliError::parse(
                    nodes_path,
                    line,
                    "min_power_w given without max_power_w",
                ));
            }
            None
        } else {
            let max_power_w: f64 = field(nodes_path, line, "max_power_w", cols[3])?;
            let min_power_w: f64 = if cols[4].trim().is_empty() {
                max_power_w / 2.0
            } else {
                field(nodes_path, line, "min_power_w", cols[4])?
            };
            Some(ChargerSpec { max_power_w, min_power_w })
        };
        match index.get(&id) {
            None => {
                index.insert(id, nodes.len());
                nodes.push(RoadNode { id: NodeId(id), lat, lon, charger });
            }
            Some(&existing) => {
                let prev = &mut nodes[existing];
                if prev.lat != lat || prev.lon != lon {
                    return Err(CliError::parse(
                        nodes_path,
                        line,
                        format!("duplicate node id {id} with conflicting coordinates"),
                    ));
                }
                // Same location listed twice: keep the strongest charger.
                prev.charger = match (prev.charger, charger) {
                    (Some(a), Some(b)) => Some(if b.max_power_w > a.max_power_w { b } else { a }),
                    (a, b) => a.or(b),
                };
            }
        }
    }

    let mut edges: Vec<RoadEdge> = Vec::new();
    for (line, cols) in read_rows(&edges_text, edges_path, EDGES_HEADER, 4)? {
        let from: u64 = field(edges_path, line, "from", cols[0])?;
        let to: u64 = field(edges_path, line, "to", cols[1])?;
        let length_m: f64 = field(edges_path, line, "length_m", cols[2])?;
        let speed_mps: f64 = field(edges_path, line, "speed_mps", cols[3])?;
        if !(length_m > 0.0) {
            return Err(CliError::parse(edges_path, line, "length_m must be positive"));
        }
        if !(speed_mps > 0.0) {
            return Err(CliError::parse(edges_path, line, "speed_mps must be positive"));
        }
        edges.push(RoadEdge { from: NodeId(from), to: NodeId(to), length_m, speed_mps });
    }

    RoadGraph::new(nodes, edges)
        .map_err(|e| CliError::Config(format!("{}: {e}", nodes_path.display())))
}

/// Serializes an instance back into its canonical CSV form (nodes ascending
/// by id, edges in stored order). Loading and saving is idempotent byte-wise.
pub fn save_instance(
    graph: &RoadGraph,
    nodes_path: &Path,
    edges_path: &Path,
) -> Result<(), CliError> {
    let mut nodes_out = String::new();
    nodes_out.push_str(NODES_HEADER);
    nodes_out.push('\n');
    for node in graph.nodes() {
        match node.charger {
            Some(spec) => {
                let _ = writeln!(
                    nodes_out,
                    "{},{},{},{},{}",
                    node.id, node.lat, node.lon, spec.max_power_w, spec.min_power_w
                );
            }
            None => {
                let _ = writeln!(nodes_out, "{},{},{},,", node.id, node.lat, node.lon);
            }
        }
    }
    let mut edges_out = String::new();
    edges_out.push_str(EDGES_HEADER);
    edges_out.push('\n');
    for edge in graph.edges() {
        let _ = writeln!(
            edges_out,
            "{},{},{},{}",
            edge.from, edge.to, edge.length_m, edge.speed_mps
        );
    }
    write_atomic(nodes_path, nodes_out.as_bytes())?;
    write_atomic(edges_path, edges_out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn loads_minimal_instance() {
        let dir = tempdir().unwrap();
        let nodes = write(
            dir.path(),
            "nodes.csv",
            "id,lat,lon,max_power_w,min_power_w\n0,57.0,12.0,,\n1,57.1,12.1,150000,\n",
        );
        let edges = write(
            dir.path(),
            "edges.csv",
            "from,to,length_m,speed_mps\n0,1,1000,20\n",
        );
        let g = load_instance(&nodes, &edges).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        // Empty min defaults to half of max.
        let station = g.node(g.index_of(NodeId(1)).unwrap());
        assert_eq!(station.charger.unwrap().min_power_w, 75_000.0);
    }

    #[test]
    fn rejects_dangling_edge_and_bad_rows() {
        let dir = tempdir().unwrap();
        let nodes = write(
            dir.path(),
            "nodes.csv",
            "id,lat,lon,max_power_w,min_power_w\n0,57.0,12.0,,\n",
        );
        let edges = write(
            dir.path(),
            "edges.csv",
            "from,to,length_m,speed_mps\n0,9,1000,20\n",
        );
        assert!(load_instance(&nodes, &edges).is_err());
        let bad_edges = write(
            dir.path(),
            "edges2.csv",
            "from,to,length_m,speed_mps\n0,0,-3,20\n",
        );
        let err = load_instance(&nodes, &bad_edges).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 2, .. }));
        // Wrong header is a line-1 parse error.
        let wrong = write(dir.path(), "edges3.csv", "a,b\n");
        let err = load_instance(&nodes, &wrong).unwrap_err();
        assert!(matches!(err, CliError::Parse { line: 1, .. }));
    }

    #[test]
    fn sub_threshold_station_dropped_node_kept() {
        let dir = tempdir().unwrap();
        let nodes = write(
            dir.path(),
            "nodes.csv",
            "id,lat,lon,max_power_w,min_power_w\n0,57.0,12.0,9000,4500\n1,57.1,12.1,150000,75000\n",
        );
        let edges = write(
            dir.path(),
            "edges.csv",
            "from,to,length_m,speed_mps\n0,1,1000,20\n",
        );
        let g = load_instance(&nodes, &edges).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.station_ids(), vec![NodeId(1)]);
    }

    #[test]
    fn duplicate_rows_merge_by_max_power_or_conflict() {
        let dir = tempdir().unwrap();
        let nodes = write(
            dir.path(),
            "nodes.csv",
            "id,lat,lon,max_power_w,min_power_w\n0,57.0,12.0,50000,25000\n0,57.0,12.0,150000,75000\n1,57.1,12.1,,\n",
        );
        let edges = write(
            dir.path(),
            "edges.csv",
            "from,to,length_m,speed_mps\n0,1,1000,20\n",
        );
        let g = load_instance(&nodes, &edges).unwrap();
        let station = g.node(g.index_of(NodeId(0)).unwrap());
        assert_eq!(station.charger.unwrap().max_power_w, 150_000.0);
        // Conflicting coordinates are an error.
        let conflicting = write(
            dir.path(),
            "nodes2.csv",
            "id,lat,lon,max_power_w,min_power_w\n0,57.0,12.0,,\n0,57.5,12.0,,\n",
        );
        assert!(load_instance(&conflicting, &edges).is_err());
    }

    #[test]
    fn save_then_load_round_trips_bytes() {
        let dir = tempdir().unwrap();
        let nodes = write(
            dir.path(),
            "nodes.csv",
            "id,lat,lon,max_power_w,min_power_w\n0,57.123456789,12.0,,\n1,57.1,12.1,150000,75000\n",
        );
        let edges = write(
            dir.path(),
            "edges.csv",
            "from,to,length_m,speed_mps\n0,1,1234.5678,19.95\n1,0,1234.5678,19.95\n",
        );
        let g = load_instance(&nodes, &edges).unwrap();
        let n2 = dir.path().join("nodes_rt.csv");
        let e2 = dir.path().join("edges_rt.csv");
        save_instance(&g, &n2, &e2).unwrap();
        let g2 = load_instance(&n2, &e2).unwrap();
        let n3 = dir.path().join("nodes_rt2.csv");
        let e3 = dir.path().join("edges_rt2.csv");
        save_instance(&g2, &n3, &e3).unwrap();
        // Serialization is canonical: a second round trip is byte-identical.
        assert_eq!(std::fs::read(&n2).unwrap(), std::fs::read(&n3).unwrap());
        assert_eq!(std::fs::read(&e2).unwrap(), std::fs::read(&e3).unwrap());
        assert_eq!(g.node_count(), g2.node_count());
        assert_eq!(g.edges(), g2.edges());
    }
}
