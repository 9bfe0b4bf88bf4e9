//! Synthetic instance generator: random geometric road graphs with a
//! configurable charger density, standing in for real map extracts.

use evnav_core::numerics::Rng;
use evnav_core::road_graph::{haversine_m, ChargerSpec, NodeId, RoadEdge, RoadGraph, RoadNode};

use crate::CliError;

/// Parameters of the random geometric instance.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    pub node_count: usize,
    /// Fraction of nodes that host a charging station.
    pub charger_fraction: f64,
    pub origin_lat: f64,
    pub origin_lon: f64,
    /// Square side length in degrees; nodes are uniform inside it.
    pub extent_deg: f64,
    /// Nodes closer than this (Euclidean in degree space) get a road.
    pub radius_deg: f64,
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    /// Station maximum powers are drawn uniformly from this set.
    pub max_power_choices_w: Vec<f64>,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            node_count: 300,
            charger_fraction: 0.2,
            origin_lat: 56.0,
            origin_lon: 12.0,
            extent_deg: 3.0,
            radius_deg: 0.35,
            speed_min_mps: 15.0,
            speed_max_mps: 100.0 / 3.0,
            max_power_choices_w: vec![50_000.0, 150_000.0, 350_000.0],
            seed: 1,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), String> {
        if self.node_count < 2 {
            return Err("node_count must be at least 2".into());
        }
        if !(0.0..=1.0).contains(&self.charger_fraction) {
            return Err("charger_fraction must be in [0, 1]".into());
        }
        if !(self.extent_deg > 0.0) || !(self.radius_deg > 0.0) {
            return Err("extent_deg and radius_deg must be positive".into());
        }
        if !(self.speed_min_mps > 0.0) || self.speed_max_mps < self.speed_min_mps {
            return Err("need 0 < speed_min_mps <= speed_max_mps".into());
        }
        if self.origin_lat < -89.0
            || self.origin_lat + self.extent_deg > 89.0
            || self.origin_lon < -180.0
            || self.origin_lon + self.extent_deg > 180.0
        {
            return Err("instance extent leaves the supported coordinate range".into());
        }
        if self.max_power_choices_w.is_empty()
            || self.max_power_choices_w.iter().any(|p| !(*p > 0.0))
        {
            return Err("max_power_choices_w must be a nonempty list of positive powers".into());
        }
        Ok(())
    }
}

/// Retries with fresh positions until the road graph is strongly connected.
const CONNECTIVITY_RETRIES: u64 = 32;

/// Generates a strongly connected random geometric road graph,
/// deterministically from the spec's seed.
pub fn generate_instance(spec: &GeneratorSpec) -> Result<RoadGraph, CliError> {
    spec.validate().map_err(CliError::Config)?;
    let root = Rng::from_seed(spec.seed);
    for attempt in 0..CONNECTIVITY_RETRIES {
        let mut rng = root.child(attempt);
        let graph = generate_once(spec, &mut rng);
        if strongly_connected(&graph) {
            return Ok(graph);
        }
    }
    Err(CliError::Config(format!(
        "generator failed to produce a strongly connected graph in {CONNECTIVITY_RETRIES} attempts; \
         increase radius_deg or node_count"
    )))
}

fn generate_once(spec: &GeneratorSpec, rng: &mut Rng) -> RoadGraph {
    let n = spec.node_count;
    let mut lats = Vec::with_capacity(n);
    let mut lons = Vec::with_capacity(n);
    for _ in 0..n {
        lats.push(spec.origin_lat + spec.extent_deg * rng.next_open01());
        lons.push(spec.origin_lon + spec.extent_deg * rng.next_open01());
    }
    // Charger placement: shuffle indices, take the first k.
    let k = (spec.charger_fraction * n as f64).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.next_index(i + 1);
        order.swap(i, j);
    }
    let mut is_charger = vec![false; n];
    let mut max_power = vec![0.0f64; n];
    for &i in order.iter().take(k) {
        is_charger[i] = true;
        max_power[i] =
            spec.max_power_choices_w[rng.next_index(spec.max_power_choices_w.len())];
    }
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let charger = is_charger[i].then(|| ChargerSpec {
            max_power_w: max_power[i],
            min_power_w: max_power[i] / 2.0,
        });
        nodes.push(RoadNode { id: NodeId(i as u64), lat: lats[i], lon: lons[i], charger });
    }
    let mut edges = Vec::new();
    let r2 = spec.radius_deg * spec.radius_deg;
    for i in 0..n {
        for j in (i + 1)..n {
            let dlat = lats[i] - lats[j];
            let dlon = lons[i] - lons[j];
            if dlat * dlat + dlon * dlon < r2 {
                let length_m = haversine_m(lats[i], lons[i], lats[j], lons[j]).max(1.0);
                let speed_mps = spec.speed_min_mps
                    + (spec.speed_max_mps - spec.speed_min_mps) * rng.next_open01();
                edges.push(RoadEdge {
                    from: NodeId(i as u64),
                    to: NodeId(j as u64),
                    length_m,
                    speed_mps,
                });
                edges.push(RoadEdge {
                    from: NodeId(j as u64),
                    to: NodeId(i as u64),
                    length_m,
                    speed_mps,
                });
            }
        }
    }
    RoadGraph::new(nodes, edges).expect("generated instance is structurally valid")
}

/// Both-direction reachability from node 0 over the whole graph. Since every
/// generated road is bidirectional this reduces to weak connectivity, but it
/// stays correct for any graph.
fn strongly_connected(g: &RoadGraph) -> bool {
    let n = g.node_count();
    if n == 0 {
        return false;
    }
    let mut fwd = vec![false; n];
    let mut stack = vec![0usize];
    fwd[0] = true;
    while let Some(u) = stack.pop() {
        for &e in g.out_edges(u) {
            let v = g.index_of(g.edge(e).to).expect("validated endpoint");
            if !fwd[v] {
                fwd[v] = true;
                stack.push(v);
            }
        }
    }
    if fwd.iter().any(|r| !r) {
        return false;
    }
    // Reverse pass over incoming edges.
    let mut incoming = vec![Vec::new(); n];
    for (idx, e) in g.edges().iter().enumerate() {
        let v = g.index_of(e.to).expect("validated endpoint");
        incoming[v].push(idx as u32);
    }
    let mut back = vec![false; n];
    let mut stack = vec![0usize];
    back[0] = true;
    while let Some(u) = stack.pop() {
        for &e in &incoming[u] {
            let v = g.index_of(g.edge(e).from).expect("validated endpoint");
            if !back[v] {
                back[v] = true;
                stack.push(v);
            }
        }
    }
    back.iter().all(|r| *r)
}

/// Default trip terminals of an instance: the nodes nearest the southwest
/// and northeast corners of its bounding box, forcing a multi-hop trip.
pub fn corner_terminals(g: &RoadGraph) -> (NodeId, NodeId) {
    let mut min_lat = f64::INFINITY;
    let mut min_lon = f64::INFINITY;
    let mut max_lat = f64::NEG_INFINITY;
    let mut max_lon = f64::NEG_INFINITY;
    for node in g.nodes() {
        min_lat = min_lat.min(node.lat);
        min_lon = min_lon.min(node.lon);
        max_lat = max_lat.max(node.lat);
        max_lon = max_lon.max(node.lon);
    }
    let nearest = |lat: f64, lon: f64| {
        g.nodes()
            .iter()
            .map(|n| {
                let d = (n.lat - lat) * (n.lat - lat) + (n.lon - lon) * (n.lon - lon);
                (d, n.id)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("graphs are nonempty")
            .1
    };
    (nearest(min_lat, min_lon), nearest(max_lat, max_lon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{load_instance, save_instance};
    use tempfile::tempdir;

    fn small_spec() -> GeneratorSpec {
        GeneratorSpec {
            node_count: 60,
            charger_fraction: 0.25,
            extent_deg: 1.0,
            radius_deg: 0.3,
            seed: 11,
            ..GeneratorSpec::default()
        }
    }

    #[test]
    fn full_charger_fraction_marks_every_node() {
        let spec = GeneratorSpec {
            node_count: 10,
            charger_fraction: 1.0,
            extent_deg: 0.4,
            radius_deg: 0.4,
            seed: 3,
            ..GeneratorSpec::default()
        };
        let g = generate_instance(&spec).unwrap();
        assert_eq!(g.station_ids().len(), 10);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let spec = small_spec();
        let a = generate_instance(&spec).unwrap();
        let b = generate_instance(&spec).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.edges(), b.edges());
        let other = GeneratorSpec { seed: 12, ..spec };
        let c = generate_instance(&other).unwrap();
        assert_ne!(a.nodes(), c.nodes());
    }

    #[test]
    fn generated_instance_survives_save_load() {
        let dir = tempdir().unwrap();
        let g = generate_instance(&small_spec()).unwrap();
        let nodes = dir.path().join("nodes.csv");
        let edges = dir.path().join("edges.csv");
        save_instance(&g, &nodes, &edges).unwrap();
        let g2 = load_instance(&nodes, &edges).unwrap();
        assert_eq!(g.node_count(), g2.node_count());
        assert_eq!(g.edge_count(), g2.edge_count());
        assert_eq!(g.station_ids(), g2.station_ids());
    }

    #[test]
    fn generated_graph_is_strongly_connected() {
        let g = generate_instance(&small_spec()).unwrap();
        assert!(strongly_connected(&g));
    }

    #[test]
    fn charger_count_matches_fraction() {
        let g = generate_instance(&small_spec()).unwrap();
        assert_eq!(g.station_ids().len(), 15); // 60 * 0.25
    }

    #[test]
    fn corner_terminals_are_far_apart() {
        let g = generate_instance(&small_spec()).unwrap();
        let (src, trg) = corner_terminals(&g);
        assert_ne!(src, trg);
        let s = g.node(g.index_of(src).unwrap());
        let t = g.node(g.index_of(trg).unwrap());
        assert!(t.lat > s.lat && t.lon > s.lon);
    }

    #[test]
    fn impossible_connectivity_fails_cleanly() {
        let spec = GeneratorSpec {
            node_count: 50,
            radius_deg: 0.001,
            extent_deg: 3.0,
            ..GeneratorSpec::default()
        };
        assert!(matches!(generate_instance(&spec), Err(CliError::Config(_))));
    }
}
