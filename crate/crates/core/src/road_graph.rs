//! Road network representation, per-segment travel time and energy, and
//! exact shortest-path search (Dijkstra and A* with a beeline heuristic).

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

/// Mean Earth radius in meters, for great-circle distances.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Charging stations below this specified power are dropped at load time;
/// slower chargers are irrelevant for long-distance trips.
pub const MIN_STATION_POWER_W: f64 = 10_000.0;

/// Identifier of a road-network node, unique within a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Power envelope of a charging station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargerSpec {
    pub max_power_w: f64,
    pub min_power_w: f64,
}

/// A road-network vertex: an intersection or other notable location,
/// possibly hosting a charging station.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNode {
    pub id: NodeId,
    pub lat: f64,
    pub lon: f64,
    pub charger: Option<ChargerSpec>,
}

/// A directed road segment; the reverse direction is a separate edge.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub length_m: f64,
    pub speed_mps: f64,
}

/// Longitudinal-dynamics and battery parameters of the simulated vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleParams {
    pub mass_kg: f64,
    pub gravity_mps2: f64,
    pub rolling_coeff: f64,
    pub drag_coeff: f64,
    pub frontal_area_m2: f64,
    pub air_density_kgm3: f64,
    pub efficiency: f64,
    pub battery_capacity_ws: f64,
    pub soc_min_frac: f64,
    pub soc_max_frac: f64,
}

impl VehicleParams {
    pub fn validate(&self) -> Result<(), GraphError> {
        let positive = [
            self.mass_kg,
            self.gravity_mps2,
            self.rolling_coeff,
            self.drag_coeff,
            self.frontal_area_m2,
            self.air_density_kgm3,
            self.efficiency,
            self.battery_capacity_ws,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(GraphError::InvalidVehicle("all physical parameters must be positive"));
        }
        if !(self.soc_min_frac >= 0.0
            && self.soc_min_frac < self.soc_max_frac
            && self.soc_max_frac <= 1.0)
        {
            return Err(GraphError::InvalidVehicle("need 0 <= soc_min < soc_max <= 1"));
        }
        Ok(())
    }
}

/// A connected edge sequence with its summed travel time and energy.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadPath {
    pub edges: Vec<u32>,
    pub total_time_s: f64,
    pub total_energy_ws: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    DuplicateNode(NodeId),
    UnknownNode(NodeId),
    InvalidEdge { from: NodeId, to: NodeId, what: &'static str },
    InvalidNode { id: NodeId, what: &'static str },
    InvalidVehicle(&'static str),
    Empty,
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::DuplicateNode(id) => write!(f, "duplicate node id {id}"),
            GraphError::UnknownNode(id) => write!(f, "edge references unknown node id {id}"),
            GraphError::InvalidEdge { from, to, what } => {
                write!(f, "invalid edge {from}->{to}: {what}")
            }
            GraphError::InvalidNode { id, what } => write!(f, "invalid node {id}: {what}"),
            GraphError::InvalidVehicle(what) => write!(f, "invalid vehicle parameters: {what}"),
            GraphError::Empty => write!(f, "graph has no nodes"),
        }
    }
}

impl core::error::Error for GraphError {}

/// Immutable directed road network with adjacency index.
#[derive(Debug, Clone)]
pub struct RoadGraph {
    nodes: Vec<RoadNode>,
    edges: Vec<RoadEdge>,
    index_of: BTreeMap<NodeId, usize>,
    out_edges: Vec<Vec<u32>>,
    max_speed_mps: f64,
}

impl RoadGraph {
    /// Validates and indexes the given nodes and edges. Chargers below
    /// [`MIN_STATION_POWER_W`] are dropped (the node itself is kept).
    pub fn new(mut nodes: Vec<RoadNode>, edges: Vec<RoadEdge>) -> Result<Self, GraphError> {
        if nodes.is_empty() {
            return Err(GraphError::Empty);
        }
        nodes.sort_by_key(|n| n.id);
        let mut index_of = BTreeMap::new();
        for (i, node) in nodes.iter_mut().enumerate() {
            if !(node.lat >= -90.0 && node.lat <= 90.0) {
                return Err(GraphError::InvalidNode { id: node.id, what: "latitude out of range" });
            }
            if !(node.lon >= -180.0 && node.lon <= 180.0) {
                return Err(GraphError::InvalidNode { id: node.id, what: "longitude out of range" });
            }
            if let Some(spec) = node.charger {
                if !(spec.min_power_w > 0.0 && spec.min_power_w <= spec.max_power_w) {
                    return Err(GraphError::InvalidNode {
                        id: node.id,
                        what: "charger requires 0 < min_power <= max_power",
                    });
                }
                if spec.max_power_w < MIN_STATION_POWER_W {
                    node.charger = None;
                }
            }
            if index_of.insert(node.id, i).is_some() {
                return Err(GraphError::DuplicateNode(node.id));
            }
        }
        let mut out_edges = vec![Vec::new(); nodes.len()];
        let mut max_speed_mps: f64 = 0.0;
        for (e, edge) in edges.iter().enumerate() {
            if !(edge.length_m > 0.0) {
                return Err(GraphError::InvalidEdge {
                    from: edge.from,
                    to: edge.to,
                    what: "length must be positive",
                });
            }
            if !(edge.speed_mps > 0.0) {
                return Err(GraphError::InvalidEdge {
                    from: edge.from,
                    to: edge.to,
                    what: "speed must be positive",
                });
            }
            let from = *index_of.get(&edge.from).ok_or(GraphError::UnknownNode(edge.from))?;
            if !index_of.contains_key(&edge.to) {
                return Err(GraphError::UnknownNode(edge.to));
            }
            out_edges[from].push(e as u32);
            max_speed_mps = max_speed_mps.max(edge.speed_mps);
        }
        Ok(RoadGraph { nodes, edges, index_of, out_edges, max_speed_mps })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[RoadNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[RoadEdge] {
        &self.edges
    }

    pub fn node(&self, idx: usize) -> &RoadNode {
        &self.nodes[idx]
    }

    pub fn edge(&self, idx: u32) -> &RoadEdge {
        &self.edges[idx as usize]
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index_of.get(&id).copied()
    }

    pub fn out_edges(&self, node_idx: usize) -> &[u32] {
        &self.out_edges[node_idx]
    }

    /// Maximum segment speed in the graph; the beeline heuristic divides by it.
    pub fn max_speed_mps(&self) -> f64 {
        self.max_speed_mps
    }

    /// Node ids of all charging stations, ascending.
    pub fn station_ids(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.charger.is_some()).map(|n| n.id).collect()
    }

    /// Per-edge travel times, indexed like [`Self::edges`].
    pub fn time_weights(&self) -> Vec<f64> {
        self.edges.iter().map(edge_travel_time).collect()
    }

    /// Sums time and energy over a contiguous edge sequence.
    pub fn path_totals(&self, edges: &[u32], veh: &VehicleParams) -> RoadPath {
        let mut total_time_s = 0.0;
        let mut total_energy_ws = 0.0;
        for &e in edges {
            let edge = self.edge(e);
            total_time_s += edge_travel_time(edge);
            total_energy_ws += edge_energy(edge, veh);
        }
        RoadPath { edges: edges.to_vec(), total_time_s, total_energy_ws }
    }
}

/// Energy in watt-seconds to traverse an edge at its posted speed:
/// rolling resistance plus aerodynamic drag, divided by drivetrain
/// efficiency. Accelerations and altitude changes are disregarded.
pub fn edge_energy(edge: &RoadEdge, veh: &VehicleParams) -> f64 {
    let rolling = veh.mass_kg * veh.gravity_mps2 * veh.rolling_coeff * edge.length_m;
    let drag = 0.5
        * veh.drag_coeff
        * veh.frontal_area_m2
        * veh.air_density_kgm3
        * edge.length_m
        * edge.speed_mps
        * edge.speed_mps;
    (rolling + drag) / veh.efficiency
}

/// Travel time in seconds of an edge at its posted speed.
pub fn edge_travel_time(edge: &RoadEdge) -> f64 {
    edge.length_m / edge.speed_mps
}

/// Great-circle distance in meters between two coordinates (haversine).
pub fn haversine_m(lat_a: f64, lon_a: f64, lat_b: f64, lon_b: f64) -> f64 {
    let to_rad = core::f64::consts::PI / 180.0;
    let phi_a = lat_a * to_rad;
    let phi_b = lat_b * to_rad;
    let d_phi = (lat_b - lat_a) * to_rad;
    let d_lambda = (lon_b - lon_a) * to_rad;
    let s1 = libm::sin(d_phi / 2.0);
    let s2 = libm::sin(d_lambda / 2.0);
    let a = s1 * s1 + libm::cos(phi_a) * libm::cos(phi_b) * s2 * s2;
    2.0 * EARTH_RADIUS_M * libm::asin(libm::sqrt(a.min(1.0)))
}

/// Admissible travel-time lower bound: beeline distance at `v_max`.
pub fn beeline_heuristic(a: &RoadNode, b: &RoadNode, v_max_mps: f64) -> f64 {
    haversine_m(a.lat, a.lon, b.lat, b.lon) / v_max_mps
}

/// Single-source shortest-path result: distances and predecessor edges,
/// indexed by node position. Unreachable nodes carry infinite distance.
#[derive(Debug, Clone)]
pub struct ShortestPathTree {
    pub dist: Vec<f64>,
    pub pred_edge: Vec<Option<u32>>,
}

impl ShortestPathTree {
    /// Edge sequence from the source to `target_idx`, or None if unreachable.
    pub fn path_to(&self, g: &RoadGraph, target_idx: usize) -> Option<Vec<u32>> {
        if !self.dist[target_idx].is_finite() {
            return None;
        }
        let mut edges = Vec::new();
        let mut cur = target_idx;
        while let Some(e) = self.pred_edge[cur] {
            edges.push(e);
            cur = g.index_of(g.edge(e).from).expect("edge endpoints are indexed");
        }
        edges.reverse();
        Some(edges)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchError {
    UnknownSource(NodeId),
    UnknownTarget(NodeId),
    /// No path exists between the requested endpoints.
    Unreachable { from: NodeId, to: NodeId },
    NegativeWeight,
    WeightCountMismatch,
}

impl fmt::Display for SearchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SearchError::UnknownSource(id) => write!(f, "unknown source node {id}"),
            SearchError::UnknownTarget(id) => write!(f, "unknown target node {id}"),
            SearchError::Unreachable { from, to } => write!(f, "no path from {from} to {to}"),
            SearchError::NegativeWeight => write!(f, "edge weights must be nonnegative"),
            SearchError::WeightCountMismatch => write!(f, "one weight per edge required"),
        }
    }
}

impl core::error::Error for SearchError {}

/// Min-heap entry ordered by cost, ties broken by node index for
/// deterministic pop order.
#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn check_weights(g: &RoadGraph, weights: &[f64]) -> Result<(), SearchError> {
    if weights.len() != g.edge_count() {
        return Err(SearchError::WeightCountMismatch);
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(SearchError::NegativeWeight);
    }
    Ok(())
}

/// Exact single-source shortest distances under nonnegative per-edge weights.
pub fn dijkstra(g: &RoadGraph, source: NodeId, weights: &[f64]) -> Result<ShortestPathTree, SearchError> {
    check_weights(g, weights)?;
    let src = g.index_of(source).ok_or(SearchError::UnknownSource(source))?;
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred_edge = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapEntry { cost: 0.0, node: src as u32 });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        let u = node as usize;
        if cost > dist[u] {
            continue;
        }
        for &e in g.out_edges(u) {
            let edge = g.edge(e);
            let v = g.index_of(edge.to).expect("validated endpoint");
            let cand = cost + weights[e as usize];
            if cand < dist[v] {
                dist[v] = cand;
                pred_edge[v] = Some(e);
                heap.push(HeapEntry { cost: cand, node: v as u32 });
            }
        }
    }
    Ok(ShortestPathTree { dist, pred_edge })
}

/// An optimal route found by [`a_star`].
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub edges: Vec<u32>,
    pub cost: f64,
}

/// A* search under an admissible, consistent heuristic; the returned cost
/// equals Dijkstra's distance exactly.
pub fn a_star(
    g: &RoadGraph,
    source: NodeId,
    target: NodeId,
    weights: &[f64],
    heuristic: impl Fn(usize) -> f64,
) -> Result<Route, SearchError> {
    check_weights(g, weights)?;
    let src = g.index_of(source).ok_or(SearchError::UnknownSource(source))?;
    let trg = g.index_of(target).ok_or(SearchError::UnknownTarget(target))?;
    if src == trg {
        return Ok(Route { edges: Vec::new(), cost: 0.0 });
    }
    let n = g.node_count();
    let mut g_score = vec![f64::INFINITY; n];
    let mut pred_edge: Vec<Option<u32>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    g_score[src] = 0.0;
    heap.push(HeapEntry { cost: heuristic(src), node: src as u32 });
    while let Some(HeapEntry { node, .. }) = heap.pop() {
        let u = node as usize;
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if u == trg {
            let mut edges = Vec::new();
            let mut cur = trg;
            while let Some(e) = pred_edge[cur] {
                edges.push(e);
                cur = g.index_of(g.edge(e).from).expect("validated endpoint");
            }
            edges.reverse();
            return Ok(Route { edges, cost: g_score[trg] });
        }
        for &e in g.out_edges(u) {
            let edge = g.edge(e);
            let v = g.index_of(edge.to).expect("validated endpoint");
            if settled[v] {
                continue;
            }
            let cand = g_score[u] + weights[e as usize];
            if cand < g_score[v] {
                g_score[v] = cand;
                pred_edge[v] = Some(e);
                heap.push(HeapEntry { cost: cand + heuristic(v), node: v as u32 });
            }
        }
    }
    Err(SearchError::Unreachable { from: source, to: target })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;

    fn truck() -> VehicleParams {
        VehicleParams {
            mass_kg: 13_700.0,
            gravity_mps2: 9.81,
            rolling_coeff: 0.0064,
            drag_coeff: 0.7,
            frontal_area_m2: 8.0,
            air_density_kgm3: 1.2,
            efficiency: 1.0,
            battery_capacity_ws: 2.5e8,
            soc_min_frac: 0.1,
            soc_max_frac: 0.8,
        }
    }

    fn edge(from: u64, to: u64, length_m: f64, speed_mps: f64) -> RoadEdge {
        RoadEdge { from: NodeId(from), to: NodeId(to), length_m, speed_mps }
    }

    fn plain_node(id: u64, lat: f64, lon: f64) -> RoadNode {
        RoadNode { id: NodeId(id), lat, lon, charger: None }
    }

    #[test]
    fn edge_energy_truck_reference_value() {
        let e = edge(0, 1, 1000.0, 20.0);
        let got = edge_energy(&e, &truck());
        let expected = 2_204_140.8;
        assert!((got - expected).abs() / expected < 1e-9, "got {got}");
        // Wh display conversion sanity.
        assert!((got / 3600.0 - 612.2613333333333).abs() < 1e-6);
    }

    #[test]
    fn edge_energy_is_linear_in_length_and_zero_at_zero() {
        let veh = truck();
        let e1 = edge(0, 1, 500.0, 25.0);
        let e2 = edge(0, 1, 1000.0, 25.0);
        assert_eq!(2.0 * edge_energy(&e1, &veh), edge_energy(&e2, &veh));
        let e0 = RoadEdge { length_m: 0.0, ..e1.clone() };
        assert_eq!(edge_energy(&e0, &veh), 0.0);
    }

    #[test]
    fn edge_energy_increases_with_speed() {
        let veh = truck();
        let mut prev = 0.0;
        for v in 1..40 {
            let e = edge(0, 1, 1000.0, v as f64);
            let en = edge_energy(&e, &veh);
            assert!(en > prev);
            prev = en;
        }
    }

    #[test]
    fn travel_time_is_distance_over_speed() {
        assert_eq!(edge_travel_time(&edge(0, 1, 1000.0, 20.0)), 50.0);
        assert_eq!(edge_travel_time(&edge(0, 1, 0.0, 20.0)), 0.0);
        let t1 = edge_travel_time(&edge(0, 1, 1000.0, 10.0));
        let t2 = edge_travel_time(&edge(0, 1, 1000.0, 20.0));
        assert_eq!(t1, 2.0 * t2);
    }

    #[test]
    fn beeline_heuristic_reference_values() {
        let a = plain_node(0, 57.0, 12.0);
        assert_eq!(beeline_heuristic(&a, &a, 33.33), 0.0);
        // One degree of latitude is ~111,195 m.
        let b = plain_node(1, 58.0, 12.0);
        let t = beeline_heuristic(&a, &b, 100.0 / 3.0);
        assert!((t - 3335.85).abs() < 1.0, "t = {t}");
    }

    #[test]
    fn charger_below_power_floor_is_dropped_node_kept() {
        let nodes = vec![
            RoadNode {
                id: NodeId(0),
                lat: 0.0,
                lon: 0.0,
                charger: Some(ChargerSpec { max_power_w: 9_999.0, min_power_w: 5_000.0 }),
            },
            RoadNode {
                id: NodeId(1),
                lat: 0.0,
                lon: 0.1,
                charger: Some(ChargerSpec { max_power_w: 150_000.0, min_power_w: 75_000.0 }),
            },
        ];
        let g = RoadGraph::new(nodes, vec![edge(0, 1, 100.0, 10.0)]).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.station_ids(), vec![NodeId(1)]);
    }

    #[test]
    fn construction_rejects_bad_input() {
        let n0 = plain_node(0, 0.0, 0.0);
        let n1 = plain_node(1, 0.0, 0.1);
        assert!(matches!(
            RoadGraph::new(vec![n0.clone(), n0.clone()], vec![]),
            Err(GraphError::DuplicateNode(_))
        ));
        assert!(matches!(
            RoadGraph::new(vec![n0.clone(), n1.clone()], vec![edge(0, 7, 1.0, 1.0)]),
            Err(GraphError::UnknownNode(NodeId(7)))
        ));
        assert!(matches!(
            RoadGraph::new(vec![n0.clone(), n1.clone()], vec![edge(0, 1, -5.0, 1.0)]),
            Err(GraphError::InvalidEdge { .. })
        ));
        assert!(matches!(
            RoadGraph::new(vec![n0.clone(), n1.clone()], vec![edge(0, 1, 5.0, 0.0)]),
            Err(GraphError::InvalidEdge { .. })
        ));
        assert!(matches!(
            RoadGraph::new(vec![plain_node(0, 95.0, 0.0)], vec![]),
            Err(GraphError::InvalidNode { .. })
        ));
    }

    #[test]
    fn dijkstra_hand_instances() {
        let nodes = vec![plain_node(0, 0.0, 0.0), plain_node(1, 0.0, 0.1), plain_node(2, 0.1, 0.0)];
        // Direct 0->1 costs 5; the detour via 2 costs 2 + 2.
        let edges = vec![
            edge(0, 1, 5.0, 1.0),
            edge(0, 2, 2.0, 1.0),
            edge(2, 1, 2.0, 1.0),
        ];
        let g = RoadGraph::new(nodes, edges).unwrap();
        let w = g.time_weights();
        let tree = dijkstra(&g, NodeId(0), &w).unwrap();
        assert_eq!(tree.dist[g.index_of(NodeId(1)).unwrap()], 4.0);
        assert_eq!(tree.dist[g.index_of(NodeId(2)).unwrap()], 2.0);
        let path = tree.path_to(&g, g.index_of(NodeId(1)).unwrap()).unwrap();
        assert_eq!(path.len(), 2);
    }

    #[test]
    fn dijkstra_single_edge_and_unreachable() {
        let nodes = vec![plain_node(0, 0.0, 0.0), plain_node(1, 0.0, 0.1), plain_node(2, 0.2, 0.2)];
        let g = RoadGraph::new(nodes, vec![edge(0, 1, 7.0, 1.0)]).unwrap();
        let w = g.time_weights();
        let tree = dijkstra(&g, NodeId(0), &w).unwrap();
        assert_eq!(tree.dist[g.index_of(NodeId(1)).unwrap()], 7.0);
        assert!(tree.dist[g.index_of(NodeId(2)).unwrap()].is_infinite());
        assert!(tree.path_to(&g, g.index_of(NodeId(2)).unwrap()).is_none());
    }

    /// Uniform random geometric graph on a small coordinate patch.
    fn random_geometric(rng: &mut Rng, n: usize, radius_deg: f64) -> RoadGraph {
        let mut nodes = Vec::with_capacity(n);
        for i in 0..n {
            nodes.push(RoadNode {
                id: NodeId(i as u64),
                lat: 56.0 + rng.next_open01(),
                lon: 12.0 + rng.next_open01(),
                charger: None,
            });
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let dlat = nodes[i].lat - nodes[j].lat;
                let dlon = nodes[i].lon - nodes[j].lon;
                if (dlat * dlat + dlon * dlon) < radius_deg * radius_deg {
                    let dist = haversine_m(nodes[i].lat, nodes[i].lon, nodes[j].lat, nodes[j].lon)
                        .max(1.0);
                    let speed = 15.0 + 18.0 * rng.next_open01();
                    edges.push(RoadEdge {
                        from: NodeId(i as u64),
                        to: NodeId(j as u64),
                        length_m: dist,
                        speed_mps: speed,
                    });
                    edges.push(RoadEdge {
                        from: NodeId(j as u64),
                        to: NodeId(i as u64),
                        length_m: dist,
                        speed_mps: speed,
                    });
                }
            }
        }
        RoadGraph::new(nodes, edges).unwrap()
    }

    /// Label-correcting Bellman-Ford, as an independent oracle.
    fn bellman_ford(g: &RoadGraph, source: NodeId, weights: &[f64]) -> Vec<f64> {
        let n = g.node_count();
        let src = g.index_of(source).unwrap();
        let mut dist = vec![f64::INFINITY; n];
        dist[src] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for (e, edge) in g.edges().iter().enumerate() {
                let u = g.index_of(edge.from).unwrap();
                let v = g.index_of(edge.to).unwrap();
                if dist[u].is_finite() && dist[u] + weights[e] < dist[v] {
                    dist[v] = dist[u] + weights[e];
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }

    #[test]
    fn dijkstra_matches_bellman_ford_on_random_graphs() {
        let mut rng = Rng::from_seed(101);
        for trial in 0..10 {
            let g = random_geometric(&mut rng, 200, 0.12);
            let w = g.time_weights();
            let src = NodeId(trial as u64 * 13 % 200);
            let tree = dijkstra(&g, src, &w).unwrap();
            let oracle = bellman_ford(&g, src, &w);
            for i in 0..g.node_count() {
                if oracle[i].is_finite() || tree.dist[i].is_finite() {
                    assert!(
                        (tree.dist[i] - oracle[i]).abs() <= 1e-9 * oracle[i].abs().max(1.0),
                        "node {i}: {} vs oracle {}",
                        tree.dist[i],
                        oracle[i]
                    );
                }
            }
        }
    }

    #[test]
    fn a_star_zero_heuristic_equals_dijkstra() {
        let mut rng = Rng::from_seed(33);
        let g = random_geometric(&mut rng, 120, 0.15);
        let w = g.time_weights();
        let tree = dijkstra(&g, NodeId(0), &w).unwrap();
        for t in 1..g.node_count() {
            let trg = g.node(t).id;
            match a_star(&g, NodeId(0), trg, &w, |_| 0.0) {
                Ok(route) => assert_eq!(route.cost, tree.dist[t]),
                Err(SearchError::Unreachable { .. }) => assert!(tree.dist[t].is_infinite()),
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn a_star_beeline_equals_dijkstra_cost() {
        let mut rng = Rng::from_seed(77);
        for _ in 0..20 {
            let g = random_geometric(&mut rng, 150, 0.14);
            let w = g.time_weights();
            let v_max = g.max_speed_mps();
            let src = NodeId(rng.next_index(150) as u64);
            let trg = NodeId(rng.next_index(150) as u64);
            let tree = dijkstra(&g, src, &w).unwrap();
            let trg_idx = g.index_of(trg).unwrap();
            let h = |i: usize| beeline_heuristic(g.node(i), g.node(trg_idx), v_max);
            match a_star(&g, src, trg, &w, h) {
                Ok(route) => {
                    assert_eq!(route.cost, tree.dist[trg_idx], "cost mismatch {src}->{trg}");
                    // Path edges actually sum to the reported cost.
                    let sum: f64 = route.edges.iter().map(|&e| w[e as usize]).sum();
                    assert!((sum - route.cost).abs() < 1e-9);
                }
                Err(SearchError::Unreachable { .. }) => {
                    assert!(tree.dist[trg_idx].is_infinite());
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn beeline_heuristic_is_admissible_on_random_instances() {
        let mut rng = Rng::from_seed(91);
        let g = random_geometric(&mut rng, 100, 0.2);
        let w = g.time_weights();
        let v_max = g.max_speed_mps();
        for _ in 0..100 {
            let a = rng.next_index(100);
            let b = rng.next_index(100);
            let tree = dijkstra(&g, g.node(a).id, &w).unwrap();
            if tree.dist[b].is_finite() {
                let h = beeline_heuristic(g.node(a), g.node(b), v_max);
                assert!(h <= tree.dist[b] + 1e-9, "inadmissible: {h} > {}", tree.dist[b]);
            }
        }
    }

    #[test]
    fn a_star_source_equals_target() {
        let g = RoadGraph::new(
            vec![plain_node(0, 0.0, 0.0), plain_node(1, 0.1, 0.1)],
            vec![edge(0, 1, 1.0, 1.0)],
        )
        .unwrap();
        let w = g.time_weights();
        let r = a_star(&g, NodeId(0), NodeId(0), &w, |_| 0.0).unwrap();
        assert!(r.edges.is_empty());
        assert_eq!(r.cost, 0.0);
    }
}
