//! Pre-processing of a road network into the feasibility graph: time-optimal
//! paths between every pair of charging stations, kept only when their
//! energy fits inside the usable battery window.

use alloc::collections::{BTreeMap, BinaryHeap};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::road_graph::{
    beeline_heuristic, edge_energy, edge_travel_time, ChargerSpec, NodeId, RoadGraph, RoadNode,
    VehicleParams,
};

/// A vertex of the feasibility graph: a charging station, or a pseudo-station
/// injected for a trip terminal (then `spec` is None and no charging happens
/// there).
#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub node_id: NodeId,
    pub lat: f64,
    pub lon: f64,
    pub spec: Option<ChargerSpec>,
}

/// A time-optimal, energy-feasible road path between two stations.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityEdge {
    pub from: NodeId,
    pub to: NodeId,
    pub path_time_s: f64,
    pub path_energy_ws: f64,
    /// Road-graph edge indices of the underlying path, when retained.
    pub road_path: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeasibilityError {
    UnknownNode(NodeId),
    UnknownStation(NodeId),
    /// A trip terminal has no feasible connection into the station network.
    IsolatedTerminal { node: NodeId, outgoing: bool },
    /// No path between the requested stations under the current estimates.
    Unreachable { from: NodeId, to: NodeId },
    DuplicateStation(NodeId),
    EdgeEndpointNotStation(NodeId),
    SelfLoop(NodeId),
    InvalidVehicle,
}

impl fmt::Display for FeasibilityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeasibilityError::UnknownNode(id) => write!(f, "unknown road node {id}"),
            FeasibilityError::UnknownStation(id) => write!(f, "unknown station {id}"),
            FeasibilityError::IsolatedTerminal { node, outgoing } => {
                let dir = if *outgoing { "outgoing" } else { "incoming" };
                write!(f, "terminal {node} has no feasible {dir} edge")
            }
            FeasibilityError::Unreachable { from, to } => {
                write!(f, "station {to} unreachable from {from}")
            }
            FeasibilityError::DuplicateStation(id) => write!(f, "duplicate station {id}"),
            FeasibilityError::EdgeEndpointNotStation(id) => {
                write!(f, "edge endpoint {id} is not a station")
            }
            FeasibilityError::SelfLoop(id) => write!(f, "self-loop at station {id}"),
            FeasibilityError::InvalidVehicle => write!(f, "invalid vehicle parameters"),
        }
    }
}

impl core::error::Error for FeasibilityError {}

/// Charger-to-charger graph whose edges are precomputed time-optimal,
/// energy-feasible road paths. This is the ground set the policies act on.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityGraph {
    stations: Vec<Station>,
    edges: Vec<FeasibilityEdge>,
    usable_window_ws: f64,
    max_speed_mps: f64,
    source: Option<NodeId>,
    target: Option<NodeId>,
    index_of: BTreeMap<NodeId, usize>,
    out_edges: Vec<Vec<u32>>,
}

impl FeasibilityGraph {
    /// Assembles and validates a graph from parts, canonicalizing order by
    /// station id and (from, to) so equal inputs produce identical graphs.
    pub fn from_parts(
        mut stations: Vec<Station>,
        mut edges: Vec<FeasibilityEdge>,
        usable_window_ws: f64,
        max_speed_mps: f64,
    ) -> Result<Self, FeasibilityError> {
        stations.sort_by_key(|s| s.node_id);
        let mut index_of = BTreeMap::new();
        for (i, s) in stations.iter().enumerate() {
            if index_of.insert(s.node_id, i).is_some() {
                return Err(FeasibilityError::DuplicateStation(s.node_id));
            }
        }
        edges.sort_by_key(|e| (e.from, e.to));
        let mut out_edges = vec![Vec::new(); stations.len()];
        for (idx, e) in edges.iter().enumerate() {
            if e.from == e.to {
                return Err(FeasibilityError::SelfLoop(e.from));
            }
            let from = *index_of
                .get(&e.from)
                .ok_or(FeasibilityError::EdgeEndpointNotStation(e.from))?;
            if !index_of.contains_key(&e.to) {
                return Err(FeasibilityError::EdgeEndpointNotStation(e.to));
            }
            out_edges[from].push(idx as u32);
        }
        Ok(FeasibilityGraph {
            stations,
            edges,
            usable_window_ws,
            max_speed_mps,
            source: None,
            target: None,
            index_of,
            out_edges,
        })
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn edges(&self) -> &[FeasibilityEdge] {
        &self.edges
    }

    pub fn edge(&self, idx: u32) -> &FeasibilityEdge {
        &self.edges[idx as usize]
    }

    pub fn usable_window_ws(&self) -> f64 {
        self.usable_window_ws
    }

    pub fn max_speed_mps(&self) -> f64 {
        self.max_speed_mps
    }

    pub fn source(&self) -> Option<NodeId> {
        self.source
    }

    pub fn target(&self) -> Option<NodeId> {
        self.target
    }

    pub fn station_index(&self, id: NodeId) -> Option<usize> {
        self.index_of.get(&id).copied()
    }

    pub fn station(&self, idx: usize) -> &Station {
        &self.stations[idx]
    }

    pub fn out_edges(&self, station_idx: usize) -> &[u32] {
        &self.out_edges[station_idx]
    }

    /// Stations that actually charge (pseudo-terminals excluded), ascending.
    pub fn charging_station_ids(&self) -> Vec<NodeId> {
        self.stations
            .iter()
            .filter(|s| s.spec.is_some())
            .map(|s| s.node_id)
            .collect()
    }

    /// True when edges into `id` must carry no queue/charge terms: the trip
    /// ends there, so nothing is charged.
    pub fn is_trip_target(&self, id: NodeId) -> bool {
        self.target == Some(id)
    }

    /// Marks existing stations as the trip terminals.
    pub fn with_terminals(mut self, src: NodeId, trg: NodeId) -> Result<Self, FeasibilityError> {
        if self.station_index(src).is_none() {
            return Err(FeasibilityError::UnknownStation(src));
        }
        if self.station_index(trg).is_none() {
            return Err(FeasibilityError::UnknownStation(trg));
        }
        self.source = Some(src);
        self.target = Some(trg);
        Ok(self)
    }
}

/// Energy available between "full" and "empty" states of charge.
pub fn usable_window(veh: &VehicleParams) -> f64 {
    (veh.soc_max_frac - veh.soc_min_frac) * veh.battery_capacity_ws
}

/// Lexicographic (time, energy) label used by the preprocessing search:
/// among equal-time paths the lower-energy one wins.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Label {
    time: f64,
    energy: f64,
}

impl Label {
    const INF: Label = Label { time: f64::INFINITY, energy: f64::INFINITY };

    fn better_than(&self, other: &Label) -> bool {
        self.time < other.time || (self.time == other.time && self.energy < other.energy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LexHeapEntry {
    time: f64,
    energy: f64,
    node: u32,
}

impl Eq for LexHeapEntry {}

impl Ord for LexHeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.energy.total_cmp(&self.energy))
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for LexHeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// One-to-all time-optimal search harvesting the energy of each optimal
/// path; ties in time break toward lower energy.
fn dijkstra_time_energy(
    g: &RoadGraph,
    source_idx: usize,
    veh: &VehicleParams,
) -> (Vec<Label>, Vec<Option<u32>>) {
    let n = g.node_count();
    let mut dist = vec![Label::INF; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    dist[source_idx] = Label { time: 0.0, energy: 0.0 };
    heap.push(LexHeapEntry { time: 0.0, energy: 0.0, node: source_idx as u32 });
    while let Some(LexHeapEntry { time, energy, node }) = heap.pop() {
        let u = node as usize;
        let cur = Label { time, energy };
        if dist[u].better_than(&cur) {
            continue;
        }
        for &e in g.out_edges(u) {
            let edge = g.edge(e);
            let v = g.index_of(edge.to).expect("validated endpoint");
            let cand = Label {
                time: time + edge_travel_time(edge),
                energy: energy + edge_energy(edge, veh),
            };
            if cand.better_than(&dist[v]) {
                dist[v] = cand;
                pred[v] = Some(e);
                heap.push(LexHeapEntry { time: cand.time, energy: cand.energy, node: v as u32 });
            }
        }
    }
    (dist, pred)
}

fn collect_path(g: &RoadGraph, pred: &[Option<u32>], target_idx: usize) -> Vec<u32> {
    let mut edges = Vec::new();
    let mut cur = target_idx;
    while let Some(e) = pred[cur] {
        edges.push(e);
        cur = g.index_of(g.edge(e).from).expect("validated endpoint");
    }
    edges.reverse();
    edges
}

/// Builds the feasibility graph: for every ordered station pair the
/// time-optimal road path becomes an edge if and only if its energy fits the
/// usable battery window. Pairs whose time-optimal path exceeds the window
/// are absent even if a lower-energy alternative exists.
pub fn build_feasibility_graph(
    road: &RoadGraph,
    veh: &VehicleParams,
    retain_paths: bool,
) -> Result<FeasibilityGraph, FeasibilityError> {
    veh.validate().map_err(|_| FeasibilityError::InvalidVehicle)?;
    let window = usable_window(veh);
    let station_ids = road.station_ids();
    let mut stations = Vec::with_capacity(station_ids.len());
    for id in &station_ids {
        let idx = road.index_of(*id).expect("station ids come from the graph");
        let node = road.node(idx);
        stations.push(Station {
            node_id: *id,
            lat: node.lat,
            lon: node.lon,
            spec: node.charger,
        });
    }
    let mut edges = Vec::new();
    for from_id in &station_ids {
        let src_idx = road.index_of(*from_id).expect("indexed above");
        let (dist, pred) = dijkstra_time_energy(road, src_idx, veh);
        for to_id in &station_ids {
            if to_id == from_id {
                continue;
            }
            let trg_idx = road.index_of(*to_id).expect("indexed above");
            let label = dist[trg_idx];
            if label.time.is_finite() && label.energy <= window {
                edges.push(FeasibilityEdge {
                    from: *from_id,
                    to: *to_id,
                    path_time_s: label.time,
                    path_energy_ws: label.energy,
                    road_path: retain_paths.then(|| collect_path(road, &pred, trg_idx)),
                });
            }
        }
    }
    FeasibilityGraph::from_parts(stations, edges, window, road.max_speed_mps())
}

/// Injects trip terminals as pseudo-stations: the source gains outgoing
/// feasible edges only (the vehicle departs fully charged), the target gains
/// incoming ones only (nothing is charged at the destination). Existing
/// stations are reused rather than duplicated.
pub fn connect_terminals(
    fg: &FeasibilityGraph,
    road: &RoadGraph,
    src: NodeId,
    trg: NodeId,
    veh: &VehicleParams,
    retain_paths: bool,
) -> Result<FeasibilityGraph, FeasibilityError> {
    veh.validate().map_err(|_| FeasibilityError::InvalidVehicle)?;
    let window = fg.usable_window_ws();
    let src_road_idx = road.index_of(src).ok_or(FeasibilityError::UnknownNode(src))?;
    let trg_road_idx = road.index_of(trg).ok_or(FeasibilityError::UnknownNode(trg))?;

    let mut stations = fg.stations().to_vec();
    let mut edges = fg.edges().to_vec();
    let station_ids: Vec<NodeId> = stations.iter().map(|s| s.node_id).collect();

    let pseudo = |road_idx: usize| {
        let node: &RoadNode = road.node(road_idx);
        Station { node_id: node.id, lat: node.lat, lon: node.lon, spec: None }
    };

    // Outgoing edges from the source.
    if fg.station_index(src).is_none() {
        stations.push(pseudo(src_road_idx));
        let (dist, pred) = dijkstra_time_energy(road, src_road_idx, veh);
        let mut found = false;
        for id in &station_ids {
            let idx = road.index_of(*id).expect("stations live in the road graph");
            let label = dist[idx];
            if label.time.is_finite() && label.energy <= window {
                found = true;
                edges.push(FeasibilityEdge {
                    from: src,
                    to: *id,
                    path_time_s: label.time,
                    path_energy_ws: label.energy,
                    road_path: retain_paths.then(|| collect_path(road, &pred, idx)),
                });
            }
        }
        // A direct drive to the target counts as an outgoing option too.
        if trg != src {
            let label = dist[trg_road_idx];
            if label.time.is_finite() && label.energy <= window {
                found = true;
                edges.push(FeasibilityEdge {
                    from: src,
                    to: trg,
                    path_time_s: label.time,
                    path_energy_ws: label.energy,
                    road_path: retain_paths.then(|| collect_path(road, &pred, trg_road_idx)),
                });
            }
        }
        if !found {
            return Err(FeasibilityError::IsolatedTerminal { node: src, outgoing: true });
        }
    }

    // Incoming edges to the target: time-optimal paths from every station,
    // found in one pass over the transposed road graph.
    if fg.station_index(trg).is_none() && trg != src {
        stations.push(pseudo(trg_road_idx));
        let reversed = transpose(road);
        let (dist, pred) = dijkstra_time_energy(&reversed, trg_road_idx, veh);
        let mut found = false;
        for id in &station_ids {
            let idx = road.index_of(*id).expect("stations live in the road graph");
            let label = dist[idx];
            if label.time.is_finite() && label.energy <= window {
                found = true;
                let road_path = retain_paths.then(|| {
                    // Paths in the transpose run target -> station; flip them.
                    let mut p = collect_path(&reversed, &pred, idx);
                    p.reverse();
                    p
                });
                edges.push(FeasibilityEdge {
                    from: *id,
                    to: trg,
                    path_time_s: label.time,
                    path_energy_ws: label.energy,
                    road_path,
                });
            }
        }
        // The direct source edge discovered above also feeds the target.
        if !found && !edges.iter().any(|e| e.to == trg) {
            return Err(FeasibilityError::IsolatedTerminal { node: trg, outgoing: false });
        }
    }

    let out = FeasibilityGraph::from_parts(stations, edges, window, fg.max_speed_mps())?
        .with_terminals(src, trg)?;
    // Reused real stations still need at least one edge in the trip direction.
    let src_idx = out.station_index(src).expect("just inserted or reused");
    if out.out_edges(src_idx).is_empty() {
        return Err(FeasibilityError::IsolatedTerminal { node: src, outgoing: true });
    }
    if !out.edges().iter().any(|e| e.to == trg) {
        return Err(FeasibilityError::IsolatedTerminal { node: trg, outgoing: false });
    }
    Ok(out)
}

/// Road graph with every edge reversed; node set unchanged.
fn transpose(road: &RoadGraph) -> RoadGraph {
    let nodes = road.nodes().to_vec();
    let edges = road
        .edges()
        .iter()
        .map(|e| crate::road_graph::RoadEdge {
            from: e.to,
            to: e.from,
            length_m: e.length_m,
            speed_mps: e.speed_mps,
        })
        .collect();
    RoadGraph::new(nodes, edges).expect("transpose of a valid graph is valid")
}

/// Time-optimal path through the feasibility graph under caller-supplied
/// per-edge weights, via A* with the beeline heuristic. Weights must
/// dominate pure travel time for the heuristic to stay admissible, which
/// holds because queue and charge terms are nonnegative.
pub fn shortest_path(
    fg: &FeasibilityGraph,
    src: NodeId,
    trg: NodeId,
    weights: &[f64],
) -> Result<(Vec<u32>, f64), FeasibilityError> {
    assert_eq!(weights.len(), fg.edges().len(), "one weight per feasibility edge");
    let src_idx = fg.station_index(src).ok_or(FeasibilityError::UnknownStation(src))?;
    let trg_idx = fg.station_index(trg).ok_or(FeasibilityError::UnknownStation(trg))?;
    if src_idx == trg_idx {
        return Ok((Vec::new(), 0.0));
    }
    let trg_station = fg.station(trg_idx);
    let v_max = fg.max_speed_mps();
    let h = |i: usize| {
        let s = fg.station(i);
        let a = RoadNode { id: s.node_id, lat: s.lat, lon: s.lon, charger: None };
        let b = RoadNode {
            id: trg_station.node_id,
            lat: trg_station.lat,
            lon: trg_station.lon,
            charger: None,
        };
        beeline_heuristic(&a, &b, v_max)
    };
    let n = fg.stations().len();
    let mut g_score = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<u32>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap: BinaryHeap<LexHeapEntry> = BinaryHeap::new();
    g_score[src_idx] = 0.0;
    heap.push(LexHeapEntry { time: h(src_idx), energy: 0.0, node: src_idx as u32 });
    while let Some(LexHeapEntry { node, .. }) = heap.pop() {
        let u = node as usize;
        if settled[u] {
            continue;
        }
        settled[u] = true;
        if u == trg_idx {
            let mut edges = Vec::new();
            let mut cur = trg_idx;
            while let Some(e) = pred[cur] {
                edges.push(e);
                cur = fg.station_index(fg.edge(e).from).expect("validated endpoint");
            }
            edges.reverse();
            return Ok((edges, g_score[trg_idx]));
        }
        for &e in fg.out_edges(u) {
            let edge = fg.edge(e);
            let v = fg.station_index(edge.to).expect("validated endpoint");
            if settled[v] {
                continue;
            }
            let cand = g_score[u] + weights[e as usize];
            if cand < g_score[v] {
                g_score[v] = cand;
                pred[v] = Some(e);
                heap.push(LexHeapEntry { time: cand + h(v), energy: 0.0, node: v as u32 });
            }
        }
    }
    Err(FeasibilityError::Unreachable { from: src, to: trg })
}
