//! The per-iteration decision loop: posterior queries per station, edge
//! weight estimates, the A* oracle over the feasibility graph, and the
//! policy-specific exploration rules.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::environment::EdgeFeedback;
use crate::feasibility::{shortest_path, FeasibilityError, FeasibilityGraph};
use crate::numerics::Rng;
use crate::posteriors::{ChargePosterior, PosteriorError, PriorParams, QueuePosterior};
use crate::road_graph::NodeId;

/// The four station-selection strategies under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PolicyKind {
    Greedy,
    EpsilonGreedy,
    ThompsonSampling,
    BayesUcb,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Greedy,
        PolicyKind::EpsilonGreedy,
        PolicyKind::ThompsonSampling,
        PolicyKind::BayesUcb,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Greedy => "greedy",
            PolicyKind::EpsilonGreedy => "epsilon_greedy",
            PolicyKind::ThompsonSampling => "thompson",
            PolicyKind::BayesUcb => "bayes_ucb",
        }
    }

    pub fn parse(s: &str) -> Option<PolicyKind> {
        match s {
            "greedy" | "gr" => Some(PolicyKind::Greedy),
            "epsilon_greedy" | "e-gr" | "egreedy" => Some(PolicyKind::EpsilonGreedy),
            "thompson" | "ts" | "thompson_sampling" => Some(PolicyKind::ThompsonSampling),
            "bayes_ucb" | "b-ucb" | "bayesucb" => Some(PolicyKind::BayesUcb),
            _ => None,
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BanditError {
    Posterior(PosteriorError),
    Feasibility(FeasibilityError),
    /// The posterior maps do not cover a station in the graph.
    MissingStation(NodeId),
    /// Feedback does not match the traveled edges.
    MismatchedFeedback,
}

impl fmt::Display for BanditError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BanditError::Posterior(e) => write!(f, "{e}"),
            BanditError::Feasibility(e) => write!(f, "{e}"),
            BanditError::MissingStation(id) => write!(f, "no posterior state for station {id}"),
            BanditError::MismatchedFeedback => {
                write!(f, "feedback does not cover exactly the traveled edges")
            }
        }
    }
}

impl core::error::Error for BanditError {}

impl From<PosteriorError> for BanditError {
    fn from(e: PosteriorError) -> Self {
        BanditError::Posterior(e)
    }
}

impl From<FeasibilityError> for BanditError {
    fn from(e: FeasibilityError) -> Self {
        BanditError::Feasibility(e)
    }
}

/// Estimated total weight of one feasibility edge for the current iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeWeightEstimate {
    pub edge: u32,
    pub tau_hat_s: f64,
}

/// A path chosen for one iteration, with whether it came from the uniform
/// exploration branch.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedPath {
    pub edges: Vec<u32>,
    pub estimated_cost: f64,
    pub explored: bool,
}

/// Bandit state for one run: per-station posteriors, the iteration counter,
/// and the policy's private random stream.
#[derive(Debug, Clone)]
pub struct Policy {
    kind: PolicyKind,
    queue: BTreeMap<NodeId, QueuePosterior>,
    charge: BTreeMap<NodeId, ChargePosterior>,
    t: u64,
    rng: Rng,
    /// Exploration schedule coefficient: epsilon_t = coeff / sqrt(t),
    /// clamped into [0, 1]. Zero disables exploration.
    epsilon_coeff: f64,
    explored_count: u64,
}

/// Bounded retries when a uniformly drawn exploration vertex is unreachable.
const EXPLORE_RESAMPLE_LIMIT: u32 = 16;

impl Policy {
    /// Fresh policy state covering every charging station of the graph.
    pub fn new(
        kind: PolicyKind,
        fg: &FeasibilityGraph,
        priors: &PriorParams,
        rng: Rng,
        epsilon_coeff: f64,
    ) -> Result<Self, BanditError> {
        let mut queue = BTreeMap::new();
        let mut charge = BTreeMap::new();
        for id in fg.charging_station_ids() {
            queue.insert(id, QueuePosterior::from_prior(priors)?);
            charge.insert(id, ChargePosterior::from_prior(priors)?);
        }
        Ok(Policy { kind, queue, charge, t: 1, rng, epsilon_coeff, explored_count: 0 })
    }

    pub fn kind(&self) -> PolicyKind {
        self.kind
    }

    /// Iteration counter; starts at 1 and advances once per observe cycle.
    pub fn iteration(&self) -> u64 {
        self.t
    }

    pub fn explored_count(&self) -> u64 {
        self.explored_count
    }

    pub fn queue_posterior(&self, id: NodeId) -> Option<&QueuePosterior> {
        self.queue.get(&id)
    }

    pub fn charge_posterior(&self, id: NodeId) -> Option<&ChargePosterior> {
        self.charge.get(&id)
    }

    /// Station states in id order, for snapshot export.
    pub fn posterior_states(&self) -> impl Iterator<Item = (NodeId, &QueuePosterior, &ChargePosterior)> {
        self.queue
            .iter()
            .map(move |(id, q)| (*id, q, self.charge.get(id).expect("maps share keys")))
    }

    /// Replaces the state of one station; used to seed point-mass sanity runs.
    pub fn set_station_state(
        &mut self,
        id: NodeId,
        queue: QueuePosterior,
        charge: ChargePosterior,
    ) -> Result<(), BanditError> {
        if !self.queue.contains_key(&id) {
            return Err(BanditError::MissingStation(id));
        }
        self.queue.insert(id, queue);
        self.charge.insert(id, charge);
        Ok(())
    }

    /// Per-station estimates for this iteration, computed once per station
    /// and shared across its incident edges.
    fn station_estimates(
        &mut self,
        fg: &FeasibilityGraph,
    ) -> Result<BTreeMap<NodeId, (f64, f64)>, BanditError> {
        let mut out = BTreeMap::new();
        let ids = fg.charging_station_ids();
        for id in ids {
            let spec = fg
                .station(fg.station_index(id).expect("station ids come from the graph"))
                .spec
                .expect("charging stations carry a spec");
            let queue = self.queue.get(&id).ok_or(BanditError::MissingStation(id))?;
            let (tau_queue, power) = match self.kind {
                PolicyKind::Greedy | PolicyKind::EpsilonGreedy => {
                    let tau = queue.map_expected_time()?;
                    let charge = self.charge.get(&id).ok_or(BanditError::MissingStation(id))?;
                    let p = charge.map_expected_power(spec.max_power_w, spec.min_power_w)?;
                    (tau, p)
                }
                PolicyKind::ThompsonSampling => {
                    let mut rng = self.rng.child(id.0).child(self.t);
                    let tau = queue.sample_expected_time(&mut rng);
                    let charge =
                        self.charge.get_mut(&id).ok_or(BanditError::MissingStation(id))?;
                    let p =
                        charge.sample_expected_power(&mut rng, spec.max_power_w, spec.min_power_w)?;
                    (tau, p)
                }
                PolicyKind::BayesUcb => {
                    let tau = queue.ucb_expected_time(self.t);
                    let charge = self.charge.get(&id).ok_or(BanditError::MissingStation(id))?;
                    let p = charge.ucb_expected_power(self.t, spec.max_power_w, spec.min_power_w)?;
                    (tau, p)
                }
            };
            out.insert(id, (tau_queue, power));
        }
        Ok(out)
    }

    /// One weight estimate per feasibility edge: path time plus the head
    /// station's estimated queue time and charge time. Edges into the trip
    /// target carry path time only.
    pub fn estimate_weights(
        &mut self,
        fg: &FeasibilityGraph,
    ) -> Result<Vec<EdgeWeightEstimate>, BanditError> {
        let per_station = self.station_estimates(fg)?;
        let mut out = Vec::with_capacity(fg.edges().len());
        for (idx, edge) in fg.edges().iter().enumerate() {
            let tau_hat_s = if fg.is_trip_target(edge.to) {
                edge.path_time_s
            } else {
                let (tau_queue, power) = per_station
                    .get(&edge.to)
                    .ok_or(BanditError::MissingStation(edge.to))?;
                edge.path_time_s + tau_queue + edge.path_energy_ws / power
            };
            out.push(EdgeWeightEstimate { edge: idx as u32, tau_hat_s });
        }
        Ok(out)
    }

    /// Picks the path to travel this iteration: the estimate-optimal path,
    /// or for epsilon-greedy, with probability epsilon_t a concatenation of
    /// optimal paths through a uniformly random station.
    pub fn select_path(
        &mut self,
        fg: &FeasibilityGraph,
        src: NodeId,
        trg: NodeId,
    ) -> Result<SelectedPath, BanditError> {
        let estimates = self.estimate_weights(fg)?;
        let weights: Vec<f64> = estimates.iter().map(|e| e.tau_hat_s).collect();
        if self.kind == PolicyKind::EpsilonGreedy {
            let eps = (self.epsilon_coeff / libm::sqrt(self.t as f64)).clamp(0.0, 1.0);
            if eps > 0.0 && self.rng.next_open01() < eps {
                let stations = fg.charging_station_ids();
                if !stations.is_empty() {
                    for _ in 0..EXPLORE_RESAMPLE_LIMIT {
                        let pick = stations[self.rng.next_index(stations.len())];
                        let first = shortest_path(fg, src, pick, &weights);
                        let second = shortest_path(fg, pick, trg, &weights);
                        if let (Ok((mut p1, c1)), Ok((p2, c2))) = (first, second) {
                            p1.extend_from_slice(&p2);
                            self.explored_count += 1;
                            return Ok(SelectedPath {
                                edges: p1,
                                estimated_cost: c1 + c2,
                                explored: true,
                            });
                        }
                    }
                    // Every draw was unreachable; act greedily instead.
                }
            }
        }
        let (edges, cost) = shortest_path(fg, src, trg, &weights)?;
        Ok(SelectedPath { edges, estimated_cost: cost, explored: false })
    }

    /// Absorbs semi-bandit feedback for the traveled path and advances the
    /// iteration counter. Stations off the path are untouched; the trip
    /// target receives no updates.
    pub fn observe(
        &mut self,
        fg: &FeasibilityGraph,
        traveled: &SelectedPath,
        feedback: &[EdgeFeedback],
    ) -> Result<(), BanditError> {
        if feedback.len() != traveled.edges.len()
            || feedback
                .iter()
                .zip(&traveled.edges)
                .any(|(fb, &e)| fb.edge != e)
        {
            return Err(BanditError::MismatchedFeedback);
        }
        for fb in feedback {
            let head = fg.edge(fb.edge).to;
            if fg.is_trip_target(head) {
                continue;
            }
            let spec = fg
                .station(fg.station_index(head).expect("edge endpoints are stations"))
                .spec
                .expect("non-terminal heads are charging stations");
            let queue = self.queue.get(&head).ok_or(BanditError::MissingStation(head))?;
            self.queue.insert(head, queue.update(fb.queue_s)?);
            // Recover the realized power and learn from its deficit; clamp
            // so the log-domain update stays finite when the draw sat at
            // full power.
            let power = fb.path_energy_ws / fb.charge_s;
            let deficit = (spec.max_power_w - power).max(1e-9);
            let charge = self.charge.get(&head).ok_or(BanditError::MissingStation(head))?;
            self.charge.insert(head, charge.update(deficit)?);
        }
        self.t += 1;
        Ok(())
    }
}
