//! Ground-truth simulator: hidden per-station parameters drawn from the
//! priors, stochastic queue/charge feedback, and expected-loss / regret
//! computation against the optimal path.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::feasibility::{shortest_path, FeasibilityError, FeasibilityGraph};
use crate::numerics::{sample_exponential, sample_gamma, Rng, SamplerFailure};
use crate::posteriors::{ChargePosterior, PosteriorError, PriorParams};
use crate::road_graph::NodeId;

/// Hidden parameters of one station: exponential queue rate and the gamma
/// charging-power-deficit shape/rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationTruth {
    pub lambda_queue: f64,
    pub alpha_charge: f64,
    pub beta_charge: f64,
}

/// Truth for every charging station of an instance.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TruthParams {
    per_station: BTreeMap<NodeId, StationTruth>,
}

impl TruthParams {
    pub fn get(&self, id: NodeId) -> Option<&StationTruth> {
        self.per_station.get(&id)
    }

    pub fn insert(&mut self, id: NodeId, truth: StationTruth) {
        self.per_station.insert(id, truth);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&NodeId, &StationTruth)> {
        self.per_station.iter()
    }

    pub fn len(&self) -> usize {
        self.per_station.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_station.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvError {
    /// Drawing exact truth failed; the run must abort rather than fall back.
    TruthSampling,
    Posterior(PosteriorError),
    Feasibility(FeasibilityError),
    MissingTruth(NodeId),
    MissingTerminals,
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::TruthSampling => write!(f, "sampling ground-truth parameters failed"),
            EnvError::Posterior(e) => write!(f, "prior error: {e}"),
            EnvError::Feasibility(e) => write!(f, "{e}"),
            EnvError::MissingTruth(id) => write!(f, "no truth parameters for station {id}"),
            EnvError::MissingTerminals => {
                write!(f, "feasibility graph has no source/target terminals")
            }
        }
    }
}

impl core::error::Error for EnvError {}

impl From<PosteriorError> for EnvError {
    fn from(e: PosteriorError) -> Self {
        EnvError::Posterior(e)
    }
}

impl From<FeasibilityError> for EnvError {
    fn from(e: FeasibilityError) -> Self {
        EnvError::Feasibility(e)
    }
}

impl From<SamplerFailure> for EnvError {
    fn from(_: SamplerFailure) -> Self {
        EnvError::TruthSampling
    }
}

/// Draws hidden station parameters from the priors, one independent child
/// stream per station so the draw is invariant to station count elsewhere.
/// Exact sampling only: a rejection-sampler failure aborts the draw.
pub fn draw_truth(
    fg: &FeasibilityGraph,
    priors: &PriorParams,
    rng: &Rng,
) -> Result<TruthParams, EnvError> {
    let prior_charge = ChargePosterior::from_prior(priors)?;
    let mode_hint = prior_charge.mode_alpha()?;
    let mut truth = TruthParams::default();
    for id in fg.charging_station_ids() {
        let mut r = rng.child(id.0);
        let lambda_queue = sample_gamma(&mut r, priors.queue_alpha, priors.queue_beta);
        let alpha_charge = prior_charge.sample_alpha(&mut r, mode_hint)?;
        let beta_charge = sample_gamma(&mut r, priors.charge_xi * alpha_charge, priors.charge_gamma);
        truth.insert(id, StationTruth { lambda_queue, alpha_charge, beta_charge });
    }
    Ok(truth)
}

/// Per-edge semi-bandit feedback for one traversal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFeedback {
    pub edge: u32,
    pub queue_s: f64,
    pub charge_s: f64,
    pub path_energy_ws: f64,
}

/// The simulator for one run: immutable truth plus per-station feedback
/// streams, so the k-th visit to a station draws the same outcome no matter
/// which policy is asking.
pub struct Environment<'a> {
    fg: &'a FeasibilityGraph,
    truth: TruthParams,
    /// Deficit scale kappa applied to raw gamma deficit draws.
    kappa: f64,
    /// Whether expected losses clamp the mean power into the station
    /// envelope, mirroring the truncation applied to feedback.
    truncate_expected_loss: bool,
    feedback_rngs: BTreeMap<NodeId, Rng>,
}

impl<'a> Environment<'a> {
    pub fn new(
        fg: &'a FeasibilityGraph,
        truth: TruthParams,
        kappa: f64,
        truncate_expected_loss: bool,
        feedback_rng: &Rng,
    ) -> Self {
        let feedback_rngs = fg
            .charging_station_ids()
            .into_iter()
            .map(|id| (id, feedback_rng.child(id.0)))
            .collect();
        Environment { fg, truth, kappa, truncate_expected_loss, feedback_rngs }
    }

    pub fn truth(&self) -> &TruthParams {
        &self.truth
    }

    pub fn graph(&self) -> &FeasibilityGraph {
        self.fg
    }

    /// Samples queue and charge feedback for one edge. Edges into the trip
    /// target produce zeroed feedback: the trip ends there, nothing queues
    /// or charges.
    pub fn sample_feedback(&mut self, edge_idx: u32) -> Result<EdgeFeedback, EnvError> {
        let edge = self.fg.edge(edge_idx);
        let head = edge.to;
        if self.fg.is_trip_target(head) {
            return Ok(EdgeFeedback {
                edge: edge_idx,
                queue_s: 0.0,
                charge_s: 0.0,
                path_energy_ws: edge.path_energy_ws,
            });
        }
        let truth = *self.truth.get(head).ok_or(EnvError::MissingTruth(head))?;
        let spec = self
            .fg
            .station(self.fg.station_index(head).expect("edge endpoints are stations"))
            .spec
            .expect("non-terminal heads are charging stations");
        let rng = self
            .feedback_rngs
            .get_mut(&head)
            .expect("feedback streams cover all charging stations");
        let queue_s = sample_exponential(rng, truth.lambda_queue);
        let z = sample_gamma(rng, truth.alpha_charge, truth.beta_charge);
        let power = (spec.max_power_w - self.kappa * z).max(spec.min_power_w);
        Ok(EdgeFeedback {
            edge: edge_idx,
            queue_s,
            charge_s: edge.path_energy_ws / power,
            path_energy_ws: edge.path_energy_ws,
        })
    }

    /// Expected loss of one edge under the truth: path time plus mean queue
    /// time plus charge time at the mean power deficit. With truncation the
    /// mean power is clamped into the station envelope, matching what the
    /// feedback channel can actually deliver.
    pub fn expected_edge_loss(&self, edge_idx: u32) -> Result<f64, EnvError> {
        let edge = self.fg.edge(edge_idx);
        let head = edge.to;
        if self.fg.is_trip_target(head) {
            return Ok(edge.path_time_s);
        }
        let truth = self.truth.get(head).ok_or(EnvError::MissingTruth(head))?;
        let spec = self
            .fg
            .station(self.fg.station_index(head).expect("edge endpoints are stations"))
            .spec
            .expect("non-terminal heads are charging stations");
        let mean_deficit = self.kappa * truth.alpha_charge / truth.beta_charge;
        let power = if self.truncate_expected_loss {
            (spec.max_power_w - mean_deficit).clamp(spec.min_power_w, spec.max_power_w)
        } else {
            spec.max_power_w - mean_deficit
        };
        let charge_time = if power > 0.0 { edge.path_energy_ws / power } else { f64::INFINITY };
        Ok(edge.path_time_s + 1.0 / truth.lambda_queue + charge_time)
    }

    /// Expected loss of a whole path: the sum of its edge losses.
    pub fn expected_path_loss(&self, path: &[u32]) -> Result<f64, EnvError> {
        let mut total = 0.0;
        for &e in path {
            total += self.expected_edge_loss(e)?;
        }
        Ok(total)
    }

    /// The expected-loss-optimal path between the trip terminals; computed
    /// once per (truth, instance) by the callers.
    pub fn optimal_expected_path(&self) -> Result<(Vec<u32>, f64), EnvError> {
        let src = self.fg.source().ok_or(EnvError::MissingTerminals)?;
        let trg = self.fg.target().ok_or(EnvError::MissingTerminals)?;
        let mut weights = Vec::with_capacity(self.fg.edges().len());
        for e in 0..self.fg.edges().len() {
            weights.push(self.expected_edge_loss(e as u32)?);
        }
        Ok(shortest_path(self.fg, src, trg, &weights)?)
    }

    /// Instantaneous regret of a chosen path against the optimal loss,
    /// floored at zero against rounding in the comparison.
    pub fn regret_step(&self, chosen_path: &[u32], optimal_loss: f64) -> Result<f64, EnvError> {
        let loss = self.expected_path_loss(chosen_path)?;
        let raw = loss - optimal_loss;
        debug_assert!(raw >= -1e-9, "chosen path beat the optimum by {raw}");
        Ok(raw.max(0.0))
    }
}
