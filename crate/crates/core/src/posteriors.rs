//! Conjugate Bayesian state per charging station.
//!
//! Queue times are exponential with an unknown rate; a gamma prior over the
//! rate is conjugate, so updates are two additions. The charging-power
//! deficit is gamma with unknown shape and rate; the conjugate prior over
//! both parameters keeps a closed-form update but its shape marginal is
//! known only up to normalization, so mode finding is numeric and sampling
//! goes through the log-concave rejection sampler.

use core::cell::Cell;
use core::fmt;

use crate::numerics::{
    self, checked_gamma_quantile, digamma, log_gamma, sample_gamma, Rng, SamplerFailure,
};

/// Prior parameters shared by every station, plus the deficit scale.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorParams {
    pub queue_alpha: f64,
    pub queue_beta: f64,
    pub charge_ln_pi: f64,
    pub charge_gamma: f64,
    pub charge_xi: f64,
    /// Observed power deficits are divided by this scale before entering the
    /// model, and estimates are multiplied back; widens the deficit variance.
    pub deficit_scale: f64,
}

impl Default for PriorParams {
    fn default() -> Self {
        PriorParams {
            queue_alpha: 2.0,
            queue_beta: 2400.0,
            charge_ln_pi: 13.5,
            charge_gamma: 300.0,
            charge_xi: 3.0,
            deficit_scale: 300.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PosteriorError {
    /// Parameters violate positivity or the integrability condition.
    InvalidParameter(&'static str),
    /// MAP estimate undefined (queue alpha <= 1, or xi * alpha_hat <= 1).
    DegenerateMap,
    /// Deficit observations must be strictly positive.
    ZeroDeficit,
    /// The shape marginal has no interior maximum.
    NoInteriorMode,
}

impl fmt::Display for PosteriorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PosteriorError::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
            PosteriorError::DegenerateMap => write!(f, "MAP estimate undefined for this state"),
            PosteriorError::ZeroDeficit => write!(f, "deficit observation must be positive"),
            PosteriorError::NoInteriorMode => {
                write!(f, "shape marginal has no interior mode")
            }
        }
    }
}

impl core::error::Error for PosteriorError {}

/// Gamma posterior over the exponential queue rate of one station.
#[derive(Debug, Clone, PartialEq)]
pub struct QueuePosterior {
    pub alpha: f64,
    /// Accumulated seconds; the prior pseudo-observation plus observed queue times.
    pub beta: f64,
}

impl QueuePosterior {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, PosteriorError> {
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(PosteriorError::InvalidParameter("queue posterior requires alpha, beta > 0"));
        }
        Ok(QueuePosterior { alpha, beta })
    }

    pub fn from_prior(priors: &PriorParams) -> Result<Self, PosteriorError> {
        Self::new(priors.queue_alpha, priors.queue_beta)
    }

    /// Absorbs one observed queue time (seconds).
    pub fn update(&self, observed_queue_s: f64) -> Result<Self, PosteriorError> {
        if !(observed_queue_s >= 0.0) {
            return Err(PosteriorError::InvalidParameter("queue observation must be >= 0"));
        }
        Ok(QueuePosterior { alpha: self.alpha + 1.0, beta: self.beta + observed_queue_s })
    }

    /// Expected queue time at the posterior mode of the rate: beta / (alpha - 1).
    pub fn map_expected_time(&self) -> Result<f64, PosteriorError> {
        if self.alpha <= 1.0 {
            return Err(PosteriorError::DegenerateMap);
        }
        Ok(self.beta / (self.alpha - 1.0))
    }

    /// Expected queue time at a rate sampled from the posterior.
    pub fn sample_expected_time(&self, rng: &mut Rng) -> f64 {
        1.0 / sample_gamma(rng, self.alpha, self.beta)
    }

    /// Optimistic (low) expected queue time from the upper rate quantile at
    /// level 1 - 1/t; level 1/2 at t = 1 where the schedule degenerates.
    pub fn ucb_expected_time(&self, t: u64) -> f64 {
        let nu = ucb_level(t);
        let rate = checked_gamma_quantile(nu, self.alpha, self.beta)
            .expect("posterior parameters are positive");
        1.0 / rate
    }
}

fn ucb_level(t: u64) -> f64 {
    if t <= 1 {
        0.5
    } else {
        1.0 - 1.0 / t as f64
    }
}

/// Conjugate posterior over the gamma charging-power-deficit parameters of
/// one station. `ln_pi` is kept in the log domain; the multiplicative
/// update on the natural scale overflows after tens of watt-scale
/// observations.
#[derive(Debug, Clone)]
pub struct ChargePosterior {
    pub ln_pi: f64,
    pub gamma_p: f64,
    pub xi: f64,
    /// Deficit scale kappa; observations are divided by it, estimates
    /// multiplied back.
    pub deficit_scale: f64,
    map_fallback: bool,
    mode_cache: Cell<Option<f64>>,
}

impl PartialEq for ChargePosterior {
    fn eq(&self, other: &Self) -> bool {
        self.ln_pi == other.ln_pi
            && self.gamma_p == other.gamma_p
            && self.xi == other.xi
            && self.deficit_scale == other.deficit_scale
            && self.map_fallback == other.map_fallback
    }
}

impl ChargePosterior {
    /// Validates positivity and the integrability of the shape marginal:
    /// ln_pi / xi + ln(xi) < ln(gamma_p), i.e. pi^(1/xi) * xi / gamma < 1,
    /// from the large-shape asymptotics of the log density.
    pub fn new(
        ln_pi: f64,
        gamma_p: f64,
        xi: f64,
        deficit_scale: f64,
    ) -> Result<Self, PosteriorError> {
        if !(gamma_p > 0.0) || !(xi > 0.0) {
            return Err(PosteriorError::InvalidParameter("charge posterior requires gamma, xi > 0"));
        }
        if !(deficit_scale >= 0.0) {
            return Err(PosteriorError::InvalidParameter("deficit scale must be >= 0"));
        }
        if !ln_pi.is_finite() {
            return Err(PosteriorError::InvalidParameter("ln_pi must be finite"));
        }
        if ln_pi / xi + libm::log(xi) >= libm::log(gamma_p) {
            return Err(PosteriorError::InvalidParameter(
                "improper prior: need pi^(1/xi) * xi < gamma for an integrable shape marginal",
            ));
        }
        Ok(ChargePosterior {
            ln_pi,
            gamma_p,
            xi,
            deficit_scale,
            map_fallback: false,
            mode_cache: Cell::new(None),
        })
    }

    pub fn from_prior(priors: &PriorParams) -> Result<Self, PosteriorError> {
        Self::new(
            priors.charge_ln_pi,
            priors.charge_gamma,
            priors.charge_xi,
            priors.deficit_scale,
        )
    }

    /// Whether sampling has permanently fallen back to the MAP estimate.
    pub fn map_fallback(&self) -> bool {
        self.map_fallback
    }

    /// Forces the MAP fallback, as after a sampler failure.
    pub fn force_map_fallback(&mut self) {
        self.map_fallback = true;
    }

    /// Absorbs one observed power deficit in watts (max power minus
    /// observed power, before scaling).
    pub fn update(&self, deficit_w: f64) -> Result<Self, PosteriorError> {
        if !(deficit_w > 0.0) {
            return Err(PosteriorError::ZeroDeficit);
        }
        if !(self.deficit_scale > 0.0) {
            return Err(PosteriorError::InvalidParameter("updates require a positive deficit scale"));
        }
        let x = deficit_w / self.deficit_scale;
        Ok(ChargePosterior {
            ln_pi: self.ln_pi + libm::log(x),
            gamma_p: self.gamma_p + x,
            xi: self.xi + 1.0,
            deficit_scale: self.deficit_scale,
            map_fallback: self.map_fallback,
            mode_cache: Cell::new(None),
        })
    }

    /// Unnormalized log density of the shape marginal at `alpha`:
    /// alpha*ln_pi - xi*alpha*ln(gamma) - xi*lnGamma(alpha) + lnGamma(xi*alpha).
    pub fn log_density_alpha(&self, alpha: f64) -> f64 {
        assert!(alpha > 0.0, "log_density_alpha requires alpha > 0");
        alpha * self.ln_pi - self.xi * alpha * libm::log(self.gamma_p)
            - self.xi * log_gamma(alpha)
            + log_gamma(self.xi * alpha)
    }

    /// Derivative of [`Self::log_density_alpha`].
    fn mode_gradient(&self, alpha: f64) -> f64 {
        self.ln_pi - self.xi * libm::log(self.gamma_p) - self.xi * digamma(alpha)
            + self.xi * digamma(self.xi * alpha)
    }

    /// Mode of the shape marginal, by bisection on the gradient; unique by
    /// log-concavity. Cached until the next update.
    pub fn mode_alpha(&self) -> Result<f64, PosteriorError> {
        if let Some(mode) = self.mode_cache.get() {
            return Ok(mode);
        }
        let mut lo = 1e-8;
        let mut hi = 1e8;
        if !(self.mode_gradient(lo) > 0.0) || !(self.mode_gradient(hi) < 0.0) {
            return Err(PosteriorError::NoInteriorMode);
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..300 {
            mid = 0.5 * (lo + hi);
            let g = self.mode_gradient(mid);
            if libm::fabs(g) < 1e-10 || (hi - lo) <= 2.0 * f64::EPSILON * mid {
                break;
            }
            if g > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.mode_cache.set(Some(mid));
        Ok(mid)
    }

    fn power_from(&self, alpha_hat: f64, beta_hat: f64, max_power_w: f64, min_power_w: f64) -> f64 {
        let deficit = self.deficit_scale * alpha_hat / beta_hat;
        (max_power_w - deficit).clamp(min_power_w, max_power_w)
    }

    /// Expected charging power at the posterior mode, clamped into the
    /// station's power envelope.
    pub fn map_expected_power(
        &self,
        max_power_w: f64,
        min_power_w: f64,
    ) -> Result<f64, PosteriorError> {
        if self.deficit_scale == 0.0 {
            return Ok(max_power_w);
        }
        let alpha_hat = self.mode_alpha()?;
        if self.xi * alpha_hat <= 1.0 {
            return Err(PosteriorError::DegenerateMap);
        }
        let beta_hat = (self.xi * alpha_hat - 1.0) / self.gamma_p;
        Ok(self.power_from(alpha_hat, beta_hat, max_power_w, min_power_w))
    }

    /// Expected charging power at parameters sampled from the posterior.
    /// A sampler failure permanently switches this station to the MAP
    /// estimate; the failure itself is absorbed.
    pub fn sample_expected_power(
        &mut self,
        rng: &mut Rng,
        max_power_w: f64,
        min_power_w: f64,
    ) -> Result<f64, PosteriorError> {
        if self.deficit_scale == 0.0 {
            return Ok(max_power_w);
        }
        if self.map_fallback {
            return self.map_expected_power(max_power_w, min_power_w);
        }
        let mode = self.mode_alpha()?;
        match self.sample_alpha(rng, mode) {
            Ok(alpha_hat) => {
                let beta_hat = sample_gamma(rng, self.xi * alpha_hat, self.gamma_p);
                Ok(self.power_from(alpha_hat, beta_hat, max_power_w, min_power_w))
            }
            Err(SamplerFailure) => {
                self.map_fallback = true;
                self.map_expected_power(max_power_w, min_power_w)
            }
        }
    }

    /// Draws a shape from the marginal via rejection sampling.
    pub fn sample_alpha(&self, rng: &mut Rng, mode_hint: f64) -> Result<f64, SamplerFailure> {
        numerics::tdr_sample_log_concave(rng, |a| self.log_density_alpha(a), mode_hint)
    }

    /// Optimistic (high) expected charging power: shape at the mode, rate at
    /// its upper conditional quantile 1 - 1/t.
    pub fn ucb_expected_power(
        &self,
        t: u64,
        max_power_w: f64,
        min_power_w: f64,
    ) -> Result<f64, PosteriorError> {
        if self.deficit_scale == 0.0 {
            return Ok(max_power_w);
        }
        let alpha_hat = self.mode_alpha()?;
        let beta_hat = checked_gamma_quantile(ucb_level(t), self.xi * alpha_hat, self.gamma_p)
            .expect("posterior parameters are positive");
        Ok(self.power_from(alpha_hat, beta_hat, max_power_w, min_power_w))
    }
}
