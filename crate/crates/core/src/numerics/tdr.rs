//! Exact rejection sampling from log-concave densities on the positive axis.
//!
//! The envelope is a piecewise-exponential hull: secants of the log-density
//! through a set of support points, extended outside their own interval,
//! upper-bound a concave function, while inside their interval they
//! lower-bound it (the squeeze). Every rejected proposal donates its
//! abscissa to the support set, so the hull tightens as sampling proceeds.

use alloc::vec::Vec;
use core::fmt;

use super::rng::Rng;

/// The sampler gave up: either no finite envelope could be constructed or
/// too many consecutive rejections brought no envelope improvement.
/// Callers are expected to fall back to a deterministic estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerFailure;

impl fmt::Display for SamplerFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("log-concave rejection sampler failed to produce a sample")
    }
}

impl core::error::Error for SamplerFailure {}

/// Support-point cap; beyond it rejections no longer refine the hull.
const MAX_POINTS: usize = 64;
/// Consecutive rejections without envelope improvement before giving up.
const MAX_STALL_REJECTS: u32 = 64;

/// One exponential piece of the envelope: u(x) = m*x + c on [lo, hi),
/// where `hi` may be infinite (then m < 0).
#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    m: f64,
    c: f64,
    log_mass: f64,
}

/// Reusable sampler for one (unnormalized) log-concave density on (0, inf).
pub struct LogConcaveSampler<F: Fn(f64) -> f64> {
    log_density: F,
    /// Sorted support points (x, h(x)); all finite.
    points: Vec<(f64, f64)>,
    pieces: Vec<Piece>,
    proposals: u64,
    accepts: u64,
}

impl<F: Fn(f64) -> f64> LogConcaveSampler<F> {
    /// Builds the initial hull from three support points around `mode_hint`,
    /// extending to the right until the tail of the hull decays.
    pub fn new(log_density: F, mode_hint: f64) -> Result<Self, SamplerFailure> {
        if !(mode_hint > 0.0) || !mode_hint.is_finite() {
            return Err(SamplerFailure);
        }
        let mut points: Vec<(f64, f64)> = Vec::new();
        for factor in [0.5, 1.0, 1.5] {
            let mut x = mode_hint * factor;
            let mut h = log_density(x);
            let mut tries = 0;
            // Walk toward the hint until the density is finite there.
            while !h.is_finite() {
                tries += 1;
                if tries > 64 {
                    return Err(SamplerFailure);
                }
                x = 0.5 * (x + mode_hint);
                h = log_density(x);
            }
            if !points.iter().any(|p| p.0 == x) {
                points.push((x, h));
            }
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.len() < 3 {
            return Err(SamplerFailure);
        }
        let mut sampler = LogConcaveSampler {
            log_density,
            points,
            pieces: Vec::new(),
            proposals: 0,
            accepts: 0,
        };
        // The rightmost secant must slope downward or the hull has infinite
        // mass; push points outward until it does.
        loop {
            let k = sampler.points.len();
            let (x0, h0) = sampler.points[k - 2];
            let (x1, h1) = sampler.points[k - 1];
            if (h1 - h0) / (x1 - x0) < 0.0 {
                break;
            }
            if k >= MAX_POINTS {
                return Err(SamplerFailure);
            }
            let mut x = x1 * 2.0 + 1.0;
            let mut h = (sampler.log_density)(x);
            let mut tries = 0;
            while !h.is_finite() {
                tries += 1;
                if tries > 64 {
                    return Err(SamplerFailure);
                }
                x = 0.5 * (x + x1);
                h = (sampler.log_density)(x);
            }
            if x <= x1 {
                return Err(SamplerFailure);
            }
            sampler.points.push((x, h));
        }
        sampler.rebuild();
        if sampler.pieces.is_empty() {
            return Err(SamplerFailure);
        }
        Ok(sampler)
    }

    fn chord(&self, i: usize) -> (f64, f64) {
        let (x0, h0) = self.points[i];
        let (x1, h1) = self.points[i + 1];
        let m = (h1 - h0) / (x1 - x0);
        (m, h0 - m * x0)
    }

    fn push_piece(&mut self, lo: f64, hi: f64, m: f64, c: f64) {
        if !(hi > lo) {
            return;
        }
        let log_mass = if hi.is_infinite() {
            if m >= 0.0 {
                return;
            }
            m * lo + c - libm::log(-m)
        } else {
            let delta = hi - lo;
            let u_lo = m * lo + c;
            let u_hi = m * hi + c;
            if libm::fabs(m) * delta < 1e-12 {
                0.5 * (u_lo + u_hi) + libm::log(delta)
            } else if m > 0.0 {
                u_hi + libm::log1p(-libm::exp(-m * delta)) - libm::log(m)
            } else {
                u_lo + libm::log1p(-libm::exp(m * delta)) - libm::log(-m)
            }
        };
        if log_mass.is_nan() {
            return;
        }
        self.pieces.push(Piece { lo, hi, m, c, log_mass });
    }

    /// Recomputes the hull pieces from the current support points.
    fn rebuild(&mut self) {
        self.pieces.clear();
        let k = self.points.len();
        let first_x = self.points[0].0;
        let last_x = self.points[k - 1].0;
        // Left overhang (0, x_0]: first secant extended left.
        let (m, c) = self.chord(0);
        self.push_piece(0.0, first_x, m, c);
        // Interior intervals [x_i, x_{i+1}]: the lower of the two secants
        // extended in from either side.
        for i in 0..k - 1 {
            let lo = self.points[i].0;
            let hi = self.points[i + 1].0;
            let left = if i >= 1 { Some(self.chord(i - 1)) } else { None };
            let right = if i + 2 <= k - 1 { Some(self.chord(i + 1)) } else { None };
            match (left, right) {
                (Some((ma, ca)), Some((mb, cb))) => {
                    if ma - mb <= 0.0 {
                        // Collinear support; either line works.
                        self.push_piece(lo, hi, ma, ca);
                    } else {
                        let xc = ((cb - ca) / (ma - mb)).clamp(lo, hi);
                        self.push_piece(lo, xc, ma, ca);
                        self.push_piece(xc, hi, mb, cb);
                    }
                }
                (Some((ma, ca)), None) => self.push_piece(lo, hi, ma, ca),
                (None, Some((mb, cb))) => self.push_piece(lo, hi, mb, cb),
                (None, None) => unreachable!("at least 3 support points"),
            }
        }
        // Right tail [x_{k-1}, inf): last secant, decaying by construction.
        let (m, c) = self.chord(k - 2);
        self.push_piece(last_x, f64::INFINITY, m, c);
    }

    /// Draws one proposal from the hull. Returns (x, u(x)).
    fn propose(&self, rng: &mut Rng) -> Option<(f64, f64)> {
        let max_lm = self
            .pieces
            .iter()
            .map(|p| p.log_mass)
            .fold(f64::NEG_INFINITY, f64::max);
        if !max_lm.is_finite() {
            return None;
        }
        let total: f64 = self.pieces.iter().map(|p| libm::exp(p.log_mass - max_lm)).sum();
        if !(total > 0.0) || !total.is_finite() {
            return None;
        }
        let mut r = rng.next_open01() * total;
        let mut chosen = self.pieces[self.pieces.len() - 1];
        for p in &self.pieces {
            let w = libm::exp(p.log_mass - max_lm);
            if r <= w {
                chosen = *p;
                break;
            }
            r -= w;
        }
        let u = rng.next_open01();
        let x = if chosen.hi.is_infinite() {
            chosen.lo + libm::log1p(-u) / chosen.m
        } else {
            let delta = chosen.hi - chosen.lo;
            if libm::fabs(chosen.m) * delta < 1e-12 {
                chosen.lo + u * delta
            } else if chosen.m < 0.0 {
                chosen.lo + libm::log1p(u * libm::expm1(chosen.m * delta)) / chosen.m
            } else {
                chosen.hi - (-libm::log1p(u * libm::expm1(-chosen.m * delta)) / chosen.m)
            }
        };
        if !(x > 0.0) || !x.is_finite() {
            return None;
        }
        Some((x, chosen.m * x + chosen.c))
    }

    /// Chord lower bound at x, or -inf outside the supported span.
    fn squeeze(&self, x: f64) -> f64 {
        let k = self.points.len();
        if x < self.points[0].0 || x > self.points[k - 1].0 {
            return f64::NEG_INFINITY;
        }
        let mut idx = match self
            .points
            .binary_search_by(|p| p.0.total_cmp(&x))
        {
            Ok(i) => i.min(k - 2),
            Err(i) => i.saturating_sub(1).min(k - 2),
        };
        if idx >= k - 1 {
            idx = k - 2;
        }
        let (m, c) = self.chord(idx);
        m * x + c
    }

    /// Adds a rejected abscissa to the support set; false when the set is
    /// saturated or the point duplicates an existing one.
    fn insert(&mut self, x: f64, h: f64) -> bool {
        if self.points.len() >= MAX_POINTS || !h.is_finite() {
            return false;
        }
        let pos = match self.points.binary_search_by(|p| p.0.total_cmp(&x)) {
            Ok(_) => return false,
            Err(p) => p,
        };
        // Reject near-duplicates; they do not improve the hull.
        let near = |other: f64| libm::fabs(x - other) <= 1e-13 * libm::fabs(x.max(other));
        if pos > 0 && near(self.points[pos - 1].0) {
            return false;
        }
        if pos < self.points.len() && near(self.points[pos].0) {
            return false;
        }
        self.points.insert(pos, (x, h));
        self.rebuild();
        true
    }

    /// Draws one exact sample from the normalized density.
    pub fn sample(&mut self, rng: &mut Rng) -> Result<f64, SamplerFailure> {
        let mut stall: u32 = 0;
        loop {
            if stall >= MAX_STALL_REJECTS {
                return Err(SamplerFailure);
            }
            self.proposals += 1;
            let Some((x, u_val)) = self.propose(rng) else {
                return Err(SamplerFailure);
            };
            let lw = libm::log(rng.next_open01());
            if lw <= self.squeeze(x) - u_val {
                self.accepts += 1;
                return Ok(x);
            }
            let hx = (self.log_density)(x);
            if hx.is_finite() && lw <= hx - u_val {
                self.accepts += 1;
                return Ok(x);
            }
            if self.insert(x, hx) {
                stall = 0;
            } else {
                stall += 1;
            }
        }
    }

    /// Fraction of proposals accepted so far.
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            return 0.0;
        }
        self.accepts as f64 / self.proposals as f64
    }

    /// Resets the proposal/accept counters without touching the hull.
    pub fn reset_stats(&mut self) {
        self.proposals = 0;
        self.accepts = 0;
    }
}

/// One-shot draw from an (unnormalized) log-concave density on (0, inf).
///
/// Concavity of `log_density` is the caller's responsibility; behavior on
/// non-concave input is unspecified. `mode_hint` seeds the envelope and must
/// lie inside the support.
pub fn tdr_sample_log_concave<F: Fn(f64) -> f64>(
    rng: &mut Rng,
    log_density: F,
    mode_hint: f64,
) -> Result<f64, SamplerFailure> {
    LogConcaveSampler::new(log_density, mode_hint)?.sample(rng)
}
