//! Counter-based pseudo-random generator and the basic distribution samplers.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const SEED_SALT: u64 = 0x6c62_272e_07bb_0142;
const CHILD_SALT: u64 = 0xa076_1d64_78bd_642f;

/// SplitMix64 finalizer; full 64-bit avalanche.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based 64-bit generator with cheap independent child streams.
///
/// The output at step `n` is `mix64(key + n * GOLDEN_GAMMA)`, so identical
/// seeds replay identical sequences regardless of scheduling, and a child
/// stream derived from a tag never collides with its parent. One child per
/// (run seed, station id, purpose) keeps parallel runs reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    key: u64,
    counter: u64,
}

impl Rng {
    pub fn from_seed(seed: u64) -> Self {
        Rng {
            key: mix64(seed ^ SEED_SALT),
            counter: 0,
        }
    }

    /// Derives an independent stream from this generator's identity and a
    /// caller-chosen tag. Does not advance `self`.
    pub fn child(&self, tag: u64) -> Self {
        Rng {
            key: mix64(self.key ^ mix64(tag.wrapping_mul(GOLDEN_GAMMA) ^ CHILD_SALT)),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform draw in the open interval (0, 1); never returns 0 or 1, so
    /// logs of draws stay finite.
    pub fn next_open01(&mut self) -> f64 {
        (((self.next_u64() >> 11) as f64) + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform index in `0..n`.
    pub fn next_index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let i = (self.next_open01() * n as f64) as usize;
        i.min(n - 1)
    }
}

/// Standard normal draw via Box-Muller on two uniforms.
pub fn standard_normal(rng: &mut Rng) -> f64 {
    let u1 = rng.next_open01();
    let u2 = rng.next_open01();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
}

/// Inverse-CDF exponential draw `-ln(U) / rate`.
///
/// # Panics
/// If `rate <= 0`.
pub fn sample_exponential(rng: &mut Rng, rate: f64) -> f64 {
    assert!(rate > 0.0, "sample_exponential requires rate > 0");
    -libm::log(rng.next_open01()) / rate
}

/// Gamma(shape, rate) draw with the rate parameterization (mean shape/rate).
///
/// Marsaglia-Tsang squeeze for shape >= 1, with the standard power boost for
/// shape < 1. The draw is generated at unit rate and divided by `rate`, so
/// the same seed at two rates yields exactly proportional values.
///
/// # Panics
/// If `shape <= 0` or `rate <= 0`.
pub fn sample_gamma(rng: &mut Rng, shape: f64, rate: f64) -> f64 {
    assert!(shape > 0.0, "sample_gamma requires shape > 0");
    assert!(rate > 0.0, "sample_gamma requires rate > 0");
    sample_std_gamma(rng, shape) / rate
}

fn sample_std_gamma(rng: &mut Rng, shape: f64) -> f64 {
    if shape < 1.0 {
        let y = sample_std_gamma(rng, shape + 1.0);
        let u = rng.next_open01();
        return y * libm::pow(u, 1.0 / shape);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / libm::sqrt(9.0 * d);
    loop {
        let x = standard_normal(rng);
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = rng.next_open01();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if libm::log(u) < 0.5 * x2 + d * (1.0 - v + libm::log(v)) {
            return d * v;
        }
    }
}
