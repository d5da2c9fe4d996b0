//! Minimal deterministic RNG (SplitMix64) for reproducible campaigns.
//!
//! Streams are keyed by hashing arbitrary u64 tuples, so noise injection and
//! restart draws can be replayed bit-for-bit regardless of evaluation order.

#[derive(Debug, Clone)]
pub struct Rng64 {
    state: u64,
    spare_normal: Option<f64>,
}

impl Rng64 {
    pub fn new(seed: u64) -> Self {
        Rng64 {
            state: seed,
            spare_normal: None,
        }
    }

    /// Derive an independent stream from a tuple of key parts.
    pub fn from_key(parts: &[u64]) -> Self {
        let mut state = 0x9e3779b97f4a7c15u64;
        for &p in parts {
            state ^= p.wrapping_add(0x9e3779b97f4a7c15)
                .wrapping_add(state << 6)
                .wrapping_add(state >> 2);
            state = splitmix(&mut state);
        }
        Rng64::new(state)
    }

    pub fn next_u64(&mut self) -> u64 {
        splitmix(&mut self.state)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform integer in [0, bound).
    pub fn below(&mut self, bound: usize) -> usize {
        (self.uniform() * bound as f64) as usize % bound.max(1)
    }

    /// Standard normal draw (Box-Muller, pairs cached).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        let u1 = loop {
            let u = self.uniform();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(radius * angle.sin());
        radius * angle.cos()
    }

    /// Half-Cauchy draw with the given scale.
    pub fn half_cauchy(&mut self, scale: f64) -> f64 {
        let u = self.uniform().clamp(f64::MIN_POSITIVE, 1.0 - 1e-12);
        scale * (std::f64::consts::FRAC_PI_2 * u).tan()
    }
}

fn splitmix(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}
