//! Deterministic pseudo-random stream.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood 2014):
//!
//! ```text
//! state  = state + 0x9E3779B97F4A7C15            (wrapping)
//! z      = state
//! z      = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9  (wrapping)
//! z      = (z ^ (z >> 27)) * 0x94D049BB133111EB  (wrapping)
//! output = z ^ (z >> 31)
//! ```
//!
//! `uniform` takes the top 53 bits of one output and scales by 2⁻⁵³, so it
//! lies in `[0, 1)`. Index draws use `floor(uniform · n)`. Everything that is
//! random in this crate goes through this stream, so any implementation of
//! the recurrence above reproduces the same resamples, restarts and trades.

/// Seeded SplitMix64 stream. Single owner; derive independent streams with
/// [`SeededRng::derive`] rather than sharing one across threads.
#[derive(Debug, Clone)]
pub struct SeededRng {
    state: u64,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        SeededRng { state: seed }
    }

    /// Independent child stream keyed by `(seed, a, b)`.
    pub fn derive(seed: u64, a: u64, b: u64) -> Self {
        let s = mix(seed ^ mix(a.wrapping_add(GOLDEN)) ^ mix(b.wrapping_mul(GOLDEN).wrapping_add(1)));
        SeededRng::new(s)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Standard normal draw (Box–Muller, one value per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn choose_with_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        (0..k).map(|_| self.index(n)).collect()
    }

    /// `k` distinct indices from `0..n` (partial Fisher–Yates).
    pub fn choose_without_replacement(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "cannot draw {k} of {n} without replacement");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }

    /// Fisher–Yates shuffle, walking from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }
}

pub fn rng_stream(seed: u64) -> SeededRng {
    SeededRng::new(seed)
}
