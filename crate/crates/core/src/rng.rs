//! Counter-based random streams.
//!
//! Every random quantity in a replica is a pure function of a key path
//! `(master seed, replica, tag, ...)`. A [`StreamKey`] names one node of that
//! path; [`CounterRng`] turns a key into a sequence `mix(key + k * GAMMA)`
//! for `k = 1, 2, ...` (the SplitMix64 output function). Nothing is shared
//! between replicas, so results do not depend on how replicas are scheduled
//! across threads.

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key of one random stream. Children are derived by hashing, so sibling
/// keys are unrelated 64-bit values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        StreamKey(mix64(seed ^ 0x6a09_e667_f3bc_c909))
    }

    #[inline]
    pub fn child(self, tag: u64) -> Self {
        StreamKey(mix64(self.0 ^ mix64(tag.wrapping_add(GAMMA))))
    }

    /// Child keyed by a signed lattice coordinate.
    #[inline]
    pub fn site(self, site: i64) -> Self {
        // zigzag keeps small negative and positive coordinates distinct
        self.child(((site << 1) ^ (site >> 63)) as u64)
    }

    #[inline]
    pub fn rng(self) -> CounterRng {
        CounterRng::new(self)
    }

    pub fn raw(self) -> u64 {
        self.0
    }
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: StreamKey) -> Self {
        CounterRng {
            key: key.0,
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform on (0, 1]; never returns 0, so `ln` is always finite.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Uniform on [0, 1).
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Exponential waiting time with the given positive rate.
    #[inline]
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -self.uniform_open0().ln() / rate
    }

    /// Number of values drawn so far.
    pub fn position(&self) -> u64 {
        self.counter
    }
}

/// Tags separating the independent sub-streams of one replica.
pub(crate) mod tag {
    pub const CLOCKS: u64 = 1;
    pub const JUMP: u64 = 2;
    pub const WINDOW: u64 = 3;
}

/// The randomness owned by one replica: a key derived from
/// `(master seed, replica index)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicaStream {
    seed: u64,
    replica: u64,
    key: StreamKey,
}

impl ReplicaStream {
    pub fn new(seed: u64, replica: u64) -> Self {
        ReplicaStream {
            seed,
            replica,
            key: StreamKey::root(seed).child(replica),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    pub fn key(&self) -> StreamKey {
        self.key
    }

    pub(crate) fn sub(&self, tag: u64) -> StreamKey {
        self.key.child(tag)
    }
}
