//! Counter-based random number generation.
//!
//! Every slot of a run draws from its own stream, derived purely from
//! `(seed, purpose, slot_index)`. This makes the simulation reproducible
//! bit-for-bit regardless of how slots are partitioned across threads:
//! a slot's randomness never depends on what was drawn for other slots.

/// Run-level seed. The same seed, config and slot count always reproduce
/// the same simulation output, byte for byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl From<u64> for RngSeed {
    fn from(v: u64) -> Self {
        RngSeed(v)
    }
}

/// Independent sub-streams of one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Alice's laser choice per slot.
    Alice,
    /// Signal photon counts, routing and detection times.
    Signal,
    /// Spontaneous-emission and dark-count noise.
    Noise,
    /// Multi-click squashing decisions during sifting.
    Squash,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Alice => 0x243F_6A88_85A3_08D3,
            Stream::Signal => 0x1319_8A2E_0370_7344,
            Stream::Noise => 0xA409_3822_299F_31D0,
            Stream::Squash => 0x082E_FA98_EC4E_6C89,
        }
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SplitMix64 generator bound to one `(seed, stream, slot)` triple.
#[derive(Debug, Clone)]
pub struct SlotRng {
    state: u64,
    spare_normal: Option<f64>,
}

impl SlotRng {
    pub fn new(seed: RngSeed, stream: Stream, slot: u64) -> Self {
        // Two mixing rounds whiten the (seed, tag, slot) triple so that
        // neighbouring slots start from statistically unrelated states.
        let s = mix(seed.0 ^ stream.tag()).wrapping_add(mix(slot.wrapping_mul(GOLDEN)));
        SlotRng {
            state: mix(s),
            spare_normal: None,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix(self.state)
    }

    /// Uniform draw in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n).
    #[inline]
    pub fn below(&mut self, n: u32) -> u32 {
        // Multiply-shift; bias is O(n / 2^64), irrelevant here.
        (((self.next_u64() as u128) * (n as u128)) >> 64) as u32
    }

    /// Standard normal via Marsaglia's polar method.
    pub fn normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        loop {
            let u = 2.0 * self.uniform() - 1.0;
            let v = 2.0 * self.uniform() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let k = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * k);
                return u * k;
            }
        }
    }

    /// Poisson sample by Knuth's product method; the caller supplies
    /// exp(-lambda) so hot loops can cache it. Only suitable for the
    /// small rates this simulator works with.
    #[inline]
    pub fn poisson(&mut self, exp_neg_lambda: f64) -> u32 {
        let mut k = 0u32;
        let mut p = self.uniform();
        while p > exp_neg_lambda {
            k += 1;
            p *= self.uniform();
        }
        k
    }
}
