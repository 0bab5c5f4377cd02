//! Seedable MT19937 generator.
//!
//! Every random choice in the crate (graph generation, walk coins, victim
//! selection, Bloom filter salts) goes through [`Rng`], so a run is a pure
//! function of its configuration and seed. Integer draws use rejection on
//! raw 32-bit words, which makes the consumed word sequence independent of
//! platform and language.

const N: usize = 624;
const M: usize = 397;
const MATRIX_A: u32 = 0x9908_b0df;
const UPPER_MASK: u32 = 0x8000_0000;
const LOWER_MASK: u32 = 0x7fff_ffff;

/// 32-bit Mersenne Twister (MT19937).
#[derive(Clone)]
pub struct Rng {
    state: [u32; N],
    index: usize,
    seed: u32,
}

impl std::fmt::Debug for Rng {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rng")
            .field("seed", &self.seed)
            .field("index", &self.index)
            .finish_non_exhaustive()
    }
}

impl Rng {
    pub fn new(seed: u32) -> Self {
        let mut state = [0u32; N];
        state[0] = seed;
        for i in 1..N {
            let prev = state[i - 1];
            state[i] = 1_812_433_253u32
                .wrapping_mul(prev ^ (prev >> 30))
                .wrapping_add(i as u32);
        }
        Self {
            state,
            index: N,
            seed,
        }
    }

    pub fn seed(&self) -> u32 {
        self.seed
    }

    fn twist(&mut self) {
        for i in 0..N {
            let y = (self.state[i] & UPPER_MASK) | (self.state[(i + 1) % N] & LOWER_MASK);
            let mut next = self.state[(i + M) % N] ^ (y >> 1);
            if y & 1 != 0 {
                next ^= MATRIX_A;
            }
            self.state[i] = next;
        }
        self.index = 0;
    }

    /// Next raw tempered output word.
    pub fn next_u32(&mut self) -> u32 {
        if self.index >= N {
            self.twist();
        }
        let mut y = self.state[self.index];
        self.index += 1;
        y ^= y >> 11;
        y ^= (y << 7) & 0x9d2c_5680;
        y ^= (y << 15) & 0xefc6_0000;
        y ^= y >> 18;
        y
    }

    /// Uniform double in `[0, 1)` with 32 bits of resolution (one word).
    pub fn next_f64(&mut self) -> f64 {
        f64::from(self.next_u32()) * (1.0 / 4_294_967_296.0)
    }

    /// Uniform integer in `[0, bound)`.
    ///
    /// Draws a word `w` and accepts `w % bound` when
    /// `w < 2^32 - (2^32 mod bound)`; otherwise draws again.
    ///
    /// # Panics
    ///
    /// Panics if `bound == 0`.
    pub fn uniform_below(&mut self, bound: u32) -> u32 {
        assert!(bound > 0, "uniform_below: bound must be positive");
        let span = 1u64 << 32;
        let limit = span - span % u64::from(bound);
        loop {
            let w = u64::from(self.next_u32());
            if w < limit {
                return (w % u64::from(bound)) as u32;
            }
        }
    }

    /// Convenience wrapper for indexing into slices.
    pub fn index_below(&mut self, len: usize) -> usize {
        let bound = u32::try_from(len).expect("index_below: length exceeds u32 range");
        self.uniform_below(bound) as usize
    }

    /// `count` distinct values from `[start, start + len)` in draw order.
    ///
    /// Duplicates are rejected and redrawn.
    ///
    /// # Panics
    ///
    /// Panics if `count > len`.
    pub fn sample_distinct(&mut self, count: u32, start: u32, len: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(count as usize);
        self.sample_distinct_into(count, start, len, &mut out);
        out
    }

    pub(crate) fn sample_distinct_into<E: Extend<u32> + AsRef<[u32]>>(
        &mut self,
        count: u32,
        start: u32,
        len: u32,
        out: &mut E,
    ) {
        assert!(
            count <= len,
            "sample_distinct: cannot draw {count} distinct values from a range of {len}"
        );
        let base = out.as_ref().len();
        let mut drawn = 0;
        while drawn < count {
            let v = start + self.uniform_below(len);
            if !out.as_ref()[base..].contains(&v) {
                out.extend(std::iter::once(v));
                drawn += 1;
            }
        }
    }
}

/// Generator for trial `index` of a run seeded with `seed_base`.
pub fn trial_rng(seed_base: u32, index: u32) -> Rng {
    Rng::new(seed_base.wrapping_add(index))
}
