//! Per-page Bloom filters over keys that spilled to their backup page.
//!
//! A negative answer for page `p` proves that a key with primary page `p`
//! is not on its backup page, so an unsuccessful lookup can stop after one
//! page request.

use crate::graph::{KeyId, Page};
use crate::rng::Rng;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A plain Bloom filter with salted hash functions.
#[derive(Debug, Clone)]
pub struct BloomFilter {
    words: Vec<u64>,
    bits: u64,
    salts: Vec<u64>,
}

impl BloomFilter {
    /// Filter of `bits` bits using one hash function per salt.
    pub fn new(bits: u64, salts: Vec<u64>) -> Self {
        assert!(bits > 0, "bloom filter needs at least one bit");
        Self {
            words: vec![0; bits.div_ceil(64) as usize],
            bits,
            salts,
        }
    }

    fn index(&self, key: KeyId, salt: u64) -> u64 {
        mix64(u64::from(key) ^ salt) % self.bits
    }

    pub fn insert(&mut self, key: KeyId) {
        for i in 0..self.salts.len() {
            let bit = self.index(key, self.salts[i]);
            self.words[(bit / 64) as usize] |= 1 << (bit % 64);
        }
    }

    pub fn contains(&self, key: KeyId) -> bool {
        self.salts.iter().all(|&salt| {
            let bit = self.index(key, salt);
            self.words[(bit / 64) as usize] & (1 << (bit % 64)) != 0
        })
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn hash_count(&self) -> usize {
        self.salts.len()
    }

    pub fn ones(&self) -> u64 {
        self.words.iter().map(|w| u64::from(w.count_ones())).sum()
    }

    /// Fraction of set bits.
    pub fn fill_ratio(&self) -> f64 {
        self.ones() as f64 / self.bits as f64
    }

    /// False positive probability implied by the current fill ratio.
    pub fn false_positive_rate(&self) -> f64 {
        self.fill_ratio().powi(self.salts.len() as i32)
    }
}

/// One filter per page.
#[derive(Debug, Clone)]
pub struct PageFilters {
    filters: Vec<BloomFilter>,
    members: Vec<u32>,
}

impl PageFilters {
    /// Empty filters for `pages` pages of `s` cells, `bits_per_cell * s` bits
    /// each, with `hashes` hash functions salted from a generator seeded by
    /// `(seed, page)`.
    pub fn new(pages: u32, s: u32, bits_per_cell: f64, hashes: u32, seed: u32) -> Self {
        let bits = ((bits_per_cell * f64::from(s)).ceil() as u64).max(1);
        let filters = (0..pages)
            .map(|p| {
                let mut rng = Rng::new(seed ^ p.wrapping_mul(0x9e37_79b9));
                let salts = (0..hashes)
                    .map(|_| u64::from(rng.next_u32()) << 32 | u64::from(rng.next_u32()))
                    .collect();
                BloomFilter::new(bits, salts)
            })
            .collect();
        Self {
            filters,
            members: vec![0; pages as usize],
        }
    }

    /// Records `key`, whose primary page is `page`, as stored on its backup
    /// page.
    pub fn insert(&mut self, page: Page, key: KeyId) {
        self.filters[page as usize].insert(key);
        self.members[page as usize] += 1;
    }

    /// Whether a key with primary page `page` may be on its backup page.
    pub fn may_contain(&self, page: Page, key: KeyId) -> bool {
        self.filters[page as usize].contains(key)
    }

    pub fn page(&self, page: Page) -> &BloomFilter {
        &self.filters[page as usize]
    }

    /// Number of keys recorded for `page` (its `w`).
    pub fn members(&self, page: Page) -> u32 {
        self.members[page as usize]
    }

    pub fn pages(&self) -> usize {
        self.filters.len()
    }
}
