//! Metered source of fair random bits.
//!
//! Every random decision in the crate goes through a [`BitTape`]. The tape
//! counts each bit it hands out and attributes it to the [`Category`] that is
//! active at the time, so the randomness used by one mechanism invocation is
//! measured exactly.

use std::fmt;

use rand::rngs::OsRng;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Accounting bucket for consumed bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Category {
    Gaussian,
    Laplace,
    Tail,
    Shift,
    Binomial,
    Subset,
    PointMass,
    Other,
}

impl Category {
    pub const ALL: [Category; 8] = [
        Category::Gaussian,
        Category::Laplace,
        Category::Tail,
        Category::Shift,
        Category::Binomial,
        Category::Subset,
        Category::PointMass,
        Category::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Gaussian => "gaussian",
            Category::Laplace => "laplace",
            Category::Tail => "tail",
            Category::Shift => "shift",
            Category::Binomial => "binomial",
            Category::Subset => "subset",
            Category::PointMass => "point_mass",
            Category::Other => "other",
        }
    }

    /// Categories that pay for per-coordinate noise, as opposed to the
    /// shared shift and the tail-set selection.
    pub fn is_noise(self) -> bool {
        matches!(
            self,
            Category::Gaussian | Category::Laplace | Category::Tail
        )
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-category bit counters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BitCounts([u64; 8]);

impl BitCounts {
    pub fn get(&self, category: Category) -> u64 {
        self.0[category.index()]
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn noise(&self) -> u64 {
        Category::ALL
            .iter()
            .filter(|c| c.is_noise())
            .map(|c| self.get(*c))
            .sum()
    }

    /// Counts accumulated since `earlier` was taken from the same tape.
    pub fn since(&self, earlier: &BitCounts) -> BitCounts {
        let mut out = [0u64; 8];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.0[i] - earlier.0[i];
        }
        BitCounts(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Category, u64)> + '_ {
        Category::ALL.iter().map(move |c| (*c, self.get(*c)))
    }
}

enum Source {
    Seeded(Box<ChaCha20Rng>),
    Os(OsRng),
}

impl Source {
    fn next_word(&mut self) -> Result<u64> {
        match self {
            Source::Seeded(rng) => Ok(rng.next_u64()),
            Source::Os(rng) => {
                let mut buf = [0u8; 8];
                rng.try_fill_bytes(&mut buf)
                    .map_err(|e| Error::Entropy(e.to_string()))?;
                Ok(u64::from_le_bytes(buf))
            }
        }
    }
}

/// A metered stream of fair bits. Tapes are used through `&mut self`, so
/// parallel trials each own one.
pub struct BitTape {
    source: Source,
    word: u64,
    remaining: u32,
    bits_consumed: u64,
    counts: BitCounts,
    category: Category,
}

impl BitTape {
    /// Deterministic tape: the same seed always yields the same bit sequence.
    pub fn seeded(seed: u64) -> Self {
        Self::with_source(Source::Seeded(Box::new(ChaCha20Rng::seed_from_u64(seed))))
    }

    /// Tape backed by operating-system entropy.
    pub fn from_os() -> Self {
        Self::with_source(Source::Os(OsRng))
    }

    fn with_source(source: Source) -> Self {
        BitTape {
            source,
            word: 0,
            remaining: 0,
            bits_consumed: 0,
            counts: BitCounts::default(),
            category: Category::Other,
        }
    }

    /// Emits one fair bit and charges it to the active category.
    pub fn next_bit(&mut self) -> Result<bool> {
        if self.remaining == 0 {
            self.word = self.source.next_word()?;
            self.remaining = 64;
        }
        let bit = self.word & 1 == 1;
        self.word >>= 1;
        self.remaining -= 1;
        self.bits_consumed += 1;
        self.counts.0[self.category.index()] += 1;
        Ok(bit)
    }

    /// Reads `k` bits as a big-endian unsigned integer. `k <= 64`.
    pub fn next_bits(&mut self, k: u32) -> Result<u64> {
        debug_assert!(k <= 64);
        let mut v = 0u64;
        for _ in 0..k {
            v = (v << 1) | u64::from(self.next_bit()?);
        }
        Ok(v)
    }

    /// Uniform draw from `{1, ..., s}`.
    ///
    /// Draws `ceil(log2 s)` bits per attempt and rejects values above `s`,
    /// so the expected cost is below `2 * ceil(log2 s)` bits; `s = 1` is free.
    pub fn uniform_range(&mut self, s: u64) -> Result<u64> {
        if s == 0 {
            return Err(Error::Domain("uniform_range requires s >= 1".into()));
        }
        if s == 1 {
            return Ok(1);
        }
        let k = 64 - (s - 1).leading_zeros();
        loop {
            let v = self.next_bits(k)?;
            if v < s {
                return Ok(v + 1);
            }
        }
    }

    pub fn bits_consumed(&self) -> u64 {
        self.bits_consumed
    }

    pub fn counts(&self) -> BitCounts {
        self.counts
    }

    pub fn category(&self) -> Category {
        self.category
    }

    /// Runs `f` with bits charged to `category`, restoring the previous
    /// category afterwards.
    pub fn scoped<R>(&mut self, category: Category, f: impl FnOnce(&mut Self) -> R) -> R {
        let previous = std::mem::replace(&mut self.category, category);
        let out = f(self);
        self.category = previous;
        out
    }
}

impl fmt::Debug for BitTape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.source {
            Source::Seeded(_) => "seeded",
            Source::Os(_) => "os",
        };
        f.debug_struct("BitTape")
            .field("source", &kind)
            .field("bits_consumed", &self.bits_consumed)
            .field("category", &self.category)
            .finish()
    }
}

/// Derives the seed of trial `index` from a base seed (splitmix64 finalizer),
/// so batches of trials get independent, reproducible tapes.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
