use crate::tape::{BitCounts, BitTape};

/// Bits and noise draws spent by one mechanism invocation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RandomnessReport {
    pub bits_total: u64,
    pub bits_by_category: BitCounts,
    /// Coordinates that needed a noise draw because the shifted value sat
    /// near a grid edge.
    pub boundary_coordinates: Vec<usize>,
    /// Coordinates whose noise was drawn from the conditioned tail.
    pub tail_coordinates: Vec<usize>,
    /// Base-distribution draws made for each coordinate.
    pub draws_attempted: Vec<u64>,
}

impl RandomnessReport {
    pub fn noise_bits(&self) -> u64 {
        self.bits_by_category.noise()
    }
}

/// Released vector plus the randomness spent producing it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MechanismResult {
    pub values: Vec<i64>,
    pub report: RandomnessReport,
}

/// Snapshot of a tape taken when a mechanism starts.
pub(crate) struct Meter {
    start: BitCounts,
    start_total: u64,
}

impl Meter {
    pub(crate) fn start(tape: &BitTape) -> Self {
        Meter {
            start: tape.counts(),
            start_total: tape.bits_consumed(),
        }
    }

    pub(crate) fn finish(self, tape: &BitTape, d: usize) -> RandomnessReport {
        let by_category = tape.counts().since(&self.start);
        let bits_total = tape.bits_consumed() - self.start_total;
        debug_assert_eq!(bits_total, by_category.total());
        RandomnessReport {
            bits_total,
            bits_by_category: by_category,
            boundary_coordinates: Vec::new(),
            tail_coordinates: Vec::new(),
            draws_attempted: vec![0; d],
        }
    }
}
