use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Band {
    pub id: usize,
    pub prb_count: usize,
}

/// Ordered bands whose PRBs are concatenated into one global index space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpectrumPlan {
    bands: Vec<Band>,
    /// `offsets[w]` is the global index of band `w`'s first PRB; one extra
    /// trailing entry holds the total.
    offsets: Vec<usize>,
}

impl SpectrumPlan {
    /// Band ids must equal their position in the list.
    pub fn new(bands: Vec<Band>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(bands.len() + 1);
        let mut acc = 0;
        for (pos, band) in bands.iter().enumerate() {
            if band.id != pos {
                return invalid(format!("band at position {pos} has id {}", band.id));
            }
            if band.prb_count == 0 {
                return invalid(format!("band {} has no PRBs", band.id));
            }
            offsets.push(acc);
            acc += band.prb_count;
        }
        offsets.push(acc);
        Ok(Self { bands, offsets })
    }

    pub fn uniform(num_bands: usize, prbs_per_band: usize) -> Result<Self> {
        Self::new(
            (0..num_bands)
                .map(|id| Band { id, prb_count: prbs_per_band })
                .collect(),
        )
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn num_bands(&self) -> usize {
        self.bands.len()
    }

    pub fn total_prbs(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn band_range(&self, band: usize) -> Range<usize> {
        self.offsets[band]..self.offsets[band + 1]
    }

    pub fn band_of(&self, prb: usize) -> Option<usize> {
        if prb >= self.total_prbs() {
            return None;
        }
        // offsets is sorted; find the last offset <= prb
        Some(self.offsets.partition_point(|&o| o <= prb) - 1)
    }

    /// Adjacency of two PRBs: `next == prb + 1` inside one band.
    pub fn adjacent(&self, prb: usize, next: usize) -> bool {
        next == prb + 1
            && match (self.band_of(prb), self.band_of(next)) {
                (Some(a), Some(b)) => a == b,
                _ => false,
            }
    }
}
