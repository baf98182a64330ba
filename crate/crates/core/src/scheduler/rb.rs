//! Chirp-DMA resource blocks: slot offsets in steps of `2 Td` and first-fit
//! selection of consecutive free blocks.

use crate::config::{Rational, SystemConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct RbAllocation {
    /// Start of each block inside the slot, in samples.
    pub offsets: Vec<Rational>,
    pub occupied: Vec<bool>,
}

impl RbAllocation {
    /// All blocks of a slot, initially free.
    pub fn new(cfg: &SystemConfig) -> Self {
        let n = cfg.n_rb();
        Self { offsets: (0..n).map(|m| cfg.rb_offset(m)).collect(), occupied: vec![false; n] }
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn mark(&mut self, blocks: &[usize]) {
        for &b in blocks {
            self.occupied[b] = true;
        }
    }

    /// First run of `m` consecutive free blocks.
    pub fn first_fit(&self, m: usize) -> Option<Vec<usize>> {
        first_fit(&self.occupied, m)
    }
}

/// Lowest-indexed run of `m` consecutive `false` entries.
pub fn first_fit(occupied: &[bool], m: usize) -> Option<Vec<usize>> {
    if m == 0 {
        return Some(Vec::new());
    }
    let mut run = 0;
    for (i, &o) in occupied.iter().enumerate() {
        run = if o { 0 } else { run + 1 };
        if run == m {
            return Some((i + 1 - m..=i).collect());
        }
    }
    None
}

/// Occupancy by thresholding the energy measured in each block.
pub fn detect_occupancy(energy: &[f64], threshold: f64) -> Vec<bool> {
    energy.iter().map(|&e| e > threshold).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_step_two_td() {
        let cfg = SystemConfig::default();
        let rb = RbAllocation::new(&cfg);
        assert_eq!(rb.len(), cfg.n_rb());
        for (m, o) in rb.offsets.iter().enumerate() {
            assert_eq!(*o, cfg.td * 2 * m as i64);
        }
    }

    #[test]
    fn first_fit_cases() {
        assert_eq!(first_fit(&[false; 5], 3), Some(vec![0, 1, 2]));
        assert_eq!(first_fit(&[true, true, false, false, false], 3), Some(vec![2, 3, 4]));
        assert_eq!(first_fit(&[false, true, false, false, true, false], 3), None);
    }
}
