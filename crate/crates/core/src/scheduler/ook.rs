//! On-off keying used for link set-up: a 1 is a transmitted slot, a 0 is a
//! silent one.

pub fn ook_encode(bits: &[bool]) -> Vec<bool> {
    bits.to_vec()
}

/// Decides each slot by comparing its received energy with `threshold`.
pub fn ook_detect(energy: &[f64], threshold: f64) -> Vec<bool> {
    assert!(threshold > 0.0, "OOK threshold must be positive");
    energy.iter().map(|&e| e > threshold).collect()
}

/// Packs `value` into `width` bits, most significant first.
pub fn word_bits(value: u64, width: usize) -> Vec<bool> {
    (0..width).rev().map(|i| (value >> i) & 1 == 1).collect()
}

pub fn bits_word(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
}
