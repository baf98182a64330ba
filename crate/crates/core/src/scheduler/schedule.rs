//! Conventional and pseudo-random TDM-MIMO antenna schedules.
//!
//! A schedule for group `m` lists, for every transmit antenna, the slow-time
//! slots in which it is active. Pseudo-random schedules shuffle the antenna
//! order once per cycle of `L_tx` slots for group 0 and derive the other
//! groups by cyclic shifts, so every cycle forms a Latin rectangle.

use crate::config::SystemConfig;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleMode {
    Conventional,
    PseudoRandom,
}

impl std::str::FromStr for ScheduleMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conventional" => Ok(Self::Conventional),
            "pseudo-random" => Ok(Self::PseudoRandom),
            _ => Err(format!("unknown schedule mode `{s}`")),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("Latin schedules need M <= L_tx, got M = {m}, L_tx = {l_tx}")]
    TooManyGroups { m: usize, l_tx: usize },
    #[error("P = {p} is not divisible by L_tx = {l_tx}")]
    Divisibility { p: usize, l_tx: usize },
}

/// Antenna assignment of one chirp group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatinSchedule {
    pub mode: ScheduleMode,
    pub seed: u64,
    pub group: usize,
    /// `columns[l_tx]` holds the increasing slots of antenna `l_tx`.
    columns: Vec<Vec<usize>>,
    antenna: Vec<usize>,
    stream_index: Vec<usize>,
}

impl LatinSchedule {
    /// Builds a schedule from the antenna active in each slot.
    pub fn from_antennas(mode: ScheduleMode, seed: u64, group: usize, l_tx: usize, antenna: Vec<usize>) -> Self {
        let mut columns = vec![Vec::with_capacity(antenna.len() / l_tx.max(1)); l_tx];
        let mut stream_index = vec![0; antenna.len()];
        for (p, &a) in antenna.iter().enumerate() {
            stream_index[p] = columns[a].len();
            columns[a].push(p);
        }
        Self { mode, seed, group, columns, antenna, stream_index }
    }

    pub fn l_tx(&self) -> usize {
        self.columns.len()
    }

    pub fn p(&self) -> usize {
        self.antenna.len()
    }

    /// Slots of antenna `l_tx` (the column `e_{m,l_tx}`).
    pub fn column(&self, l_tx: usize) -> &[usize] {
        &self.columns[l_tx]
    }

    pub fn columns(&self) -> &[Vec<usize>] {
        &self.columns
    }

    /// Antenna active in slot `p`.
    pub fn antenna_at(&self, p: usize) -> usize {
        self.antenna[p]
    }

    /// Position of slot `p` inside its antenna's stream.
    pub fn stream_index(&self, p: usize) -> usize {
        self.stream_index[p]
    }

    pub fn antennas(&self) -> &[usize] {
        &self.antenna
    }
}

/// One schedule per group.
pub fn generate_schedule(cfg: &SystemConfig, mode: ScheduleMode, seed: u64) -> Result<Vec<LatinSchedule>, ScheduleError> {
    generate(cfg.p, cfg.m, cfg.l_tx(), mode, seed)
}

/// Same as [`generate_schedule`] from bare dimensions.
pub fn generate(p: usize, m: usize, l_tx: usize, mode: ScheduleMode, seed: u64) -> Result<Vec<LatinSchedule>, ScheduleError> {
    if !p.is_multiple_of(l_tx) {
        return Err(ScheduleError::Divisibility { p, l_tx });
    }
    let cycles = p / l_tx;
    let perms: Vec<Vec<usize>> = match mode {
        ScheduleMode::Conventional => vec![(0..l_tx).collect(); cycles],
        ScheduleMode::PseudoRandom => {
            if m > l_tx {
                return Err(ScheduleError::TooManyGroups { m, l_tx });
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..cycles)
                .map(|_| {
                    let mut perm: Vec<usize> = (0..l_tx).collect();
                    perm.shuffle(&mut rng);
                    perm
                })
                .collect()
        }
    };
    Ok((0..m)
        .map(|g| {
            let shift = match mode {
                ScheduleMode::Conventional => 0,
                ScheduleMode::PseudoRandom => g,
            };
            let antenna = (0..p).map(|s| perms[s / l_tx][(s % l_tx + shift) % l_tx]).collect();
            LatinSchedule::from_antennas(mode, seed, g, l_tx, antenna)
        })
        .collect())
}

/// Writes the schedule as CSV: one row per slot, one column per group,
/// values are antenna indices.
pub fn write_schedule_csv<W: Write>(schedules: &[LatinSchedule], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["p".to_string()];
    header.extend((0..schedules.len()).map(|m| format!("m{m}")));
    w.write_record(&header)?;
    let p = schedules.first().map_or(0, |s| s.p());
    for slot in 0..p {
        let mut row = vec![slot.to_string()];
        row.extend(schedules.iter().map(|s| s.antenna_at(slot).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a schedule written by [`write_schedule_csv`].
pub fn read_schedule_csv<R: std::io::Read>(input: R, mode: ScheduleMode, seed: u64) -> csv::Result<Vec<LatinSchedule>> {
    let mut r = csv::Reader::from_reader(input);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        if groups.is_empty() {
            groups = vec![Vec::new(); rec.len().saturating_sub(1)];
        }
        for (g, v) in rec.iter().skip(1).enumerate() {
            let a = v.trim().parse().map_err(|e| csv::Error::from(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
            groups[g].push(a);
        }
    }
    let l_tx = groups.iter().flatten().copied().max().map_or(1, |a| a + 1);
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(g, antenna)| LatinSchedule::from_antennas(mode, seed, g, l_tx, antenna))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_antenna_is_identity() {
        for mode in [ScheduleMode::Conventional, ScheduleMode::PseudoRandom] {
            let s = generate(10, 1, 1, mode, 3).unwrap();
            assert_eq!(s[0].column(0), &(0..10).collect::<Vec<_>>()[..]);
        }
    }

    #[test]
    fn conventional_order() {
        let s = generate(6, 2, 3, ScheduleMode::Conventional, 0).unwrap();
        for g in &s {
            assert_eq!(g.antennas(), &[0, 1, 2, 0, 1, 2]);
        }
    }

    #[test]
    fn stream_index_matches_columns() {
        let s = generate(24, 3, 3, ScheduleMode::PseudoRandom, 9).unwrap();
        for g in &s {
            for l in 0..3 {
                for (i, &p) in g.column(l).iter().enumerate() {
                    assert_eq!(g.stream_index(p), i);
                    assert_eq!(g.antenna_at(p), l);
                }
            }
        }
    }

    #[test]
    fn rejects_too_many_groups() {
        assert_eq!(
            generate(12, 4, 3, ScheduleMode::PseudoRandom, 0),
            Err(ScheduleError::TooManyGroups { m: 4, l_tx: 3 })
        );
    }

    #[test]
    fn csv_round_trip() {
        let s = generate(12, 3, 3, ScheduleMode::PseudoRandom, 5).unwrap();
        let mut buf = Vec::new();
        write_schedule_csv(&s, &mut buf).unwrap();
        let back = read_schedule_csv(&buf[..], ScheduleMode::PseudoRandom, 5).unwrap();
        assert_eq!(back, s);
    }
}
