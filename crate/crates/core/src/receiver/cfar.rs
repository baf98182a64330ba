//! Cell-averaging CFAR on power data. Cells near an edge use whatever
//! training cells exist and recompute the scale for that count, so the
//! false-alarm probability holds everywhere for exponential noise. In the
//! one-dimensional detector, zero cells mark excised bins and are left out
//! of the training set.

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfarParams {
    /// Guard cells per side.
    pub guard: usize,
    /// Training cells per side.
    pub train: usize,
    pub pfa: f64,
    /// Exponential cells averaged into every input cell.
    pub looks: usize,
}

impl Default for CfarParams {
    fn default() -> Self {
        Self { guard: 2, train: 8, pfa: 1e-3, looks: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cfar2dParams {
    /// Guard cells per side along (rows, columns).
    pub guard: (usize, usize),
    pub train: (usize, usize),
    pub pfa: f64,
}

impl Default for Cfar2dParams {
    fn default() -> Self {
        Self { guard: (1, 1), train: (3, 3), pfa: 1e-3 }
    }
}

/// Threshold multiplier on the training mean for `count` exponential cells.
pub fn cfar_scale(count: usize, pfa: f64) -> f64 {
    let n = count as f64;
    n * (pfa.powf(-1.0 / n) - 1.0)
}

/// Threshold multiplier when every cell is the mean of `looks` exponential
/// cells. The cell-to-training ratio is then F-distributed with
/// `(2 looks, 2 count looks)` degrees of freedom.
pub fn cfar_scale_looks(count: usize, looks: usize, pfa: f64) -> f64 {
    if looks <= 1 {
        return cfar_scale(count, pfa);
    }
    let dof = 2.0 * looks as f64;
    FisherSnedecor::new(dof, dof * count as f64).map(|f| f.inverse_cdf(1.0 - pfa)).unwrap_or(f64::INFINITY)
}

/// Flags `x[i] > scale * mean(training)`. With `cyclic` the window wraps.
pub fn cfar_1d(x: &[f64], params: &CfarParams, cyclic: bool) -> Vec<bool> {
    let len = x.len() as i64;
    let (g, t) = (params.guard as i64, params.train as i64);
    let scales: Vec<f64> = (0..=2 * params.train).map(|c| cfar_scale_looks(c.max(1), params.looks, params.pfa)).collect();
    (0..len)
        .map(|i| {
            let v = x[i as usize];
            if v <= 0.0 {
                return false;
            }
            let mut sum = 0.0;
            let mut count = 0;
            for d in g + 1..=g + t {
                for j in [i - d, i + d] {
                    let j = if cyclic {
                        if t * 2 + g * 2 + 1 > len {
                            continue;
                        }
                        j.rem_euclid(len)
                    } else if j < 0 || j >= len {
                        continue;
                    } else {
                        j
                    };
                    if x[j as usize] > 0.0 {
                        sum += x[j as usize];
                        count += 1;
                    }
                }
            }
            count > 0 && v > scales[count] * sum / count as f64
        })
        .collect()
}

/// Two-dimensional CFAR with a rectangular ring of training cells. Rows are
/// truncated at the edges; columns wrap when `cyclic_cols` is set.
pub fn cfar_2d(map: &Array2<f64>, params: &Cfar2dParams, cyclic_cols: bool) -> Array2<bool> {
    let (rows, cols) = map.dim();
    let (gr, gc) = (params.guard.0 as i64, params.guard.1 as i64);
    let (tr, tc) = (params.train.0 as i64, params.train.1 as i64);
    let mut mask = Array2::from_elem((rows, cols), false);
    for ((i, j), &v) in map.indexed_iter() {
        if v <= 0.0 {
            continue;
        }
        let mut sum = 0.0;
        let mut count = 0;
        for di in -(gr + tr)..=gr + tr {
            let ii = i as i64 + di;
            if ii < 0 || ii >= rows as i64 {
                continue;
            }
            for dj in -(gc + tc)..=gc + tc {
                if di.abs() <= gr && dj.abs() <= gc {
                    continue;
                }
                let jj = j as i64 + dj;
                let jj = if cyclic_cols {
                    jj.rem_euclid(cols as i64)
                } else if jj < 0 || jj >= cols as i64 {
                    continue;
                } else {
                    jj
                };
                sum += map[[ii as usize, jj as usize]];
                count += 1;
            }
        }
        if count > 0 && v > cfar_scale(count, params.pfa) * sum / count as f64 {
            mask[[i, j]] = true;
        }
    }
    mask
}
