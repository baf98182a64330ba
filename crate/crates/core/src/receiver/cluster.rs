//! Grouping of detections: two cells share a cluster when they are connected
//! through steps of at most `rho_d` range bins and `rho_v` Doppler bins.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterParams {
    pub rho_d: usize,
    pub rho_v: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self { rho_d: 1, rho_v: 1 }
    }
}

/// A detection: `(range bin, Doppler bin, score)`.
pub type Detection = (usize, usize, f64);

#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub members: Vec<Detection>,
    /// Highest-scoring member.
    pub rep: Detection,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Connected components. `doppler_len` makes the Doppler axis cyclic.
/// Clusters are ordered by descending representative score.
pub fn cluster(detections: &[Detection], params: &ClusterParams, doppler_len: Option<usize>) -> Vec<Cluster> {
    let index: HashMap<(usize, usize), usize> = detections.iter().enumerate().map(|(i, d)| ((d.0, d.1), i)).collect();
    let mut parent: Vec<usize> = (0..detections.len()).collect();
    let (rd, rv) = (params.rho_d as i64, params.rho_v as i64);
    for (i, d) in detections.iter().enumerate() {
        for dr in -rd..=rd {
            for dv in -rv..=rv {
                let r = d.0 as i64 + dr;
                let mut v = d.1 as i64 + dv;
                if let Some(len) = doppler_len {
                    v = v.rem_euclid(len as i64);
                }
                if r < 0 || v < 0 {
                    continue;
                }
                if let Some(&j) = index.get(&(r as usize, v as usize)) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<Detection>> = HashMap::new();
    for (i, d) in detections.iter().enumerate() {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(*d);
    }
    let mut out: Vec<Cluster> = groups
        .into_values()
        .map(|mut members| {
            members.sort_by_key(|a| (a.0, a.1));
            let rep = *members.iter().max_by(|a, b| a.2.total_cmp(&b.2).then((b.0, b.1).cmp(&(a.0, a.1)))).unwrap();
            Cluster { members, rep }
        })
        .collect();
    out.sort_by(|a, b| b.rep.2.total_cmp(&a.rep.2).then((a.rep.0, a.rep.1).cmp(&(b.rep.0, b.rep.1))));
    out
}
