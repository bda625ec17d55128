//! Picking the catalog map for the current fade.

use super::catalog::{MapCatalog, Target};
use super::singular::Ratio;
use crate::channel::ChannelRealization;
use num_complex::Complex64;

/// Chordal distance on the Riemann sphere.
pub fn chordal_distance(a: Ratio, b: Ratio) -> f64 {
    match (a, b) {
        (Ratio::Infinite, Ratio::Infinite) => 0.0,
        (Ratio::Finite(z), Ratio::Infinite) | (Ratio::Infinite, Ratio::Finite(z)) => {
            2.0 / (1.0 + z.norm_sqr()).sqrt()
        }
        (Ratio::Finite(z), Ratio::Finite(w)) => {
            2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt()
        }
    }
}

/// `h_BR / h_AR` as a point of the extended plane.
pub fn fade_ratio(realization: &ChannelRealization) -> Ratio {
    realization
        .fade_state()
        .map_or(Ratio::Infinite, Ratio::Finite)
}

/// Normals of every subspace of a catalog, grouped by their support and
/// stored column-wise, for fast nearest-subspace lookup.
///
/// Normals are unit vectors, so the squared sine distance of a subspace is
/// the sum of `|<h, n>|²` over its normals divided by `|h|²`; the common
/// denominator is dropped when ranking.
#[derive(Debug, Clone, Default)]
pub struct SubspaceIndex {
    groups: Vec<SupportGroup>,
    normal_count: usize,
    // score slots of each subspace's normals, delimited by `subspace_ends`
    slots: Vec<u32>,
    subspace_ends: Vec<u32>,
}

#[derive(Debug, Clone, Default)]
struct SupportGroup {
    support: Vec<usize>,
    // conjugated entries, one column per support coordinate
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    first_slot: usize,
}

thread_local! {
    static SCRATCH: std::cell::RefCell<[Vec<f64>; 3]> = const { std::cell::RefCell::new([Vec::new(), Vec::new(), Vec::new()]) };
}

impl SubspaceIndex {
    pub fn new(catalog: &MapCatalog) -> Self {
        let mut by_support: Vec<(Vec<usize>, Vec<[Complex64; 4]>)> = Vec::new();
        let mut members: Vec<Vec<(usize, usize)>> = Vec::new();
        for e in catalog.entries() {
            let mut ids = Vec::new();
            if let Target::Subspace(s) = &e.target {
                for n in s.normals() {
                    let support: Vec<usize> = (0..4).filter(|&k| n[k].norm_sqr() > 0.0).collect();
                    let g = by_support
                        .iter()
                        .position(|(sup, _)| *sup == support)
                        .unwrap_or_else(|| {
                            by_support.push((support, Vec::new()));
                            by_support.len() - 1
                        });
                    by_support[g].1.push(*n);
                    ids.push((g, by_support[g].1.len() - 1));
                }
            }
            members.push(ids);
        }
        let mut groups = Vec::with_capacity(by_support.len());
        let mut first_slot = 0;
        for (support, normals) in by_support {
            let col = |k: usize, f: fn(Complex64) -> f64| {
                normals.iter().map(|n| f(n[k].conj())).collect()
            };
            groups.push(SupportGroup {
                re: support.iter().map(|&k| col(k, |z| z.re)).collect(),
                im: support.iter().map(|&k| col(k, |z| z.im)).collect(),
                support,
                first_slot,
            });
            first_slot += normals.len();
        }
        let mut slots = Vec::new();
        let mut subspace_ends = Vec::with_capacity(members.len());
        for ids in members {
            slots.extend(
                ids.into_iter()
                    .map(|(g, k)| (groups[g].first_slot + k) as u32),
            );
            subspace_ends.push(slots.len() as u32);
        }
        Self {
            groups,
            normal_count: first_slot,
            slots,
            subspace_ends,
        }
    }

    /// Entry whose subspace makes the smallest angle with `h`; the lowest
    /// index wins ties.
    pub fn nearest(&self, h: &[Complex64]) -> usize {
        SCRATCH.with(|cell| {
            let [pr, pi, score] = &mut *cell.borrow_mut();
            score.clear();
            score.resize(self.normal_count, 0.0);
            for g in &self.groups {
                let n = g.re.first().map_or(0, Vec::len);
                pr.clear();
                pr.resize(n, 0.0);
                pi.clear();
                pi.resize(n, 0.0);
                for (c, &k) in g.support.iter().enumerate() {
                    let (hr, hi) = (h[k].re, h[k].im);
                    for ((r, i), (vr, vi)) in pr
                        .iter_mut()
                        .zip(pi.iter_mut())
                        .zip(g.re[c].iter().zip(&g.im[c]))
                    {
                        *r += hr * vr - hi * vi;
                        *i += hr * vi + hi * vr;
                    }
                }
                for ((s, r), i) in score[g.first_slot..g.first_slot + n]
                    .iter_mut()
                    .zip(pr.iter())
                    .zip(pi.iter())
                {
                    *s = r * r + i * i;
                }
            }
            let mut best = (0, f64::INFINITY);
            let mut start = 0;
            for (i, &end) in self.subspace_ends.iter().enumerate() {
                let d: f64 = self.slots[start..end as usize]
                    .iter()
                    .map(|&k| score[k as usize])
                    .sum();
                start = end as usize;
                if d < best.1 {
                    best = (i, d);
                }
            }
            best.0
        })
    }
}

/// Index of the catalog entry nearest to the current fade: chordal distance
/// for single-antenna states, principal angle for subspaces. The lowest
/// index wins ties. Panics on an empty catalog.
pub fn select_map(realization: &ChannelRealization, catalog: &MapCatalog) -> usize {
    assert!(!catalog.is_empty(), "select_map on an empty catalog");
    let ratio = fade_ratio(realization);
    let h = realization.ma_coeffs();
    let mut best = (0, f64::INFINITY);
    for (i, e) in catalog.entries().iter().enumerate() {
        let d = match &e.target {
            Target::State(s) => chordal_distance(ratio, s.ratio),
            Target::Subspace(s) => s.distance(h),
        };
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chordal_metric_properties() {
        let z = Ratio::Finite(Complex64::new(0.3, -1.2));
        let w = Ratio::Finite(Complex64::new(-2.0, 0.5));
        assert_eq!(chordal_distance(z, z), 0.0);
        assert_eq!(chordal_distance(Ratio::Infinite, Ratio::Infinite), 0.0);
        assert!((chordal_distance(z, w) - chordal_distance(w, z)).abs() < 1e-15);
        // 0 and ∞ are antipodal
        assert!(
            (chordal_distance(Ratio::Finite(Complex64::new(0.0, 0.0)), Ratio::Infinite) - 2.0)
                .abs()
                < 1e-15
        );
        // large finite values approach ∞
        assert!(chordal_distance(Ratio::Finite(Complex64::new(1e9, 0.0)), Ratio::Infinite) < 1e-8);
    }
}
