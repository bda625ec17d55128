//! Singular fade states (single-antenna senders) and singular fade
//! subspaces (two-antenna CIOD senders).

use crate::constellation::Constellation;
use crate::stbc::ciod_encode;
use num_complex::Complex64;
use std::collections::HashMap;
use std::fmt;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A point of the extended complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(Complex64),
    Infinite,
}

impl Ratio {
    pub fn is_zero(&self) -> bool {
        matches!(self, Ratio::Finite(z) if *z == ZERO)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(z) => write!(f, "{}{:+}j", z.re, z.im),
            Ratio::Infinite => f.write_str("inf"),
        }
    }
}

/// `(x_A, x_B)` and `(x_A', x_B')` as constellation indices.
pub type SisoWitness = ((usize, usize), (usize, usize));

#[derive(Debug, Clone, PartialEq)]
pub struct SingularFadeState {
    pub ratio: Ratio,
    pub witnesses: Vec<SisoWitness>,
}

impl SingularFadeState {
    /// Finite non-zero states can be removed without breaking the exclusive
    /// law; `0` and `∞` pair symbols that share a row or a column.
    pub fn is_removable(&self) -> bool {
        matches!(self.ratio, Ratio::Finite(z) if z != ZERO)
    }
}

fn quantize(z: Complex64, step: f64) -> (i64, i64) {
    ((z.re / step).round() as i64, (z.im / step).round() as i64)
}

/// All ratios `-Δx_A/Δx_B` over distinct sender pairs, deduplicated within
/// 1e-9, including `0` (`Δx_A = 0`) and `∞` (`Δx_B = 0`). States appear in
/// the order their first witness is met when pairs are scanned
/// lexicographically.
pub fn enumerate_siso_singular_states(c: &Constellation) -> Vec<SingularFadeState> {
    const TOL: f64 = 1e-9;
    let pts = c.points();
    let m = pts.len();
    let mut states: Vec<SingularFadeState> = Vec::new();
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut infinite: Option<usize> = None;
    for xa in 0..m {
        for xb in 0..m {
            for xa2 in 0..m {
                for xb2 in 0..m {
                    if (xa, xb) == (xa2, xb2) {
                        continue;
                    }
                    let w = ((xa, xb), (xa2, xb2));
                    if xb == xb2 {
                        let id = *infinite.get_or_insert_with(|| {
                            states.push(SingularFadeState {
                                ratio: Ratio::Infinite,
                                witnesses: Vec::new(),
                            });
                            states.len() - 1
                        });
                        states[id].witnesses.push(w);
                        continue;
                    }
                    let r = if xa == xa2 {
                        ZERO
                    } else {
                        -(pts[xa] - pts[xa2]) / (pts[xb] - pts[xb2])
                    };
                    let key = quantize(r, 1e-7);
                    let mut found = None;
                    'search: for dx in -1..=1 {
                        for dy in -1..=1 {
                            if let Some(ids) = buckets.get(&(key.0 + dx, key.1 + dy)) {
                                for &id in ids {
                                    if let Ratio::Finite(z) = states[id].ratio {
                                        if (z - r).norm() < TOL {
                                            found = Some(id);
                                            break 'search;
                                        }
                                    }
                                }
                            }
                        }
                    }
                    let id = found.unwrap_or_else(|| {
                        states.push(SingularFadeState {
                            ratio: Ratio::Finite(r),
                            witnesses: Vec::new(),
                        });
                        buckets.entry(key).or_default().push(states.len() - 1);
                        states.len() - 1
                    });
                    states[id].witnesses.push(w);
                }
            }
        }
    }
    states
}

type CVec4 = [Complex64; 4];

fn inner(a: &CVec4, b: &CVec4) -> Complex64 {
    // bᴴa
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

fn norm(a: &CVec4) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn gram_schmidt(seed: &[CVec4], candidates: &[CVec4]) -> Vec<CVec4> {
    let mut out: Vec<CVec4> = seed.to_vec();
    let start = out.len();
    for v in candidates {
        let mut w = *v;
        for q in &out {
            let p = inner(&w, q);
            for i in 0..4 {
                w[i] -= p * q[i];
            }
        }
        let n = norm(&w);
        if n > 1e-10 * norm(v).max(1.0) {
            out.push(w.map(|x| x / n));
        }
    }
    out.split_off(start)
}

/// `{x ∈ ℂ⁴ : xᵀ·[ΔX_A; ΔX_B] = 0}` for a codeword-difference pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularFadeSubspace {
    generators: [CVec4; 2],
    normals: Vec<CVec4>,
    basis: Vec<CVec4>,
    /// Cell pairs `(row·side + col, row'·side + col')` whose difference
    /// generates this subspace; rows index `(x_A1, x_A2)`, columns
    /// `(x_B1, x_B2)`.
    pub witnesses: Vec<(u32, u32)>,
}

impl SingularFadeSubspace {
    /// Builds the subspace annihilating both columns in `generators`.
    pub fn from_generators(generators: [CVec4; 2]) -> Self {
        let conj = generators.map(|g| g.map(|x| x.conj()));
        let normals = gram_schmidt(&[], &conj);
        let unit = |k: usize| {
            let mut e = [ZERO; 4];
            e[k] = Complex64::new(1.0, 0.0);
            e
        };
        let mut all = normals.clone();
        all.extend(gram_schmidt(
            &normals,
            &[unit(0), unit(1), unit(2), unit(3)],
        ));
        let basis = all.split_off(normals.len());
        Self {
            generators,
            normals,
            basis,
            witnesses: Vec::new(),
        }
    }

    /// The columns of `[ΔX_A; ΔX_B]` this subspace was built from.
    pub fn generators(&self) -> &[CVec4; 2] {
        &self.generators
    }

    /// Orthonormal basis of the subspace.
    pub fn basis(&self) -> &[CVec4] {
        &self.basis
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn normals(&self) -> &[CVec4] {
        &self.normals
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Sine of the angle between the fade vector `h` and the subspace.
    pub fn distance(&self, h: &[Complex64]) -> f64 {
        let hn: f64 = h.iter().map(|x| x.norm_sqr()).sum::<f64>();
        if hn == 0.0 {
            return 0.0;
        }
        let mut p = 0.0;
        for n in &self.normals {
            let d: Complex64 = h.iter().zip(n).map(|(x, y)| x * y.conj()).sum();
            p += d.norm_sqr();
        }
        (p / hn).sqrt().min(1.0)
    }

    /// Largest `|xᵀ·col|` over basis vectors `x`.
    pub fn annihilation_residual(&self, col: &CVec4) -> f64 {
        self.basis
            .iter()
            .map(|x| {
                x.iter()
                    .zip(col)
                    .map(|(a, b)| a * b)
                    .sum::<Complex64>()
                    .norm()
            })
            .fold(0.0, f64::max)
    }

    /// Upper bound on the sine of the largest principal angle between two
    /// subspaces of equal dimension; `1.0` when the dimensions differ.
    pub fn principal_gap(&self, other: &Self) -> f64 {
        if self.dim() != other.dim() {
            return 1.0;
        }
        let mut total = 0.0;
        for n in &self.normals {
            let mut w = *n;
            for q in &other.normals {
                let p = inner(&w, q);
                for i in 0..4 {
                    w[i] -= p * q[i];
                }
            }
            total += norm(&w).powi(2);
        }
        total.sqrt()
    }

    fn projector_key(&self) -> Vec<i64> {
        let mut key = Vec::with_capacity(32);
        for r in 0..4 {
            for c in 0..4 {
                let v: Complex64 = self.normals.iter().map(|n| n[r] * n[c].conj()).sum();
                let (a, b) = quantize(v, 1e-5);
                key.push(a);
                key.push(b);
            }
        }
        key
    }
}

/// Columns of `[ΔX_A; ΔX_B]` for symbol differences of the two nodes.
pub fn difference_columns(da: [Complex64; 2], db: [Complex64; 2]) -> [CVec4; 2] {
    let a = ciod_encode(da[0], da[1]).transmitted();
    let b = ciod_encode(db[0], db[1]).transmitted();
    [[a[0], ZERO, b[0], ZERO], [ZERO, a[1], ZERO, b[1]]]
}

/// Singular fade subspaces of the stacked CIOD codeword over `c`.
///
/// Only removable subspaces are returned: pairs with `ΔX_A = 0` or
/// `ΔX_B = 0` are skipped, since merging them would put two outputs of the
/// same row or column together. Subspaces are deduplicated when their
/// principal gap is below 1e-7.
pub fn enumerate_scheme2_subspaces(c: &Constellation) -> Vec<SingularFadeSubspace> {
    const SAME: f64 = 1e-7;
    let pts = c.points();
    let m = pts.len();
    let mut diffs: Vec<Complex64> = Vec::new();
    let mut diff_idx = vec![0usize; m * m];
    for i in 0..m {
        for k in 0..m {
            let d = pts[i] - pts[k];
            let id = diffs
                .iter()
                .position(|e| (e - d).norm() < 1e-12)
                .unwrap_or_else(|| {
                    diffs.push(d);
                    diffs.len() - 1
                });
            diff_idx[i * m + k] = id;
        }
    }
    let zero = diff_idx[0];
    let nd = diffs.len();
    let mut subspaces: Vec<SingularFadeSubspace> = Vec::new();
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut combo_sub = vec![usize::MAX; nd.pow(4)];
    for (combo, slot) in combo_sub.iter_mut().enumerate() {
        let (a1, a2, b1, b2) = (
            combo / (nd * nd * nd),
            (combo / (nd * nd)) % nd,
            (combo / nd) % nd,
            combo % nd,
        );
        if (a1 == zero && a2 == zero) || (b1 == zero && b2 == zero) {
            continue;
        }
        let cand = SingularFadeSubspace::from_generators(difference_columns(
            [diffs[a1], diffs[a2]],
            [diffs[b1], diffs[b2]],
        ));
        let key = cand.projector_key();
        let bucket = buckets.entry(key).or_default();
        let id = match bucket
            .iter()
            .find(|&&id| subspaces[id].principal_gap(&cand) < SAME)
        {
            Some(&id) => id,
            None => {
                subspaces.push(cand);
                bucket.push(subspaces.len() - 1);
                subspaces.len() - 1
            }
        };
        *slot = id;
    }

    let side = m * m;
    for ra in 0..side {
        for ra2 in 0..side {
            if ra == ra2 {
                continue;
            }
            let (da1, da2) = (
                diff_idx[(ra / m) * m + ra2 / m],
                diff_idx[(ra % m) * m + ra2 % m],
            );
            for cb in 0..side {
                for cb2 in 0..side {
                    if cb == cb2 {
                        continue;
                    }
                    let (db1, db2) = (
                        diff_idx[(cb / m) * m + cb2 / m],
                        diff_idx[(cb % m) * m + cb2 % m],
                    );
                    let combo = ((da1 * nd + da2) * nd + db1) * nd + db2;
                    let id = combo_sub[combo];
                    subspaces[id]
                        .witnesses
                        .push(((ra * side + cb) as u32, (ra2 * side + cb2) as u32));
                }
            }
        }
    }
    subspaces
}

/// Columns of `[ΔX_A; ΔX_B]` for a witness cell pair of a `side x side`
/// quadruple table over `c`.
pub fn witness_columns(c: &Constellation, pair: (u32, u32)) -> [CVec4; 2] {
    let m = c.len();
    let side = m * m;
    let split = |cell: u32| {
        let cell = cell as usize;
        let (row, col) = (cell / side, cell % side);
        (
            [c.point(row / m), c.point(row % m)],
            [c.point(col / m), c.point(col % m)],
        )
    };
    let (a, b) = split(pair.0);
    let (a2, b2) = split(pair.1);
    difference_columns([a[0] - a2[0], a[1] - a2[1]], [b[0] - b2[0], b[1] - b2[1]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn siso_states_include_conventional_ones() {
        for name in ["4qam", "8psk"] {
            let c = Constellation::by_name(name, None).unwrap();
            let states = enumerate_siso_singular_states(&c);
            assert!(states.iter().any(|s| s.ratio == Ratio::Infinite));
            assert!(states.iter().any(|s| s.ratio.is_zero()));
            assert!(states
                .iter()
                .any(|s| matches!(s.ratio, Ratio::Finite(z) if (z + 1.0).norm() < 1e-9)));
        }
    }

    #[test]
    fn siso_witnesses_satisfy_ratio() {
        let c = Constellation::by_name("4qam", None).unwrap();
        let p = c.points();
        for s in enumerate_siso_singular_states(&c) {
            for &((a, b), (a2, b2)) in &s.witnesses {
                let (da, db) = (p[a] - p[a2], p[b] - p[b2]);
                match s.ratio {
                    Ratio::Finite(r) => assert!((da + r * db).norm() < 1e-9),
                    Ratio::Infinite => assert_eq!(db, ZERO),
                }
            }
        }
    }

    #[test]
    fn subspace_geometry() {
        let one = Complex64::new(1.0, 0.0);
        let s = SingularFadeSubspace::from_generators([
            [one, ZERO, -one, ZERO],
            [ZERO, Complex64::new(0.0, 1.0), ZERO, one],
        ]);
        assert_eq!(s.dim(), 2);
        assert_eq!(s.normals().len(), 2);
        // h_B1 = h_A1 and h_B2 = -j h_A2... check a member
        let h = [one, one, one, Complex64::new(0.0, -1.0)];
        assert!(s.distance(&h) < 1e-12);
        assert!(s.distance(&[one, ZERO, ZERO, ZERO]) > 0.5);
        for g in s.generators() {
            assert!(s.annihilation_residual(g) < 1e-12);
        }
        assert!(s.principal_gap(&s.clone()) < 1e-12);
    }
}
