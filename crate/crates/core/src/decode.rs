//! Relay and end-node detectors.
//!
//! Every detector breaks ties by the lexicographic order of the symbol
//! indices it returns. Two metrics count as tied when they differ by less
//! than `1e-9` relative (plus a tiny absolute floor for noiseless input), so
//! detectors that accumulate rounding differently still agree.

use crate::channel::ChannelRealization;
use crate::constellation::{Constellation, ConstellationKind};
use crate::linalg::householder_qr;
use crate::netcode::NetworkCodeMap;
use num_complex::Complex64;
use thiserror::Error;

mod theory;

pub use theory::{p2p_sep_theoretical, TheoryMethod};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Lexicographically first minimizer.
    #[default]
    First,
    /// Lexicographically last minimizer. Only used to check that the
    /// verification suite notices a decoder that disagrees on ties.
    Last,
}

#[inline]
fn tied(m: f64, best: f64) -> bool {
    best.is_finite() && (m - best).abs() <= 1e-9 * best.abs().max(m.abs()) + 1e-20
}

/// Whether candidate `(m, key)` replaces the incumbent `(best, best_key)`.
#[inline]
fn improves<K: Ord>(m: f64, key: K, best: f64, best_key: K, rule: TieRule) -> bool {
    if tied(m, best) {
        match rule {
            TieRule::First => key < best_key,
            TieRule::Last => key > best_key,
        }
    } else {
        m < best
    }
}

/// Joint decision of the multiple-access phase of the two-antenna scheme.
pub type Quad = [usize; 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DecodeStats {
    /// Metric evaluations spent by the decoder.
    pub metric_evals: usize,
    /// The conditional decoder met a rank-deficient channel and fell back
    /// to exhaustive search.
    pub fallback: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("relay symbol {output} has no preimage for own symbol {own}")]
    NoPreimage { own: usize, output: usize },
    #[error("decoder needs a set with non-zero coordinate product distance, got `{0}`")]
    ZeroCpd(String),
}

/// `argmin |y − √E_s(h_AR x_A + h_BR x_B)|²` over `S²`.
pub fn relay_ml_siso(
    y: Complex64,
    h_ar: Complex64,
    h_br: Complex64,
    es: f64,
    c: &Constellation,
) -> (usize, usize) {
    let g = es.sqrt();
    let pts = c.points();
    let mut best = (f64::INFINITY, (0, 0));
    let ya: Vec<Complex64> = pts.iter().map(|&a| y - g * h_ar * a).collect();
    for (a, &ra) in ya.iter().enumerate() {
        for (b, &xb) in pts.iter().enumerate() {
            let m = (ra - g * h_br * xb).norm_sqr();
            if improves(m, (a, b), best.0, best.1, TieRule::First) {
                best = (m, (a, b));
            }
        }
    }
    best.1
}

/// Complex channel gains seen by each interleaved real coordinate of the
/// stacked two-user codeword: slot and gain for `[A1_I, A1_Q, A2_I, A2_Q,
/// B1_I, B1_Q, B2_I, B2_Q]`.
fn coordinate_gains(h: &[Complex64], g: f64) -> [(usize, Complex64); 8] {
    let j = Complex64::new(0.0, 1.0);
    let (ha1, ha2, hb1, hb2) = (h[0] * g, h[1] * g, h[2] * g, h[3] * g);
    [
        (0, ha1),
        (1, j * ha2),
        (1, ha2),
        (0, j * ha1),
        (0, hb1),
        (1, j * hb2),
        (1, hb2),
        (0, j * hb1),
    ]
}

/// Noiseless received pair for a quadruple of points.
pub fn scheme2_received(h: &[Complex64], es: f64, x: [Complex64; 4]) -> [Complex64; 2] {
    let coords = [
        x[0].re, x[0].im, x[1].re, x[1].im, x[2].re, x[2].im, x[3].re, x[3].im,
    ];
    let mut y = [Complex64::new(0.0, 0.0); 2];
    for (k, (slot, gain)) in coordinate_gains(h, es.sqrt()).into_iter().enumerate() {
        y[slot] += gain * coords[k];
    }
    y
}

/// Exhaustive joint ML over `S⁴` for the two-antenna multiple-access phase.
pub fn relay_ml_scheme2_exhaustive(
    y: [Complex64; 2],
    h: &ChannelRealization,
    es: f64,
    c: &Constellation,
    stats: &mut DecodeStats,
) -> Quad {
    let h = h.ma_coeffs();
    let g = es.sqrt();
    let pts = c.points();
    let m = pts.len();
    // slot 1 carries A1_I, A2_Q, B1_I, B2_Q; slot 2 carries A2_I, A1_Q, B2_I, B1_Q
    let s1a: Vec<Complex64> = (0..m * m)
        .map(|k| g * h[0] * Complex64::new(pts[k / m].re, pts[k % m].im))
        .collect();
    let s2a: Vec<Complex64> = (0..m * m)
        .map(|k| g * h[1] * Complex64::new(pts[k % m].re, pts[k / m].im))
        .collect();
    let s1b: Vec<Complex64> = (0..m * m)
        .map(|k| g * h[2] * Complex64::new(pts[k / m].re, pts[k % m].im))
        .collect();
    let s2b: Vec<Complex64> = (0..m * m)
        .map(|k| g * h[3] * Complex64::new(pts[k % m].re, pts[k / m].im))
        .collect();
    let mut best = (f64::INFINITY, [0; 4]);
    for ka in 0..m * m {
        let (r1, r2) = (y[0] - s1a[ka], y[1] - s2a[ka]);
        for kb in 0..m * m {
            let metric = (r1 - s1b[kb]).norm_sqr() + (r2 - s2b[kb]).norm_sqr();
            let key = [ka / m, ka % m, kb / m, kb % m];
            if improves(metric, key, best.0, best.1, TieRule::First) {
                best = (metric, key);
            }
        }
    }
    stats.metric_evals += m.pow(4);
    best.1
}

/// QR factorization of the real-valued equivalent channel `H̃ = H_eq·V` with
/// columns ordered `[A1_I, A1_Q, A2_I, A2_Q, B1_I, B1_Q, B2_I, B2_Q]` in the
/// unrotated symbol coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrFactorization {
    pub q: [[f64; 4]; 4],
    pub r: [[f64; 8]; 4],
}

impl QrFactorization {
    /// Entries forced to zero: the coupling between the two symbols of node
    /// A in the first two rows, and the strict lower triangle of `R₁`.
    pub const STRUCTURAL_ZEROS: [(usize, usize); 10] = [
        (0, 2),
        (0, 3),
        (1, 2),
        (1, 3),
        (1, 0),
        (2, 0),
        (2, 1),
        (3, 0),
        (3, 1),
        (3, 2),
    ];

    pub fn new(h: &[Complex64], es: f64, rotation: f64) -> Self {
        let ht = equivalent_real_channel(h, es, rotation);
        let (q, r) = householder_qr(&ht);
        Self { q, r }
    }

    pub fn max_structural_zero(&self) -> f64 {
        Self::STRUCTURAL_ZEROS
            .iter()
            .map(|&(i, j)| self.r[i][j].abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|qᵀq − I|` entry.
    pub fn orthogonality_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let d: f64 = (0..4).map(|k| self.q[k][a] * self.q[k][b]).sum();
                worst = worst.max((d - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }

    /// `qᵀ·ỹ` for a received pair.
    pub fn rotate(&self, y: [Complex64; 2]) -> [f64; 4] {
        let yr = [y[0].re, y[0].im, y[1].re, y[1].im];
        let mut z = [0.0; 4];
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = (0..4).map(|k| self.q[k][i] * yr[k]).sum();
        }
        z
    }
}

/// `[Re y1, Im y1, Re y2, Im y2] = H̃·s̃` for unrotated symbol coordinates.
pub fn equivalent_real_channel(h: &[Complex64], es: f64, rotation: f64) -> [[f64; 8]; 4] {
    let mut heq = [[0.0; 8]; 4];
    for (k, (slot, gain)) in coordinate_gains(h, es.sqrt()).into_iter().enumerate() {
        heq[2 * slot][k] = gain.re;
        heq[2 * slot + 1][k] = gain.im;
    }
    // x = e^{jθ}s per symbol: x_I = c s_I − s s_Q, x_Q = s s_I + c s_Q
    let (sn, cs) = rotation.sin_cos();
    let mut ht = [[0.0; 8]; 4];
    for row in 0..4 {
        for sym in 0..4 {
            let (xi, xq) = (heq[row][2 * sym], heq[row][2 * sym + 1]);
            ht[row][2 * sym] = cs * xi + sn * xq;
            ht[row][2 * sym + 1] = -sn * xi + cs * xq;
        }
    }
    ht
}

/// Conditional ML: fixes node B's pair, then decodes node A's two symbols
/// independently from the decoupled rows of `R`. For square QAM the
/// quadrature level of each symbol is fixed as well and the in-phase level
/// is sliced, so only `2M²√M` metrics are evaluated; other sets use `2M³`.
///
/// Returns the same decision as [`relay_ml_scheme2_exhaustive`]. A
/// rank-deficient channel falls back to exhaustive search and sets
/// `stats.fallback`.
pub fn relay_ml_scheme2_conditional(
    y: [Complex64; 2],
    h: &ChannelRealization,
    es: f64,
    c: &Constellation,
    stats: &mut DecodeStats,
) -> Result<Quad, DecodeError> {
    relay_ml_scheme2_conditional_with(y, h, es, c, TieRule::First, stats)
}

pub fn relay_ml_scheme2_conditional_with(
    y: [Complex64; 2],
    h: &ChannelRealization,
    es: f64,
    c: &Constellation,
    rule: TieRule,
    stats: &mut DecodeStats,
) -> Result<Quad, DecodeError> {
    if c.rotation() == 0.0 && c.kind() != ConstellationKind::FivePoint {
        return Err(DecodeError::ZeroCpd(c.name().to_string()));
    }
    let qr = QrFactorization::new(h.ma_coeffs(), es, c.rotation());
    let r = &qr.r;
    let scale = r.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if (0..4).any(|i| r[i][i].abs() <= 1e-12 * scale) || scale == 0.0 {
        stats.fallback = true;
        return Ok(relay_ml_scheme2_exhaustive(y, h, es, c, stats));
    }
    let z = qr.rotate(y);
    let base = c.base_points();
    let m = base.len();
    let grid = c.square_qam_grid().map(|(levels, idx)| {
        let l = levels.len();
        let mut point_of = vec![0usize; l * l];
        for (p, &(i, q)) in idx.iter().enumerate() {
            point_of[i * l + q] = p;
        }
        (levels, point_of)
    });

    let mut best = (f64::INFINITY, [0usize; 4]);
    for b1 in 0..m {
        for b2 in 0..m {
            let sb = [base[b1].re, base[b1].im, base[b2].re, base[b2].im];
            let mut w = z;
            for (i, wi) in w.iter_mut().enumerate() {
                *wi -= (0..4).map(|k| r[i][4 + k] * sb[k]).sum::<f64>();
            }
            let (a1, m1) = decode_block(&w[0..2], r, 0, &base, grid.as_ref(), rule, stats);
            let (a2, m2) = decode_block(&w[2..4], r, 2, &base, grid.as_ref(), rule, stats);
            let key = [a1, a2, b1, b2];
            if improves(m1 + m2, key, best.0, best.1, rule) {
                best = (m1 + m2, key);
            }
        }
    }
    Ok(best.1)
}

/// Minimizes `(w0 − r00 s_I − r01 s_Q)² + (w1 − r11 s_Q)²` over the set,
/// with `r` read at offset `o`.
fn decode_block(
    w: &[f64],
    r: &[[f64; 8]; 4],
    o: usize,
    base: &[Complex64],
    grid: Option<&(Vec<f64>, Vec<usize>)>,
    rule: TieRule,
    stats: &mut DecodeStats,
) -> (usize, f64) {
    let (r00, r01, r11) = (r[o][o], r[o][o + 1], r[o + 1][o + 1]);
    let mut best = (0usize, f64::INFINITY);
    match grid {
        Some((levels, point_of)) => {
            let l = levels.len();
            for (qi, &sq) in levels.iter().enumerate() {
                let e1 = w[1] - r11 * sq;
                let t = w[0] - r01 * sq;
                // slice the in-phase level; equal distances go to the lower point index
                let mut pick = (usize::MAX, f64::INFINITY);
                for (ii, &si) in levels.iter().enumerate() {
                    let d = (t - r00 * si).powi(2);
                    let p = point_of[ii * l + qi];
                    if improves(d, p, pick.1, pick.0, rule) {
                        pick = (p, d);
                    }
                }
                stats.metric_evals += 1;
                let metric = pick.1 + e1 * e1;
                if improves(metric, pick.0, best.1, best.0, rule) {
                    best = (pick.0, metric);
                }
            }
        }
        None => {
            for (p, s) in base.iter().enumerate() {
                let e0 = w[0] - r00 * s.re - r01 * s.im;
                let e1 = w[1] - r11 * s.im;
                stats.metric_evals += 1;
                let metric = e0 * e0 + e1 * e1;
                if improves(metric, p, best.1, best.0, rule) {
                    best = (p, metric);
                }
            }
        }
    }
    (best.0, best.1)
}

/// Single-symbol ML for a two-antenna CIOD transmission of `(x1, x2)`
/// received as `y_k = √E_s·h_k·d_k + z_k`. The metric separates into one
/// term per source symbol, so each is decoded on its own.
pub fn ciod_ml_single_symbol(
    y: [Complex64; 2],
    h: [Complex64; 2],
    es: f64,
    c: &Constellation,
) -> (usize, usize) {
    let g = es.sqrt();
    let (g1, g2) = (g * h[0], g * h[1]);
    let j = Complex64::new(0.0, 1.0);
    let mut best1 = (0, f64::INFINITY);
    let mut best2 = (0, f64::INFINITY);
    for (i, x) in c.points().iter().enumerate() {
        let f1 = (y[0] - g1 * x.re).norm_sqr() + (y[1] - j * g2 * x.im).norm_sqr();
        let f2 = (y[1] - g2 * x.re).norm_sqr() + (y[0] - j * g1 * x.im).norm_sqr();
        if improves(f1, i, best1.1, best1.0, TieRule::First) {
            best1 = (i, f1);
        }
        if improves(f2, i, best2.1, best2.0, TieRule::First) {
            best2 = (i, f2);
        }
    }
    (best1.0, best2.0)
}

/// Exhaustive pair search over `S'²` for the same CIOD transmission.
pub fn ciod_ml_joint(
    y: [Complex64; 2],
    h: [Complex64; 2],
    es: f64,
    c: &Constellation,
) -> (usize, usize) {
    let g = es.sqrt();
    let pts = c.points();
    let mut best = (f64::INFINITY, (0, 0));
    for (a, xa) in pts.iter().enumerate() {
        for (b, xb) in pts.iter().enumerate() {
            let d0 = Complex64::new(xa.re, xb.im);
            let d1 = Complex64::new(xb.re, xa.im);
            let m = (y[0] - g * h[0] * d0).norm_sqr() + (y[1] - g * h[1] * d1).norm_sqr();
            if improves(m, (a, b), best.0, best.1, TieRule::First) {
                best = (m, (a, b));
            }
        }
    }
    best.1
}

/// Single-antenna ML over `c`.
pub fn siso_ml(y: Complex64, h: Complex64, es: f64, c: &Constellation) -> usize {
    let gh = es.sqrt() * h;
    let mut best = (0, f64::INFINITY);
    for (i, x) in c.points().iter().enumerate() {
        let m = (y - gh * x).norm_sqr();
        if improves(m, i, best.1, best.0, TieRule::First) {
            best = (i, m);
        }
    }
    best.0
}

/// Which side of the map an end node sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Node A knows the row.
    Row,
    /// Node B knows the column.
    Col,
}

/// Decodes a pair-map CIOD broadcast `(x_R1, x_R2)` and inverts the map for
/// each slot using the node's own symbols.
pub fn endnode_decode_ciod(
    y: [Complex64; 2],
    h: [Complex64; 2],
    es: f64,
    own: [usize; 2],
    side: Side,
    map: &NetworkCodeMap,
) -> Result<[usize; 2], DecodeError> {
    let (r1, r2) = ciod_ml_single_symbol(y, h, es, map.output_set());
    Ok([
        invert(map, side, own[0], r1)?,
        invert(map, side, own[1], r2)?,
    ])
}

/// Decodes a quadruple-map CIOD broadcast and inverts it; `own` is the
/// node's symbol pair and the result is the partner's pair.
pub fn endnode_decode_ciod_quad(
    y: [Complex64; 2],
    h: [Complex64; 2],
    es: f64,
    own: [usize; 2],
    side: Side,
    map: &NetworkCodeMap,
) -> Result<[usize; 2], DecodeError> {
    let (r1, r2) = ciod_ml_single_symbol(y, h, es, map.output_set());
    let k = r1 * map.output_set().len() + r2;
    let m = map.symbols();
    let partner = invert(map, side, own[0] * m + own[1], k)?;
    Ok([partner / m, partner % m])
}

/// Partner symbol (or tuple index) for a decoded relay output.
pub fn invert(
    map: &NetworkCodeMap,
    side: Side,
    own: usize,
    output: usize,
) -> Result<usize, DecodeError> {
    let p = match side {
        Side::Row => map.partner_of_row(own, output),
        Side::Col => map.partner_of_col(own, output),
    };
    p.ok_or(DecodeError::NoPreimage { own, output })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{cn, draw_realization, Fading, Layout};
    use crate::stbc::ciod_encode;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rot4() -> Constellation {
        Constellation::by_name("4qam-rotated", None).unwrap()
    }

    #[test]
    fn siso_noiseless_recovery() {
        let c = Constellation::by_name("4qam", None).unwrap();
        let (ha, hb) = (Complex64::new(0.9, 0.2), Complex64::new(-0.3, 1.1));
        for a in 0..4 {
            for b in 0..4 {
                let y = ha * c.point(a) + hb * c.point(b);
                assert_eq!(relay_ml_siso(y, ha, hb, 1.0, &c), (a, b));
            }
        }
    }

    #[test]
    fn siso_tie_goes_to_first_pair() {
        let c = Constellation::by_name("4qam", None).unwrap();
        // h_BR = h_AR: (a, b) and (b, a) collide
        let h = Complex64::new(1.0, 0.0);
        let y = h * c.point(3) + h * c.point(0);
        assert_eq!(relay_ml_siso(y, h, h, 1.0, &c), (0, 3));
    }

    #[test]
    fn exhaustive_counts_m4() {
        let c = rot4();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let h = draw_realization(Layout::Two, Fading::Rayleigh, &mut rng);
        let x = [c.point(1), c.point(2), c.point(3), c.point(0)];
        let y = scheme2_received(h.ma_coeffs(), 1.0, x);
        let mut st = DecodeStats::default();
        assert_eq!(
            relay_ml_scheme2_exhaustive(y, &h, 1.0, &c, &mut st),
            [1, 2, 3, 0]
        );
        assert_eq!(st.metric_evals, 256);
    }

    #[test]
    fn conditional_matches_exhaustive_and_budget() {
        let c = rot4();
        let psk = Constellation::by_name("8psk-rotated", None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for set in [&c, &psk] {
            let m = set.len();
            for _ in 0..300 {
                let h = draw_realization(Layout::Two, Fading::Rayleigh, &mut rng);
                let idx: [usize; 4] = std::array::from_fn(|_| rng.random_range(0..m));
                let mut y = scheme2_received(h.ma_coeffs(), 1.0, idx.map(|i| set.point(i)));
                let sigma2 = 10f64.powf(-rng.random_range(0.0..30.0) / 10.0);
                for v in y.iter_mut() {
                    *v += cn(sigma2, &mut rng);
                }
                let mut se = DecodeStats::default();
                let mut sc = DecodeStats::default();
                let e = relay_ml_scheme2_exhaustive(y, &h, 1.0, set, &mut se);
                let f = relay_ml_scheme2_conditional(y, &h, 1.0, set, &mut sc).unwrap();
                assert_eq!(e, f);
                let budget = if set.kind() == ConstellationKind::SquareQam {
                    2 * m * m * 2
                } else {
                    2 * m * m * m
                };
                assert!(sc.metric_evals <= budget && !sc.fallback);
            }
        }
    }

    #[test]
    fn r_structure_and_orthogonality() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let h = draw_realization(Layout::Two, Fading::Rayleigh, &mut rng);
            let qr = QrFactorization::new(
                h.ma_coeffs(),
                1.0,
                crate::constellation::qam_ciod_rotation(),
            );
            assert!(qr.max_structural_zero() < 1e-9);
            assert!(qr.orthogonality_error() < 1e-10);
            assert!(qr.r[0][4].abs() > 1e-6);
        }
    }

    #[test]
    fn zero_channel_falls_back() {
        let c = rot4();
        let z = Complex64::new(0.0, 0.0);
        let h = ChannelRealization::new(
            &[z, z, Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)],
            [z; 2],
            [z; 2],
        );
        let mut st = DecodeStats::default();
        let y = scheme2_received(
            h.ma_coeffs(),
            1.0,
            [c.point(0), c.point(0), c.point(2), c.point(1)],
        );
        let d = relay_ml_scheme2_conditional(y, &h, 1.0, &c, &mut st).unwrap();
        assert!(st.fallback);
        assert_eq!(d, [0, 0, 2, 1]);
    }

    #[test]
    fn unrotated_set_is_rejected() {
        let c = Constellation::by_name("4qam", None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = draw_realization(Layout::Two, Fading::Rayleigh, &mut rng);
        let r = relay_ml_scheme2_conditional(
            [Complex64::new(0.0, 0.0); 2],
            &h,
            1.0,
            &c,
            &mut DecodeStats::default(),
        );
        assert!(matches!(r, Err(DecodeError::ZeroCpd(_))));
    }

    #[test]
    fn single_symbol_equals_joint() {
        let bc = Constellation::by_name("bc5", None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let h = [cn(1.0, &mut rng), cn(1.0, &mut rng)];
            let (a, b) = (rng.random_range(0..5), rng.random_range(0..5));
            let d = ciod_encode(bc.point(a), bc.point(b)).transmitted();
            let y = [
                h[0] * d[0] + cn(0.3, &mut rng),
                h[1] * d[1] + cn(0.3, &mut rng),
            ];
            assert_eq!(
                ciod_ml_single_symbol(y, h, 1.0, &bc),
                ciod_ml_joint(y, h, 1.0, &bc)
            );
        }
    }
}
