//! Signal sets used by the end nodes and the relay.
//!
//! Every set is normalized to unit average energy. Points are stored in
//! label order: for the power-of-two families the point at index `k` carries
//! the bit label `k`, so a bitwise operation on labels is the same operation
//! on indices. The labeling is Gray per dimension for square QAM and Gray
//! around the circle for PSK.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use thiserror::Error;

/// Rotation that maximizes the CIOD coding gain of square QAM.
pub fn qam_ciod_rotation() -> f64 {
    2f64.atan() / 2.0
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstellationError {
    #[error("constellation size {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("square QAM needs a perfect-square size, got {0}")]
    NotSquare(usize),
    #[error("unknown constellation name `{0}`")]
    UnknownName(String),
    #[error("rotation must be finite, got {0}")]
    BadRotation(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstellationKind {
    SquareQam,
    Psk,
    /// Fixed 5-point relay set: origin plus a scaled, rotated 4-QAM ring.
    FivePoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    name: String,
    kind: ConstellationKind,
    points: Vec<Complex64>,
    labels: Option<Vec<u32>>,
    rotation: f64,
}

/// Coordinate-product-distance summary of a set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpdReport {
    pub cpd: f64,
    pub min_distance: f64,
    pub coding_gain: f64,
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

fn inverse_gray(mut g: usize) -> usize {
    let mut i = 0;
    while g != 0 {
        i ^= g;
        g >>= 1;
    }
    i
}

fn rotate_all(points: &mut [Complex64], angle: f64) {
    if angle != 0.0 {
        let r = Complex64::from_polar(1.0, angle);
        for p in points.iter_mut() {
            *p *= r;
        }
    }
}

impl Constellation {
    /// Builds a Gray-labeled square QAM or PSK set of size `m`, rotated by
    /// `rotation` radians.
    pub fn new(
        kind: ConstellationKind,
        m: usize,
        rotation: f64,
    ) -> Result<Self, ConstellationError> {
        if !rotation.is_finite() {
            return Err(ConstellationError::BadRotation(rotation));
        }
        match kind {
            ConstellationKind::FivePoint => return Ok(Self::five_point(rotation)),
            _ if m < 2 || !m.is_power_of_two() => return Err(ConstellationError::NotPowerOfTwo(m)),
            _ => {}
        }
        let mut points = match kind {
            ConstellationKind::SquareQam => {
                let bits = m.trailing_zeros() as usize;
                if !bits.is_multiple_of(2) {
                    return Err(ConstellationError::NotSquare(m));
                }
                let side = 1usize << (bits / 2);
                let half = bits / 2;
                // average energy of the odd-integer grid is 2(L^2 - 1)/3
                let scale = (2.0 * ((side * side) as f64 - 1.0) / 3.0).sqrt().recip();
                (0..m)
                    .map(|k| {
                        let re = inverse_gray(k >> half) as f64;
                        let im = inverse_gray(k & (side - 1)) as f64;
                        let off = (side - 1) as f64;
                        Complex64::new((2.0 * re - off) * scale, (2.0 * im - off) * scale)
                    })
                    .collect::<Vec<_>>()
            }
            ConstellationKind::Psk => (0..m)
                .map(|k| Complex64::from_polar(1.0, 2.0 * PI * inverse_gray(k) as f64 / m as f64))
                .collect(),
            ConstellationKind::FivePoint => unreachable!(),
        };
        rotate_all(&mut points, rotation);
        let name = match kind {
            ConstellationKind::SquareQam => format!("{m}qam"),
            ConstellationKind::Psk => format!("{m}psk"),
            ConstellationKind::FivePoint => unreachable!(),
        };
        debug_assert!((0..m).all(|k| gray(inverse_gray(k)) == k));
        Ok(Self {
            name,
            kind,
            points,
            labels: Some((0..m as u32).collect()),
            rotation,
        })
    }

    /// `{0} ∪ √(5/4)·e^{j(π/4 + kπ/2)}`, rotated by `rotation`.
    pub fn five_point(rotation: f64) -> Self {
        let radius = (5.0f64 / 4.0).sqrt();
        let mut points = vec![Complex64::new(0.0, 0.0)];
        points.extend(
            (0..4).map(|k| Complex64::from_polar(radius, FRAC_PI_4 + k as f64 * FRAC_PI_2)),
        );
        rotate_all(&mut points, rotation);
        Self {
            name: "bc5".into(),
            kind: ConstellationKind::FivePoint,
            points,
            labels: None,
            rotation,
        }
    }

    /// Resolves a configuration name such as `4qam`, `4qam-rotated`, `8psk`
    /// or `bc5`. `-rotated` applies the CIOD-optimal rotation for the family.
    /// `rotation` overrides the angle entirely when given.
    pub fn by_name(name: &str, rotation: Option<f64>) -> Result<Self, ConstellationError> {
        let lower = name.trim().to_ascii_lowercase();
        let unknown = || ConstellationError::UnknownName(name.to_string());
        let (base, rotated) = match lower.strip_suffix("-rotated") {
            Some(b) => (b, true),
            None => (lower.as_str(), false),
        };
        if base == "bc5" {
            return Ok(Self::five_point(rotation.unwrap_or_else(qam_ciod_rotation)));
        }
        let (digits, kind) = if let Some(d) = base.strip_suffix("qam") {
            (d, ConstellationKind::SquareQam)
        } else if let Some(d) = base.strip_suffix("psk") {
            (d, ConstellationKind::Psk)
        } else {
            return Err(unknown());
        };
        let m: usize = digits.parse().map_err(|_| unknown())?;
        let angle = match (rotation, rotated) {
            (Some(r), _) => r,
            (None, true) => optimal_ciod_rotation(kind, m)?,
            (None, false) => 0.0,
        };
        let mut c = Self::new(kind, m, angle)?;
        if rotated {
            c.name = format!("{}-rotated", c.name);
        }
        Ok(c)
    }

    /// Same points rotated by `angle` on top of the current rotation.
    pub fn rotated(&self, angle: f64) -> Self {
        let mut c = self.clone();
        rotate_all(&mut c.points, angle);
        c.rotation += angle;
        c
    }

    /// The CIOD-optimal rotated version of this set. Sets that already
    /// carry a rotation are returned unchanged.
    pub fn ciod_ready(&self) -> Result<Self, ConstellationError> {
        if self.rotation != 0.0 {
            return Ok(self.clone());
        }
        let angle = match self.kind {
            ConstellationKind::FivePoint => qam_ciod_rotation(),
            k => optimal_ciod_rotation(k, self.len())?,
        };
        let mut c = self.rotated(angle);
        c.name = format!("{}-rotated", self.name);
        Ok(c)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Complex64 {
        self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn bits_per_symbol(&self) -> Option<u32> {
        self.labels
            .as_ref()
            .map(|_| self.points.len().trailing_zeros())
    }

    /// Label of point `i` as a bit string, most significant bit first.
    pub fn label_string(&self, i: usize) -> Option<String> {
        let bits = self.bits_per_symbol()? as usize;
        let l = self.labels.as_ref()?[i];
        Some(format!("{l:0bits$b}"))
    }

    /// Points with the rotation undone.
    pub fn base_points(&self) -> Vec<Complex64> {
        let r = Complex64::from_polar(1.0, -self.rotation);
        self.points.iter().map(|p| p * r).collect()
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    /// Per-dimension amplitude levels of an unrotated square QAM set, sorted
    /// ascending, and for each point the `(in-phase, quadrature)` level index.
    pub fn square_qam_grid(&self) -> Option<(Vec<f64>, Vec<(usize, usize)>)> {
        if self.kind != ConstellationKind::SquareQam {
            return None;
        }
        let base = self.base_points();
        let mut levels: Vec<f64> = base.iter().map(|p| p.re).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
        let find = |v: f64| levels.iter().position(|l| (l - v).abs() < 1e-9);
        let idx = base
            .iter()
            .map(|p| Some((find(p.re)?, find(p.im)?)))
            .collect::<Option<Vec<_>>>()?;
        Some((levels, idx))
    }
}

/// Minimum |ΔI·ΔQ|, minimum Euclidean distance, and the CIOD coding gain.
///
/// The coding gain is four times the smallest `sqrt(det(ΔX·ΔXᴴ))` over
/// non-zero CIOD codeword differences built from the set. For a diagonal
/// CIOD codeword that minimum equals the CPD, so for unit-energy square QAM
/// at the optimal rotation the value is `4d²/√5`.
pub fn cpd_report(c: &Constellation) -> CpdReport {
    let pts = c.points();
    let mut cpd = f64::INFINITY;
    let mut dmin = f64::INFINITY;
    let mut diffs = Vec::with_capacity(pts.len() * pts.len());
    for (i, p) in pts.iter().enumerate() {
        for (k, q) in pts.iter().enumerate() {
            let d = p - q;
            diffs.push(d);
            if i != k {
                cpd = cpd.min((d.re * d.im).abs());
                dmin = dmin.min(d.norm());
            }
        }
    }
    // codeword difference diag(Δ1_I + jΔ2_Q, Δ2_I + jΔ1_Q)
    let mut min_det = f64::INFINITY;
    for d1 in &diffs {
        for d2 in &diffs {
            let a = d1.re * d1.re + d2.im * d2.im;
            let b = d2.re * d2.re + d1.im * d1.im;
            if a == 0.0 && b == 0.0 {
                continue;
            }
            min_det = min_det.min(a * b);
        }
    }
    if pts.len() < 2 {
        cpd = 0.0;
        dmin = 0.0;
        min_det = 0.0;
    }
    CpdReport {
        cpd,
        min_distance: dmin,
        coding_gain: 4.0 * min_det.sqrt(),
    }
}

/// CIOD rotation for a family: the closed form for square QAM, a
/// deterministic grid search maximizing the CPD for PSK.
pub fn optimal_ciod_rotation(kind: ConstellationKind, m: usize) -> Result<f64, ConstellationError> {
    match kind {
        ConstellationKind::SquareQam | ConstellationKind::FivePoint => Ok(qam_ciod_rotation()),
        ConstellationKind::Psk => {
            let base = Constellation::new(kind, m, 0.0)?;
            let span = 2.0 * PI / m as f64;
            let steps = 4096;
            let mut best = (0.0, f64::NEG_INFINITY);
            for s in 1..steps {
                let a = span * s as f64 / steps as f64;
                let cpd = cpd_report(&base.rotated(a)).cpd;
                if cpd > best.1 + 1e-15 {
                    best = (a, cpd);
                }
            }
            Ok(best.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qam4_points_and_gray_labels() {
        let c = Constellation::new(ConstellationKind::SquareQam, 4, 0.0).unwrap();
        let s = 0.5f64.sqrt();
        for p in c.points() {
            assert!((p.re.abs() - s).abs() < 1e-15 && (p.im.abs() - s).abs() < 1e-15);
        }
        // neighbours along an axis differ in exactly one bit
        for i in 0..4 {
            for k in 0..4 {
                let d = (c.point(i) - c.point(k)).norm();
                if (d - 2.0 * s).abs() < 1e-12 {
                    assert_eq!((i ^ k).count_ones(), 1);
                }
            }
        }
        assert_eq!(c.label_string(2).as_deref(), Some("10"));
    }

    #[test]
    fn qam16_gray_neighbors() {
        let c = Constellation::new(ConstellationKind::SquareQam, 16, 0.0).unwrap();
        let d = cpd_report(&c).min_distance;
        for i in 0..16 {
            for k in 0..16 {
                if ((c.point(i) - c.point(k)).norm() - d).abs() < 1e-12 {
                    assert_eq!((i ^ k).count_ones(), 1, "{i} {k}");
                }
            }
        }
    }

    #[test]
    fn psk8_on_unit_circle_at_multiples_of_quarter_pi() {
        let c = Constellation::new(ConstellationKind::Psk, 8, 0.0).unwrap();
        let mut angles: Vec<f64> = c
            .points()
            .iter()
            .map(|p| p.arg().rem_euclid(2.0 * PI))
            .collect();
        angles.sort_by(f64::total_cmp);
        for (k, a) in angles.iter().enumerate() {
            assert!((a - k as f64 * FRAC_PI_4).abs() < 1e-12);
        }
        for p in c.points() {
            assert!((p.norm() - 1.0).abs() < 1e-15);
        }
        for k in 0..8 {
            // adjacent angular neighbours differ in one bit
            let j = c
                .points()
                .iter()
                .position(|p| {
                    (p - c.point(k) * Complex64::from_polar(1.0, FRAC_PI_4)).norm() < 1e-9
                })
                .unwrap();
            assert_eq!((j ^ k).count_ones(), 1);
        }
    }

    #[test]
    fn bad_sizes_are_rejected() {
        assert_eq!(
            Constellation::new(ConstellationKind::SquareQam, 8, 0.0),
            Err(ConstellationError::NotSquare(8))
        );
        assert_eq!(
            Constellation::new(ConstellationKind::Psk, 6, 0.0),
            Err(ConstellationError::NotPowerOfTwo(6))
        );
        assert_eq!(
            Constellation::new(ConstellationKind::Psk, 1, 0.0),
            Err(ConstellationError::NotPowerOfTwo(1))
        );
        assert!(Constellation::by_name("7qam", None).is_err());
        assert!(Constellation::by_name("qam", None).is_err());
        assert!(Constellation::by_name("foo", None).is_err());
    }

    #[test]
    fn names_resolve() {
        let c = Constellation::by_name("4qam-rotated", None).unwrap();
        assert!((c.rotation() - qam_ciod_rotation()).abs() < 1e-15);
        assert_eq!(c.name(), "4qam-rotated");
        let c = Constellation::by_name("8psk", Some(0.1)).unwrap();
        assert_eq!(c.rotation(), 0.1);
        let c = Constellation::by_name("bc5", None).unwrap();
        assert_eq!(c.len(), 5);
        assert!(cpd_report(&c).cpd > 0.0);
    }

    #[test]
    fn five_point_set_has_unit_energy() {
        for r in [0.0, 0.3, qam_ciod_rotation()] {
            assert!((Constellation::five_point(r).average_energy() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn unrotated_qam_has_zero_cpd() {
        for m in [4, 16, 64] {
            let c = Constellation::new(ConstellationKind::SquareQam, m, 0.0).unwrap();
            assert_eq!(cpd_report(&c).cpd, 0.0);
        }
    }

    #[test]
    fn rotated_psk_has_positive_cpd() {
        let c = Constellation::by_name("8psk-rotated", None).unwrap();
        assert!(cpd_report(&c).cpd > 0.01);
    }

    #[test]
    fn square_grid_for_qam_only() {
        let c = Constellation::by_name("16qam-rotated", None).unwrap();
        let (levels, idx) = c.square_qam_grid().unwrap();
        assert_eq!(levels.len(), 4);
        assert_eq!(idx.len(), 16);
        assert!(Constellation::by_name("8psk", None)
            .unwrap()
            .square_qam_grid()
            .is_none());
    }
}
