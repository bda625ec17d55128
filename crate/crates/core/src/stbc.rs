//! Coordinate interleaved orthogonal design for two transmit antennas, the
//! stacked two-user codeword used in the multiple-access phase, and the
//! weight-matrix algebra behind conditional detection.

use crate::linalg::{CMatrix, DimensionError};
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `diag(x1_I + j·x2_Q, x2_I + j·x1_Q)`; rows are antennas, columns time slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiodCodeword {
    diag: [Complex64; 2],
    source: [Complex64; 2],
}

impl CiodCodeword {
    /// The two interleaved symbols, one per channel use.
    pub fn transmitted(&self) -> [Complex64; 2] {
        self.diag
    }

    pub fn source_symbols(&self) -> [Complex64; 2] {
        self.source
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::from_rows(&[&[self.diag[0], ZERO], &[ZERO, self.diag[1]]])
    }
}

pub fn ciod_encode(x1: Complex64, x2: Complex64) -> CiodCodeword {
    CiodCodeword {
        diag: [Complex64::new(x1.re, x2.im), Complex64::new(x2.re, x1.im)],
        source: [x1, x2],
    }
}

/// Undoes the coordinate interleaving of the codeword's diagonal.
pub fn ciod_decode_symbols(cw: &CiodCodeword) -> (Complex64, Complex64) {
    let [a, b] = cw.diag;
    (Complex64::new(a.re, b.im), Complex64::new(b.re, a.im))
}

/// Vertical stack of node A's and node B's CIOD codewords (4 x 2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeTwoCodeword {
    pub a: CiodCodeword,
    pub b: CiodCodeword,
}

impl SchemeTwoCodeword {
    pub fn matrix(&self) -> CMatrix {
        let [a0, a1] = self.a.diag;
        let [b0, b1] = self.b.diag;
        CMatrix::from_rows(&[&[a0, ZERO], &[ZERO, a1], &[b0, ZERO], &[ZERO, b1]])
    }
}

pub fn scheme2_codeword(
    xa1: Complex64,
    xa2: Complex64,
    xb1: Complex64,
    xb2: Complex64,
) -> SchemeTwoCodeword {
    SchemeTwoCodeword {
        a: ciod_encode(xa1, xa2),
        b: ciod_encode(xb1, xb2),
    }
}

/// Index of each weight matrix in the real coordinate vector
/// `[A1_I, A1_Q, A2_I, A2_Q, B1_I, B1_Q, B2_I, B2_Q]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coord {
    A1I = 0,
    A1Q,
    A2I,
    A2Q,
    B1I,
    B1Q,
    B2I,
    B2Q,
}

impl Coord {
    pub const ALL: [Coord; 8] = [
        Coord::A1I,
        Coord::A1Q,
        Coord::A2I,
        Coord::A2Q,
        Coord::B1I,
        Coord::B1Q,
        Coord::B2I,
        Coord::B2Q,
    ];
}

/// Eight 4x2 matrices with `C(X_A, X_B) = Σ W_k · x_k` over the real
/// coordinates of the four transmitted symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrixSet {
    matrices: [CMatrix; 8],
}

impl WeightMatrixSet {
    pub fn get(&self, c: Coord) -> &CMatrix {
        &self.matrices[c as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = (Coord, &CMatrix)> {
        Coord::ALL.iter().copied().zip(self.matrices.iter())
    }

    /// Linear combination with real coefficients in `Coord` order.
    pub fn combine(&self, coeffs: &[f64; 8]) -> CMatrix {
        let mut out = CMatrix::zeros(4, 2);
        for (w, &c) in self.matrices.iter().zip(coeffs) {
            out = &out + &w.scale(Complex64::new(c, 0.0));
        }
        out
    }

    /// Pairs whose orthogonality makes the A symbols separable once B is fixed.
    pub fn separable_pairs() -> [(Coord, Coord); 8] {
        use Coord::*;
        [
            (A1I, A2I),
            (A1I, A2Q),
            (A1Q, A2I),
            (A1Q, A2Q),
            (B1I, B2I),
            (B1I, B2Q),
            (B1Q, B2I),
            (B1Q, B2Q),
        ]
    }
}

pub fn weight_matrices() -> WeightMatrixSet {
    let one = Complex64::new(1.0, 0.0);
    let j = Complex64::new(0.0, 1.0);
    let unit = |r: usize, c: usize, v: Complex64| {
        let mut m = CMatrix::zeros(4, 2);
        m[(r, c)] = v;
        m
    };
    // x̃1 = x1_I + j x2_Q sits at (0,0) for A and (2,0) for B,
    // x̃2 = x2_I + j x1_Q at (1,1) and (3,1).
    WeightMatrixSet {
        matrices: [
            unit(0, 0, one),
            unit(1, 1, j),
            unit(1, 1, one),
            unit(0, 0, j),
            unit(2, 0, one),
            unit(3, 1, j),
            unit(3, 1, one),
            unit(2, 0, j),
        ],
    }
}

/// `M1·M2ᴴ + M2·M1ᴴ = 0` elementwise within 1e-12.
pub fn hurwitz_radon(m1: &CMatrix, m2: &CMatrix) -> Result<bool, DimensionError> {
    if m1.shape() != m2.shape() {
        return Err(DimensionError {
            left: m1.shape(),
            right: m2.shape(),
        });
    }
    let s = &m1.try_mul(&m2.conj_transpose())? + &m2.try_mul(&m1.conj_transpose())?;
    Ok(s.max_abs() < 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_input_gives_zero_matrix() {
        assert_eq!(ciod_encode(ZERO, ZERO).matrix().max_abs(), 0.0);
        assert_eq!(
            scheme2_codeword(ZERO, ZERO, ZERO, ZERO).matrix().max_abs(),
            0.0
        );
    }

    #[test]
    fn one_and_j() {
        let m = ciod_encode(c(1.0, 0.0), c(0.0, 1.0)).matrix();
        assert_eq!(m[(0, 0)], c(1.0, 1.0));
        assert_eq!(m[(1, 1)], ZERO);
        assert_eq!(m[(0, 1)], ZERO);
        assert_eq!(m[(1, 0)], ZERO);
    }

    #[test]
    fn interleaving_layout() {
        let cw = ciod_encode(c(1.0, 2.0), c(3.0, 4.0));
        assert_eq!(cw.transmitted(), [c(1.0, 4.0), c(3.0, 2.0)]);
        assert_eq!(ciod_decode_symbols(&cw), (c(1.0, 2.0), c(3.0, 4.0)));
    }

    #[test]
    fn single_symbol_in_top_block() {
        let m = scheme2_codeword(c(0.7, -0.2), ZERO, ZERO, ZERO).matrix();
        for r in 0..4 {
            for k in 0..2 {
                let v = m[(r, k)];
                match (r, k) {
                    (0, 0) => assert_eq!(v, c(0.7, 0.0)),
                    (1, 1) => assert_eq!(v, c(0.0, -0.2)),
                    _ => assert_eq!(v, ZERO),
                }
            }
        }
    }

    #[test]
    fn hurwitz_radon_basics() {
        let z = CMatrix::zeros(2, 2);
        let i2 = CMatrix::identity(2);
        assert!(hurwitz_radon(&z, &i2).unwrap());
        assert!(!hurwitz_radon(&i2, &i2).unwrap());
        assert!(hurwitz_radon(&i2, &CMatrix::zeros(3, 2)).is_err());
    }

    #[test]
    fn listed_pairs_are_orthogonal() {
        let w = weight_matrices();
        for (p, q) in WeightMatrixSet::separable_pairs() {
            assert!(hurwitz_radon(w.get(p), w.get(q)).unwrap(), "{p:?} {q:?}");
        }
        assert!(!hurwitz_radon(w.get(Coord::A1I), w.get(Coord::B1I)).unwrap());
        // same-symbol coordinates are not orthogonal to each other in the x basis
        assert!(!hurwitz_radon(w.get(Coord::A1I), w.get(Coord::A1I)).unwrap());
    }
}
