//! Relay network-coding maps.
//!
//! A map is stored as a `side x side` table whose rows are node A's symbol
//! (or symbol pair) and whose columns are node B's. Entries are indices of
//! relay outputs. For `Arity::Pair` an output indexes the output
//! constellation directly; for `Arity::Quadruple` output `k` is the symbol
//! pair `(k / n, k % n)` of an `n`-point output constellation.

pub mod adaptive;
pub mod catalog;
pub mod coloring;
pub mod select;
pub mod singular;

pub use adaptive::{build_adaptive_map_scheme2, build_adaptive_map_siso};
pub use catalog::{CatalogEntry, CatalogKind, MapCatalog, Target};
pub use coloring::{ConflictCertificate, RemovalGraph};
pub use select::{chordal_distance, select_map};
pub use singular::{
    enumerate_scheme2_subspaces, enumerate_siso_singular_states, Ratio, SingularFadeState,
    SingularFadeSubspace,
};

use crate::constellation::Constellation;
use thiserror::Error;

const NO_PREIMAGE: u16 = u16::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetcodeError {
    #[error("map table is incomplete: cell ({row}, {col}) has no output")]
    IncompleteMap { row: usize, col: usize },
    #[error("table has {got} cells, expected {expected}")]
    TableSize { got: usize, expected: usize },
    #[error("output index {index} is out of range for {count} outputs")]
    OutputOutOfRange { index: usize, count: usize },
    #[error("constellation `{0}` has no bit labels")]
    Unlabeled(String),
    #[error("no output set admits completion; greedy coloring needs {required_colors} symbols")]
    MapConstruction { required_colors: usize },
    #[error("greedy completion failed: {0}")]
    Conflict(#[from] ConflictCertificate),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arity {
    /// `(x_A, x_B) -> x_R`
    Pair,
    /// `(x_A1, x_A2, x_B1, x_B2) -> (x_R1, x_R2)`
    Quadruple,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCodeMap {
    arity: Arity,
    symbols: usize,
    side: usize,
    cells: Vec<Option<u16>>,
    output_set: Constellation,
    // (row, output) -> col and (col, output) -> row
    row_inverse: Vec<u16>,
    col_inverse: Vec<u16>,
}

impl NetworkCodeMap {
    /// `symbols` is the sender alphabet size `M`; the table must hold
    /// `side²` cells with `side = M` (pair) or `M²` (quadruple).
    pub fn new(
        arity: Arity,
        symbols: usize,
        cells: Vec<Option<u16>>,
        output_set: Constellation,
    ) -> Result<Self, NetcodeError> {
        let side = match arity {
            Arity::Pair => symbols,
            Arity::Quadruple => symbols * symbols,
        };
        if cells.len() != side * side {
            return Err(NetcodeError::TableSize {
                got: cells.len(),
                expected: side * side,
            });
        }
        let count = match arity {
            Arity::Pair => output_set.len(),
            Arity::Quadruple => output_set.len() * output_set.len(),
        };
        if count >= NO_PREIMAGE as usize {
            return Err(NetcodeError::OutputOutOfRange {
                index: count,
                count: NO_PREIMAGE as usize,
            });
        }
        if let Some(&index) = cells.iter().flatten().find(|&&o| o as usize >= count) {
            return Err(NetcodeError::OutputOutOfRange {
                index: index as usize,
                count,
            });
        }
        let mut row_inverse = vec![NO_PREIMAGE; side * count];
        let mut col_inverse = vec![NO_PREIMAGE; side * count];
        for r in 0..side {
            for c in 0..side {
                if let Some(o) = cells[r * side + c] {
                    let ri = &mut row_inverse[r * count + o as usize];
                    if *ri == NO_PREIMAGE {
                        *ri = c as u16;
                    }
                    let ci = &mut col_inverse[c * count + o as usize];
                    if *ci == NO_PREIMAGE {
                        *ci = r as u16;
                    }
                }
            }
        }
        Ok(Self {
            arity,
            symbols,
            side,
            cells,
            output_set,
            row_inverse,
            col_inverse,
        })
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    /// Sender alphabet size `M`.
    pub fn symbols(&self) -> usize {
        self.symbols
    }

    /// Rows (and columns) of the table.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn output_set(&self) -> &Constellation {
        &self.output_set
    }

    /// Number of addressable outputs (`n` or `n²`).
    pub fn output_count(&self) -> usize {
        match self.arity {
            Arity::Pair => self.output_set.len(),
            Arity::Quadruple => self.output_set.len() * self.output_set.len(),
        }
    }

    pub fn cells(&self) -> &[Option<u16>] {
        &self.cells
    }

    pub fn get(&self, row: usize, col: usize) -> Option<u16> {
        self.cells[row * self.side + col]
    }

    /// Output for a complete map; panics on a missing cell.
    #[inline]
    pub fn output(&self, row: usize, col: usize) -> usize {
        self.cells[row * self.side + col].expect("output() on an incomplete map") as usize
    }

    /// Symbol pair carried by output `k` of a quadruple map.
    #[inline]
    pub fn output_pair(&self, k: usize) -> (usize, usize) {
        let n = self.output_set.len();
        (k / n, k % n)
    }

    /// Node A knows its row; returns the column that produced `output`.
    #[inline]
    pub fn partner_of_row(&self, row: usize, output: usize) -> Option<usize> {
        let v = self.row_inverse[row * self.output_count() + output];
        (v != NO_PREIMAGE).then_some(v as usize)
    }

    /// Node B knows its column; returns the row that produced `output`.
    #[inline]
    pub fn partner_of_col(&self, col: usize, output: usize) -> Option<usize> {
        let v = self.col_inverse[col * self.output_count() + output];
        (v != NO_PREIMAGE).then_some(v as usize)
    }

    /// Number of distinct outputs that appear in the table.
    pub fn distinct_outputs(&self) -> usize {
        let mut seen = vec![false; self.output_count()];
        for o in self.cells.iter().flatten() {
            seen[*o as usize] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }

    pub fn is_total(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }
}

/// Row- and column-injectivity of a complete map.
pub fn check_exclusive_law(m: &NetworkCodeMap) -> Result<bool, NetcodeError> {
    let n = m.side;
    if let Some(i) = m.cells.iter().position(Option::is_none) {
        return Err(NetcodeError::IncompleteMap {
            row: i / n,
            col: i % n,
        });
    }
    let mut seen = vec![usize::MAX; m.output_count()];
    for r in 0..n {
        for c in 0..n {
            let o = m.output(r, c);
            if seen[o] == r {
                return Ok(false);
            }
            seen[o] = r;
        }
    }
    seen.fill(usize::MAX);
    for c in 0..n {
        for r in 0..n {
            let o = m.output(r, c);
            if seen[o] == c {
                return Ok(false);
            }
            seen[o] = c;
        }
    }
    Ok(true)
}

/// Bitwise XOR of the sender labels, read back as a point of `c`.
pub fn xor_map(c: &Constellation) -> Result<NetworkCodeMap, NetcodeError> {
    let labels = c
        .labels()
        .ok_or_else(|| NetcodeError::Unlabeled(c.name().to_string()))?;
    let m = c.len();
    let by_label: std::collections::HashMap<u32, usize> =
        labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    let cells = (0..m * m)
        .map(|i| {
            let l = labels[i / m] ^ labels[i % m];
            Some(by_label[&l] as u16)
        })
        .collect();
    NetworkCodeMap::new(Arity::Pair, m, cells, c.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qam4() -> Constellation {
        Constellation::by_name("4qam", None).unwrap()
    }

    #[test]
    fn xor_satisfies_exclusive_law() {
        for name in ["4qam", "8psk", "16qam"] {
            let c = Constellation::by_name(name, None).unwrap();
            assert!(check_exclusive_law(&xor_map(&c).unwrap()).unwrap());
        }
    }

    #[test]
    fn xor_identities() {
        let c = qam4();
        let m = xor_map(&c).unwrap();
        let zero = c.labels().unwrap().iter().position(|&l| l == 0).unwrap();
        for x in 0..4 {
            assert_eq!(m.output(x, x), zero);
            assert_eq!(m.output(x, zero), x);
        }
    }

    #[test]
    fn constant_map_fails() {
        let m = NetworkCodeMap::new(Arity::Pair, 4, vec![Some(0); 16], qam4()).unwrap();
        assert!(!check_exclusive_law(&m).unwrap());
    }

    #[test]
    fn corrupted_row_fails() {
        let m = xor_map(&qam4()).unwrap();
        let mut cells = m.cells().to_vec();
        cells[1] = cells[0];
        let bad = NetworkCodeMap::new(Arity::Pair, 4, cells, qam4()).unwrap();
        assert!(!check_exclusive_law(&bad).unwrap());
    }

    #[test]
    fn duplicated_column_entry_fails() {
        let m = xor_map(&qam4()).unwrap();
        let mut cells = m.cells().to_vec();
        // row 1, col 0 takes the value of row 0, col 0
        cells[4] = cells[0];
        let bad = NetworkCodeMap::new(Arity::Pair, 4, cells, qam4()).unwrap();
        assert!(!check_exclusive_law(&bad).unwrap());
    }

    #[test]
    fn partial_table_is_an_error() {
        let mut cells = vec![Some(0); 16];
        cells[5] = None;
        let m = NetworkCodeMap::new(Arity::Pair, 4, cells, qam4()).unwrap();
        assert_eq!(
            check_exclusive_law(&m),
            Err(NetcodeError::IncompleteMap { row: 1, col: 1 })
        );
    }

    #[test]
    fn table_validation() {
        assert!(matches!(
            NetworkCodeMap::new(Arity::Pair, 4, vec![Some(0); 15], qam4()),
            Err(NetcodeError::TableSize { .. })
        ));
        assert!(matches!(
            NetworkCodeMap::new(Arity::Pair, 4, vec![Some(4); 16], qam4()),
            Err(NetcodeError::OutputOutOfRange { .. })
        ));
        assert!(matches!(
            xor_map(&Constellation::five_point(0.0)),
            Err(NetcodeError::Unlabeled(_))
        ));
    }

    #[test]
    fn xor_inverse_is_unique() {
        let c = qam4();
        let m = xor_map(&c).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let o = m.output(a, b);
                assert_eq!(m.partner_of_row(a, o), Some(b));
                assert_eq!(m.partner_of_col(b, o), Some(a));
            }
        }
    }
}
