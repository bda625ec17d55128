//! Map catalogs and their text format.
//!
//! A catalog file is line oriented; tokens are separated by single spaces
//! and floats use the shortest representation that reads back to the same
//! value.
//!
//! ```text
//! plnc-catalog 1
//! kind <siso|scheme2>
//! constellation <name> <rotation>
//! entries <n>
//! entry <i>
//! target ratio <re> <im>          (single-antenna state)
//! target ratio inf
//! target subspace <16 floats>     (two generator columns, re/im interleaved)
//! colors <k>
//! output <name> <rotation>
//! witnesses <count> <w>...        (a.b-a2.b2 for states, u-v cell pairs for subspaces)
//! table <side>
//! <side rows of side output indices, `-` for an empty cell>
//! end
//! ```
//!
//! `entry ... end` repeats `n` times.

use super::adaptive::{build_adaptive_map_scheme2, build_adaptive_map_siso};
use super::singular::{
    enumerate_scheme2_subspaces, enumerate_siso_singular_states, Ratio, SingularFadeState,
    SingularFadeSubspace,
};
use super::{Arity, NetcodeError, NetworkCodeMap};
use crate::constellation::Constellation;
use num_complex::Complex64;
use std::fmt::Write as _;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CatalogKind {
    Siso,
    Scheme2,
}

impl CatalogKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CatalogKind::Siso => "siso",
            CatalogKind::Scheme2 => "scheme2",
        }
    }
}

impl FromStr for CatalogKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "siso" => Ok(CatalogKind::Siso),
            "scheme2" => Ok(CatalogKind::Scheme2),
            other => Err(format!("unknown catalog kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    State(SingularFadeState),
    Subspace(SingularFadeSubspace),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub target: Target,
    pub map: NetworkCodeMap,
    /// Outputs the greedy completion needed.
    pub colors: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapCatalog {
    kind: CatalogKind,
    constellation: Constellation,
    entries: Vec<CatalogEntry>,
}

impl MapCatalog {
    pub fn new(
        kind: CatalogKind,
        constellation: Constellation,
        entries: Vec<CatalogEntry>,
    ) -> Self {
        Self {
            kind,
            constellation,
            entries,
        }
    }

    /// One map per singular fade state of `c`, including `0` and `∞`.
    pub fn build_siso(c: &Constellation, bc_sets: &[Constellation]) -> Result<Self, NetcodeError> {
        let entries = enumerate_siso_singular_states(c)
            .into_iter()
            .map(|s| {
                let a = build_adaptive_map_siso(c, &s, bc_sets)?;
                Ok(CatalogEntry {
                    target: Target::State(s),
                    map: a.map,
                    colors: a.colors,
                })
            })
            .collect::<Result<Vec<_>, NetcodeError>>()?;
        Ok(Self::new(CatalogKind::Siso, c.clone(), entries))
    }

    /// One quadruple map per removable singular fade subspace of `c`.
    pub fn build_scheme2(c: &Constellation, bc_set: &Constellation) -> Result<Self, NetcodeError> {
        let entries = enumerate_scheme2_subspaces(c)
            .into_iter()
            .map(|s| {
                let a = build_adaptive_map_scheme2(c, &s, bc_set)?;
                Ok(CatalogEntry {
                    target: Target::Subspace(s),
                    map: a.map,
                    colors: a.colors,
                })
            })
            .collect::<Result<Vec<_>, NetcodeError>>()?;
        Ok(Self::new(CatalogKind::Scheme2, c.clone(), entries))
    }

    pub fn kind(&self) -> CatalogKind {
        self.kind
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Smallest and largest greedy color counts.
    pub fn color_range(&self) -> Option<(usize, usize)> {
        let it = self.entries.iter().map(|e| e.colors);
        Some((it.clone().min()?, it.max()?))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.constellation;
        let _ = writeln!(s, "plnc-catalog 1");
        let _ = writeln!(s, "kind {}", self.kind.as_str());
        let _ = writeln!(s, "constellation {} {}", c.name(), c.rotation());
        let _ = writeln!(s, "entries {}", self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            let _ = writeln!(s, "entry {i}");
            match &e.target {
                Target::State(st) => match st.ratio {
                    Ratio::Finite(z) => {
                        let _ = writeln!(s, "target ratio {} {}", z.re, z.im);
                    }
                    Ratio::Infinite => s.push_str("target ratio inf\n"),
                },
                Target::Subspace(sub) => {
                    s.push_str("target subspace");
                    for g in sub.generators() {
                        for z in g {
                            let _ = write!(s, " {} {}", z.re, z.im);
                        }
                    }
                    s.push('\n');
                }
            }
            let _ = writeln!(s, "colors {}", e.colors);
            let out = e.map.output_set();
            let _ = writeln!(s, "output {} {}", out.name(), out.rotation());
            match &e.target {
                Target::State(st) => {
                    let _ = write!(s, "witnesses {}", st.witnesses.len());
                    for ((a, b), (a2, b2)) in &st.witnesses {
                        let _ = write!(s, " {a}.{b}-{a2}.{b2}");
                    }
                }
                Target::Subspace(sub) => {
                    let _ = write!(s, "witnesses {}", sub.witnesses.len());
                    for (u, v) in &sub.witnesses {
                        let _ = write!(s, " {u}-{v}");
                    }
                }
            }
            s.push('\n');
            let side = e.map.side();
            let _ = writeln!(s, "table {side}");
            for r in 0..side {
                let row: Vec<String> = (0..side)
                    .map(|c| {
                        e.map
                            .get(r, c)
                            .map_or_else(|| "-".to_string(), |o| o.to_string())
                    })
                    .collect();
                s.push_str(&row.join(" "));
                s.push('\n');
            }
            s.push_str("end\n");
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self, CatalogParseError> {
        Parser::new(text).catalog()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("catalog line {line}: {message}")]
pub struct CatalogParseError {
    pub line: usize,
    pub message: String,
}

struct Parser<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
    line: usize,
}

const MAX_SIDE: usize = 4096;

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
            line: 0,
        }
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, CatalogParseError> {
        Err(CatalogParseError {
            line: self.line,
            message: message.into(),
        })
    }

    fn next_line(&mut self) -> Result<&'a str, CatalogParseError> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => {
                self.line += 1;
                self.err("unexpected end of input")
            }
        }
    }

    /// Next line split into tokens, checking the leading keyword.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>, CatalogParseError> {
        let l = self.next_line()?;
        let mut toks = l.split(' ');
        match toks.next() {
            Some(k) if k == key => Ok(toks.collect()),
            _ => self.err(format!("expected `{key}`")),
        }
    }

    fn num<T: FromStr>(&self, tok: Option<&&str>, what: &str) -> Result<T, CatalogParseError> {
        match tok.and_then(|t| t.parse().ok()) {
            Some(v) => Ok(v),
            None => self.err(format!("bad {what}")),
        }
    }

    fn float(&self, tok: Option<&&str>, what: &str) -> Result<f64, CatalogParseError> {
        let v: f64 = self.num(tok, what)?;
        if !v.is_finite() {
            return self.err(format!("non-finite {what}"));
        }
        Ok(v)
    }

    fn constellation(&self, toks: &[&str]) -> Result<Constellation, CatalogParseError> {
        if toks.len() != 2 {
            return self.err("expected `<name> <rotation>`");
        }
        let rot = self.float(toks.get(1), "rotation")?;
        Constellation::by_name(toks[0], Some(rot)).or_else(|e| self.err(e.to_string()))
    }

    fn catalog(&mut self) -> Result<MapCatalog, CatalogParseError> {
        let head = self.keyed("plnc-catalog")?;
        if head != ["1"] {
            return self.err("unsupported catalog version");
        }
        let kind_toks = self.keyed("kind")?;
        let kind = match kind_toks.as_slice() {
            [k] => k.parse::<CatalogKind>().or_else(|e| self.err(e))?,
            _ => return self.err("expected one kind"),
        };
        let ctoks = self.keyed("constellation")?;
        let constellation = self.constellation(&ctoks)?;
        let m = constellation.len();
        let n: usize = {
            let t = self.keyed("entries")?;
            if t.len() != 1 {
                return self.err("expected entry count");
            }
            self.num(t.first(), "entry count")?
        };
        let side = match kind {
            CatalogKind::Siso => m,
            CatalogKind::Scheme2 => m * m,
        };
        if side > MAX_SIDE {
            return self.err("table too large");
        }
        let mut entries = Vec::new();
        for i in 0..n {
            let t = self.keyed("entry")?;
            if t.len() != 1 || self.num::<usize>(t.first(), "entry index")? != i {
                return self.err(format!("expected `entry {i}`"));
            }
            let target_toks = self.keyed("target")?;
            let colors_toks = self.keyed("colors")?;
            if colors_toks.len() != 1 {
                return self.err("expected one color count");
            }
            let colors: usize = self.num(colors_toks.first(), "color count")?;
            let out_toks = self.keyed("output")?;
            let output = self.constellation(&out_toks)?;
            let wt = self.keyed("witnesses")?;
            let count: usize = self.num(wt.first(), "witness count")?;
            if wt.len() != count + 1 {
                return self.err("witness count does not match");
            }
            let target = match (kind, target_toks.first().copied()) {
                (CatalogKind::Siso, Some("ratio")) => {
                    let ratio = match &target_toks[1..] {
                        ["inf"] => Ratio::Infinite,
                        [re, im] => Ratio::Finite(Complex64::new(
                            self.float(Some(re), "ratio")?,
                            self.float(Some(im), "ratio")?,
                        )),
                        _ => return self.err("bad ratio"),
                    };
                    let mut witnesses = Vec::with_capacity(count);
                    for w in &wt[1..] {
                        witnesses.push(self.siso_witness(w, m)?);
                    }
                    Target::State(SingularFadeState { ratio, witnesses })
                }
                (CatalogKind::Scheme2, Some("subspace")) => {
                    if target_toks.len() != 17 {
                        return self.err("subspace needs 16 floats");
                    }
                    let mut g = [[Complex64::new(0.0, 0.0); 4]; 2];
                    for k in 0..8 {
                        let re = self.float(target_toks.get(1 + 2 * k), "generator")?;
                        let im = self.float(target_toks.get(2 + 2 * k), "generator")?;
                        g[k / 4][k % 4] = Complex64::new(re, im);
                    }
                    let mut sub = SingularFadeSubspace::from_generators(g);
                    let cells = (side * side) as u32;
                    for w in &wt[1..] {
                        let (u, v) = w
                            .split_once('-')
                            .map_or((None, None), |(u, v)| (Some(u), Some(v)));
                        let u: u32 = self.num(u.as_ref(), "witness")?;
                        let v: u32 = self.num(v.as_ref(), "witness")?;
                        if u >= cells || v >= cells {
                            return self.err("witness cell out of range");
                        }
                        sub.witnesses.push((u, v));
                    }
                    Target::Subspace(sub)
                }
                _ => return self.err("target does not match catalog kind"),
            };
            let tt = self.keyed("table")?;
            if tt.len() != 1 || self.num::<usize>(tt.first(), "table side")? != side {
                return self.err(format!("expected `table {side}`"));
            }
            let mut cells = Vec::with_capacity(side * side);
            for _ in 0..side {
                let l = self.next_line()?;
                let row: Vec<&str> = l.split(' ').collect();
                if row.len() != side {
                    return self.err(format!("table row needs {side} entries"));
                }
                for tok in row {
                    cells.push(if tok == "-" {
                        None
                    } else {
                        Some(self.num::<u16>(Some(&tok), "table entry")?)
                    });
                }
            }
            if self.next_line()? != "end" {
                return self.err("expected `end`");
            }
            let arity = match kind {
                CatalogKind::Siso => Arity::Pair,
                CatalogKind::Scheme2 => Arity::Quadruple,
            };
            let map = NetworkCodeMap::new(arity, m, cells, output)
                .or_else(|e| self.err(e.to_string()))?;
            entries.push(CatalogEntry {
                target,
                map,
                colors,
            });
        }
        if let Some((i, l)) = self.lines.peek() {
            if !l.trim().is_empty() {
                self.line = i + 1;
                return self.err("trailing content");
            }
        }
        Ok(MapCatalog::new(kind, constellation, entries))
    }

    fn siso_witness(
        &self,
        tok: &str,
        m: usize,
    ) -> Result<((usize, usize), (usize, usize)), CatalogParseError> {
        let parse_pair = |s: &str| -> Option<(usize, usize)> {
            let (a, b) = s.split_once('.')?;
            Some((a.parse().ok()?, b.parse().ok()?))
        };
        let pair = tok
            .split_once('-')
            .and_then(|(l, r)| Some((parse_pair(l)?, parse_pair(r)?)));
        match pair {
            Some(((a, b), (a2, b2))) if a < m && b < m && a2 < m && b2 < m => {
                Ok(((a, b), (a2, b2)))
            }
            _ => self.err(format!("bad witness `{tok}`")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn siso_catalog() -> MapCatalog {
        let c = Constellation::by_name("4qam", None).unwrap();
        let bc = vec![
            Constellation::by_name("4qam-rotated", None).unwrap(),
            Constellation::by_name("bc5", None).unwrap(),
            Constellation::by_name("16qam-rotated", None).unwrap(),
        ];
        MapCatalog::build_siso(&c, &bc).unwrap()
    }

    #[test]
    fn siso_round_trip() {
        let cat = siso_catalog();
        let text = cat.to_text();
        let back = MapCatalog::parse_text(&text).unwrap();
        assert_eq!(back, cat);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_garbage() {
        assert!(MapCatalog::parse_text("").is_err());
        assert!(MapCatalog::parse_text("plnc-catalog 2\n").is_err());
        let text = siso_catalog().to_text();
        let truncated = &text[..text.len() / 2];
        assert!(MapCatalog::parse_text(truncated).is_err());
        let bad = text.replacen("kind siso", "kind scheme2", 1);
        assert!(MapCatalog::parse_text(&bad).is_err());
        let extra = format!("{text}junk\n");
        let err = MapCatalog::parse_text(&extra).unwrap_err();
        assert_eq!(err.message, "trailing content");
    }
}
