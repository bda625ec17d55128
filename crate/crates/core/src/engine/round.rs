//! One protocol round per scheme.

use super::{EngineError, Scheme};
use crate::channel::{cn, ChannelRealization, Layout, NoiseModel};
use crate::constellation::Constellation;
use crate::decode::{
    ciod_ml_single_symbol, invert, relay_ml_scheme2_conditional, relay_ml_siso, scheme2_received,
    siso_ml, DecodeStats, Side,
};
use crate::netcode::catalog::{CatalogKind, MapCatalog};
use crate::netcode::select::{select_map, SubspaceIndex};
use crate::netcode::{xor_map, NetworkCodeMap};
use crate::stbc::ciod_encode;
use num_complex::Complex64;
use rand::Rng;

/// Error indicators and decomposition counters of one round. Counters are in
/// units of end-node symbol decisions (`decisions` per round).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RoundOutcome {
    pub decisions: u32,
    pub errors: u32,
    /// Decisions whose relay output was wrong.
    pub cluster_errors: u32,
    /// Decisions whose broadcast symbol was misdetected at the end node.
    pub bc_errors: u32,
    /// Broadcast misdetections at decisions whose relay output was right.
    pub bc_errors_given_cluster: u32,
    /// Every relay output of the round was right.
    pub clean_cluster: bool,
    /// The relay detector fell back to exhaustive search.
    pub fallback: bool,
}

/// Everything a scheme needs that does not change between rounds.
#[derive(Debug, Clone)]
pub struct SchemeSetup {
    scheme: Scheme,
    ma_set: Constellation,
    fixed_map: Option<NetworkCodeMap>,
    catalog: Option<MapCatalog>,
    index: Option<SubspaceIndex>,
}

/// Candidate relay output sets for single-antenna maps, smallest first.
pub fn siso_bc_sets(c: &Constellation) -> Result<Vec<Constellation>, EngineError> {
    let mut sets = vec![c.ciod_ready()?, Constellation::by_name("bc5", None)?];
    for m in [16, 64] {
        if m > c.len() {
            sets.push(Constellation::by_name(&format!("{m}qam-rotated"), None)?);
        }
    }
    Ok(sets)
}

/// Output set for two-antenna quadruple maps.
pub fn scheme2_bc_set() -> Result<Constellation, EngineError> {
    Ok(Constellation::by_name("bc5", None)?)
}

/// The catalog a scheme needs, built from scratch.
pub fn build_catalog(
    scheme: Scheme,
    base: &Constellation,
) -> Result<Option<MapCatalog>, EngineError> {
    Ok(match scheme.catalog_kind() {
        Some(CatalogKind::Siso) => Some(MapCatalog::build_siso(
            &scheme.ma_set(base)?,
            &siso_bc_sets(base)?,
        )?),
        Some(CatalogKind::Scheme2) => Some(MapCatalog::build_scheme2(
            &scheme.ma_set(base)?,
            &scheme2_bc_set()?,
        )?),
        None => None,
    })
}

impl SchemeSetup {
    pub fn new(scheme: Scheme, base: &Constellation) -> Result<Self, EngineError> {
        let catalog = build_catalog(scheme, base)?;
        Self::with_catalog(scheme, base, catalog)
    }

    /// Uses a prebuilt catalog, which must match the scheme's kind and
    /// multiple-access set.
    pub fn with_catalog(
        scheme: Scheme,
        base: &Constellation,
        catalog: Option<MapCatalog>,
    ) -> Result<Self, EngineError> {
        let ma_set = scheme.ma_set(base)?;
        match (&catalog, scheme.catalog_kind()) {
            (None, None) => {}
            (Some(cat), Some(kind))
                if cat.kind() == kind && cat.constellation() == &ma_set && !cat.is_empty() => {}
            _ => {
                return Err(EngineError::Config(format!(
                    "catalog does not fit scheme {}",
                    scheme.as_str()
                )))
            }
        }
        let fixed_map = match scheme {
            Scheme::Scheme1Fnc | Scheme::Scheme2Fnc => Some(xor_map(&ma_set.ciod_ready()?)?),
            Scheme::SisoFnc => Some(xor_map(&ma_set)?),
            _ => None,
        };
        let index = match scheme {
            Scheme::Scheme2Anc => catalog.as_ref().map(SubspaceIndex::new),
            _ => None,
        };
        Ok(Self {
            scheme,
            ma_set,
            fixed_map,
            catalog,
            index,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn ma_set(&self) -> &Constellation {
        &self.ma_set
    }

    pub fn catalog(&self) -> Option<&MapCatalog> {
        self.catalog.as_ref()
    }

    pub fn layout(&self) -> Layout {
        self.scheme.layout()
    }

    /// Map used for a channel: the fixed map, or the catalog entry nearest
    /// to the fade.
    pub fn map_for(&self, h: &ChannelRealization) -> &NetworkCodeMap {
        if let Some(m) = &self.fixed_map {
            return m;
        }
        let cat = self
            .catalog
            .as_ref()
            .expect("adaptive scheme without catalog");
        let i = match &self.index {
            Some(idx) => idx.nearest(h.ma_coeffs()),
            None => select_map(h, cat),
        };
        &cat.entries()[i].map
    }

    /// Runs one round with fresh uniform symbols. `noise = None` gives a
    /// noiseless round.
    pub fn run_round<R: Rng + ?Sized>(
        &self,
        h: &ChannelRealization,
        noise: Option<&NoiseModel>,
        rng: &mut R,
    ) -> RoundOutcome {
        let m = self.ma_set.len();
        let a = [rng.random_range(0..m), rng.random_range(0..m)];
        let b = [rng.random_range(0..m), rng.random_range(0..m)];
        self.run_round_with(h, noise, a, b, rng)
    }

    /// Runs one round for given symbols of A and B.
    pub fn run_round_with<R: Rng + ?Sized>(
        &self,
        h: &ChannelRealization,
        noise: Option<&NoiseModel>,
        a: [usize; 2],
        b: [usize; 2],
        rng: &mut R,
    ) -> RoundOutcome {
        let ch = Channel {
            noise,
            es: noise.map_or(1.0, |n| n.es()),
        };
        match self.scheme {
            Scheme::Scheme1Anc | Scheme::Scheme1Fnc => self.round_pair(h, &ch, a, b, true, rng),
            Scheme::SisoAnc | Scheme::SisoFnc => self.round_pair(h, &ch, a, b, false, rng),
            Scheme::Scheme2Fnc => self.round_scheme2_fnc(h, &ch, a, b, rng),
            Scheme::Scheme2Anc => self.round_scheme2_anc(h, &ch, a, b, rng),
            Scheme::P2pSiso => {
                let g = ch.es.sqrt() * h.ma_coeffs()[0];
                let mut out = RoundOutcome {
                    decisions: 2,
                    clean_cluster: true,
                    ..Default::default()
                };
                for x in a {
                    let y = g * self.ma_set.point(x) + ch.z(rng);
                    out.errors += (siso_ml(y, h.ma_coeffs()[0], ch.es, &self.ma_set) != x) as u32;
                }
                out
            }
            Scheme::P2pCiod2x1 => {
                let hh = [h.ma_coeffs()[0], h.ma_coeffs()[1]];
                let y = ciod_rx(
                    &ch,
                    hh,
                    self.ma_set.point(a[0]),
                    self.ma_set.point(a[1]),
                    rng,
                );
                let (x1, x2) = ciod_ml_single_symbol(y, hh, ch.es, &self.ma_set);
                RoundOutcome {
                    decisions: 2,
                    errors: (x1 != a[0]) as u32 + (x2 != a[1]) as u32,
                    clean_cluster: true,
                    ..Default::default()
                }
            }
        }
    }

    /// Single-antenna multiple access with a pair map; broadcast by CIOD
    /// (`ciod = true`) or one antenna.
    fn round_pair<R: Rng + ?Sized>(
        &self,
        h: &ChannelRealization,
        ch: &Channel,
        a: [usize; 2],
        b: [usize; 2],
        ciod: bool,
        rng: &mut R,
    ) -> RoundOutcome {
        let map = self.map_for(h);
        let (ha, hb) = (h.ma_coeffs()[0], h.ma_coeffs()[1]);
        let g = ch.es.sqrt();
        let mut sent = [0usize; 2];
        let mut cluster = [false; 2];
        for i in 0..2 {
            let y = g * (ha * self.ma_set.point(a[i]) + hb * self.ma_set.point(b[i])) + ch.z(rng);
            let (ah, bh) = relay_ml_siso(y, ha, hb, ch.es, &self.ma_set);
            sent[i] = map.output(ah, bh);
            cluster[i] = sent[i] != map.output(a[i], b[i]);
        }
        let out_set = map.output_set();
        let (rx_a, rx_b) = if ciod {
            let (x1, x2) = (out_set.point(sent[0]), out_set.point(sent[1]));
            let ya = ciod_rx(ch, h.bc_a, x1, x2, rng);
            let yb = ciod_rx(ch, h.bc_b, x1, x2, rng);
            let ra = ciod_ml_single_symbol(ya, h.bc_a, ch.es, out_set);
            let rb = ciod_ml_single_symbol(yb, h.bc_b, ch.es, out_set);
            ([ra.0, ra.1], [rb.0, rb.1])
        } else {
            let mut ra = [0; 2];
            let mut rb = [0; 2];
            for i in 0..2 {
                let x = out_set.point(sent[i]);
                let ya = g * h.bc_a[0] * x + ch.z(rng);
                let yb = g * h.bc_b[0] * x + ch.z(rng);
                ra[i] = siso_ml(ya, h.bc_a[0], ch.es, out_set);
                rb[i] = siso_ml(yb, h.bc_b[0], ch.es, out_set);
            }
            (ra, rb)
        };
        let mut out = RoundOutcome {
            decisions: 4,
            clean_cluster: !cluster[0] && !cluster[1],
            ..Default::default()
        };
        for i in 0..2 {
            for (side, own, partner, rx) in [
                (Side::Row, a[i], b[i], rx_a[i]),
                (Side::Col, b[i], a[i], rx_b[i]),
            ] {
                let wrong = !invert(map, side, own, rx).is_ok_and(|p| p == partner);
                tally(&mut out, wrong, cluster[i], rx != sent[i]);
            }
        }
        out
    }

    fn scheme2_relay<R: Rng + ?Sized>(
        &self,
        h: &ChannelRealization,
        ch: &Channel,
        a: [usize; 2],
        b: [usize; 2],
        rng: &mut R,
    ) -> ([usize; 4], bool) {
        let c = &self.ma_set;
        let mut y = scheme2_received(
            h.ma_coeffs(),
            ch.es,
            [c.point(a[0]), c.point(a[1]), c.point(b[0]), c.point(b[1])],
        );
        for v in y.iter_mut() {
            *v += ch.z(rng);
        }
        let mut stats = DecodeStats::default();
        let q = relay_ml_scheme2_conditional(y, h, ch.es, c, &mut stats)
            .expect("multiple-access set is rotated");
        (q, stats.fallback)
    }

    fn round_scheme2_fnc<R: Rng + ?Sized>(
        &self,
        h: &ChannelRealization,
        ch: &Channel,
        a: [usize; 2],
        b: [usize; 2],
        rng: &mut R,
    ) -> RoundOutcome {
        let map = self.fixed_map.as_ref().expect("fixed map");
        let (q, fallback) = self.scheme2_relay(h, ch, a, b, rng);
        let sent = [map.output(q[0], q[2]), map.output(q[1], q[3])];
        let cluster = [
            sent[0] != map.output(a[0], b[0]),
            sent[1] != map.output(a[1], b[1]),
        ];
        let out_set = map.output_set();
        let (x1, x2) = (out_set.point(sent[0]), out_set.point(sent[1]));
        let ya = ciod_rx(ch, h.bc_a, x1, x2, rng);
        let yb = ciod_rx(ch, h.bc_b, x1, x2, rng);
        let ra = ciod_ml_single_symbol(ya, h.bc_a, ch.es, out_set);
        let rb = ciod_ml_single_symbol(yb, h.bc_b, ch.es, out_set);
        let (rx_a, rx_b) = ([ra.0, ra.1], [rb.0, rb.1]);
        let mut out = RoundOutcome {
            decisions: 4,
            clean_cluster: !cluster[0] && !cluster[1],
            fallback,
            ..Default::default()
        };
        for i in 0..2 {
            for (side, own, partner, rx) in [
                (Side::Row, a[i], b[i], rx_a[i]),
                (Side::Col, b[i], a[i], rx_b[i]),
            ] {
                let wrong = !invert(map, side, own, rx).is_ok_and(|p| p == partner);
                tally(&mut out, wrong, cluster[i], rx != sent[i]);
            }
        }
        out
    }

    fn round_scheme2_anc<R: Rng + ?Sized>(
        &self,
        h: &ChannelRealization,
        ch: &Channel,
        a: [usize; 2],
        b: [usize; 2],
        rng: &mut R,
    ) -> RoundOutcome {
        let map = self.map_for(h);
        let m = self.ma_set.len();
        let (q, fallback) = self.scheme2_relay(h, ch, a, b, rng);
        let (row, col) = (a[0] * m + a[1], b[0] * m + b[1]);
        let sent = map.output(q[0] * m + q[1], q[2] * m + q[3]);
        let cluster = sent != map.output(row, col);
        let out_set = map.output_set();
        let (p1, p2) = map.output_pair(sent);
        let (x1, x2) = (out_set.point(p1), out_set.point(p2));
        let ya = ciod_rx(ch, h.bc_a, x1, x2, rng);
        let yb = ciod_rx(ch, h.bc_b, x1, x2, rng);
        let n = out_set.len();
        let ra = ciod_ml_single_symbol(ya, h.bc_a, ch.es, out_set);
        let rb = ciod_ml_single_symbol(yb, h.bc_b, ch.es, out_set);
        let (ka, kb) = (ra.0 * n + ra.1, rb.0 * n + rb.1);
        let mut out = RoundOutcome {
            decisions: 4,
            clean_cluster: !cluster,
            fallback,
            ..Default::default()
        };
        for (side, own, partner, rx) in [(Side::Row, row, col, ka), (Side::Col, col, row, kb)] {
            let est = invert(map, side, own, rx).ok();
            for s in 0..2 {
                let digit = |t: usize| if s == 0 { t / m } else { t % m };
                let wrong = est.is_none_or(|p| digit(p) != digit(partner));
                tally(&mut out, wrong, cluster, rx != sent);
            }
        }
        out
    }
}

fn tally(out: &mut RoundOutcome, wrong: bool, cluster: bool, bc: bool) {
    out.errors += wrong as u32;
    out.cluster_errors += cluster as u32;
    out.bc_errors += bc as u32;
    out.bc_errors_given_cluster += (bc && !cluster) as u32;
}

struct Channel<'a> {
    noise: Option<&'a NoiseModel>,
    es: f64,
}

impl Channel<'_> {
    fn z<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        match self.noise {
            Some(n) => cn(n.sigma2(), rng),
            None => Complex64::new(0.0, 0.0),
        }
    }
}

/// CIOD transmission of `(x1, x2)` from two antennas to one receiver.
fn ciod_rx<R: Rng + ?Sized>(
    ch: &Channel,
    h: [Complex64; 2],
    x1: Complex64,
    x2: Complex64,
    rng: &mut R,
) -> [Complex64; 2] {
    let d = ciod_encode(x1, x2).transmitted();
    let g = ch.es.sqrt();
    [g * h[0] * d[0] + ch.z(rng), g * h[1] * d[1] + ch.z(rng)]
}
