//! Fast invariant suite behind `plnc verify`.

use crate::channel::{cn, draw_realization, ChannelRealization, Fading, Layout};
use crate::constellation::{qam_ciod_rotation, Constellation};
use crate::decode::{
    relay_ml_scheme2_conditional_with, relay_ml_scheme2_exhaustive, scheme2_received, DecodeStats,
    QrFactorization, TieRule,
};
use crate::engine::{scheme2_bc_set, siso_bc_sets};
use crate::netcode::{check_exclusive_law, xor_map, MapCatalog, Target};
use crate::stbc::{hurwitz_radon, weight_matrices, WeightMatrixSet};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckResult {
    pub name: &'static str,
    /// `None` on success, otherwise what went wrong.
    pub failure: Option<String>,
}

/// Runs every check; `tie_rule` is passed to the conditional decoder so a
/// deliberately wrong tie-break can be shown to be caught.
pub fn run_checks(tie_rule: TieRule) -> Vec<CheckResult> {
    let c = Constellation::by_name("4qam-rotated", None).expect("built-in set");
    vec![
        CheckResult {
            name: "hurwitz-radon",
            failure: hurwitz_radon_pairs(),
        },
        CheckResult {
            name: "exclusive-law",
            failure: exclusive_law(&c),
        },
        CheckResult {
            name: "oracle-equivalence",
            failure: oracle_equivalence(&c, tie_rule),
        },
        CheckResult {
            name: "r-structure",
            failure: r_structure(),
        },
    ]
}

fn hurwitz_radon_pairs() -> Option<String> {
    let w = weight_matrices();
    WeightMatrixSet::separable_pairs()
        .into_iter()
        .find_map(|(a, b)| match hurwitz_radon(w.get(a), w.get(b)) {
            Ok(true) => None,
            _ => Some(format!("{a:?} and {b:?} are not Hurwitz-Radon orthogonal")),
        })
}

fn exclusive_law(c: &Constellation) -> Option<String> {
    let plain = Constellation::by_name("4qam", None).expect("built-in set");
    let mut maps = vec![("xor".to_string(), xor_map(&plain).ok()?)];
    let siso = MapCatalog::build_siso(&plain, &siso_bc_sets(&plain).ok()?);
    let quad = MapCatalog::build_scheme2(c, &scheme2_bc_set().ok()?);
    for cat in [siso, quad] {
        match cat {
            Ok(cat) => maps.extend(
                cat.entries()
                    .iter()
                    .enumerate()
                    .map(|(i, e)| (format!("catalog entry {i}"), e.map.clone())),
            ),
            Err(e) => return Some(format!("catalog construction failed: {e}")),
        }
    }
    maps.into_iter()
        .find_map(|(name, m)| match check_exclusive_law(&m) {
            Ok(true) => None,
            _ => Some(format!("{name} breaks the exclusive law")),
        })
}

fn oracle_equivalence(c: &Constellation, rule: TieRule) -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let m = c.len();
    let compare = |y, h: &ChannelRealization, what: &str| {
        let mut st = DecodeStats::default();
        let e = relay_ml_scheme2_exhaustive(y, h, 1.0, c, &mut st);
        match relay_ml_scheme2_conditional_with(y, h, 1.0, c, rule, &mut st) {
            Ok(f) if f == e => None,
            Ok(f) => Some(format!("{what}: conditional {f:?} != exhaustive {e:?}")),
            Err(err) => Some(format!("{what}: {err}")),
        }
    };
    for i in 0..1000 {
        let h = draw_realization(Layout::Two, Fading::Rayleigh, &mut rng);
        let idx: [usize; 4] = std::array::from_fn(|_| rng.random_range(0..m));
        let sigma2 = 10f64.powf(-rng.random_range(0.0..30.0) / 10.0);
        let mut y = scheme2_received(h.ma_coeffs(), 1.0, idx.map(|k| c.point(k)));
        for v in y.iter_mut() {
            *v += cn(sigma2, &mut rng);
        }
        if let Some(msg) = compare(y, &h, &format!("random instance {i}")) {
            return Some(msg);
        }
    }
    // noiseless ties: a fade inside a singular subspace makes its witnesses collide
    let quad = MapCatalog::build_scheme2(c, &scheme2_bc_set().ok()?).ok()?;
    let side = m * m;
    for (i, e) in quad.entries().iter().enumerate().step_by(8) {
        let Target::Subspace(s) = &e.target else {
            continue;
        };
        let (b0, b1) = (s.basis()[0], s.basis()[1]);
        let (w0, w1) = (cn(1.0, &mut rng), cn(1.0, &mut rng));
        let hv: Vec<Complex64> = (0..4).map(|k| w0 * b0[k] + w1 * b1[k]).collect();
        let h = ChannelRealization::new(
            &hv,
            [Complex64::new(1.0, 0.0); 2],
            [Complex64::new(1.0, 0.0); 2],
        );
        let (u, _) = s.witnesses[rng.random_range(0..s.witnesses.len())];
        let (row, col) = (u as usize / side, u as usize % side);
        let x = [row / m, row % m, col / m, col % m].map(|k| c.point(k));
        let y = scheme2_received(&hv, 1.0, x);
        if let Some(msg) = compare(y, &h, &format!("tie instance at subspace {i}")) {
            return Some(msg);
        }
    }
    None
}

fn r_structure() -> Option<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    for i in 0..100 {
        let h = draw_realization(Layout::Two, Fading::Rayleigh, &mut rng);
        let qr = QrFactorization::new(h.ma_coeffs(), 1.0, qam_ciod_rotation());
        if qr.max_structural_zero() >= 1e-9 || qr.orthogonality_error() >= 1e-10 {
            return Some(format!(
                "channel {i}: structural zero {:.3e}",
                qr.max_structural_zero()
            ));
        }
    }
    None
}
