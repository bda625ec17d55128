use num_complex::Complex64;
use plnc::channel::{draw_realization, ChannelRealization, Fading, Layout};
use plnc::constellation::Constellation;
use plnc::engine::{estimate_sep_with, ExperimentSpec, Scheme, SchemeSetup, StopRule};
use plnc::netcode::adaptive::{removes_state, removes_subspace};
use plnc::netcode::singular::{enumerate_siso_singular_states, Ratio};
use plnc::netcode::{
    check_exclusive_law, chordal_distance, select_map, xor_map, MapCatalog, Target,
};
use plnc::stbc::{ciod_decode_symbols, ciod_encode, scheme2_codeword, weight_matrices};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

const SETS: [&str; 7] = [
    "4qam",
    "16qam",
    "64qam",
    "8psk",
    "4qam-rotated",
    "8psk-rotated",
    "bc5",
];

fn qam4() -> Constellation {
    Constellation::by_name("4qam", None).unwrap()
}

fn setup(scheme: Scheme) -> &'static SchemeSetup {
    static SETUPS: OnceLock<Vec<SchemeSetup>> = OnceLock::new();
    let all = SETUPS.get_or_init(|| {
        Scheme::ALL
            .iter()
            .map(|&s| SchemeSetup::new(s, &qam4()).unwrap())
            .collect()
    });
    all.iter().find(|s| s.scheme() == scheme).unwrap()
}

fn catalog(scheme: Scheme) -> &'static MapCatalog {
    setup(scheme).catalog().unwrap()
}

fn cplx() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, -3.0f64..3.0).prop_map(|(re, im)| Complex64::new(re, im))
}

/// Exclusive law straight from its definition: fixing either argument
/// leaves the map injective in the other.
fn exclusive_law_oracle(m: &plnc::netcode::NetworkCodeMap) -> bool {
    let n = m.side();
    (0..n).all(|r| {
        let row: Vec<_> = (0..n).filter_map(|c| m.get(r, c)).collect();
        let col: Vec<_> = (0..n).filter_map(|c| m.get(c, r)).collect();
        let distinct = |v: &[u16]| {
            let mut s = v.to_vec();
            s.sort_unstable();
            s.dedup();
            s.len() == v.len()
        };
        row.len() == n && col.len() == n && distinct(&row) && distinct(&col)
    })
}

#[test]
fn exclusive_law_on_every_map() {
    // the five-point set has no bit labels, so it has no XOR map
    for name in &SETS[..6] {
        let c = Constellation::by_name(name, None).unwrap();
        let x = xor_map(&c).unwrap();
        assert!(exclusive_law_oracle(&x), "xor over {name}");
        assert!(check_exclusive_law(&x).unwrap());
    }
    for scheme in [Scheme::SisoAnc, Scheme::Scheme1Anc, Scheme::Scheme2Anc] {
        for (i, e) in catalog(scheme).entries().iter().enumerate() {
            assert!(exclusive_law_oracle(&e.map), "{scheme} entry {i}");
            assert!(check_exclusive_law(&e.map).unwrap(), "{scheme} entry {i}");
        }
    }
}

#[test]
fn removal_soundness_on_every_entry() {
    for scheme in [Scheme::SisoAnc, Scheme::Scheme1Anc, Scheme::Scheme2Anc] {
        for (i, e) in catalog(scheme).entries().iter().enumerate() {
            match &e.target {
                Target::State(s) if s.is_removable() => {
                    assert!(removes_state(&e.map, s), "{scheme} entry {i}")
                }
                Target::State(_) => {}
                Target::Subspace(s) => {
                    assert!(removes_subspace(&e.map, s), "{scheme} entry {i}");
                    // the witnesses really collide on the subspace
                    let cells = e.map.cells();
                    assert!(s
                        .witnesses
                        .iter()
                        .all(|&(u, v)| cells[u as usize] == cells[v as usize]));
                }
            }
        }
    }
}

#[test]
fn siso_state_count_regression() {
    // brute force over all pairs of distinct sender pairs
    let c = qam4();
    let p = c.points();
    let mut ratios: Vec<Option<Complex64>> = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for a2 in 0..4 {
                for b2 in 0..4 {
                    if (a, b) == (a2, b2) {
                        continue;
                    }
                    let (da, db) = (p[a] - p[a2], p[b] - p[b2]);
                    let r = if db.norm() < 1e-12 {
                        None
                    } else {
                        Some(-da / db)
                    };
                    let seen = ratios.iter().any(|q| match (q, r) {
                        (None, None) => true,
                        (Some(x), Some(y)) => (x - y).norm() < 1e-9,
                        _ => false,
                    });
                    if !seen {
                        ratios.push(r);
                    }
                }
            }
        }
    }
    assert_eq!(ratios.len(), 14);
    assert_eq!(enumerate_siso_singular_states(&c).len(), ratios.len());
    assert_eq!(catalog(Scheme::SisoAnc).len(), ratios.len());
}

#[test]
fn energy_normalization() {
    for name in SETS {
        let c = Constellation::by_name(name, None).unwrap();
        let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.len() as f64;
        assert!((e - 1.0).abs() < 1e-12, "{name}: {e}");
        // coordinate interleaving keeps the average energy per transmitted symbol
        let mut tx = 0.0;
        for &x1 in c.points() {
            for &x2 in c.points() {
                tx += ciod_encode(x1, x2)
                    .transmitted()
                    .iter()
                    .map(|t| t.norm_sqr())
                    .sum::<f64>();
            }
        }
        let per_symbol = tx / (2 * c.len() * c.len()) as f64;
        assert!((per_symbol - 1.0).abs() < 1e-12, "{name}: {per_symbol}");
    }
}

#[test]
fn reproducible_across_worker_counts() {
    for scheme in [Scheme::Scheme1Anc, Scheme::Scheme2Fnc] {
        let spec = ExperimentSpec {
            scheme,
            constellation: "4qam".into(),
            fading: Fading::Rayleigh,
            snr_db: vec![5.0, 15.0],
            stop: StopRule {
                min_errors: 30,
                max_trials: 40_000,
            },
            seed: 99,
        };
        let one = estimate_sep_with(&spec, setup(scheme), Some(1)).unwrap();
        let three = estimate_sep_with(&spec, setup(scheme), Some(3)).unwrap();
        assert_eq!(one.records(), three.records());
        assert_eq!(one.points, three.points);
    }
}

#[test]
fn pinned_singular_fades_are_harmless_without_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let one = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)];
    for scheme in [Scheme::SisoAnc, Scheme::Scheme1Anc] {
        let s = setup(scheme);
        for e in catalog(scheme).entries() {
            let Target::State(st) = &e.target else {
                unreachable!()
            };
            let Ratio::Finite(z) = st.ratio else { continue };
            if !st.is_removable() {
                continue;
            }
            let h = ChannelRealization::new(
                &[Complex64::new(0.7, -0.2), Complex64::new(0.7, -0.2) * z],
                one,
                one,
            );
            for k in 0..256 {
                let (a, b) = ([k & 3, (k >> 2) & 3], [(k >> 4) & 3, (k >> 6) & 3]);
                let out = s.run_round_with(&h, None, a, b, &mut rng);
                assert_eq!(out.errors, 0, "{scheme} at {} with {a:?} {b:?}", st.ratio);
            }
        }
    }
    let s = setup(Scheme::Scheme2Anc);
    for e in catalog(Scheme::Scheme2Anc).entries().iter().step_by(7) {
        let Target::Subspace(sub) = &e.target else {
            unreachable!()
        };
        let w: Vec<Complex64> = (0..sub.dim())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let hv: Vec<Complex64> = (0..4)
            .map(|k| sub.basis().iter().zip(&w).map(|(b, c)| b[k] * c).sum())
            .collect();
        let h = ChannelRealization::new(&hv, one, one);
        assert!(sub.distance(&hv) < 1e-9);
        for k in 0..256 {
            let (a, b) = ([k & 3, (k >> 2) & 3], [(k >> 4) & 3, (k >> 6) & 3]);
            assert_eq!(s.run_round_with(&h, None, a, b, &mut rng).errors, 0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    #[test]
    fn ciod_round_trip(a in cplx(), b in cplx()) {
        let cw = ciod_encode(a, b);
        prop_assert_eq!(ciod_decode_symbols(&cw), (a, b));
        prop_assert_eq!(cw.source_symbols(), [a, b]);
    }

    #[test]
    fn weight_matrices_rebuild_codeword(x in proptest::array::uniform4(cplx())) {
        let coords = [x[0].re, x[0].im, x[1].re, x[1].im, x[2].re, x[2].im, x[3].re, x[3].im];
        let built = weight_matrices().combine(&coords);
        let direct = scheme2_codeword(x[0], x[1], x[2], x[3]).matrix();
        prop_assert!((&built - &direct).max_abs() < 1e-12);
    }

    #[test]
    fn chordal_distance_is_a_metric(a in cplx(), b in cplx(), c in cplx(), inf in 0usize..3) {
        let r = |z: Complex64, i: usize| if i == inf { Ratio::Infinite } else { Ratio::Finite(z) };
        let (x, y, z) = (r(a, 0), r(b, 1), r(c, 2));
        prop_assert!((chordal_distance(x, y) - chordal_distance(y, x)).abs() < 1e-12);
        prop_assert!(chordal_distance(x, z) <= chordal_distance(x, y) + chordal_distance(y, z) + 1e-12);
        prop_assert!(chordal_distance(x, y) <= 2.0 + 1e-12);
    }

    #[test]
    fn select_map_matches_brute_force(seed in any::<u64>(), two in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (layout, scheme) = if two { (Layout::Two, Scheme::Scheme2Anc) } else { (Layout::One, Scheme::SisoAnc) };
        let h = draw_realization(layout, Fading::Rayleigh, &mut rng);
        let cat = catalog(scheme);
        // distances from first principles: chordal distance of h_BR/h_AR, or
        // the residual of h after projecting onto an orthonormal basis
        let hv = h.ma_coeffs();
        let dist = |t: &Target| match t {
            Target::State(s) => {
                let (ha, hb) = (hv[0], hv[1]);
                match s.ratio {
                    Ratio::Infinite => 2.0 * ha.norm() / (ha.norm_sqr() + hb.norm_sqr()).sqrt(),
                    Ratio::Finite(w) => 2.0 * (hb - w * ha).norm()
                        / ((ha.norm_sqr() + hb.norm_sqr()) * (1.0 + w.norm_sqr())).sqrt(),
                }
            }
            Target::Subspace(s) => {
                let mut res: Vec<Complex64> = hv.to_vec();
                for b in s.basis() {
                    let p: Complex64 = hv.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
                    for k in 0..4 {
                        res[k] -= p * b[k];
                    }
                }
                let hn: f64 = hv.iter().map(|x| x.norm_sqr()).sum();
                (res.iter().map(|x| x.norm_sqr()).sum::<f64>() / hn).sqrt()
            }
        };
        let d: Vec<f64> = cat.entries().iter().map(|e| dist(&e.target)).collect();
        let best = d.iter().cloned().fold(f64::INFINITY, f64::min);
        let chosen = select_map(&h, cat);
        prop_assert!(d[chosen] <= best + 1e-9, "chosen {} at {} vs best {}", chosen, d[chosen], best);
        // the setup's fast index agrees with the plain scan
        prop_assert_eq!(setup(scheme).map_for(&h), &cat.entries()[chosen].map);
    }

    #[test]
    fn error_decomposition_bounds_errors(seed in any::<u64>(), snr in 0.0f64..25.0, idx in 0usize..6) {
        let scheme = [Scheme::Scheme1Anc, Scheme::Scheme1Fnc, Scheme::Scheme2Fnc,
            Scheme::Scheme2Anc, Scheme::SisoFnc, Scheme::SisoAnc][idx];
        let s = setup(scheme);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = plnc::channel::NoiseModel::from_snr_db(snr).unwrap();
        for _ in 0..20 {
            let h = draw_realization(s.layout(), Fading::Rayleigh, &mut rng);
            let o = s.run_round(&h, Some(&noise), &mut rng);
            prop_assert!(o.errors <= o.cluster_errors + o.bc_errors);
            prop_assert!(o.bc_errors_given_cluster <= o.bc_errors);
            prop_assert!(o.errors <= o.decisions);
            if o.clean_cluster {
                prop_assert!(o.errors <= o.bc_errors);
            }
        }
    }
}
