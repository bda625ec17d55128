//! Average symbol error probability of a single fading link.
//!
//! Square QAM and PSK use the exact AWGN expressions written as finite
//! integrals over `φ` and averaged through the moment generating function of
//! the fade power. Other sets fall back to the pairwise union bound, averaged
//! the same way.

use crate::channel::Fading;
use crate::constellation::{Constellation, ConstellationKind};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoryMethod {
    Exact,
    UnionBound,
}

impl TheoryMethod {
    pub fn for_set(c: &Constellation) -> Self {
        match c.kind() {
            ConstellationKind::SquareQam | ConstellationKind::Psk => TheoryMethod::Exact,
            ConstellationKind::FivePoint => TheoryMethod::UnionBound,
        }
    }
}

/// `E[exp(−s·γ)]` for the instantaneous SNR `γ = γ̄·|h|²`.
fn mgf(fading: Fading, s: f64, snr: f64) -> f64 {
    match fading {
        Fading::Rayleigh => 1.0 / (1.0 + s * snr),
        Fading::Rician { k } => {
            let d = 1.0 + k + s * snr;
            (1.0 + k) / d * (-k * s * snr / d).exp()
        }
    }
}

/// Composite Simpson over `[0, hi]`; the integrands vanish smoothly at 0.
fn simpson(hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    const N: usize = 2000;
    let h = hi / N as f64;
    let mut acc = f(0.0) + f(hi);
    for i in 1..N {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}

fn craig(fading: Fading, snr: f64, g: f64, hi: f64) -> f64 {
    simpson(hi, |phi| {
        let s2 = phi.sin().powi(2);
        if s2 == 0.0 {
            0.0
        } else {
            mgf(fading, g / s2, snr)
        }
    })
}

/// Average SEP of `c` over one fading link at `snr_db` (`E_s/σ²` with unit
/// average fade power).
pub fn p2p_sep_theoretical(c: &Constellation, snr_db: f64, fading: Fading) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    let m = c.len() as f64;
    let energy = c.average_energy();
    match c.kind() {
        ConstellationKind::SquareQam => {
            let a = 1.0 - 1.0 / m.sqrt();
            let g = 1.5 / (m - 1.0);
            4.0 * a / PI * craig(fading, snr, g, FRAC_PI_2)
                - 4.0 * a * a / PI * craig(fading, snr, g, FRAC_PI_4)
        }
        ConstellationKind::Psk => {
            let g = (PI / m).sin().powi(2);
            craig(fading, snr, g, (m - 1.0) * PI / m) / PI
        }
        ConstellationKind::FivePoint => {
            let pts = c.points();
            let mut total = 0.0;
            for (i, p) in pts.iter().enumerate() {
                for (j, q) in pts.iter().enumerate() {
                    if i != j {
                        let d2 = (p - q).norm_sqr() / energy;
                        total += craig(fading, snr, d2 / 4.0, FRAC_PI_2) / PI;
                    }
                }
            }
            (total / m).min(1.0)
        }
    }
}
