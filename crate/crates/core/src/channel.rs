//! Quasi-static flat fading and additive noise for every link of a round.

use crate::linalg::{CMatrix, DimensionError};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("Rician factor must be finite and non-negative, got {0}")]
    BadRicianFactor(f64),
    #[error("noise variance and energy must be positive (sigma2 = {sigma2}, es = {es})")]
    BadNoise { sigma2: f64, es: f64 },
    #[error(transparent)]
    Dimension(#[from] DimensionError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    Rayleigh,
    Rician { k: f64 },
}

impl Fading {
    pub fn rician(k: f64) -> Result<Self, ChannelError> {
        if !k.is_finite() || k < 0.0 {
            return Err(ChannelError::BadRicianFactor(k));
        }
        Ok(Fading::Rician { k })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Fading::Rayleigh => "rayleigh",
            Fading::Rician { .. } => "rician",
        }
    }

    pub fn k_factor(&self) -> f64 {
        match *self {
            Fading::Rayleigh => 0.0,
            Fading::Rician { k } => k,
        }
    }

    /// `√(K/(K+1)) + X_c/√(K+1)` with `X_c ~ CN(0, 1)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        let k = self.k_factor();
        let los = (k / (k + 1.0)).sqrt();
        let scatter = (k + 1.0).sqrt().recip();
        los + cn(1.0, rng) * scatter
    }
}

/// Antenna layout of the multiple-access phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Single-antenna end nodes: `[h_AR, h_BR]`.
    One,
    /// Two-antenna end nodes: `[h_A1R, h_A2R, h_B1R, h_B2R]`.
    Two,
}

/// All fades of one protocol round; held fixed across its four slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRealization {
    layout: Layout,
    ma: [Complex64; 4],
    /// `[h_R1A, h_R2A]`
    pub bc_a: [Complex64; 2],
    /// `[h_R1B, h_R2B]`
    pub bc_b: [Complex64; 2],
}

impl ChannelRealization {
    pub fn new(ma: &[Complex64], bc_a: [Complex64; 2], bc_b: [Complex64; 2]) -> Self {
        let layout = match ma.len() {
            2 => Layout::One,
            4 => Layout::Two,
            n => panic!("multiple-access fade vector must have 2 or 4 entries, got {n}"),
        };
        let mut buf = [Complex64::new(0.0, 0.0); 4];
        buf[..ma.len()].copy_from_slice(ma);
        Self {
            layout,
            ma: buf,
            bc_a,
            bc_b,
        }
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn ma_coeffs(&self) -> &[Complex64] {
        match self.layout {
            Layout::One => &self.ma[..2],
            Layout::Two => &self.ma,
        }
    }

    /// `h_BR / h_AR` for the single-antenna layout; `None` when `h_AR = 0`.
    pub fn fade_state(&self) -> Option<Complex64> {
        (self.ma[0] != Complex64::new(0.0, 0.0)).then(|| self.ma[1] / self.ma[0])
    }

    pub fn is_finite(&self) -> bool {
        self.ma
            .iter()
            .chain(&self.bc_a)
            .chain(&self.bc_b)
            .all(|h| h.re.is_finite() && h.im.is_finite())
    }
}

/// `E_s` and `σ²`; the SNR is their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    sigma2: f64,
    es: f64,
}

impl NoiseModel {
    pub fn new(sigma2: f64, es: f64) -> Result<Self, ChannelError> {
        if !(sigma2 > 0.0 && es > 0.0 && sigma2.is_finite() && es.is_finite()) {
            return Err(ChannelError::BadNoise { sigma2, es });
        }
        Ok(Self { sigma2, es })
    }

    /// Unit symbol energy at the given SNR in dB.
    pub fn from_snr_db(snr_db: f64) -> Result<Self, ChannelError> {
        Self::new(10f64.powf(-snr_db / 10.0), 1.0)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn es(&self) -> f64 {
        self.es
    }

    pub fn snr(&self) -> f64 {
        self.es / self.sigma2
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Complex64 {
        cn(self.sigma2, rng)
    }
}

/// Circularly symmetric complex Gaussian with total variance `var`.
pub fn cn<R: Rng + ?Sized>(var: f64, rng: &mut R) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Draws the multiple-access and broadcast fades of one round. Each
/// coefficient is independent.
pub fn draw_realization<R: Rng + ?Sized>(
    layout: Layout,
    fading: Fading,
    rng: &mut R,
) -> ChannelRealization {
    let n = match layout {
        Layout::One => 2,
        Layout::Two => 4,
    };
    let mut ma = [Complex64::new(0.0, 0.0); 4];
    for h in ma.iter_mut().take(n) {
        *h = fading.sample(rng);
    }
    let bc_a = [fading.sample(rng), fading.sample(rng)];
    let bc_b = [fading.sample(rng), fading.sample(rng)];
    ChannelRealization {
        layout,
        ma,
        bc_a,
        bc_b,
    }
}

/// `√E_s · h · X + z` with each `z` entry drawn `CN(0, σ²)`.
pub fn transmit<R: Rng + ?Sized>(
    h: &[Complex64],
    x: &CMatrix,
    noise: &NoiseModel,
    rng: &mut R,
) -> Result<Vec<Complex64>, ChannelError> {
    if h.len() != x.rows() {
        return Err(DimensionError {
            left: (1, h.len()),
            right: x.shape(),
        }
        .into());
    }
    let g = noise.es().sqrt();
    Ok((0..x.cols())
        .map(|c| {
            let s: Complex64 = h.iter().enumerate().map(|(r, hr)| hr * x[(r, c)]).sum();
            s * g + noise.sample(rng)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn negative_k_rejected() {
        assert!(Fading::rician(-0.1).is_err());
        assert!(Fading::rician(f64::NAN).is_err());
        assert_eq!(Fading::rician(0.0).unwrap().k_factor(), 0.0);
    }

    #[test]
    fn bad_noise_rejected() {
        assert!(NoiseModel::new(0.0, 1.0).is_err());
        assert!(NoiseModel::new(1.0, -1.0).is_err());
        let n = NoiseModel::from_snr_db(20.0).unwrap();
        assert!((n.snr() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn layouts_have_expected_lengths() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r1 = draw_realization(Layout::One, Fading::Rayleigh, &mut rng);
        let r2 = draw_realization(Layout::Two, Fading::Rayleigh, &mut rng);
        assert_eq!(r1.ma_coeffs().len(), 2);
        assert_eq!(r2.ma_coeffs().len(), 4);
        assert!(r1.is_finite() && r2.is_finite());
    }

    #[test]
    fn line_of_sight_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = Fading::rician(1e12).unwrap();
        for _ in 0..100 {
            let r = draw_realization(Layout::Two, f, &mut rng);
            for h in r.ma_coeffs().iter().chain(&r.bc_a).chain(&r.bc_b) {
                assert!((h - 1.0).norm() < 1e-5);
            }
        }
    }

    #[test]
    fn noiseless_single_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let noise = NoiseModel::new(1e-300, 4.0).unwrap();
        let a = Complex64::new(0.3, -0.4);
        let b = Complex64::new(-1.0, 0.2);
        let z = Complex64::new(0.0, 0.0);
        let x = CMatrix::from_rows(&[&[a, z], &[z, b]]);
        let y = transmit(&[Complex64::new(1.0, 0.0), z], &x, &noise, &mut rng).unwrap();
        assert!((y[0] - a * 2.0).norm() < 1e-12);
        assert!(y[1].norm() < 1e-12);
    }

    #[test]
    fn transmit_dimension_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let noise = NoiseModel::new(1.0, 1.0).unwrap();
        assert!(transmit(
            &[Complex64::new(1.0, 0.0)],
            &CMatrix::zeros(2, 2),
            &noise,
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn fade_state_ratio() {
        let one = Complex64::new(1.0, 0.0);
        let r = ChannelRealization::new(
            &[Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0)],
            [one; 2],
            [one; 2],
        );
        assert_eq!(r.fade_state(), Some(Complex64::new(0.0, 0.5)));
        let r = ChannelRealization::new(&[Complex64::new(0.0, 0.0), one], [one; 2], [one; 2]);
        assert_eq!(r.fade_state(), None);
    }
}
