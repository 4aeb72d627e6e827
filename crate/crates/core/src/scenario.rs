//! Problem instances: channel draws, the stacked `2N`-dimensional form and
//! the weighted objective matrix.
//!
//! # Random stream
//!
//! Channels are drawn from Xoshiro256** whose 256-bit state is the first four
//! outputs of SplitMix64 seeded with the 64-bit `seed`. Each complex entry
//! consumes two outputs `x1, x2`, mapped to uniforms on `(0, 1]` by
//! `u = ((x >> 11) + 1) * 2^-53`, then Box–Muller:
//! `r = sqrt(-2 ln u1)`, `entry = r (cos 2 pi u2 + i sin 2 pi u2) / sqrt 2`,
//! which has unit variance per complex entry. Entries are drawn in the order
//! `h1[0..N], h2[0..N], g1[0..N], g2[0..N]`.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rand_core::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{outer, trace_product, CVector, HMatrix};

/// Scalar parameters of one problem instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n_antennas: usize,
    pub seed: u64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub p1_max: f64,
    pub p2_max: f64,
    pub alpha: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            n_antennas: 3,
            seed: 42,
            sigma1_sq: 1.0,
            sigma2_sq: 1.0,
            p1_max: 1.0,
            p2_max: 1.0,
            alpha: 0.5,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_antennas == 0 {
            return Err(Error::Config("n_antennas must be at least 1".into()));
        }
        validate_alpha(self.alpha)?;
        for (name, v) in [
            ("sigma1_sq", self.sigma1_sq),
            ("sigma2_sq", self.sigma2_sq),
            ("p1_max", self.p1_max),
            ("p2_max", self.p2_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self {
            alpha,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

pub(crate) fn validate_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Config(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    Ok(())
}

/// Channels from both APs to the UE (`h1`, `h2`) and to the sensed target
/// (`g1`, `g2`).
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub h1: CVector,
    pub h2: CVector,
    pub g1: CVector,
    pub g2: CVector,
    pub config: ScenarioConfig,
}

impl Scenario {
    pub fn new(
        h1: CVector,
        h2: CVector,
        g1: CVector,
        g2: CVector,
        config: ScenarioConfig,
    ) -> Result<Self> {
        config.validate()?;
        let n = config.n_antennas;
        for v in [&h1, &h2, &g1, &g2] {
            if v.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: v.len(),
                });
            }
        }
        if h1.is_zero() && h2.is_zero() {
            return Err(Error::Config("h1 and h2 are both zero".into()));
        }
        if g1.is_zero() && g2.is_zero() {
            return Err(Error::Config("g1 and g2 are both zero".into()));
        }
        Ok(Self {
            h1,
            h2,
            g1,
            g2,
            config,
        })
    }

    pub fn n(&self) -> usize {
        self.config.n_antennas
    }

    pub fn alpha(&self) -> f64 {
        self.config.alpha
    }

    /// Same channels, different trade-off weight.
    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        let config = self.config.with_alpha(alpha);
        config.validate()?;
        Ok(Self {
            config,
            ..self.clone()
        })
    }

    /// Loads channels from a CSV with header
    /// `h1_re,h1_im,h2_re,h2_im,g1_re,g1_im,g2_re,g2_im`, one row per antenna.
    /// The row count overrides `config.n_antennas`.
    pub fn from_channels_csv(path: impl AsRef<Path>, config: ScenarioConfig) -> Result<Self> {
        let mut rdr = csv::Reader::from_path(path)?;
        let mut cols: [Vec<Complex64>; 4] = Default::default();
        for row in rdr.deserialize::<ChannelRow>() {
            let r = row?;
            cols[0].push(Complex64::new(r.h1_re, r.h1_im));
            cols[1].push(Complex64::new(r.h2_re, r.h2_im));
            cols[2].push(Complex64::new(r.g1_re, r.g1_im));
            cols[3].push(Complex64::new(r.g2_re, r.g2_im));
        }
        let config = ScenarioConfig {
            n_antennas: cols[0].len(),
            ..config
        };
        let [h1, h2, g1, g2] = cols.map(CVector::new);
        Self::new(h1?, h2?, g1?, g2?, config)
    }

    pub fn write_channels_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for i in 0..self.n() {
            w.serialize(ChannelRow {
                h1_re: self.h1[i].re,
                h1_im: self.h1[i].im,
                h2_re: self.h2[i].re,
                h2_im: self.h2[i].im,
                g1_re: self.g1[i].re,
                g1_im: self.g1[i].im,
                g2_re: self.g2[i].re,
                g2_im: self.g2[i].im,
            })?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ChannelRow {
    h1_re: f64,
    h1_im: f64,
    h2_re: f64,
    h2_im: f64,
    g1_re: f64,
    g1_im: f64,
    g2_re: f64,
    g2_im: f64,
}

/// Seeded circularly-symmetric Gaussian source (see module docs).
pub struct GaussianStream {
    rng: Xoshiro256StarStar,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: Xoshiro256StarStar::seed_from_u64(seed),
        }
    }

    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// One `CN(0, 1)` sample.
    pub fn complex_normal(&mut self) -> Complex64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt() * std::f64::consts::FRAC_1_SQRT_2;
        let theta = 2.0 * PI * u2;
        Complex64::new(r * theta.cos(), r * theta.sin())
    }

    pub fn vector(&mut self, n: usize) -> CVector {
        CVector::new((0..n).map(|_| self.complex_normal()).collect()).expect("n validated positive")
    }
}

/// Draws an i.i.d. Rayleigh instance. Identical configs give identical channels.
pub fn generate(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let n = config.n_antennas;
    let mut stream = GaussianStream::new(config.seed);
    let h1 = stream.vector(n);
    let h2 = stream.vector(n);
    let g1 = stream.vector(n);
    let g2 = stream.vector(n);
    Scenario::new(h1, h2, g1, g2, config.clone())
}

/// The stacked problem `max Tr(M W)` s.t. `Tr(B_i W) <= p_i`, `W >= 0`.
///
/// `M = comm_dir comm_dir^H + sense_dir sense_dir^H` where
/// `comm_dir = sqrt(alpha) / sigma1 * h` and
/// `sense_dir = sqrt(alpha_tilde) / sigma2 * g`, so that `Tr(M w w^H)` is the
/// weighted objective `alpha SNR_c + (1 - alpha) SNR_s` for any noise powers.
#[derive(Clone, Debug)]
pub struct StackedProblem {
    pub n: usize,
    pub h: CVector,
    pub g: CVector,
    pub m: HMatrix,
    pub b1: HMatrix,
    pub b2: HMatrix,
    pub alpha: f64,
    /// `(1 - alpha) ||g2||^2`.
    pub alpha_tilde: f64,
    pub comm_dir: CVector,
    pub sense_dir: CVector,
    pub p1_max: f64,
    pub p2_max: f64,
}

pub fn stack(s: &Scenario) -> StackedProblem {
    let c = &s.config;
    let n = s.n();
    let h = s.h1.concat(&s.h2);
    let g = s.g1.concat(&s.g2);
    let alpha_tilde = (1.0 - c.alpha) * s.g2.norm_sqr();
    let comm_dir = h.scale_real((c.alpha / c.sigma1_sq).sqrt());
    let sense_dir = g.scale_real((alpha_tilde / c.sigma2_sq).sqrt());
    let m = HMatrix::combination(&[(1.0, &outer(&comm_dir)), (1.0, &outer(&sense_dir))])
        .expect("equal dimensions");
    StackedProblem {
        n,
        h,
        g,
        m,
        b1: HMatrix::block_selector(2 * n, 0, n),
        b2: HMatrix::block_selector(2 * n, n, n),
        alpha: c.alpha,
        alpha_tilde,
        comm_dir,
        sense_dir,
        p1_max: c.p1_max,
        p2_max: c.p2_max,
    }
}

impl StackedProblem {
    /// `Tr(M W)`.
    pub fn objective_matrix_value(&self, w: &HMatrix) -> Result<f64> {
        trace_product(&self.m, w)
    }

    /// Block `[0, N)` for `i = 0`, `[N, 2N)` for `i = 1`.
    pub fn block_of(&self, v: &CVector, i: usize) -> CVector {
        v.segment(i * self.n, self.n)
    }
}
