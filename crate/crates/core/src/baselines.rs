//! Closed-form benchmark beamformers and a brute-force optimum used to
//! cross-check the relaxation.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{inner, CVector};
use crate::metrics::{objective, snr_comm, snr_sense, BeamformerPair};
use crate::scenario::{GaussianStream, Scenario};

/// One benchmark operating point.
#[derive(Clone, Debug, Serialize)]
pub struct BaselineResult {
    pub name: &'static str,
    pub pair: BeamformerPair,
    pub snr_c: f64,
    pub snr_s: f64,
    pub objective: f64,
    /// Standalone only: SNRs with the cross-AP contributions dropped
    /// (`SNR_c = P1 ||h1||^2 / sigma1^2`, `SNR_s = P2 ||g2||^4 / sigma2^2`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub isolated: Option<(f64, f64)>,
}

impl BaselineResult {
    fn evaluate(name: &'static str, s: &Scenario, pair: BeamformerPair) -> Result<Self> {
        Ok(Self {
            name,
            snr_c: snr_comm(s, &pair)?,
            snr_s: snr_sense(s, &pair)?,
            objective: objective(s, &pair)?,
            pair,
            isolated: None,
        })
    }
}

fn aligned(v: &CVector, power: f64, name: &'static str) -> Result<CVector> {
    v.normalized()
        .map(|u| u.scale_real(power.sqrt()))
        .ok_or(Error::BaselineUndefined {
            name,
            reason: "zero channel",
        })
}

/// Maximum ratio transmission towards the UE.
pub fn mrt_comm(s: &Scenario) -> Result<BaselineResult> {
    const NAME: &str = "mrt_comm";
    let c = &s.config;
    let pair = BeamformerPair::new(
        aligned(&s.h1, c.p1_max, NAME)?,
        aligned(&s.h2, c.p2_max, NAME)?,
    )?;
    BaselineResult::evaluate(NAME, s, pair)
}

/// Maximum ratio transmission towards the sensed target.
pub fn mrt_sense(s: &Scenario) -> Result<BaselineResult> {
    const NAME: &str = "mrt_sense";
    let c = &s.config;
    let pair = BeamformerPair::new(
        aligned(&s.g1, c.p1_max, NAME)?,
        aligned(&s.g2, c.p2_max, NAME)?,
    )?;
    BaselineResult::evaluate(NAME, s, pair)
}

/// AP 1 serves the UE, AP 2 illuminates the target.
pub fn standalone(s: &Scenario) -> Result<BaselineResult> {
    const NAME: &str = "standalone";
    let c = &s.config;
    let pair = BeamformerPair::new(
        aligned(&s.h1, c.p1_max, NAME)?,
        aligned(&s.g2, c.p2_max, NAME)?,
    )?;
    let mut r = BaselineResult::evaluate(NAME, s, pair)?;
    let g2 = s.g2.norm_sqr();
    r.isolated = Some((
        c.p1_max * s.h1.norm_sqr() / c.sigma1_sq,
        c.p2_max * g2 * g2 / c.sigma2_sq,
    ));
    Ok(r)
}

/// `(I - v v^H / ||v||^2) x`.
fn project_out(x: &CVector, v: &CVector) -> CVector {
    let coef = inner(v, x).expect("equal lengths") / v.norm_sqr();
    x.sub(&v.scale(coef)).expect("equal lengths")
}

/// Per-AP zero forcing: `w1 ⊥ h2`, `w2 ⊥ h1`.
pub fn zero_forcing(s: &Scenario) -> Result<BaselineResult> {
    const NAME: &str = "zero_forcing";
    if s.n() < 2 {
        return Err(Error::BaselineUndefined {
            name: NAME,
            reason: "needs at least two antennas per AP",
        });
    }
    if s.h1.is_zero() || s.h2.is_zero() {
        return Err(Error::BaselineUndefined {
            name: NAME,
            reason: "zero channel",
        });
    }
    let r1 = project_out(&s.h1, &s.h2);
    let r2 = project_out(&s.h2, &s.h1);
    let parallel = 1e-12;
    if r1.norm() <= parallel * s.h1.norm() || r2.norm() <= parallel * s.h2.norm() {
        return Err(Error::BaselineUndefined {
            name: NAME,
            reason: "h1 and h2 are parallel",
        });
    }
    let c = &s.config;
    let pair = BeamformerPair::new(aligned(&r1, c.p1_max, NAME)?, aligned(&r2, c.p2_max, NAME)?)?;
    BaselineResult::evaluate(NAME, s, pair)
}

/// Every baseline that is defined for this scenario, in a fixed order.
pub fn all_baselines(s: &Scenario) -> Vec<BaselineResult> {
    [mrt_comm, mrt_sense, zero_forcing, standalone]
        .iter()
        .filter_map(|f| f(s).ok())
        .collect()
}

/// Search settings for [`oracle`].
#[derive(Clone, Copy, Debug)]
pub struct OracleSettings {
    pub restarts: usize,
    pub iterations: usize,
    pub grid: usize,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            restarts: 100,
            iterations: 200,
            grid: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub value: f64,
    pub pair: BeamformerPair,
    pub ascent_value: f64,
    pub grid_value: f64,
}

/// Weighted objective evaluated directly from the per-AP channels, with its
/// gradient with respect to `conj(w)`.
struct Objective<'a> {
    s: &'a Scenario,
    comm_w: f64,
    sense_w: f64,
}

impl<'a> Objective<'a> {
    fn new(s: &'a Scenario) -> Self {
        let c = &s.config;
        Self {
            s,
            comm_w: c.alpha / c.sigma1_sq,
            sense_w: (1.0 - c.alpha) * s.g2.norm_sqr() / c.sigma2_sq,
        }
    }

    fn amplitudes(&self, b: &BeamformerPair) -> (Complex64, Complex64) {
        let s = self.s;
        let a = inner(&s.h1, &b.w1).unwrap() + inner(&s.h2, &b.w2).unwrap();
        let g = inner(&s.g1, &b.w1).unwrap() + inner(&s.g2, &b.w2).unwrap();
        (a, g)
    }

    fn value(&self, b: &BeamformerPair) -> f64 {
        let (a, g) = self.amplitudes(b);
        self.comm_w * a.norm_sqr() + self.sense_w * g.norm_sqr()
    }

    fn gradient(&self, b: &BeamformerPair) -> BeamformerPair {
        let s = self.s;
        let (a, g) = self.amplitudes(b);
        let ca = a * self.comm_w;
        let cg = g * self.sense_w;
        let w1 = s.h1.scale(ca).add(&s.g1.scale(cg)).unwrap();
        let w2 = s.h2.scale(ca).add(&s.g2.scale(cg)).unwrap();
        BeamformerPair { w1, w2 }
    }

    fn lipschitz(&self) -> f64 {
        let s = self.s;
        self.comm_w * (s.h1.norm_sqr() + s.h2.norm_sqr())
            + self.sense_w * (s.g1.norm_sqr() + s.g2.norm_sqr())
    }
}

/// Rescales each block onto its power sphere; a zero block becomes the first
/// canonical direction.
fn to_sphere(v: &CVector, power: f64) -> CVector {
    match v.normalized() {
        Some(u) => u.scale_real(power.sqrt()),
        None => CVector::basis(v.len(), 0).scale_real(power.sqrt()),
    }
}

fn project(b: &BeamformerPair, p1: f64, p2: f64) -> BeamformerPair {
    BeamformerPair {
        w1: to_sphere(&b.w1, p1),
        w2: to_sphere(&b.w2, p2),
    }
}

fn ascend(f: &Objective<'_>, start: BeamformerPair, iterations: usize) -> (f64, BeamformerPair) {
    let (p1, p2) = (f.s.config.p1_max, f.s.config.p2_max);
    let mut w = project(&start, p1, p2);
    let mut val = f.value(&w);
    let base_step = 16.0 / f.lipschitz().max(f64::MIN_POSITIVE);
    for _ in 0..iterations {
        let grad = f.gradient(&w);
        let mut step = base_step;
        let mut improved = false;
        for _ in 0..40 {
            let trial = BeamformerPair {
                w1: w.w1.add(&grad.w1.scale_real(step)).unwrap(),
                w2: w.w2.add(&grad.w2.scale_real(step)).unwrap(),
            };
            let trial = project(&trial, p1, p2);
            let tv = f.value(&trial);
            if tv >= val {
                improved = tv > val;
                w = trial;
                val = tv;
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (val, w)
}

/// Stationary points satisfy `w_i ∝ U_i c` for some `c ∈ C^2`, where
/// `U_i = [sqrt(comm_w) h_i, sqrt(sense_w) g_i]`; `c` ranges over
/// `(cos t, e^{i phi} sin t)` with `t ∈ [0, pi/2]`, `phi ∈ [0, 2 pi)`.
fn grid_search(f: &Objective<'_>, points: usize) -> (f64, BeamformerPair) {
    let s = f.s;
    let (p1, p2) = (s.config.p1_max, s.config.p2_max);
    let (ca, cg) = (f.comm_w.sqrt(), f.sense_w.sqrt());
    let block = |h: &CVector, g: &CVector, c0: Complex64, c1: Complex64, p: f64| {
        let v = h.scale(c0 * ca).add(&g.scale(c1 * cg)).unwrap();
        to_sphere(&v, p)
    };
    let mut best = (f64::NEG_INFINITY, None);
    for i in 0..points {
        let t = FRAC_PI_2 * i as f64 / (points - 1).max(1) as f64;
        for j in 0..points {
            let phi = 2.0 * PI * j as f64 / points as f64;
            let c0 = Complex64::new(t.cos(), 0.0);
            let c1 = Complex64::from_polar(t.sin(), phi);
            let b = BeamformerPair {
                w1: block(&s.h1, &s.g1, c0, c1, p1),
                w2: block(&s.h2, &s.g2, c0, c1, p2),
            };
            // Relative phase between the two blocks in closed form.
            let b = best_relative_phase(f, b);
            let v = f.value(&b);
            if v > best.0 {
                best = (v, Some(b));
            }
        }
    }
    (best.0, best.1.expect("grid is non-empty"))
}

/// Rotates `w2` by the phase maximizing the objective with `w1` fixed.
fn best_relative_phase(f: &Objective<'_>, b: BeamformerPair) -> BeamformerPair {
    let s = f.s;
    let a1 = inner(&s.h1, &b.w1).unwrap();
    let a2 = inner(&s.h2, &b.w2).unwrap();
    let g1 = inner(&s.g1, &b.w1).unwrap();
    let g2 = inner(&s.g2, &b.w2).unwrap();
    // f(psi) = const + 2 Re(e^{i psi} cross)
    let cross = a2 * a1.conj() * f.comm_w + g2 * g1.conj() * f.sense_w;
    if cross.norm() == 0.0 {
        return b;
    }
    let rot = cross.conj() / cross.norm();
    BeamformerPair {
        w1: b.w1,
        w2: b.w2.scale(rot),
    }
}

/// Brute-force maximum of the weighted objective over feasible pairs, found
/// independently of the semidefinite relaxation: best of multi-start
/// projected gradient ascent and an exhaustive grid over the stationary
/// family, with the grid winner polished by ascent.
pub fn oracle(s: &Scenario, settings: OracleSettings) -> OracleResult {
    let f = Objective::new(s);
    let n = s.n();
    let mut stream = GaussianStream::new(s.config.seed ^ 0x5eed_0f0a_c1e5);
    let mut ascent = (f64::NEG_INFINITY, None);
    for _ in 0..settings.restarts.max(1) {
        let start = BeamformerPair {
            w1: stream.vector(n),
            w2: stream.vector(n),
        };
        let (v, b) = ascend(&f, start, settings.iterations);
        if v > ascent.0 {
            ascent = (v, Some(b));
        }
    }
    let (grid_value, grid_pair) = grid_search(&f, settings.grid.max(2));
    let (polished, polished_pair) = ascend(&f, grid_pair, settings.iterations);
    let ascent_pair = ascent.1.expect("at least one restart");
    let (value, pair) = if polished >= ascent.0 {
        (polished, polished_pair)
    } else {
        (ascent.0, ascent_pair)
    };
    OracleResult {
        value,
        pair,
        ascent_value: ascent.0,
        grid_value,
    }
}
