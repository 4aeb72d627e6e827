//! Performance functionals: communication and sensing SNRs, the matched
//! sensing receive beamformer, the scalarized objective, and the multi-user
//! SINR/SNR expressions (evaluation only).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, CVector};
use crate::scenario::Scenario;

/// Feasibility slack on per-AP power.
pub const TAU_FEAS: f64 = 1e-9;

/// Transmit beamformers of AP 1 and AP 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamformerPair {
    pub w1: CVector,
    pub w2: CVector,
}

impl BeamformerPair {
    pub fn new(w1: CVector, w2: CVector) -> Result<Self> {
        if w1.len() != w2.len() {
            return Err(Error::Dimension {
                expected: w1.len(),
                found: w2.len(),
            });
        }
        Ok(Self { w1, w2 })
    }

    /// Splits a stacked `(w1, w2)` vector of even length.
    pub fn from_stacked(w: &CVector) -> Result<Self> {
        if !w.len().is_multiple_of(2) {
            return Err(Error::Dimension {
                expected: w.len() + 1,
                found: w.len(),
            });
        }
        let n = w.len() / 2;
        Ok(Self {
            w1: w.segment(0, n),
            w2: w.segment(n, n),
        })
    }

    pub fn stacked(&self) -> CVector {
        self.w1.concat(&self.w2)
    }

    pub fn is_feasible(&self, p1_max: f64, p2_max: f64) -> bool {
        self.w1.norm_sqr() <= p1_max + TAU_FEAS && self.w2.norm_sqr() <= p2_max + TAU_FEAS
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            w1: self.w1.scale(c),
            w2: self.w2.scale(c),
        }
    }
}

fn check_dims(s: &Scenario, b: &BeamformerPair) -> Result<()> {
    for v in [&b.w1, &b.w2] {
        if v.len() != s.n() {
            return Err(Error::Dimension {
                expected: s.n(),
                found: v.len(),
            });
        }
    }
    Ok(())
}

/// `h1^H w1 + h2^H w2`.
fn comm_amplitude(s: &Scenario, b: &BeamformerPair) -> Result<Complex64> {
    check_dims(s, b)?;
    Ok(inner(&s.h1, &b.w1)? + inner(&s.h2, &b.w2)?)
}

/// `g1^H w1 + g2^H w2`.
fn sense_amplitude(s: &Scenario, b: &BeamformerPair) -> Result<Complex64> {
    check_dims(s, b)?;
    Ok(inner(&s.g1, &b.w1)? + inner(&s.g2, &b.w2)?)
}

/// `|h1^H w1 + h2^H w2|^2 / sigma1^2`.
pub fn snr_comm(s: &Scenario, b: &BeamformerPair) -> Result<f64> {
    Ok(comm_amplitude(s, b)?.norm_sqr() / s.config.sigma1_sq)
}

/// Receive beamformer at AP 2 matched to the reflected signal:
/// `g2 conj(g1^H w1 + g2^H w2)`, normalized.
pub fn sensing_rx_beamformer(s: &Scenario, b: &BeamformerPair) -> Result<CVector> {
    let a = sense_amplitude(s, b)?;
    if s.g2.is_zero() {
        return Err(Error::DegenerateSensing("g2 is zero"));
    }
    if a.norm() == 0.0 {
        return Err(Error::DegenerateSensing(
            "received sensing amplitude is zero",
        ));
    }
    let v = s.g2.scale(a.conj());
    Ok(v.normalized().expect("nonzero by construction"))
}

/// `||g2||^2 |g1^H w1 + g2^H w2|^2 / sigma2^2`; zero where the matched
/// receiver is undefined.
pub fn snr_sense(s: &Scenario, b: &BeamformerPair) -> Result<f64> {
    Ok(s.g2.norm_sqr() * sense_amplitude(s, b)?.norm_sqr() / s.config.sigma2_sq)
}

/// `alpha SNR_c + (1 - alpha) SNR_s` at the scenario's weight.
pub fn objective(s: &Scenario, b: &BeamformerPair) -> Result<f64> {
    let a = s.alpha();
    Ok(a * snr_comm(s, b)? + (1.0 - a) * snr_sense(s, b)?)
}

/// `K` users served jointly by both APs, with one beamformer per AP per user.
#[derive(Clone, Debug)]
pub struct MultiUserLayout {
    /// `(h_1k, h_2k)` per UE.
    pub channels: Vec<(CVector, CVector)>,
    /// `(w_1^(k), w_2^(k))` per UE.
    pub beamformers: Vec<BeamformerPair>,
    pub g1: CVector,
    pub g2: CVector,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
}

impl MultiUserLayout {
    pub fn new(
        channels: Vec<(CVector, CVector)>,
        beamformers: Vec<BeamformerPair>,
        g1: CVector,
        g2: CVector,
        sigma1_sq: f64,
        sigma2_sq: f64,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::Config(
                "multi-user layout needs at least one UE".into(),
            ));
        }
        if channels.len() != beamformers.len() {
            return Err(Error::Dimension {
                expected: channels.len(),
                found: beamformers.len(),
            });
        }
        let n = g1.len();
        let lens = channels
            .iter()
            .flat_map(|(a, b)| [a.len(), b.len()])
            .chain(beamformers.iter().flat_map(|p| [p.w1.len(), p.w2.len()]))
            .chain([g2.len()]);
        for len in lens {
            if len != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: len,
                });
            }
        }
        Ok(Self {
            channels,
            beamformers,
            g1,
            g2,
            sigma1_sq,
            sigma2_sq,
        })
    }

    pub fn users(&self) -> usize {
        self.channels.len()
    }

    fn received(&self, k: usize) -> Complex64 {
        let (h1, h2) = &self.channels[k];
        let b = &self.beamformers[k];
        inner(h1, &b.w1).expect("validated") + inner(h2, &b.w2).expect("validated")
    }
}

/// SINR at UE `k` (zero-based), treating the other users' streams as
/// interference.
pub fn multiuser_sinr_comm(m: &MultiUserLayout, k: usize) -> Result<f64> {
    if k >= m.users() {
        return Err(Error::IndexOutOfRange {
            index: k,
            count: m.users(),
        });
    }
    let interference: f64 = (0..m.users())
        .filter(|&l| l != k)
        .map(|l| m.received(l).norm_sqr())
        .sum();
    Ok(m.received(k).norm_sqr() / (m.sigma1_sq + interference))
}

/// Sensing SNR with all user streams summed coherently at the target.
pub fn multiuser_snr_sense(m: &MultiUserLayout) -> Result<f64> {
    let total: Complex64 = m
        .beamformers
        .iter()
        .map(|b| Ok(inner(&m.g1, &b.w1)? + inner(&m.g2, &b.w2)?))
        .sum::<Result<Complex64>>()?;
    Ok(m.g2.norm_sqr() * total.norm_sqr() / m.sigma2_sq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::outer;
    use crate::scenario::{generate, stack, GaussianStream, ScenarioConfig};
    use proptest::prelude::*;

    fn real(v: &[f64]) -> CVector {
        CVector::from_real(v).unwrap()
    }

    fn unit_scenario(h1: &[f64], h2: &[f64], g1: &[f64], g2: &[f64]) -> Scenario {
        let config = ScenarioConfig {
            n_antennas: h1.len(),
            ..Default::default()
        };
        Scenario::new(real(h1), real(h2), real(g1), real(g2), config).unwrap()
    }

    fn random_pair(stream: &mut GaussianStream, n: usize) -> BeamformerPair {
        let w1 = stream.vector(n).normalized().unwrap();
        let w2 = stream.vector(n).normalized().unwrap();
        BeamformerPair::new(w1, w2).unwrap()
    }

    #[test]
    fn snr_comm_examples() {
        let s = unit_scenario(&[1., 0.], &[0., 1.], &[1., 0.], &[0., 1.]);
        let b = BeamformerPair::new(real(&[1., 0.]), real(&[0., 1.])).unwrap();
        assert_eq!(snr_comm(&s, &b).unwrap(), 4.0);
        let z = BeamformerPair::new(CVector::zeros(2), CVector::zeros(2)).unwrap();
        assert_eq!(snr_comm(&s, &z).unwrap(), 0.0);
        let short = BeamformerPair::new(CVector::zeros(3), CVector::zeros(3)).unwrap();
        assert!(snr_comm(&s, &short).is_err());
    }

    #[test]
    fn snr_comm_mrt_closed_form() {
        let s = generate(&ScenarioConfig::default()).unwrap();
        let b =
            BeamformerPair::new(s.h1.normalized().unwrap(), s.h2.normalized().unwrap()).unwrap();
        let want = (s.h1.norm() + s.h2.norm()).powi(2);
        assert!((snr_comm(&s, &b).unwrap() - want).abs() < 1e-12 * want);
    }

    #[test]
    fn snr_sense_examples() {
        let s = unit_scenario(&[1., 0.], &[0., 1.], &[1., 0.], &[0., 2.]);
        let b = BeamformerPair::new(real(&[1., 0.]), real(&[0., 1.])).unwrap();
        assert_eq!(snr_sense(&s, &b).unwrap(), 36.0);
        let z = BeamformerPair::new(CVector::zeros(2), CVector::zeros(2)).unwrap();
        assert_eq!(snr_sense(&s, &z).unwrap(), 0.0);
        assert!(matches!(
            sensing_rx_beamformer(&s, &z),
            Err(Error::DegenerateSensing(_))
        ));
    }

    #[test]
    fn rx_beamformer_examples() {
        let s = unit_scenario(&[1., 0.], &[0., 1.], &[1., 0.], &[0., 1.]);
        let b = BeamformerPair::new(real(&[1., 0.]), real(&[0., 1.])).unwrap();
        let v = sensing_rx_beamformer(&s, &b).unwrap();
        assert_eq!(v, real(&[0., 1.]));

        let s = unit_scenario(&[1., 0.], &[0., 1.], &[1., 0.], &[0., 0.]);
        assert!(matches!(
            sensing_rx_beamformer(&s, &b),
            Err(Error::DegenerateSensing("g2 is zero"))
        ));
    }

    #[test]
    fn sensing_composed_through_receiver() {
        for seed in 0..100 {
            let s = generate(&ScenarioConfig::default().with_seed(seed)).unwrap();
            let mut stream = GaussianStream::new(seed ^ 0xabc);
            let b = random_pair(&mut stream, 3);
            let v = sensing_rx_beamformer(&s, &b).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-12);
            let g2v = inner(&s.g2, &v).unwrap();
            assert!((g2v.norm() - s.g2.norm()).abs() < 1e-12 * s.g2.norm());
            let a = inner(&s.g1, &b.w1).unwrap() + inner(&s.g2, &b.w2).unwrap();
            let composed = (a * g2v).norm_sqr() / s.config.sigma2_sq;
            let closed = snr_sense(&s, &b).unwrap();
            assert!((composed - closed).abs() <= 1e-10 * closed);
        }
    }

    #[test]
    fn objective_endpoints_and_reformulation() {
        let s = generate(&ScenarioConfig::default()).unwrap();
        let mut stream = GaussianStream::new(99);
        let b = random_pair(&mut stream, 3);
        let s1 = s.with_alpha(1.0).unwrap();
        assert_eq!(objective(&s1, &b).unwrap(), snr_comm(&s1, &b).unwrap());
        let s0 = s.with_alpha(0.0).unwrap();
        assert_eq!(objective(&s0, &b).unwrap(), snr_sense(&s0, &b).unwrap());

        let p = stack(&s);
        let tr = p.objective_matrix_value(&outer(&b.stacked())).unwrap();
        let f = objective(&s, &b).unwrap();
        assert!((tr - f).abs() < 1e-10 * f);
    }

    #[test]
    fn reformulation_with_general_noise() {
        let config = ScenarioConfig {
            sigma1_sq: 0.3,
            sigma2_sq: 2.5,
            alpha: 0.4,
            ..Default::default()
        };
        let s = generate(&config).unwrap();
        let b = random_pair(&mut GaussianStream::new(4), 3);
        let tr = stack(&s)
            .objective_matrix_value(&outer(&b.stacked()))
            .unwrap();
        let f = objective(&s, &b).unwrap();
        assert!((tr - f).abs() < 1e-10 * f);
    }

    fn layout(stream: &mut GaussianStream, k: usize, n: usize) -> MultiUserLayout {
        let channels = (0..k)
            .map(|_| (stream.vector(n), stream.vector(n)))
            .collect();
        let beams = (0..k).map(|_| random_pair(stream, n)).collect();
        MultiUserLayout::new(
            channels,
            beams,
            stream.vector(n),
            stream.vector(n),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn single_user_reduces_to_snr() {
        let s = generate(&ScenarioConfig::default()).unwrap();
        let b = random_pair(&mut GaussianStream::new(1), 3);
        let m = MultiUserLayout::new(
            vec![(s.h1.clone(), s.h2.clone())],
            vec![b.clone()],
            s.g1.clone(),
            s.g2.clone(),
            1.0,
            1.0,
        )
        .unwrap();
        assert_eq!(
            multiuser_sinr_comm(&m, 0).unwrap(),
            snr_comm(&s, &b).unwrap()
        );
        let a = multiuser_snr_sense(&m).unwrap();
        assert!((a - snr_sense(&s, &b).unwrap()).abs() <= 1e-14 * a);
        assert!(matches!(
            multiuser_sinr_comm(&m, 1),
            Err(Error::IndexOutOfRange { index: 1, count: 1 })
        ));
    }

    #[test]
    fn silent_interferer_gives_interference_free_snr() {
        let mut stream = GaussianStream::new(2);
        let mut m = layout(&mut stream, 2, 3);
        m.beamformers[1] = BeamformerPair::new(CVector::zeros(3), CVector::zeros(3)).unwrap();
        let (h1, h2) = &m.channels[0];
        let b = &m.beamformers[0];
        let free = (inner(h1, &b.w1).unwrap() + inner(h2, &b.w2).unwrap()).norm_sqr();
        assert_eq!(multiuser_sinr_comm(&m, 0).unwrap(), free);
    }

    #[test]
    fn multiuser_term_by_term() {
        let mut stream = GaussianStream::new(3);
        let m = layout(&mut stream, 3, 3);
        // independent recomputation over explicit entries
        let amp = |h: &CVector, w: &CVector| -> Complex64 {
            h.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum()
        };
        let rx: Vec<f64> = (0..3)
            .map(|k| {
                let (h1, h2) = &m.channels[k];
                (amp(h1, &m.beamformers[k].w1) + amp(h2, &m.beamformers[k].w2)).norm_sqr()
            })
            .collect();
        for k in 0..3 {
            let denom: f64 = 1.0 + (0..3).filter(|&l| l != k).map(|l| rx[l]).sum::<f64>();
            let want = rx[k] / denom;
            let got = multiuser_sinr_comm(&m, k).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.max(1.0));
        }
        let mut total = Complex64::new(0.0, 0.0);
        for b in &m.beamformers {
            total += amp(&m.g1, &b.w1) + amp(&m.g2, &b.w2);
        }
        let want = m.g2.norm_sqr() * total.norm_sqr();
        assert!((multiuser_snr_sense(&m).unwrap() - want).abs() <= 1e-12 * want);

        let mut zero = m.clone();
        for b in zero.beamformers.iter_mut() {
            *b = BeamformerPair::new(CVector::zeros(3), CVector::zeros(3)).unwrap();
        }
        assert_eq!(multiuser_snr_sense(&zero).unwrap(), 0.0);
    }

    #[test]
    fn layout_validation() {
        let v = CVector::zeros(2);
        assert!(MultiUserLayout::new(vec![], vec![], v.clone(), v.clone(), 1.0, 1.0).is_err());
        let b = BeamformerPair::new(CVector::zeros(3), CVector::zeros(3)).unwrap();
        assert!(MultiUserLayout::new(
            vec![(v.clone(), v.clone())],
            vec![b],
            v.clone(),
            v.clone(),
            1.0,
            1.0
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn phase_and_scaling(seed in 0u64..10_000, theta in 0.0f64..6.3, c in 0.01f64..=1.0) {
            let s = generate(&ScenarioConfig::default().with_seed(seed)).unwrap();
            let b = random_pair(&mut GaussianStream::new(seed.wrapping_add(17)), 3);
            let rotated = b.scale(Complex64::from_polar(1.0, theta));
            for f in [snr_comm, snr_sense, objective] {
                let x = f(&s, &b).unwrap();
                prop_assert!((f(&s, &rotated).unwrap() - x).abs() <= 1e-12 * x.max(1.0));
            }
            let scaled = b.scale(Complex64::new(c, 0.0));
            for f in [snr_comm, snr_sense] {
                let x = f(&s, &b).unwrap();
                prop_assert!((f(&s, &scaled).unwrap() - c * c * x).abs() <= 1e-12 * x.max(1.0));
            }
        }
    }
}
