//! Semidefinite relaxation of the joint beamforming problem
//!
//! ```text
//! maximize   Tr(M W)
//! subject to Tr(B1 W) <= P1,  Tr(B2 W) <= P2,  W >= 0
//! ```
//!
//! solved through its two-variable dual
//!
//! ```text
//! minimize   P1 y1 + P2 y2
//! subject to Z(y) = y1 B1 + y2 B2 - M >= 0,  y >= 0.
//! ```
//!
//! `M = U U^H` with `U = [comm_dir, sense_dir]` has rank at most two, so for
//! `y > 0` the Schur complement turns `Z(y) >= 0` into the 2x2 condition
//! `I - K1 / y1 - K2 / y2 >= 0` with `K_i = U_i^H U_i` (`U_i` the rows of `U`
//! belonging to AP `i`). For fixed `y1` the smallest feasible `y2` is a root
//! of a scalar quadratic, and the dual objective along that boundary is convex
//! in `y1`; its derivative is `P1 - P2 ||u1||^2 / ||u2||^2` where `u` is the
//! null vector of `Z`, so the optimum is found by bisection on the sign of
//! that derivative. The primal `W* = w w^H` is then read off the null space
//! of `Z(y*)` obtained from a full Hermitian eigendecomposition, and every
//! optimality condition is re-checked on the recovered pair.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{eigh, inner, outer, trace_product, CVector, HMatrix};
use crate::metrics::BeamformerPair;
use crate::scenario::StackedProblem;

/// Solver and certificate thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    /// Relative accuracy of the dual objective.
    pub dual: f64,
    /// Relative eigenvalue threshold for the null space of `Z`.
    pub null: f64,
    /// Largest accepted `lambda2 / lambda1` of `W*`.
    pub rank: f64,
    /// Relative duality gap.
    pub gap: f64,
    /// Absolute bound on `Tr(W* Z)`.
    pub comp: f64,
    /// Slack on per-AP power.
    pub feas: f64,
    /// Relative PSD slack for `Z`.
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            dual: 1e-9,
            null: 1e-7,
            rank: 1e-6,
            gap: 1e-7,
            comp: 1e-7,
            feas: 1e-9,
            psd: 1e-9,
        }
    }
}

/// Dual multipliers of the two power constraints and the slack matrix.
#[derive(Clone, Debug)]
pub struct DualPoint {
    pub y1: f64,
    pub y2: f64,
    pub z: HMatrix,
    pub iterations: usize,
}

impl DualPoint {
    pub fn value(&self, p: &StackedProblem) -> f64 {
        p.p1_max * self.y1 + p.p2_max * self.y2
    }
}

/// Numerical rank of `W*`, with the bound from the rank-reduction lemma
/// (`L` matrices, `M` constraints: `sum rank^2 <= M`).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RankCertificate {
    pub lambda1: f64,
    pub lambda2: f64,
    /// `lambda2 / lambda1`, floored at the eigensolver resolution `n eps`.
    pub ratio: f64,
    pub rank: usize,
    pub rank_bound: usize,
}

/// Per-solve record for diagnostics output.
#[derive(Clone, Debug, Serialize)]
pub struct SolveDiagnostics {
    pub alpha: f64,
    pub y1: f64,
    pub y2: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub complementarity: f64,
    pub eigen_ratio: f64,
    pub null_dim: usize,
    pub iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub w_star: HMatrix,
    pub pair: BeamformerPair,
    pub dual: DualPoint,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    pub rank_certificate: RankCertificate,
    pub complementarity_residual: f64,
    pub null_dim: usize,
    pub block_power: (f64, f64),
}

impl SdpSolution {
    pub fn relative_gap(&self) -> f64 {
        self.gap / self.dual_value.max(1.0)
    }

    pub fn diagnostics(&self, alpha: f64) -> SolveDiagnostics {
        SolveDiagnostics {
            alpha,
            y1: self.dual.y1,
            y2: self.dual.y2,
            primal_value: self.primal_value,
            dual_value: self.dual_value,
            gap: self.gap,
            complementarity: self.complementarity_residual,
            eigen_ratio: self.rank_certificate.ratio,
            null_dim: self.null_dim,
            iterations: self.dual.iterations,
        }
    }
}

/// Hermitian `[[a, c], [conj c, b]]`.
#[derive(Clone, Copy, Debug)]
struct Herm2 {
    a: f64,
    b: f64,
    c: Complex64,
}

impl Herm2 {
    /// Gram matrix of the columns `x`, `z`.
    fn gram(x: &CVector, z: &CVector) -> Self {
        Self {
            a: x.norm_sqr(),
            b: z.norm_sqr(),
            c: inner(x, z).expect("equal lengths"),
        }
    }

    fn lambda_max(&self) -> f64 {
        let mid = 0.5 * (self.a + self.b);
        let half = 0.5 * (self.a - self.b);
        mid + (half * half + self.c.norm_sqr()).sqrt()
    }

    /// `<v, self v>`.
    fn form(&self, v: (Complex64, Complex64)) -> f64 {
        let (p, q) = v;
        self.a * p.norm_sqr() + self.b * q.norm_sqr() + 2.0 * (p.conj() * self.c * q).re
    }
}

/// The 2x2 reduction of `Z(y) >= 0`.
struct Reduced {
    k1: Herm2,
    k2: Herm2,
    /// `det K1`, `det K2` by the Lagrange identity (nonnegative, no cancellation).
    det1: f64,
    det2: f64,
}

fn gram_det(x: &CVector, z: &CVector) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            acc += (x[i] * z[j] - x[j] * z[i]).norm_sqr();
        }
    }
    acc
}

impl Reduced {
    fn new(p: &StackedProblem) -> Self {
        let x1 = p.block_of(&p.comm_dir, 0);
        let z1 = p.block_of(&p.sense_dir, 0);
        let x2 = p.block_of(&p.comm_dir, 1);
        let z2 = p.block_of(&p.sense_dir, 1);
        Self {
            k1: Herm2::gram(&x1, &z1),
            k2: Herm2::gram(&x2, &z2),
            det1: gram_det(&x1, &z1),
            det2: gram_det(&x2, &z2),
        }
    }

    /// Smallest `y2` with `I - K1/y1 - K2/y2 >= 0`, for `y1 > lambda_max(K1)`.
    fn boundary_y2(&self, y1: f64) -> f64 {
        let (k1, k2) = (&self.k1, &self.k2);
        // A = I - K1 / y1
        let a11 = 1.0 - k1.a / y1;
        let a22 = 1.0 - k1.b / y1;
        let a12 = -k1.c / y1;
        let det_a = 1.0 - (k1.a + k1.b) / y1 + self.det1 / (y1 * y1);
        if det_a <= 0.0 || a11 < 0.0 || a22 < 0.0 {
            return f64::INFINITY;
        }
        // det(A - s K2) = det_a - lin s + det2 s^2
        let lin = a11 * k2.b + a22 * k2.a - 2.0 * (a12 * k2.c.conj()).re;
        let disc = (lin * lin - 4.0 * self.det2 * det_a).max(0.0);
        let denom = lin + disc.sqrt();
        if denom <= 0.0 {
            return 0.0;
        }
        let s = 2.0 * det_a / denom;
        1.0 / s
    }

    /// Null vector of the singular `I - K1/y1 - K2/y2`.
    fn kernel(&self, y1: f64, y2: f64) -> (Complex64, Complex64) {
        let (k1, k2) = (&self.k1, &self.k2);
        let p = 1.0 - k1.a / y1 - k2.a / y2;
        let r = 1.0 - k1.b / y1 - k2.b / y2;
        let q = -k1.c / y1 - k2.c / y2;
        let first = (-q, Complex64::new(p, 0.0));
        let second = (Complex64::new(r, 0.0), -q.conj());
        let norm = |v: &(Complex64, Complex64)| v.0.norm_sqr() + v.1.norm_sqr();
        if norm(&first) >= norm(&second) {
            first
        } else {
            second
        }
    }

    /// Sign of the derivative of `P1 y1 + P2 boundary_y2(y1)`.
    fn slope_sign(&self, y1: f64, p1: f64, p2: f64) -> f64 {
        let y2 = self.boundary_y2(y1);
        if !y2.is_finite() {
            return -1.0;
        }
        let c = self.kernel(y1, y2);
        // ||u_i||^2 = c^H K_i c / y_i^2
        let e1 = self.k1.form(c) * y2 * y2;
        let e2 = self.k2.form(c) * y1 * y1;
        p1 * e2 - p2 * e1
    }
}

/// `Z(y) = y1 B1 + y2 B2 - M`.
pub fn slack_matrix(p: &StackedProblem, y1: f64, y2: f64) -> HMatrix {
    HMatrix::combination(&[(y1, &p.b1), (y2, &p.b2), (-1.0, &p.m)]).expect("equal dimensions")
}

const BISECTION_MAX_ITERS: usize = 400;

/// Minimizes `P1 y1 + P2 y2` over the dual feasible set.
pub fn solve_dual(p: &StackedProblem) -> Result<DualPoint> {
    let red = Reduced::new(p);
    let l1 = red.k1.lambda_max();
    let l2 = red.k2.lambda_max();
    let total = l1 + l2;
    if total == 0.0 || !total.is_finite() {
        return Err(Error::DegenerateInstance(
            "objective matrix is zero; every feasible W is optimal with value 0".into(),
        ));
    }
    let negligible = 1e-30 * total;
    let point = |y1: f64, y2: f64, iterations: usize| DualPoint {
        y1,
        y2,
        z: slack_matrix(p, y1, y2),
        iterations,
    };
    // One AP's block of M vanishes: its multiplier is zero.
    if l1 <= negligible {
        return Ok(point(0.0, l2, 0));
    }
    if l2 <= negligible {
        return Ok(point(l1, 0.0, 0));
    }

    let (p1, p2) = (p.p1_max, p.p2_max);
    let mut lo = l1;
    // Z(y) >= 0 at y1 = y2 = lambda_max(M) <= l1 + l2, so y1* <= (P1 + P2)(l1 + l2) / P1.
    let mut hi = l1 + (p1 + p2) * total / p1;
    let mut iterations = 0;
    while red.slope_sign(hi, p1, p2) < 0.0 && iterations < 64 {
        lo = hi;
        hi *= 2.0;
        iterations += 1;
    }
    while hi - lo > 4.0 * f64::EPSILON * hi && iterations < BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if red.slope_sign(mid, p1, p2) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let y1 = hi;
    let y2 = red.boundary_y2(y1);
    if !y2.is_finite() {
        return Err(Error::SolverFailure(format!(
            "dual boundary undefined at y1 = {y1:e}"
        )));
    }
    Ok(point(y1, y2, iterations))
}

/// Deterministic unit direction for a block that does not enter the
/// objective: the first canonical vector with a component outside the span
/// of that block's channel directions.
fn filler_direction(p: &StackedProblem, block: usize) -> CVector {
    let n = p.n;
    let mut basis: Vec<CVector> = Vec::new();
    for v in [
        p.block_of(&p.comm_dir, block),
        p.block_of(&p.sense_dir, block),
    ] {
        let mut r = v;
        for b in &basis {
            r = r.sub(&b.scale(inner(b, &r).unwrap())).unwrap();
        }
        if let Some(u) = r.normalized() {
            if r.norm() > 1e-12 {
                basis.push(u);
            }
        }
    }
    for k in 0..n {
        let mut r = CVector::basis(n, k);
        for b in &basis {
            r = r.sub(&b.scale(inner(b, &r).unwrap())).unwrap();
        }
        if r.norm() > 1e-8 {
            return r.normalized().unwrap();
        }
    }
    CVector::basis(n, 0)
}

fn scaled_block(v: &CVector, power: f64, fallback: impl FnOnce() -> CVector) -> CVector {
    match v.normalized() {
        Some(u) if v.norm() > 0.0 => u.scale_real(power.sqrt()),
        _ => fallback().scale_real(power.sqrt()),
    }
}

/// Null-space eigenvectors of `z` and the smallest eigenvalue.
fn null_space(z: &HMatrix, tol: &Tolerances) -> Result<(Vec<CVector>, usize)> {
    let e = eigh(z)?;
    let norm = e.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max);
    if e.min() < -tol.psd * norm {
        return Err(Error::SolverFailure(format!(
            "dual slack not PSD: min eigenvalue {:.3e} (norm {:.3e})",
            e.min(),
            norm
        )));
    }
    let cutoff = tol.null * norm;
    let null: Vec<CVector> = e
        .eigenvalues
        .iter()
        .zip(&e.eigenvectors)
        .filter(|(l, _)| **l <= cutoff)
        .map(|(_, v)| v.clone())
        .collect();
    let dim = null.len();
    Ok((null, dim))
}

/// Unit `x ∈ span{u, v}` with `||x_1||^2 = share`, for a two-dimensional null
/// space: diagonalize the block-1 energy form restricted to the span and mix
/// its extreme eigenvectors.
fn mix_null_pair(p: &StackedProblem, u: &CVector, v: &CVector, share: f64) -> CVector {
    let q = Herm2::gram(&p.block_of(u, 0), &p.block_of(v, 0));
    let mid = 0.5 * (q.a + q.b);
    let rad = ((0.5 * (q.a - q.b)).powi(2) + q.c.norm_sqr()).sqrt();
    let (qmin, qmax) = (mid - rad, mid + rad);
    // eigenvectors of [[a, c], [conj c, b]]
    let eigvec = |lambda: f64| -> (Complex64, Complex64) {
        let cand1 = (q.c, Complex64::new(lambda - q.a, 0.0));
        let cand2 = (Complex64::new(lambda - q.b, 0.0), q.c.conj());
        let n1 = cand1.0.norm_sqr() + cand1.1.norm_sqr();
        let n2 = cand2.0.norm_sqr() + cand2.1.norm_sqr();
        let (x, y, n) = if n1 >= n2 {
            (cand1.0, cand1.1, n1)
        } else {
            (cand2.0, cand2.1, n2)
        };
        if n == 0.0 {
            // q is a multiple of the identity
            return if lambda == qmax {
                (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            } else {
                (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
            };
        }
        let s = n.sqrt();
        (x / s, y / s)
    };
    let emin = eigvec(qmin);
    let emax = eigvec(qmax);
    let t = if qmax - qmin > 0.0 {
        ((share - qmin) / (qmax - qmin)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cmin, cmax) = ((1.0 - t).sqrt(), t.sqrt());
    let a = emin.0 * cmin + emax.0 * cmax;
    let b = emin.1 * cmin + emax.1 * cmax;
    u.scale(a).add(&v.scale(b)).unwrap()
}

/// Builds the rank-one primal from the dual optimum and certifies it.
pub fn recover_primal(p: &StackedProblem, d: &DualPoint) -> Result<SdpSolution> {
    recover_primal_with(p, d, &Tolerances::default())
}

pub fn recover_primal_with(
    p: &StackedProblem,
    d: &DualPoint,
    tol: &Tolerances,
) -> Result<SdpSolution> {
    let n = p.n;
    let (p1, p2) = (p.p1_max, p.p2_max);
    let (w1, w2, null_dim) = if d.y1 > 0.0 && d.y2 > 0.0 {
        let (null, dim) = null_space(&d.z, tol)?;
        let w = match dim {
            0 => {
                return Err(Error::SolverFailure(
                    "dual slack is strictly positive definite; dual point is not optimal".into(),
                ))
            }
            1 => null[0].clone(),
            2 => mix_null_pair(p, &null[0], &null[1], p1 / (p1 + p2)),
            k => {
                return Err(Error::DegenerateInstance(format!(
                    "null space of the dual slack has dimension {k} > 2"
                )))
            }
        };
        let w1 = scaled_block(&p.block_of(&w, 0), p1, || filler_direction(p, 0));
        let w2 = scaled_block(&p.block_of(&w, 1), p2, || filler_direction(p, 1));
        (w1, w2, dim)
    } else {
        // One multiplier is zero: that block never enters the objective.
        let (active, y) = if d.y1 > 0.0 { (0, d.y1) } else { (1, d.y2) };
        let sub = HMatrix::combination(&[
            (y, &HMatrix::identity(n)),
            (-1.0, &p.m.block(active * n, n)),
        ])?;
        let (null, dim) = null_space(&sub, tol)?;
        let dir = null
            .first()
            .cloned()
            .ok_or_else(|| Error::SolverFailure("active block has no null direction".into()))?;
        let power = [p1, p2];
        let on = scaled_block(&dir, power[active], || filler_direction(p, active));
        let off = filler_direction(p, 1 - active).scale_real(power[1 - active].sqrt());
        let (w1, w2) = if active == 0 { (on, off) } else { (off, on) };
        (w1, w2, dim + n)
    };

    let stacked = w1.concat(&w2).with_canonical_phase(1e-12);
    let pair = BeamformerPair::from_stacked(&stacked)?;
    let w_star = outer(&stacked);
    let primal_value = p.objective_matrix_value(&w_star)?;
    let dual_value = d.value(p);
    let gap = dual_value - primal_value;
    let complementarity_residual = trace_product(&w_star, &d.z)?;
    let block_power = (pair.w1.norm_sqr(), pair.w2.norm_sqr());
    let rank_certificate = verify_rank_bound(&w_star, tol.rank)?;

    if block_power.0 > p1 + tol.feas || block_power.1 > p2 + tol.feas {
        return Err(Error::SolverFailure(format!(
            "recovered beamformer infeasible: block powers {block_power:?}"
        )));
    }
    let scale = dual_value.max(1.0);
    if gap.abs() > tol.gap * scale {
        return Err(Error::SolverFailure(format!(
            "duality gap {gap:.3e} exceeds {:.1e} (dual {dual_value:.6e})",
            tol.gap
        )));
    }
    if complementarity_residual.abs() > tol.comp * scale {
        return Err(Error::SolverFailure(format!(
            "complementarity residual {complementarity_residual:.3e} exceeds {:.1e}",
            tol.comp
        )));
    }
    Ok(SdpSolution {
        w_star,
        pair,
        dual: d.clone(),
        primal_value,
        dual_value,
        gap,
        rank_certificate,
        complementarity_residual,
        null_dim,
        block_power,
    })
}

/// Largest integer rank `r` with `L r^2 <= M` for `L` equal-rank matrices and
/// `M` linear constraints.
pub fn lemma_rank_bound(matrices: usize, constraints: usize) -> usize {
    let mut r = 0;
    while matrices * (r + 1) * (r + 1) <= constraints {
        r += 1;
    }
    r
}

/// Checks that `w_star` is numerically rank one and within the rank bound for
/// one matrix under two power constraints.
pub fn verify_rank_bound(w_star: &HMatrix, tau_rank: f64) -> Result<RankCertificate> {
    let e = eigh(w_star)?;
    let n = w_star.dim();
    let lambda1 = e.max();
    let lambda2 = if n > 1 { e.eigenvalues[1] } else { 0.0 };
    let rank_bound = lemma_rank_bound(1, 2);
    if lambda1 <= 0.0 {
        return Err(Error::DegenerateInstance("W* is zero (rank 0)".into()));
    }
    let resolution = n as f64 * f64::EPSILON;
    let ratio = (lambda2.abs() / lambda1).max(resolution);
    let rank = if ratio <= tau_rank {
        1
    } else {
        e.eigenvalues
            .iter()
            .filter(|&&l| l.abs() > tau_rank * lambda1)
            .count()
            .max(2)
    };
    if rank > rank_bound {
        return Err(Error::RankCertificate {
            ratio,
            threshold: tau_rank,
            rank,
        });
    }
    Ok(RankCertificate {
        lambda1,
        lambda2,
        ratio,
        rank,
        rank_bound,
    })
}

/// Dual solve, primal recovery and rank certificate in one call.
pub fn solve(p: &StackedProblem) -> Result<SdpSolution> {
    solve_with(p, &Tolerances::default())
}

pub fn solve_with(p: &StackedProblem, tol: &Tolerances) -> Result<SdpSolution> {
    let d = solve_dual(p)?;
    recover_primal_with(p, &d, tol)
}
