//! Configuration, α sweeps, CSV artifacts and the certificate suite behind
//! the `jsac` binary.

use std::fmt;
use std::fs;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    all_baselines, mrt_comm, mrt_sense, oracle, BaselineResult, OracleSettings,
};
use crate::error::{Error, Result};
use crate::metrics::{snr_comm, snr_sense};
use crate::scenario::{generate, stack, validate_alpha, Scenario, ScenarioConfig};
use crate::sdp::{solve_with, verify_rank_bound, SdpSolution, SolveDiagnostics, Tolerances};

/// dB value written for a zero linear SNR.
pub const ZERO_SNR_DB: f64 = -300.0;
/// Relative slack for monotonicity and dominance comparisons.
pub const FRONTIER_SLACK: f64 = 1e-8;
/// Oracle agreement threshold used by `verify`.
pub const ORACLE_TOLERANCE: f64 = 1e-4;
/// Endpoint agreement with the MRT closed forms.
pub const ENDPOINT_TOLERANCE: f64 = 1e-8;

/// JSON run configuration: the scenario keys plus optional run settings.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_rank: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if let Some(t) = self.tau_rank {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("tau_rank must be positive, got {t}")));
            }
        }
        if let Some(a) = &self.alphas {
            AlphaGrid::List(a.clone()).values()?;
        }
        Ok(())
    }

    pub fn tolerances(&self) -> Tolerances {
        Tolerances {
            rank: self.tau_rank.unwrap_or(Tolerances::default().rank),
            ..Tolerances::default()
        }
    }
}

/// α values of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum AlphaGrid {
    /// `count` uniformly spaced values from 1 down to 0.
    Count(usize),
    /// Explicit values, sorted descending before use.
    List(Vec<f64>),
}

impl AlphaGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            AlphaGrid::Count(count) => {
                if *count < 2 {
                    return Err(Error::Config(format!(
                        "alpha count must be at least 2, got {count}"
                    )));
                }
                let last = (*count - 1) as f64;
                Ok((0..*count).map(|k| 1.0 - k as f64 / last).collect())
            }
            AlphaGrid::List(list) => {
                if list.is_empty() {
                    return Err(Error::Config("alpha list is empty".into()));
                }
                for &a in list {
                    validate_alpha(a)?;
                }
                let mut v = list.clone();
                v.sort_by(|a, b| b.total_cmp(a));
                Ok(v)
            }
        }
    }
}

impl FromStr for AlphaGrid {
    type Err = Error;

    /// `"101"` is a count, `"1,0.5,0"` a list.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if !s.contains(',') {
            if let Ok(count) = s.parse::<usize>() {
                return Ok(AlphaGrid::Count(count));
            }
        }
        let list = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad alpha value {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(AlphaGrid::List(list))
    }
}

pub fn to_db(linear: f64) -> f64 {
    if linear > 0.0 {
        10.0 * linear.log10()
    } else {
        ZERO_SNR_DB
    }
}

pub fn from_db(db: f64) -> f64 {
    if db <= ZERO_SNR_DB {
        0.0
    } else {
        10f64.powf(db / 10.0)
    }
}

/// One solved operating point.
#[derive(Clone, Debug, Serialize)]
pub struct TradeoffPoint {
    pub alpha: f64,
    pub snr_c: f64,
    pub snr_s: f64,
    pub snr_c_db: f64,
    pub snr_s_db: f64,
    pub value: f64,
    pub diagnostics: SolveDiagnostics,
}

impl TradeoffPoint {
    fn from_solution(s: &Scenario, sol: &SdpSolution) -> Result<Self> {
        let snr_c = snr_comm(s, &sol.pair)?;
        let snr_s = snr_sense(s, &sol.pair)?;
        Ok(Self {
            alpha: s.alpha(),
            snr_c,
            snr_s,
            snr_c_db: to_db(snr_c),
            snr_s_db: to_db(snr_s),
            value: sol.primal_value,
            diagnostics: sol.diagnostics(s.alpha()),
        })
    }
}

/// Solves one α and evaluates the literal SNRs of the optimizer.
pub fn solve_point(
    s: &Scenario,
    alpha: f64,
    tol: &Tolerances,
) -> Result<(SdpSolution, TradeoffPoint)> {
    let s = s.with_alpha(alpha)?;
    let sol = solve_with(&stack(&s), tol)?;
    let point = TradeoffPoint::from_solution(&s, &sol)?;
    Ok((sol, point))
}

/// Worst certificate values over a sweep.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct CertificateSummary {
    pub max_eigen_ratio: f64,
    pub max_relative_gap: f64,
    pub max_complementarity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    /// Ordered by α descending.
    pub points: Vec<TradeoffPoint>,
    pub baselines: Vec<BaselineResult>,
    pub certificates: CertificateSummary,
}

/// How a baseline point is covered by the frontier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dominance {
    /// By the sweep point with this index.
    Sampled(usize),
    /// By the optimum at this α, located by bisection between sweep points.
    Refined(f64),
    NotDominated,
}

impl Dominance {
    pub fn holds(&self) -> bool {
        !matches!(self, Dominance::NotDominated)
    }
}

fn covers(c: f64, s: f64, target: (f64, f64)) -> bool {
    c >= target.0 - FRONTIER_SLACK * target.0.max(1.0)
        && s >= target.1 - FRONTIER_SLACK * target.1.max(1.0)
}

impl SweepReport {
    pub fn alphas(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.alpha).collect()
    }

    /// Largest relative breach of "snr_c nonincreasing, snr_s nondecreasing"
    /// along decreasing α; `<= 0` means monotone.
    pub fn monotonicity_violation(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| {
                let dc = (w[1].snr_c - w[0].snr_c) / w[0].snr_c.max(1.0);
                let ds = (w[0].snr_s - w[1].snr_s) / w[0].snr_s.max(1.0);
                dc.max(ds)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_monotone(&self) -> bool {
        self.points.len() < 2 || self.monotonicity_violation() <= FRONTIER_SLACK
    }

    /// Sweep points not dominated by another sweep point, α descending,
    /// with repeated points dropped.
    pub fn frontier(&self) -> Vec<&TradeoffPoint> {
        let beats = |a: &TradeoffPoint, b: &TradeoffPoint| {
            a.snr_c >= b.snr_c && a.snr_s >= b.snr_s && (a.snr_c > b.snr_c || a.snr_s > b.snr_s)
        };
        let mut out: Vec<&TradeoffPoint> = Vec::new();
        for p in &self.points {
            if self.points.iter().any(|q| beats(q, p)) {
                continue;
            }
            if out.iter().any(|q| q.snr_c == p.snr_c && q.snr_s == p.snr_s) {
                continue;
            }
            out.push(p);
        }
        out
    }

    /// Pairwise scan over the sweep points.
    pub fn sampled_dominance(&self, target: (f64, f64)) -> Option<usize> {
        self.points
            .iter()
            .position(|p| covers(p.snr_c, p.snr_s, target))
    }
}

/// Finds a frontier point dominating `target`: first among the sweep points,
/// then by bisecting on α for the smallest α whose optimum still reaches
/// `target.0` in communication SNR (the point with the largest sensing SNR
/// subject to that).
pub fn frontier_dominance(
    s: &Scenario,
    report: &SweepReport,
    target: (f64, f64),
) -> Result<Dominance> {
    if let Some(i) = report.sampled_dominance(target) {
        return Ok(Dominance::Sampled(i));
    }
    let tol = Tolerances::default();
    let at = |a: f64| solve_point(s, a, &tol).map(|(_, p)| p);
    let reach = |p: &TradeoffPoint| p.snr_c >= target.0 - FRONTIER_SLACK * target.0.max(1.0);
    let mut hi = 1.0;
    let mut best = at(hi)?;
    if !reach(&best) {
        return Ok(Dominance::NotDominated);
    }
    let mut lo = 0.0;
    let p0 = at(lo)?;
    if reach(&p0) {
        hi = lo;
        best = p0;
    } else {
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let p = at(mid)?;
            if reach(&p) {
                hi = mid;
                best = p;
            } else {
                lo = mid;
            }
        }
    }
    Ok(if covers(best.snr_c, best.snr_s, target) {
        Dominance::Refined(hi)
    } else {
        Dominance::NotDominated
    })
}

/// Sweeps the given α values on a fixed channel draw.
pub fn sweep_scenario(s: &Scenario, alphas: &[f64], tol: &Tolerances) -> Result<SweepReport> {
    for &a in alphas {
        validate_alpha(a)?;
    }
    let solved: Vec<(SdpSolution, TradeoffPoint)> = alphas
        .par_iter()
        .map(|&a| solve_point(s, a, tol))
        .collect::<Result<_>>()?;
    let mut certificates = CertificateSummary::default();
    for (sol, _) in &solved {
        certificates.max_eigen_ratio = certificates.max_eigen_ratio.max(sol.rank_certificate.ratio);
        certificates.max_relative_gap = certificates.max_relative_gap.max(sol.relative_gap().abs());
        certificates.max_complementarity = certificates
            .max_complementarity
            .max(sol.complementarity_residual.abs());
    }
    Ok(SweepReport {
        points: solved.into_iter().map(|(_, p)| p).collect(),
        baselines: all_baselines(s),
        certificates,
    })
}

/// Draws the channels for `config` and sweeps `alpha_count` uniform α values.
pub fn run_sweep(config: &ScenarioConfig, alpha_count: usize) -> Result<SweepReport> {
    let s = generate(config)?;
    let alphas = AlphaGrid::Count(alpha_count).values()?;
    sweep_scenario(&s, &alphas, &Tolerances::default())
}

fn db_field(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?)
}

fn write_points<'a>(
    path: &Path,
    points: impl IntoIterator<Item = &'a TradeoffPoint>,
) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["snr_c_db", "snr_s_db"])?;
    for p in points {
        w.write_record([db_field(p.snr_c_db), db_field(p.snr_s_db)])?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of `baselines.csv`: every baseline at its literal SNRs, plus
/// `standalone_isolated` with the cross-AP terms dropped.
pub fn baseline_rows(baselines: &[BaselineResult]) -> Vec<(String, f64, f64)> {
    let mut rows = Vec::new();
    for b in baselines {
        rows.push((b.name.to_string(), b.snr_c, b.snr_s));
        if let Some((c, s)) = b.isolated {
            rows.push((format!("{}_isolated", b.name), c, s));
        }
    }
    rows
}

pub fn write_baselines_csv(path: &Path, baselines: &[BaselineResult]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["name", "snr_c_db", "snr_s_db"])?;
    for (name, c, s) in baseline_rows(baselines) {
        w.write_record([name, db_field(to_db(c)), db_field(to_db(s))])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `region.csv`, `points.csv` and `baselines.csv` into `dir`.
pub fn emit_csv(report: &SweepReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    write_points(&dir.join("region.csv"), &report.points)?;
    write_points(&dir.join("points.csv"), report.frontier())?;
    write_baselines_csv(&dir.join("baselines.csv"), &report.baselines)?;
    Ok(())
}

/// Writes one diagnostics record per solve as a JSON array.
pub fn emit_diagnostics(report: &SweepReport, path: impl AsRef<Path>) -> Result<()> {
    let records: Vec<&SolveDiagnostics> = report.points.iter().map(|p| &p.diagnostics).collect();
    let mut text = serde_json::to_string_pretty(&records)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// One named pass/fail check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self {
            name,
            passed,
            detail,
        }
    }

    fn error(name: &'static str, e: &Error) -> Self {
        Self::new(name, false, e.to_string())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InstanceReport {
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl InstanceReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub instances: Vec<InstanceReport>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.instances.iter().all(InstanceReport::passed)
    }

    pub fn passed_count(&self) -> usize {
        self.instances.iter().filter(|i| i.passed()).count()
    }

    pub fn failures(&self) -> impl Iterator<Item = (u64, &Check)> {
        self.instances.iter().flat_map(|i| {
            i.checks
                .iter()
                .filter(|c| !c.passed)
                .map(move |c| (i.seed, c))
        })
    }
}

impl fmt::Display for CertificateReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for inst in &self.instances {
            for c in &inst.checks {
                let tag = if c.passed { "ok  " } else { "FAIL" };
                writeln!(
                    f,
                    "seed {:>4}  {tag}  {:<20} {}",
                    inst.seed, c.name, c.detail
                )?;
            }
        }
        write!(
            f,
            "{}/{} instances passed",
            self.passed_count(),
            self.instances.len()
        )
    }
}

fn endpoint_check(s: &Scenario, alpha: f64, tol: &Tolerances) -> Check {
    let (name, baseline) = match s.with_alpha(alpha) {
        Ok(sa) if alpha == 1.0 => ("endpoint_alpha_1", mrt_comm(&sa)),
        Ok(sa) => ("endpoint_alpha_0", mrt_sense(&sa)),
        Err(e) => return Check::error("endpoint", &e),
    };
    let c = &s.config;
    let want = if alpha == 1.0 {
        (c.p1_max.sqrt() * s.h1.norm() + c.p2_max.sqrt() * s.h2.norm()).powi(2) / c.sigma1_sq
    } else {
        let g2 = s.g2.norm_sqr();
        g2 * (c.p1_max.sqrt() * s.g1.norm() + c.p2_max.sqrt() * s.g2.norm()).powi(2) / c.sigma2_sq
    };
    let solved = s
        .with_alpha(alpha)
        .and_then(|sa| solve_with(&stack(&sa), tol));
    match (solved, baseline) {
        (Ok(sol), Ok(b)) => {
            let rel = (sol.primal_value - want).abs() / want;
            let rel_b = (b.objective - want).abs() / want;
            Check::new(
                name,
                rel <= ENDPOINT_TOLERANCE && rel_b <= ENDPOINT_TOLERANCE,
                format!(
                    "value {:.10e}, closed form {want:.10e}, rel {rel:.1e}",
                    sol.primal_value
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => Check::error(name, &e),
    }
}

/// Certificate checks for one channel draw at `s.alpha()`.
pub fn verify_scenario(s: &Scenario, tau_rank: f64, settings: OracleSettings) -> Vec<Check> {
    // Solve without internal acceptance thresholds so each condition is
    // reported on its own.
    let loose = Tolerances {
        rank: 1.0,
        gap: f64::INFINITY,
        comp: f64::INFINITY,
        feas: f64::INFINITY,
        ..Tolerances::default()
    };
    let tol = Tolerances::default();
    let mut checks = Vec::new();
    let sol = match solve_with(&stack(s), &loose) {
        Ok(sol) => sol,
        Err(e) => {
            checks.push(Check::error("solve", &e));
            return checks;
        }
    };
    let scale = sol.dual_value.max(1.0);
    checks.push(Check::new(
        "duality_gap",
        sol.gap.abs() <= tol.gap * scale,
        format!("gap {:.3e} (dual {:.6e})", sol.gap, sol.dual_value),
    ));
    checks.push(Check::new(
        "complementarity",
        sol.complementarity_residual.abs() <= tol.comp,
        format!("Tr(W Z) {:.3e}", sol.complementarity_residual),
    ));
    checks.push(match verify_rank_bound(&sol.w_star, tau_rank) {
        Ok(r) => Check::new(
            "rank_one",
            true,
            format!("lambda2/lambda1 {:.3e} <= {tau_rank:.1e}", r.ratio),
        ),
        Err(e) => Check::error("rank_one", &e),
    });
    let c = &s.config;
    let (e1, e2) = sol.block_power;
    checks.push(Check::new(
        "feasibility",
        e1 <= c.p1_max + tol.feas && e2 <= c.p2_max + tol.feas,
        format!("block powers {e1:.12}, {e2:.12}"),
    ));
    let o = oracle(s, settings);
    let rel = (sol.primal_value - o.value).abs() / sol.primal_value.max(f64::MIN_POSITIVE);
    checks.push(Check::new(
        "oracle_agreement",
        rel <= ORACLE_TOLERANCE,
        format!(
            "sdp {:.10e}, oracle {:.10e}, rel {rel:.1e}",
            sol.primal_value, o.value
        ),
    ));
    let worst = all_baselines(s)
        .iter()
        .map(|b| b.objective - sol.primal_value)
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new(
        "baseline_dominance",
        worst <= FRONTIER_SLACK * scale,
        format!("max baseline excess {worst:.3e}"),
    ));
    checks.push(endpoint_check(s, 1.0, &tol));
    checks.push(endpoint_check(s, 0.0, &tol));
    checks
}

/// Runs [`verify_scenario`] on the configured draw, or on every seed in `seeds`.
pub fn run_verify(config: &RunConfig, seeds: Option<Range<u64>>) -> Result<CertificateReport> {
    config.validate()?;
    let tau_rank = config.tolerances().rank;
    let seeds: Vec<u64> = match seeds {
        Some(r) => r.collect(),
        None => vec![config.scenario.seed],
    };
    let instances = seeds
        .par_iter()
        .map(|&seed| {
            let s = generate(&config.scenario.with_seed(seed))?;
            Ok(InstanceReport {
                seed,
                checks: verify_scenario(&s, tau_rank, OracleSettings::default()),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificateReport { instances })
}

/// Parses `a..b` (half-open) or a single seed.
pub fn parse_seed_range(text: &str) -> Result<Range<u64>> {
    let bad = || Error::Config(format!("bad seed range {text:?}; expected a..b"));
    match text.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if b <= a {
                return Err(bad());
            }
            Ok(a..b)
        }
        None => {
            let a: u64 = text.trim().parse().map_err(|_| bad())?;
            Ok(a..a + 1)
        }
    }
}
