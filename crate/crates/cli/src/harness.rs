//! Problem/method dispatch, error metrics, and the table/figure runners.

use crate::config::RunConfig;
use oscil_core::baselines::{integrate_classical, ClassicalMethod};
use oscil_core::problems::{
    duffing, duffing_exact, duffing_initial, duffing_system, first_order_initial, fpu_default,
    fpu_default_system, fpu_initial, nls, nls_exact, nls_initial, reference_trajectory,
};
use oscil_core::truncation::{select_params, SpectralParams};
use oscil_core::{lu_factor, HamiltonianSystem, OscilError};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown problem {0:?} (expected duffing, fpu or nls)")]
    UnknownProblem(String),
    #[error("unknown method {0:?} (expected sv, gautschi, deuflhard, gauss-<s> or shbvm)")]
    UnknownMethod(String),
    #[error("unknown table {0:?}")]
    UnknownTable(String),
    #[error("unknown figure {0:?} (expected g-bound, phi-u or time-vs-N)")]
    UnknownFigure(String),
    #[error("{0}")]
    Unsupported(String),
    #[error("{0}")]
    Config(String),
    #[error("solver diverged at step {step}: {message}")]
    SolverDiverged { step: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(OscilError),
}

impl From<OscilError> for HarnessError {
    fn from(e: OscilError) -> Self {
        match e {
            OscilError::SolverDiverged { step, source } => {
                HarnessError::SolverDiverged { step, message: source.to_string() }
            }
            other => HarnessError::Core(other),
        }
    }
}

impl HarnessError {
    /// Process exit code: 2 usage error, 3 solver divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::UnknownProblem(_)
            | HarnessError::UnknownMethod(_)
            | HarnessError::UnknownTable(_)
            | HarnessError::UnknownFigure(_)
            | HarnessError::Unsupported(_)
            | HarnessError::Config(_) => 2,
            HarnessError::SolverDiverged { .. } => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    Duffing,
    Fpu,
    Nls,
}

impl std::str::FromStr for Problem {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s.to_ascii_lowercase().as_str() {
            "duffing" => Ok(Problem::Duffing),
            "fpu" => Ok(Problem::Fpu),
            "nls" => Ok(Problem::Nls),
            other => Err(HarnessError::UnknownProblem(other.to_string())),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Duffing => "duffing",
            Problem::Fpu => "fpu",
            Problem::Nls => "nls",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    StormerVerlet,
    Gautschi,
    Deuflhard,
    /// s-stage Gauss collocation, run as the fixed `(s, s, s)` tableau.
    Gauss(usize),
    Shbvm,
}

impl std::str::FromStr for Method {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "sv" | "stormer-verlet" => Ok(Method::StormerVerlet),
            "gautschi" => Ok(Method::Gautschi),
            "deuflhard" => Ok(Method::Deuflhard),
            "shbvm" => Ok(Method::Shbvm),
            other => {
                if let Some(stages) = other.strip_prefix("gauss-") {
                    let s: usize = stages
                        .parse()
                        .map_err(|_| HarnessError::UnknownMethod(other.to_string()))?;
                    if s >= 1 && s <= 16 {
                        return Ok(Method::Gauss(s));
                    }
                }
                Err(HarnessError::UnknownMethod(other.to_string()))
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::StormerVerlet => f.write_str("sv"),
            Method::Gautschi => f.write_str("gautschi"),
            Method::Deuflhard => f.write_str("deuflhard"),
            Method::Gauss(s) => write!(f, "gauss-{s}"),
            Method::Shbvm => f.write_str("shbvm"),
        }
    }
}

/// Row scale of the `table` command: `Desk` keeps the first two rows of each
/// method block (enough for one convergence rate), `Full` runs the
/// complete published row sets including the multi-million-step classical
/// rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Desk,
    Full,
}

impl std::str::FromStr for Scale {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(HarnessError::Config(format!("unknown scale {other:?}"))),
        }
    }
}

/// One table row: step count, wall time, errors and (for the spectral
/// method) the selected truncation indices.
#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub n: usize,
    pub time_s: f64,
    /// Max position error for Duffing; max full-state error for FPU/NLS.
    pub e_q: f64,
    /// Max velocity error (Duffing only).
    pub e_p: Option<f64>,
    /// Max relative Hamiltonian deviation.
    pub e_h: f64,
    /// Max absolute Hamiltonian deviation.
    pub e_h_abs: f64,
    pub params: Option<(usize, usize, usize)>,
    /// `(rate, flagged)`: flagged when the step ratio is not an exact halving.
    pub rate_q: Option<(f64, bool)>,
    pub rate_p: Option<(f64, bool)>,
    pub rate_h: Option<(f64, bool)>,
}

/// Exact CSV header of table and solve output.
pub const CSV_HEADER: &str = "N,time_s,e_q,e_p,e_H,rate_q,rate_p,rate_H,s0,s,k";

/// 17-significant-digit (round-trip exact) float formatting.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn format_rate(r: &Option<(f64, bool)>) -> String {
    match r {
        None => String::new(),
        Some((v, false)) => format_float(*v),
        Some((v, true)) => format!("{}*", format_float(*v)),
    }
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        let (s0, s, k) = match self.params {
            Some((a, b, c)) => (a.to_string(), b.to_string(), c.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            format_float(self.time_s),
            format_float(self.e_q),
            self.e_p.map(format_float).unwrap_or_default(),
            format_float(self.e_h),
            format_rate(&self.rate_q),
            format_rate(&self.rate_p),
            format_rate(&self.rate_h),
            s0,
            s,
            k
        )
    }
}

/// Max-norm trajectory and Hamiltonian errors between aligned trajectories.
///
/// `traj` and `reference` must share the time grid; `hamiltonians` is the
/// energy along the computed trajectory.
pub fn compute_errors(
    traj: &[Vec<f64>],
    reference: &[Vec<f64>],
    hamiltonians: &[f64],
) -> Result<(f64, f64, f64), HarnessError> {
    if traj.len() != reference.len() {
        return Err(HarnessError::Core(OscilError::DimensionMismatch {
            expected: reference.len(),
            got: traj.len(),
        }));
    }
    let mut e_y = 0.0f64;
    for (a, b) in traj.iter().zip(reference) {
        if a.len() != b.len() {
            return Err(HarnessError::Core(OscilError::DimensionMismatch {
                expected: b.len(),
                got: a.len(),
            }));
        }
        for (x, y) in a.iter().zip(b) {
            e_y = e_y.max((x - y).abs());
        }
    }
    let h0 = hamiltonians[0];
    let e_h_abs = hamiltonians
        .iter()
        .fold(0.0f64, |acc, &h| acc.max((h - h0).abs()));
    Ok((e_y, e_h_abs / h0.abs().max(f64::MIN_POSITIVE), e_h_abs))
}

struct DuffingSetup {
    kappa: f64,
    beta: f64,
}

const DUFFING: DuffingSetup = DuffingSetup { kappa: 7.0, beta: 500.0 };
const NLS_R: usize = 20;

fn nls_kappa() -> f64 {
    std::f64::consts::PI / 10.0
}

fn classical_kind(method: Method) -> Option<ClassicalMethod> {
    match method {
        Method::StormerVerlet => Some(ClassicalMethod::StormerVerlet),
        Method::Gautschi => Some(ClassicalMethod::Gautschi),
        Method::Deuflhard => Some(ClassicalMethod::Deuflhard),
        _ => None,
    }
}

fn spectral_params(
    cfg: &RunConfig,
    sys: &HamiltonianSystem,
    h: f64,
) -> Result<SpectralParams, HarnessError> {
    match cfg.method {
        Method::Gauss(stages) => Ok(SpectralParams::gauss(stages)),
        Method::Shbvm => {
            let omega = cfg.omega.unwrap_or(sys.omega);
            let nu = cfg.nu.unwrap_or(sys.nu);
            Ok(select_params(omega, h, nu, cfg.u)?)
        }
        _ => unreachable!("classical methods carry no spectral parameters"),
    }
}

/// Run one configuration and measure its errors.
pub fn run_solve(cfg: &RunConfig) -> Result<BenchRecord, HarnessError> {
    let t_end = cfg.t_end_or_default();
    let n = cfg.steps;
    assert!(n >= 1, "steps must be positive");
    let h = t_end / n as f64;
    match (cfg.problem, classical_kind(cfg.method)) {
        (Problem::Duffing, Some(kind)) => {
            let p2 = duffing(DUFFING.kappa, DUFFING.beta);
            let start = Instant::now();
            let traj = integrate_classical(kind, &p2, &[0.0], &[DUFFING.beta], h, n)?;
            let time_s = start.elapsed().as_secs_f64();
            let (e_q, e_p) = duffing_qv_errors(h, traj.qs.iter(), traj.vs.iter())?;
            let (e_h, e_h_abs) = drift(&traj.hamiltonians);
            Ok(BenchRecord {
                n,
                time_s,
                e_q,
                e_p: Some(e_p),
                e_h,
                e_h_abs,
                params: None,
                rate_q: None,
                rate_p: None,
                rate_h: None,
            })
        }
        (Problem::Duffing, None) => {
            let sys = duffing_system(DUFFING.kappa, DUFFING.beta)?;
            let params = spectral_params(cfg, &sys, h)?;
            let y0 = duffing_initial(DUFFING.kappa, DUFFING.beta);
            let start = Instant::now();
            let traj = oscil_core::integrate(&sys, &y0, h, n, &params)?;
            let time_s = start.elapsed().as_secs_f64();
            let omega = sys.omega;
            let qs = traj.states.iter().map(|s| vec![s[0]]).collect::<Vec<_>>();
            let vs = traj.states.iter().map(|s| vec![omega * s[1]]).collect::<Vec<_>>();
            let (e_q, e_p) = duffing_qv_errors(h, qs.iter(), vs.iter())?;
            let (e_h, e_h_abs) = drift(&traj.hamiltonians);
            Ok(BenchRecord {
                n,
                time_s,
                e_q,
                e_p: Some(e_p),
                e_h,
                e_h_abs,
                params: spectral_param_triple(cfg.method, &params),
                rate_q: None,
                rate_p: None,
                rate_h: None,
            })
        }
        (Problem::Fpu, kind) => {
            let sys = fpu_default_system()?;
            let p2 = fpu_default()?;
            let (q0, v0) = fpu_initial(8);
            let y0 = first_order_initial(&p2.a, &q0, &v0)?;
            let reference = reference_trajectory(&sys, &y0, t_end, n)?;
            let (states, hams, time_s, params) = match kind {
                Some(kind) => {
                    let start = Instant::now();
                    let traj = integrate_classical(kind, &p2, &q0, &v0, h, n)?;
                    let time_s = start.elapsed().as_secs_f64();
                    // express in scaled variables (q, p = A^{-1} v)
                    let lu = lu_factor(&p2.a)?;
                    let mut states = Vec::with_capacity(traj.qs.len());
                    for (q, v) in traj.qs.iter().zip(&traj.vs) {
                        let p = lu.solve(v)?;
                        let mut y = q.clone();
                        y.extend_from_slice(&p);
                        states.push(y);
                    }
                    (states, traj.hamiltonians, time_s, None)
                }
                None => {
                    let params = spectral_params(cfg, &sys, h)?;
                    let start = Instant::now();
                    let traj = oscil_core::integrate(&sys, &y0, h, n, &params)?;
                    let time_s = start.elapsed().as_secs_f64();
                    (
                        traj.states,
                        traj.hamiltonians,
                        time_s,
                        spectral_param_triple(cfg.method, &params),
                    )
                }
            };
            let (e_y, e_h, e_h_abs) = compute_errors(&states, &reference, &hams)?;
            Ok(BenchRecord {
                n,
                time_s,
                e_q: e_y,
                e_p: None,
                e_h,
                e_h_abs,
                params,
                rate_q: None,
                rate_p: None,
                rate_h: None,
            })
        }
        (Problem::Nls, Some(_)) => Err(HarnessError::Unsupported(format!(
            "method {} integrates second-order problems; nls is first-order",
            cfg.method
        ))),
        (Problem::Nls, None) => {
            let sys = nls(NLS_R, nls_kappa())?;
            let params = spectral_params(cfg, &sys, h)?;
            let y0 = nls_initial(NLS_R, nls_kappa());
            let start = Instant::now();
            let traj = oscil_core::integrate(&sys, &y0, h, n, &params)?;
            let time_s = start.elapsed().as_secs_f64();
            let reference: Vec<Vec<f64>> = (0..=n)
                .map(|i| nls_exact(i as f64 * h, NLS_R, nls_kappa()))
                .collect();
            let (e_y, e_h, e_h_abs) = compute_errors(&traj.states, &reference, &traj.hamiltonians)?;
            Ok(BenchRecord {
                n,
                time_s,
                e_q: e_y,
                e_p: None,
                e_h,
                e_h_abs,
                params: spectral_param_triple(cfg.method, &params),
                rate_q: None,
                rate_p: None,
                rate_h: None,
            })
        }
    }
}

fn spectral_param_triple(
    method: Method,
    params: &SpectralParams,
) -> Option<(usize, usize, usize)> {
    match method {
        Method::Shbvm => Some((params.s0, params.s, params.k)),
        _ => None,
    }
}

fn drift(hamiltonians: &[f64]) -> (f64, f64) {
    let h0 = hamiltonians[0];
    let abs = hamiltonians
        .iter()
        .fold(0.0f64, |acc, &h| acc.max((h - h0).abs()));
    (abs / h0.abs().max(f64::MIN_POSITIVE), abs)
}

fn duffing_qv_errors<'a>(
    h: f64,
    qs: impl Iterator<Item = &'a Vec<f64>>,
    vs: impl Iterator<Item = &'a Vec<f64>>,
) -> Result<(f64, f64), HarnessError> {
    let mut e_q = 0.0f64;
    let mut e_p = 0.0f64;
    for (idx, (q, v)) in qs.zip(vs).enumerate() {
        let (q_ex, v_ex) = duffing_exact(idx as f64 * h, DUFFING.kappa, DUFFING.beta)?;
        e_q = e_q.max((q[0] - q_ex).abs());
        e_p = e_p.max((v[0] - v_ex).abs());
    }
    Ok((e_q, e_p))
}

/// Attach convergence rates to consecutive rows of one method block.
pub fn attach_rates(rows: &mut [BenchRecord]) {
    for i in 1..rows.len() {
        let (prev, cur) = {
            let (a, b) = rows.split_at_mut(i);
            (&a[i - 1], &mut b[0])
        };
        let exact_doubling = cur.n == 2 * prev.n;
        let ratio = (cur.n as f64 / prev.n as f64).ln();
        let rate = |e_prev: f64, e_cur: f64| -> Option<(f64, bool)> {
            if e_prev <= 0.0 || e_cur <= 0.0 {
                return None;
            }
            if exact_doubling {
                Some(((e_prev / e_cur).log2(), false))
            } else {
                Some(((e_prev / e_cur).ln() / ratio, true))
            }
        };
        cur.rate_q = rate(prev.e_q, cur.e_q);
        cur.rate_p = match (prev.e_p, cur.e_p) {
            (Some(a), Some(b)) => rate(a, b),
            _ => None,
        };
        cur.rate_h = rate(prev.e_h, cur.e_h);
    }
}

/// Write records as CSV with the pinned header.
pub fn write_csv(path: &Path, rows: &[BenchRecord]) -> Result<(), HarnessError> {
    let mut out = String::with_capacity(128 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

struct TableBlock {
    method: Method,
    rows: Vec<usize>,
}

fn table_blocks(table_id: &str) -> Result<(Problem, Vec<TableBlock>), HarnessError> {
    let b = |method: Method, rows: Vec<usize>| TableBlock { method, rows };
    match table_id {
        "duffing-classical" => Ok((
            Problem::Duffing,
            vec![
                b(Method::StormerVerlet, vec![1_250_000, 2_500_000, 5_000_000, 10_000_000, 20_000_000]),
                b(Method::Gautschi, vec![1_250_000, 2_500_000, 5_000_000, 10_000_000, 20_000_000]),
                b(Method::Deuflhard, vec![625_000, 1_250_000, 2_500_000, 5_000_000, 10_000_000]),
            ],
        )),
        "duffing-gauss" => Ok((
            Problem::Duffing,
            vec![
                b(Method::Gauss(1), vec![1_250_000, 2_500_000, 5_000_000, 10_000_000, 20_000_000]),
                b(Method::Gauss(2), vec![200_000, 400_000, 800_000, 1_600_000]),
                b(Method::Gauss(3), vec![25_000, 50_000, 100_000, 200_000]),
                b(Method::Gauss(4), vec![12_500, 25_000, 50_000, 100_000]),
            ],
        )),
        "duffing-shbvm" => Ok((
            Problem::Duffing,
            vec![b(Method::Shbvm, (800..=1500).step_by(100).collect())],
        )),
        "fpu-classical" => Ok((
            Problem::Fpu,
            vec![
                b(Method::StormerVerlet, vec![160_000, 320_000, 640_000, 1_280_000, 2_560_000]),
                b(Method::Gautschi, vec![10_000, 20_000, 40_000, 80_000, 160_000, 320_000, 640_000, 1_280_000]),
                b(Method::Deuflhard, vec![10_000, 20_000, 40_000, 80_000, 160_000, 320_000, 640_000, 1_280_000]),
            ],
        )),
        "fpu-gauss" => Ok((
            Problem::Fpu,
            vec![
                b(Method::Gauss(1), vec![320_000, 640_000, 1_280_000, 2_560_000]),
                b(Method::Gauss(2), vec![40_000, 80_000, 160_000, 320_000, 640_000, 1_280_000]),
                b(Method::Gauss(3), vec![10_000, 20_000, 40_000, 80_000, 160_000, 320_000]),
                b(Method::Gauss(4), vec![10_000, 20_000, 40_000, 80_000, 160_000]),
            ],
        )),
        "fpu-shbvm" => Ok((
            Problem::Fpu,
            vec![b(Method::Shbvm, (500..=1500).step_by(100).collect())],
        )),
        "nls-gauss" => Ok((
            Problem::Nls,
            vec![
                b(Method::Gauss(1), vec![16_000, 32_000, 64_000, 128_000, 256_000, 512_000, 1_024_000]),
                b(Method::Gauss(2), vec![4_000, 8_000, 16_000, 32_000, 64_000, 128_000, 256_000]),
                b(Method::Gauss(3), vec![2_000, 4_000, 8_000, 16_000, 32_000, 64_000, 128_000]),
                b(Method::Gauss(4), vec![1_000, 2_000, 4_000, 8_000, 16_000, 32_000]),
            ],
        )),
        "nls-shbvm" => Ok((
            Problem::Nls,
            vec![b(Method::Shbvm, vec![200, 250, 300, 350, 400, 450, 500])],
        )),
        other => Err(HarnessError::UnknownTable(other.to_string())),
    }
}

pub const TABLE_IDS: [&str; 8] = [
    "duffing-classical",
    "duffing-gauss",
    "duffing-shbvm",
    "fpu-classical",
    "fpu-gauss",
    "fpu-shbvm",
    "nls-gauss",
    "nls-shbvm",
];

/// Run one benchmark table and write one CSV file per method block.
/// Returns the written paths.
pub fn run_table(
    table_id: &str,
    scale: Scale,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let (problem, blocks) = table_blocks(table_id)?;
    let mut written = Vec::new();
    let single_block = blocks.len() == 1;
    for block in &blocks {
        let rows: Vec<usize> = match scale {
            Scale::Full => block.rows.clone(),
            Scale::Desk => block.rows.iter().take(2).copied().collect(),
        };
        let mut records = Vec::with_capacity(rows.len());
        for n in rows {
            let cfg = RunConfig::new(problem, block.method, n);
            records.push(run_solve(&cfg)?);
        }
        attach_rates(&mut records);
        let name = if single_block {
            format!("{table_id}.csv")
        } else {
            format!("{table_id}-{}.csv", block.method)
        };
        let path = out_dir.join(name);
        write_csv(&path, &records)?;
        written.push(path);
    }
    Ok(written)
}

/// Figure data sets: the bound vs the integrals, the truncation-index
/// function, and wall time against step count.
pub fn run_figure(figure_id: &str, out_dir: &Path) -> Result<PathBuf, HarnessError> {
    match figure_id {
        "g-bound" => {
            let path = out_dir.join("g-bound.csv");
            let rule = oscil_core::gauss_rule(200)?;
            let mut out = String::from("omega_h,s,int_cos_abs,int_sin_abs,g_bound\n");
            for &omega_h in &[1.0, 5.0, 10.0] {
                for s in 0..=40usize {
                    let ic = rule
                        .integrate(|c| oscil_core::legendre_all(s + 1, c)[s] * (omega_h * c).cos());
                    let is = rule
                        .integrate(|c| oscil_core::legendre_all(s + 1, c)[s] * (omega_h * c).sin());
                    let g = oscil_core::g_bound(s, omega_h);
                    out.push_str(&format!(
                        "{},{},{},{},{}\n",
                        format_float(omega_h),
                        s,
                        format_float(ic.abs()),
                        format_float(is.abs()),
                        format_float(g)
                    ));
                }
            }
            std::fs::write(&path, out)?;
            Ok(path)
        }
        "phi-u" => {
            let path = out_dir.join("phi-u.csv");
            let mut out = String::from("omega_h,phi_u\n");
            let mut grid = vec![0.1, 0.5];
            grid.extend((1..=100).map(|i| i as f64));
            for omega_h in grid {
                let v = oscil_core::phi_u(omega_h, oscil_core::DEFAULT_EPSILON)?;
                out.push_str(&format!("{},{}\n", format_float(omega_h), v));
            }
            std::fs::write(&path, out)?;
            Ok(path)
        }
        "time-vs-n" | "time-vs-N" => {
            let path = out_dir.join("time-vs-N.csv");
            let mut out = String::from("N,time_s\n");
            for n in (800..=5000).step_by(100) {
                let cfg = RunConfig::new(Problem::Duffing, Method::Shbvm, n);
                let record = run_solve(&cfg)?;
                out.push_str(&format!("{},{}\n", n, format_float(record.time_s)));
            }
            std::fs::write(&path, out)?;
            Ok(path)
        }
        other => Err(HarnessError::UnknownFigure(other.to_string())),
    }
}

/// The `params` command: print the selected `(s0, s, k)` and the machine
/// epsilon used.
pub fn params_command(omega_h: f64, nu: f64, u: f64) -> Result<String, HarnessError> {
    let params = select_params(omega_h, 1.0, nu, u)?;
    Ok(format!(
        "(s0, s, k) = ({}, {}, {})\nu = {}",
        params.s0,
        params.s,
        params.k,
        format_float(u)
    ))
}
