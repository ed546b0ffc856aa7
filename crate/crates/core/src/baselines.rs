//! Reference integrators for second-order problems: Stoermer-Verlet and the
//! one-step trigonometric methods of Gautschi and Deuflhard. The
//! trigonometric family is
//!
//! ```text
//! q1 = cos(hA) q + h sinc(hA) v + h^2/2 psi(hA) g(q)
//! v1 = -A sin(hA) q + cos(hA) v + h/2 [psi0(hA) g(q) + psi1(hA) g(q1)]
//! ```
//!
//! with `g = -grad_f`, `psi = sinc psi1`, `psi0 = cos psi1` (which makes the
//! method symmetric and exact on linear problems), `psi_Gautschi =
//! sinc^2(x/2)` and `psi_Deuflhard = sinc(x)`.

use crate::error::Result;
use crate::linalg::{sym_eig, DenseMatrix, SymEig};
use crate::problems::SecondOrderProblem;

/// `sin(x)/x` with a series branch near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Eigendecomposition of `A` with the trigonometric diagonal functions of
/// `hA` cached per eigenvalue.
pub struct TrigKernel {
    eig: SymEig,
    pub h: f64,
    cos_h: Vec<f64>,
    sin_h: Vec<f64>,
    sinc_h: Vec<f64>,
    /// Gautschi filter `sinc^2(h lambda / 2)`.
    psi_gautschi: Vec<f64>,
}

impl TrigKernel {
    pub fn new(a: &DenseMatrix, h: f64) -> Result<Self> {
        let eig = sym_eig(a)?;
        let xs: Vec<f64> = eig.eigenvalues.iter().map(|&l| h * l).collect();
        Ok(Self {
            cos_h: xs.iter().map(|&x| x.cos()).collect(),
            sin_h: xs.iter().map(|&x| x.sin()).collect(),
            sinc_h: xs.iter().map(|&x| sinc(x)).collect(),
            psi_gautschi: xs.iter().map(|&x| sinc(0.5 * x) * sinc(0.5 * x)).collect(),
            eig,
            h,
        })
    }

    fn apply(&self, diag: &[f64], v: &[f64]) -> Vec<f64> {
        let qt_v = self.eig.eigenvectors.transpose().matvec(v);
        let scaled: Vec<f64> = qt_v.iter().zip(diag).map(|(&c, &d)| d * c).collect();
        self.eig.eigenvectors.matvec(&scaled)
    }

    /// Exact flow of `q'' = -A^2 q` over one step.
    pub fn rotate(&self, q: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = self.h;
        let q1a = self.apply(&self.cos_h, q);
        let hsincv: Vec<f64> = self.apply(&self.sinc_h, v).iter().map(|&x| h * x).collect();
        let asin: Vec<f64> = self
            .eig
            .eigenvalues
            .iter()
            .zip(&self.sin_h)
            .map(|(&l, &s)| l * s)
            .collect();
        let v1a = self.apply(&asin, q);
        let v1b = self.apply(&self.cos_h, v);
        let q1: Vec<f64> = q1a.iter().zip(&hsincv).map(|(&a, &b)| a + b).collect();
        let v1: Vec<f64> = v1a.iter().zip(&v1b).map(|(&a, &b)| b - a).collect();
        (q1, v1)
    }
}

/// Leapfrog step (half-kick, drift, half-kick) for `q'' = -A^2 q - grad_f(q)`.
pub fn stormer_verlet_step(
    q: &[f64],
    v: &[f64],
    h: f64,
    p2: &SecondOrderProblem,
) -> (Vec<f64>, Vec<f64>) {
    let a0 = p2.accel(q);
    let v_half: Vec<f64> = v.iter().zip(&a0).map(|(&vi, &ai)| vi + 0.5 * h * ai).collect();
    let q1: Vec<f64> = q.iter().zip(&v_half).map(|(&qi, &vi)| qi + h * vi).collect();
    let a1 = p2.accel(&q1);
    let v1: Vec<f64> = v_half
        .iter()
        .zip(&a1)
        .map(|(&vi, &ai)| vi + 0.5 * h * ai)
        .collect();
    (q1, v1)
}

fn trig_step(
    q: &[f64],
    v: &[f64],
    h: f64,
    p2: &SecondOrderProblem,
    kernel: &TrigKernel,
    psi: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let m = q.len();
    // psi1 = psi / sinc, psi0 = cos * psi1
    let psi1: Vec<f64> = psi.iter().zip(&kernel.sinc_h).map(|(&p, &s)| p / s).collect();
    let psi0: Vec<f64> = psi1.iter().zip(&kernel.cos_h).map(|(&p, &c)| p * c).collect();
    let g0: Vec<f64> = p2.grad_f(q).iter().map(|&x| -x).collect();
    let (q_rot, v_rot) = kernel.rotate(q, v);
    let kick = kernel.apply(psi, &g0);
    let mut q1 = vec![0.0; m];
    for d in 0..m {
        q1[d] = q_rot[d] + 0.5 * h * h * kick[d];
    }
    let g1: Vec<f64> = p2.grad_f(&q1).iter().map(|&x| -x).collect();
    let kick0 = kernel.apply(&psi0, &g0);
    let kick1 = kernel.apply(&psi1, &g1);
    let mut v1 = vec![0.0; m];
    for d in 0..m {
        v1[d] = v_rot[d] + 0.5 * h * (kick0[d] + kick1[d]);
    }
    (q1, v1)
}

/// Gautschi's trigonometric method: filter `psi = sinc^2(hA/2)`.
pub fn gautschi_step(
    q: &[f64],
    v: &[f64],
    h: f64,
    p2: &SecondOrderProblem,
    kernel: &TrigKernel,
) -> (Vec<f64>, Vec<f64>) {
    trig_step(q, v, h, p2, kernel, &kernel.psi_gautschi)
}

/// Deuflhard's trigonometric method: filter `psi = sinc(hA)`, two force
/// evaluations per step.
pub fn deuflhard_step(
    q: &[f64],
    v: &[f64],
    h: f64,
    p2: &SecondOrderProblem,
    kernel: &TrigKernel,
) -> (Vec<f64>, Vec<f64>) {
    trig_step(q, v, h, p2, kernel, &kernel.sinc_h)
}

/// Which classical method an integration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalMethod {
    StormerVerlet,
    Gautschi,
    Deuflhard,
}

/// Trajectory of a second-order integration in the original `(q, v)`
/// variables.
pub struct ClassicalTrajectory {
    pub qs: Vec<Vec<f64>>,
    pub vs: Vec<Vec<f64>>,
    pub hamiltonians: Vec<f64>,
}

/// Run `n` constant-size steps of a classical method.
pub fn integrate_classical(
    method: ClassicalMethod,
    p2: &SecondOrderProblem,
    q0: &[f64],
    v0: &[f64],
    h: f64,
    n: usize,
) -> Result<ClassicalTrajectory> {
    let kernel = match method {
        ClassicalMethod::StormerVerlet => None,
        _ => Some(TrigKernel::new(&p2.a, h)?),
    };
    let mut qs = Vec::with_capacity(n + 1);
    let mut vs = Vec::with_capacity(n + 1);
    let mut hams = Vec::with_capacity(n + 1);
    let mut q = q0.to_vec();
    let mut v = v0.to_vec();
    qs.push(q.clone());
    vs.push(v.clone());
    hams.push(p2.hamiltonian(&q, &v));
    for _ in 0..n {
        let (q1, v1) = match method {
            ClassicalMethod::StormerVerlet => stormer_verlet_step(&q, &v, h, p2),
            ClassicalMethod::Gautschi => gautschi_step(&q, &v, h, p2, kernel.as_ref().unwrap()),
            ClassicalMethod::Deuflhard => deuflhard_step(&q, &v, h, p2, kernel.as_ref().unwrap()),
        };
        q = q1;
        v = v1;
        qs.push(q.clone());
        vs.push(v.clone());
        hams.push(p2.hamiltonian(&q, &v));
    }
    Ok(ClassicalTrajectory { qs, vs, hamiltonians: hams })
}
