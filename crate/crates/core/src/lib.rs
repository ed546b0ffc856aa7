//! Energy-conserving spectral integrators for multi-frequency
//! highly-oscillatory Hamiltonian initial-value problems.
//!
//! The central object is the spectral HBVM one-step method: a `k`-stage
//! Runge-Kutta method whose stages live on a degree-`s` polynomial in the
//! orthonormal Legendre basis, with `s` chosen so the neglected expansion
//! coefficients fall below round-off. The crate provides
//!
//! * [`linalg`]: the small dense kernels the solver needs,
//! * [`polybasis`]: shifted Legendre polynomials and Gauss rules,
//! * [`truncation`]: the Bessel-bound criteria selecting `(s0, s, k)`,
//! * [`hbvm`]: coefficient construction, the blended iteration, drivers,
//! * [`problems`]: the Duffing, Fermi-Pasta-Ulam and plane-wave Schroedinger
//!   benchmark systems with exact or reference solutions,
//! * [`baselines`]: Stoermer-Verlet and the Gautschi/Deuflhard trigonometric
//!   integrators for comparison runs.

pub mod baselines;
pub mod dd;
pub mod error;
pub mod hbvm;
pub mod linalg;
#[cfg(any(test, feature = "oracle"))]
pub mod oracle;
pub mod polybasis;
pub mod problems;
pub mod truncation;

pub use error::{OscilError, Result};
pub use hbvm::{
    blended_sweep, build_coefficients, dense_output, integrate, residual_g, residual_g_linear,
    shbvm_step, warm_start, BlendedWorkspace, CoefficientSet, HamiltonianSystem, StepDiagnostics,
    Trajectory,
};
pub use linalg::{
    eigenvalues, kron_apply, lu_factor, lu_solve, max_norm, small_eigenvalue_min_modulus,
    spectral_norm, sym_eig, DenseMatrix, LuFactorization, SymEig,
};
pub use polybasis::{gauss_rule, legendre_all, legendre_int_all, QuadratureRule};
pub use truncation::{
    g_bound, g_bound_all, phi_u, select_params, spherical_bessel_j, SpectralParams,
    DEFAULT_EPSILON,
};
