//! Fast solver for the tempered time-fractional advection-dispersion equation
//!
//! ```text
//! u_t + D^{α,λ} u = u_xx - u_x + f,   0 < x < L,  0 < t ≤ T,
//! ```
//!
//! where D^{α,λ} is the Caputo-tempered derivative of order α ∈ (0, 1). The
//! time mesh is graded towards t = 0, the fractional history is compressed by
//! a sum-of-exponentials kernel, and each step is a Crank-Nicolson
//! tridiagonal solve at the half-point.
//!
//! Everything numerical is generic over [`Real`]; the aliases below fix the
//! scalar for the common cases.

pub mod derivative;
pub mod error;
pub mod harness;
pub mod mesh;
pub mod oracles;
pub mod quadrature;
pub mod real;
pub mod solver;
pub mod soe;
pub mod special;

pub use derivative::{
    advance_history, direct_l1_derivative, fast_derivative, history_coeffs, interp_weights, HistoryState,
    StepCoefficients, TemperedParams,
};
pub use error::{Error, Result};
pub use harness::{ErrorRow, ErrorTable};
pub use mesh::{SpatialGrid, TemporalMesh};
pub use oracles::{exact_solution_ex2, exact_tempered_caputo_power, manufactured_forcing, ManufacturedCase};
pub use real::Real;
pub use solver::{eigenvalue_check, solve, solve_reference, thomas_solve, ProblemSpec, Solution, TridiagonalSystem};
pub use soe::{build_soe, SoeApproximation};

pub type Soe64 = SoeApproximation<f64>;
pub type Soe32 = SoeApproximation<f32>;
pub type Mesh64 = TemporalMesh<f64>;
pub type Grid64 = SpatialGrid<f64>;
pub type Problem64 = ProblemSpec<f64>;
pub type Solution64 = Solution<f64>;

#[cfg(feature = "quad")]
pub use f128::f128;

#[cfg(feature = "quad")]
pub type SoeQuad = SoeApproximation<f128>;
#[cfg(feature = "quad")]
pub type MeshQuad = TemporalMesh<f128>;
