//! Finite-difference laboratory for one-dimensional damped and viscoelastic
//! wave equations driven by a Neumann boundary input.
//!
//! Two solvers are provided: an explicit three-level scheme for
//! `u_tt - u_xx + a(x) u_t = 0` ([`damped`]) and a Crank-Nicolson scheme
//! with trapezoid memory quadrature for
//! `u_tt - u_xx + int_0^t g(t - s) u_xx(s) ds = 0` ([`viscoelastic`]).
//! Both impose `u(0, t) = f(t)` and `u_x(L, t) = h(t)`.

pub mod bounds;
pub mod damped;
pub mod energy;
pub mod error;
pub mod functions;
pub mod grid;
pub mod inputs;
pub mod oracle;
pub mod problem;
pub mod quadrature;
pub mod viscoelastic;

pub use error::{Result, WaveError};
pub use functions::{RelaxationKernel, SpaceFunction, Table, TimeFunction};
pub use grid::Grid1D;
pub use problem::{EquationKind, InitOrder, ProblemSpec, SolutionField, SolverOptions};
