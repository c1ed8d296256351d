//! Verification toolkit for low-regularity well-posedness of the 1D Zakharov
//! system with data in Fourier-Lebesgue spaces `Ĥ^{s,r}`.
//!
//! * [`param_region`] decides admissibility of `(k, l, p, b, b1)` exactly.
//! * [`grid_spaces`] holds periodic-lattice `Ĥ^{s,r}` and `X^{s,b}_r` norms.
//! * [`kernel_verifier`] integrates the weighted convolution kernels behind the
//!   bilinear estimates and decides whether their suprema saturate.
//! * [`zakharov_solver`] is an integrating-factor RK4 pseudospectral solver.

pub mod grid_spaces;
pub mod kernel_verifier;
pub mod param_region;
pub mod quadrature;
pub mod zakharov_solver;
