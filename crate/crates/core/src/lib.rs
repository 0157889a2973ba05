//! Poisson kernels and Dirichlet problems for constant-coefficient
//! second-order elliptic systems in the upper half-space, on a uniform
//! periodic boundary grid.
//!
//! The modules cover the boundary grid and FFT convolution ([`grid`]),
//! coefficient tensors and ellipticity checks ([`systems`]), three Poisson
//! kernel constructions ([`kernels`]), the solver and its experiments
//! ([`solver`]), maximal operators and `A_p` weights ([`maxop`]), and
//! function-space norms, Boyd indices and atoms ([`spaces`]).

mod fft;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod maxop;
pub mod solver;
pub mod spaces;
pub mod systems;
pub mod util;
