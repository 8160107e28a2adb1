//! Short-time survival probability of quantum systems driven by
//! time-dependent, possibly non-Hermitian Hamiltonians.
//!
//! The second-order survival probability over `[t1, t2]` is
//!
//! ```text
//! P₂ = 1 − 2i<I−> − Δ+²(I−, ψ) − Δ−²(I+, ψ)
//!        − ∫_{t1}^{t2} ds ∫_{t1}^{s} ds' <[H+(s), H−(s')] − [H+(s'), H−(s)]>
//! ```
//!
//! with `H± = (H ± H†)/2`, `I± = ∫ H±` and `Δ±²(A, ψ) = <A²> ± <A>²`. The crate
//! evaluates it by quadrature ([`perturbative`]), checks it against an
//! independent Dyson-amplitude route and a numerically exact propagator
//! ([`propagator`]), and runs frequency sweeps and discrepancy maps
//! ([`experiments`]).
//!
//! The numerical kernels are generic over the real scalar (`f32`, `f64`);
//! the aliases below fix the double-precision instantiation used by the CLI.

pub mod error;
pub mod experiments;
pub mod models;
pub mod operator;
pub mod perturbative;
pub mod propagator;
pub mod quadrature;
pub mod scalar;

pub use error::{Error, Result};
pub use models::{Hamiltonian, InteractionFrame};
pub use operator::{commutator, delta_minus, delta_plus, expectation, hermitian_split, pauli};
pub use scalar::Real;

pub type Complex64 = num_complex::Complex<f64>;
pub type CMatrix = operator::Matrix<f64>;
pub type StateVector = operator::StateVector<f64>;
pub type HamiltonianModel = models::HamiltonianModel<f64>;
pub type ModelPreset = models::ModelPreset<f64>;
pub type FourierHamiltonian = models::FourierHamiltonian<f64>;
pub type DriveProfile = models::DriveProfile<f64>;
pub type QuadratureConfig = quadrature::QuadratureConfig<f64>;
pub type PropagationConfig = propagator::PropagationConfig<f64>;
pub type SurvivalBreakdown = perturbative::SurvivalBreakdown<f64>;
