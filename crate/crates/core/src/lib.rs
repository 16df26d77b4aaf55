//! Zero-temperature absorption spectra of linear molecular aggregates.
//!
//! Two propagation routes are provided for a Frenkel-exciton chain whose
//! monomers couple to a bath with a sum-of-Lorentzians spectral density:
//!
//! * [`zofe`]: the non-Markovian QSD equation at vanishing noise, closed by
//!   the zeroth-order functional expansion. Cost scales with the number of
//!   monomers only.
//! * [`pseudomode`]: the numerically exact route that embeds one damped
//!   mode per Lorentzian into the system and propagates in a truncated
//!   Fock basis.
//!
//! [`spectra`] turns dipole correlation traces into spectra and compares
//! them; [`oracle`] holds closed-form references for the monomer and the
//! Markov limit.
//!
//! All numerics are generic over [`Real`]; the `*64` aliases below fix `f64`.
//!
//! ```no_run
//! use exciton_spectra::*;
//! use exciton_spectra::spectra::{absorption_with_method, overlap, uniform_grid};
//!
//! # fn main() -> Result<()> {
//! let agg = Aggregate64::homogeneous(2, 0.0, 0.44)?;
//! let bath = Bath64::uniform(2, &[BathTerm64::from_huang_rhys(0.64, 1.0, 0.25)])?;
//! let config = Config64::fitted(0.002, 150.0)?.with_sample_spacing(0.05)?;
//! let nu = uniform_grid(-5.0, 7.0, 2401)?;
//!
//! let zofe = zofe::propagate_zofe(&agg, &bath, &config)?;
//! let pm = pseudomode::pm_correlation(&agg, &bath, BasisCaps::uniform(10), &config, pseudomode::DEFAULT_BUDGET)?;
//! let a = absorption_with_method(&zofe, 0.01, &nu, Method::Zofe)?;
//! let b = absorption_with_method(&pm, 0.01, &nu, Method::Pseudomode)?;
//! println!("overlap {:.2}%", overlap(&a, &b)?);
//! # Ok(())
//! # }
//! ```

// `!(x > 0)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod propagation;
pub mod pseudomode;
pub mod scalar;
pub mod spectra;
pub mod zofe;

pub use error::{Error, Result};
pub use model::{AggregateSpec, BathTerm, LorentzianBath, UnitSystem};
pub use propagation::PropagationConfig;
pub use pseudomode::BasisCaps;
pub use scalar::Real;
pub use spectra::{CorrelationTrace, Method, Spectrum};

pub type Aggregate64 = model::AggregateSpec<f64>;
pub type Bath64 = model::LorentzianBath<f64>;
pub type BathTerm64 = model::BathTerm<f64>;
pub type Config64 = propagation::PropagationConfig<f64>;
pub type Trace64 = spectra::CorrelationTrace<f64>;
pub type Spectrum64 = spectra::Spectrum<f64>;
pub type Generator64 = pseudomode::PmGenerator<f64>;

pub type Aggregate32 = model::AggregateSpec<f32>;
pub type Bath32 = model::LorentzianBath<f32>;
pub type Trace32 = spectra::CorrelationTrace<f32>;
pub type Spectrum32 = spectra::Spectrum<f32>;
