//! Finite noise Boolean algebras: construction, spectral resolution, noise
//! operators, Bonferroni-type inequalities and worked scenarios.

pub mod dominance;
pub mod error;
pub mod inequalities;
pub mod linalg;
pub mod noisebool;
pub mod operators;
pub mod probspace;
pub mod scenarios;
pub mod spectral;

pub use error::{Error, Result};
pub use noisebool::{generated, generated_with_complement, verify_axioms, Elem, NoiseBooleanAlgebra, VerificationReport};
pub use probspace::{product_space, FiniteProbabilitySpace, ProductSpace, RandomVariable, SigmaField, DEFAULT_TOL};
pub use spectral::{SpectralMeasure, SpectralResolution};
