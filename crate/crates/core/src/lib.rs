//! Spectra of non-Hermitian `q`-pointed star graphs with rotating complex
//! Robin couplings.
//!
//! The spectrum splits into a β-independent real lattice `κ = nπ/2` and a
//! β-dependent, generally complex subset given by the zeros of
//! `G(λ) = (iβ)^{p+2} sin^p λ + λ^{p+2} cos^p λ`, `p = q − 2`. For large `|λ|`
//! the latter cluster in `p`-plets around the odd lattice points
//! `(2M+1)π/2`.
//!
//! ```
//! use num_complex::Complex64;
//! use stargraph::{rootfinder, StarModel};
//!
//! let model = StarModel::with_beta(4, Complex64::new(1.0, 0.0)).unwrap();
//! let root = rootfinder::solve_branch(&model, 10, 0, rootfinder::DEFAULT_TOL).unwrap();
//! assert!(root.is_certified());
//! assert!((root.epsilon.unwrap().im + 9.19e-4).abs() < 1e-6);
//! ```

pub mod asymptotics;
pub mod error;
pub mod model;
pub mod rootfinder;
pub mod secular;
pub mod symmetry;

pub use error::{Error, Result};
pub use model::{parity_permutation, EdgePermutation, SpectralPoint, StarModel};
pub use rootfinder::{ComplexRoot, ContourRegion, Method, RegionSearch, RootFlag, Shape};
