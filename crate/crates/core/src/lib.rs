//! Vilenkin-Fourier analysis on bounded Vilenkin groups at finite resolution.
//!
//! The crate computes characters, fast spectral transforms, Dirichlet kernels
//! and partial sums on the rank-`N` cosets of a Vilenkin group, together with
//! the `L_p`, weak-`L_p` and martingale Hardy quasi-norms. On top of these it
//! builds p-atoms, the standard counterexample martingales, and scenario
//! runners that measure boundedness and divergence of subsequences of partial
//! sums.
//!
//! ```
//! use vilenkin::{group::GeneratorSequence, transform::{Grid, dirichlet_direct}};
//!
//! let grid = Grid::new(GeneratorSequence::walsh(), 4).unwrap();
//! let d8 = dirichlet_direct(&grid, 8).unwrap();
//! assert_eq!(d8.values()[0].re, 8.0);
//! assert_eq!(d8.values()[1].re, 0.0);
//! ```

pub mod error;
pub mod experiments;
pub mod group;
pub mod io;
pub mod martingale;
pub mod norms;
pub mod selftest;
pub mod transform;

pub use error::{Error, Result};
pub use group::{DigitConvention, GeneratorSequence, GroupPoint, VIndex};
pub use transform::{Grid, GridFunction, SpectralVector};
