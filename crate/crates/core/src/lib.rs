//! Truncated matricial moment problems on a finite interval `[a, b]`.
//!
//! Given Hermitian `N x N` matrices `S_0..S_l`, decide whether a
//! non-decreasing matrix function `M` on `[a, b]` with
//! `∫ x^n dM(x) = S_n` exists and, if so, construct atomic solutions.
//!
//! The construction goes through a Hilbert space spanned by Gram vectors
//! of the block Hankel matrix, a symmetric contraction defined on a
//! subspace, and its self-adjoint contractive extensions:
//!
//! - [`linalg`]: Hermitian eigensolver, pseudo-inverse, square root, Loewner order.
//! - [`moments`]: moment sequences, block Hankel matrices, discrete measures.
//! - [`solvability`]: the solvability criteria for odd and even numbers of moments.
//! - [`operator`]: Gram space and the contraction defined by the moments.
//! - [`extensions`]: extremal and canonical extensions, generalized resolvents.
//! - [`solutions`]: solution measures, verification, Stieltjes–Perron recovery.
//! - [`io`]: JSON file formats.
//! - [`cli`]: the `matmoment` command line tool.
//!
//! ```
//! use matmoment::{moments::MomentSequence, solvability, solutions, extensions::CanonicalParameter};
//!
//! // Moments of the measure (δ_0 + δ_1)/2 on [0, 1].
//! let seq = MomentSequence::scalar(0.0, 1.0, &[1.0, 0.5, 0.5]).unwrap();
//! assert!(solvability::check(&seq).unwrap().solvable);
//! let k = CanonicalParameter::zero();
//! let mu = solutions::solve(&seq, &k, &k).unwrap();
//! assert!(solutions::verify(&mu, &seq, 1e-8).unwrap().passed);
//! ```

pub mod error;
pub mod cli;
pub mod extensions;
pub mod io;
pub mod linalg;
pub mod moments;
pub mod operator;
pub mod solutions;
pub mod solvability;

pub use error::{Error, Result};
pub use extensions::CanonicalParameter;
pub use linalg::HermMatrix;
pub use moments::{Atom, DiscreteMatrixMeasure, MomentSequence};
