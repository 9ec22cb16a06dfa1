//! Completed automorphic L-functions at desk scale: exact arithmetic for
//! several concrete families (real Dirichlet characters, class-group
//! characters of imaginary quadratic fields, holomorphic newforms and their
//! symmetric powers, elliptic curves ordered by naive height), a numerical
//! inverse-Mellin kernel with certified tails, and a verdict engine that
//! certifies non-positive-definiteness by detecting sign changes of the
//! profile phi(y) = sum_n lambda(n) W(n y).
//!
//! The crate is organised around the pipeline
//!
//! ```text
//! family enumeration -> coefficient series -> kernel W / phi -> verdicts
//!                    -> scan store -> statistics / Monte-Carlo reports
//! ```
//!
//! Everything is deterministic under a fixed seed; hot loops are
//! data-parallel via rayon when the `parallel` feature (default) is enabled
//! and fall back to sequential iteration otherwise.

pub mod arith;
pub mod config;
pub mod exec;
pub mod families;
pub mod kernel;
pub mod polyint;
pub mod posdef;
pub mod randmodel;
pub mod scan;
pub mod special;
pub mod stats;

pub use arith::{CoefficientSeries, LocalFactor, SeriesMode};
pub use kernel::{GammaFactor, KernelCtx, KernelEnvelope};
pub use posdef::{PosDefVerdict, SignChangeCount, VerdictStatus};
