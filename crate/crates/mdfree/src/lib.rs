//! Exact computation of the low-density power-series expansion of the planar
//! monomer-dimer free energy, together with evaluable lower and upper bounds.
//!
//! The computation runs a transfer-matrix engine over rectangles of growing
//! size, combines the per-rectangle partition functions into the
//! thermodynamic limit, extends the reliable order with C-finite correction
//! terms, and optionally distributes the work over several word-sized prime
//! fields whose results are recombined by Chinese remaindering and rational
//! reconstruction.
//!
//! The crate is organized bottom-up:
//!
//! * [`coeff`] — coefficient fields (prime residues and big rationals)
//! * [`poly`] — truncated dense polynomials over a coefficient field
//! * [`transfer`] — the in-place column step and partition-function tables
//! * [`oracle`] — an independent brute-force tiling census for verification
//! * [`series`] — power-series calculus (log, inversion, integration)
//! * [`limit`] — thermodynamic-limit extraction and residual sequences
//! * [`correction`] — recurrence guessing and correction application
//! * [`reconstruct`] — multi-prime lifting of rational coefficients
//! * [`numeval`] — rigorous decimal enclosures for bound evaluation
//! * [`pipeline`] — end-to-end orchestration and the public result types

pub mod coeff;
pub mod correction;
pub mod limit;
pub mod numeval;
pub mod oracle;
pub mod pipeline;
pub mod poly;
pub mod reconstruct;
pub mod series;
pub mod transfer;

pub use coeff::{CoeffError, CoeffField, PrimeField, Rat, Rationals};
pub use pipeline::{
    compute_expansion, eval_bounds, BoundValue, CorrectionPlan, Expansion, PrimePolicy,
    RunOptions,
};
