//! Fast, memory-compressed evaluation of the Caputo fractional derivative and
//! time-fractional diffusion solvers built on it.

pub mod bench;
pub mod caputo;
pub mod error;
pub mod history;
pub mod kernel;
pub mod pde;

pub use caputo::{CaputoStepper, Interp, LocalCoefficients, PerfCounters, SchemeConfig, SchemeKind};
pub use error::{Error, Result};
pub use history::{HistoryLedger, MergeEvent, MomentPayload, StructureViolation};
pub use kernel::KernelPolynomial;
