//! Schatten norms, output purity, and structure tests for linear maps on
//! matrix algebras.
//!
//! The crate is organized in four layers:
//!
//! - [`linalg`]: dense complex matrices, Hermitian eigensystems, Kronecker
//!   products, and Schatten `p`-norms.
//! - [`channel`]: linear maps `M_n → M_m` stored as transfer matrices, with
//!   Choi/Kraus/Pauli views, structural predicates (completely positive,
//!   entrywise positive, trace preserving, 2-positive falsification), and the
//!   standard channel families (depolarizing, generalized depolarizing,
//!   diagonal qubit maps, Werner–Holevo, random-unitary and random Kraus
//!   channels).
//! - [`norm`]: the induced `p→q` norms and the maximal output purity `ν_t`,
//!   estimated by seeded multi-restart ascent with exact special cases, plus
//!   block-norm machinery (Bhatia–Kittaneh comparison, contraction
//!   decomposition of positive block matrices).
//! - [`verify`]: multiplicativity experiments over generated channel
//!   ensembles with machine-readable reports.
//!
//! Everything is deterministic given the seeds in the relevant configuration
//! structs: the same inputs produce bit-identical outputs.
//!
//! ```
//! use schatten::channel::ChannelMap;
//! use schatten::linalg::SchattenExponent;
//! use schatten::norm::{nu, OptimizerConfig};
//!
//! let dep = ChannelMap::depolarizing(2, 0.5).unwrap();
//! let t = SchattenExponent::new(2.0).unwrap();
//! let mut cfg = OptimizerConfig::default();
//! cfg.restarts = 4;
//! let result = nu(&dep, t, &cfg).unwrap();
//! assert!((result.value - 0.625f64.sqrt()).abs() < 1e-6);
//! ```

pub mod channel;
pub mod error;
pub mod linalg;
pub mod norm;
pub mod verify;

pub use error::{Error, Result};
