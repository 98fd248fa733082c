//! Equilibrium solvers for two-player zero-sum games.
//!
//! Normal-form games are solved with regret-matching and mirror-descent
//! simplex minimizers; extensive-form games with the counterfactual regret
//! family. Both come in a reward-transformed flavour (RTRM+ and RTCFR+) whose
//! last iterate converges to a Nash equilibrium.

pub mod cfr;
pub mod efg;
pub mod error;
pub mod games;
pub mod harness;
pub mod nfg;
pub mod record;
pub mod rt;
pub mod simplex;

pub use efg::{BehaviorProfile, TreeError, TreeErrorKind, TreeGame};
pub use error::{Error, Result};
pub use nfg::{MatrixGame, Player, Profile, SimplexVector};
pub use record::{ConvergenceRecord, RunOutput};
