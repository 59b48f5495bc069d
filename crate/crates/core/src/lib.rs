//! Contextual blocking bandits: the fluid LP and its vertices, the
//! full-information and bandit policies, a greedy baseline, brute-force
//! oracles and a multi-seed simulation harness.

pub mod baselines;
pub mod environment;
pub mod error;
pub mod fi_cbb;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod ucb_cbb;
pub mod verify;

pub use error::{CbbError, Result};
pub use instance::{named_instance, Instance, NamedInstance, RewardKind};
pub use lp::{compute_gaps, enumerate_extreme_points, solve_lp, tp_group_index, ExtremePoint, GapReport, LpObjective};
