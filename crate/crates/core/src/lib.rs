//! Rate-equation models of social voting on a news aggregator.
//!
//! Two models of how votes accumulate on a story are provided. The first
//! (`v1`) uses a single interestingness `r` and a fan pool that grows as
//! `a N^-b` per vote; it runs in wall-clock hours. The second (`v2`)
//! separates fans of prior voters from everyone else, with interestingness
//! `r_fan` and `r_nonfan`, and runs in activity-rescaled "Digg hours".
//!
//! Around the deterministic solvers sit a stochastic event-level simulator,
//! the estimators that fit both site-wide and per-story parameters from vote
//! streams, and an early-vote popularity predictor.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clock;
pub mod dynamics;
pub mod error;
pub mod estimate;
pub mod io;
pub mod ode;
pub mod predict;
pub mod simulate;
pub mod special;
pub mod types;
pub mod visibility;

pub use clock::ActivityClock;
pub use error::{Error, Result};
pub use ode::StepControl;
pub use types::{GlobalParamsV1, GlobalParamsV2, Lognormal, StoryParams, StoryRecord, TimeUnit, VoteEvent};
pub use visibility::{ListPosition, PromotionModel, SurfLaw};

/// Version tag written into every output file.
pub const SCHEMA_VERSION: u32 = 1;
