//! Predicting which artists a user will listen to next from a timestamped
//! listening log.
//!
//! Users are scored by how closely their artist distribution matches the
//! global one (mainstreaminess) and binned into low, medium and high groups.
//! Each user's history is split by time; recommenders see only the training
//! part and are compared by recall and precision over the held-out artists.
//!
//! The main recommender ranks artists by base-level activation,
//! `ln(sum_j (t_ref - t_j + 1)^(-d))`, which grows with how often and how
//! recently an artist was played. Four baselines are included: global
//! popularity, personal play counts, personal recency and user-based
//! collaborative filtering.
//!
//! ```
//! use artistpref::ingest::{build_user_histories, Dataset};
//! use artistpref::recommend::{recommend_bll, BllParams};
//!
//! let mut data = Dataset::default();
//! for (artist, ts) in [("a", 1), ("b", 2), ("a", 3)] {
//!     data.push("listener", artist, ts);
//! }
//! let histories = build_user_histories(&data.log);
//! let list = recommend_bll(&histories[0], &BllParams::default(), 2).unwrap();
//! let names: Vec<&str> = list.artists().map(|a| data.ids.artist_key(a)).collect();
//! assert_eq!(names, ["a", "b"]);
//! ```

pub mod config;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod pipeline;
pub mod profiling;
pub mod recommend;
pub mod split;
pub mod synth;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, PipelineError, RunSummary};
