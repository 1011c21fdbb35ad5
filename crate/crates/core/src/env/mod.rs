//! Episode runtime: the reset/step contract, baseline policies, batch
//! evaluation and the TCP server.

pub mod context;
pub mod episode;
pub mod eval;
pub mod policy;
pub mod server;

pub use context::SuiteContext;
pub use episode::{EgoPose, Episode, EpisodeConfig, Info, ScenarioOrder, SplitSelection, StepResult};
pub use eval::{evaluate, run_episode, EpisodeSummary, EvalReport, REPORT_SCHEMA_VERSION};
pub use policy::{policy_replay_follower, NamedPolicy};
pub use server::{serve, Client, PROTOCOL_VERSION};
