//! Library side of the `stpl` command: run configuration and the train,
//! eval and predict commands.

pub mod commands;
pub mod config;

pub use commands::{run_eval, run_predict, run_train, EvalOutcome, TrainOutcome, TrainOverrides};
pub use config::{DataSpec, Holdout, OutputSpec, RunConfig};
