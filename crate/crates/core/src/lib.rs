//! Tuple model, generation parsing, validation, majority-vote consensus and
//! continuous F1 scoring for dimensional aspect-based sentiment analysis.

pub mod consensus;
pub mod decimal;
mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod parser;
pub mod validator;

pub use consensus::{aggregate, aggregate_available, default_threshold, ConsensusResult, FailurePolicy};
pub use error::{Error, Result};
pub use metrics::{ctp, evaluate, match_instance, EvalReport, MatchAssignment, MatchPair};
pub use model::{tuple_key, va_sq_distance, CategoricalKey, PredictionRun, ReviewInstance, SentimentTuple, TaskKind, VAPair};
pub use parser::{parse_generation, parse_generation_bytes, serialize_tuples, ParseReport, RejectReason};
pub use validator::{validate_run, CategoryWhitelist, Validator, ValidatorConfig};
