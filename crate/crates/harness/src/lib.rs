//! Corpus handling, the evaluation harness and the `sep` command line.

pub mod corpus;
pub mod enumerate;
pub mod evaluate;
pub mod generate;
pub mod metrics;
pub mod record;

pub use corpus::{load_corpus, CorpusError, LoadedCorpus, Problem};
pub use evaluate::{
    evaluate, evaluate_problem, pair_accuracy, BackendChoice, EvalError, RunConfig, RunReport,
    SelectorKind,
};
pub use generate::{generate_corpus, write_corpus, GenConfig, GenError};
