//! Data ingestion, model persistence, evaluation protocols, and
//! benchmarking around the core library.

pub mod bench;
pub mod dataset;
pub mod eval;
pub mod persist;

pub use bench::{bench_rate, BenchReport, BENCH_POINTS};
pub use dataset::{load_csv, parse_stream_line, write_csv, Dataset, DatasetEntry, StreamEvent};
pub use eval::{eval_holdout, eval_online, eval_online_parallel, ConfusionCount, EvalReport};
pub use persist::{load_model, save_model};
