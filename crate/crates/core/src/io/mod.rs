//! On-disk formats: datasets, runs, predictions, support sidecars and reports.

mod dataset;
mod report;
mod runs;

pub use dataset::{dataset_to_string, load_dataset, load_dataset_with, save_dataset, DatasetAdapter, DatasetFile, JsonLines};
pub use report::{save_report, table_path, MetricTriple, Report, ResultsRow, ResultsTable, NOT_AVAILABLE};
pub use runs::{
    gold_map, load_predictions, load_runs, parse_runs, predictions_to_string, runs_to_string, save_predictions,
    save_runs, save_support, support_to_string, PredictionsByInstance, RunsByInstance,
};
