//! Score combination, ranking metrics, reports and curvature histograms.

mod combine;
mod histogram;
mod metrics;
mod pipeline;
mod report;

pub use combine::{combine_scores, min_max_normalize, ranks};
pub use histogram::{
    curvature_histogram, edge_records, write_edges_csv, write_histogram_csv, ClassSummary, CurvatureHistogram,
    EdgeClass, EdgeRecord, HistBin,
};
pub use metrics::{auc_pr, auc_roc, evaluate, macro_f1, Metrics};
pub use pipeline::{
    build_report, channel_aucs, report_from_records, select_lambdas, stratified_split, ChannelScores, Split,
};
pub use report::{read_scores_csv, write_scores_csv, AnomalyReport, ChannelAuc, ScoreRecord, SCORE_HEADER};
